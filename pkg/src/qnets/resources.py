"""Accounting of entanglement and classical communication."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class ResourceLedger:
    """Running totals for one scenario.

    ``teleports`` counts teleportation (or swap) invocations; each one
    consumes exactly one EPR pair and two classical bits.
    """

    epr_consumed: int = 0
    classical_bits_sent: int = 0
    teleports: int = 0
    exposure: list[str] = field(default_factory=list)

    def record_teleport(self, pairs: int = 1, cbits: int = 2) -> None:
        self.teleports += 1
        self.epr_consumed += pairs
        self.classical_bits_sent += cbits

    def as_dict(self) -> dict:
        return {
            "epr_consumed": self.epr_consumed,
            "classical_bits_sent": self.classical_bits_sent,
            "teleports": self.teleports,
            "exposure": list(self.exposure),
        }
