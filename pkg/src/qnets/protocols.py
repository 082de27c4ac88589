"""Introductory quantum-communication demonstrations.

Single-photon interferometry, superdense coding, teleportation and
router-mediated entanglement distribution, all on top of :mod:`qnets.qsim`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qsim
from .errors import AmbiguityError, DomainError, PreconditionError
from .qsim import QState
from .resources import ResourceLedger

# Half-silvered mirror on a path qubit: |0> = path toward A, |1> = toward B.
BEAM_SPLITTER = qsim.gate_library("custom", matrix=np.array([[1, 1j], [1j, 1]]) / math.sqrt(2), label="BS")
MIRROR_PAIR = qsim.gate_library("X")

_MESSAGES = ("00", "01", "10", "11")
_BELL_NAMES = {m: f"bell{m}" for m in _MESSAGES}


@dataclass(frozen=True)
class InterferometerConfig:
    splitters: int = 1
    obstacle: bool = False

    def __post_init__(self):
        if self.splitters not in (1, 2):
            raise DomainError("splitters must be 1 or 2")
        if self.obstacle and self.splitters != 2:
            raise DomainError("an obstacle needs the two-splitter layout")


@dataclass(frozen=True)
class DetectionStats:
    p_A: float
    p_B: float
    p_absorbed: float

    def conditional(self) -> tuple[float, float]:
        """Detector probabilities given that the photon was detected."""
        seen = self.p_A + self.p_B
        return self.p_A / seen, self.p_B / seen


def interferometer(config: InterferometerConfig) -> DetectionStats:
    """Exact detector statistics for the beam-splitter experiments.

    With two splitters the paths are folded back by a pair of mirrors
    (a path swap) before the second splitter. The obstacle absorbs the
    ``|1>`` path between the splitters.
    """
    photon = qsim.new_state([2], 0)
    photon = qsim.apply_gate(photon, BEAM_SPLITTER, [0])
    if config.splitters == 1:
        dist = qsim.outcome_distribution(photon, [0])
        return DetectionStats(dist.get((0,), 0.0), dist.get((1,), 0.0), 0.0)

    photon = qsim.apply_gate(photon, MIRROR_PAIR, [0])
    absorbed = 0.0
    if config.obstacle:
        record, photon = qsim.measure(photon, [0], outcome=(0,))
        absorbed = 1 - record.probability
    photon = qsim.apply_gate(photon, BEAM_SPLITTER, [0])
    dist = qsim.outcome_distribution(photon, [0])
    survive = 1 - absorbed
    return DetectionStats(survive * dist.get((0,), 0.0), survive * dist.get((1,), 0.0), absorbed)


# --------------------------------------------------------------------------
# Superdense coding
# --------------------------------------------------------------------------


def _encoding_gate(bits: str) -> qsim.GateOp:
    if bits == "00":
        return qsim.gate_library("I")
    if bits == "01":
        return qsim.gate_library("X")
    if bits == "10":
        return qsim.gate_library("Z")
    y = qsim.gate_library("Y_real").matrix
    return qsim.gate_library("custom", matrix=1j * y, label="iY_real")


def _normalize_bits(bits) -> str:
    if isinstance(bits, (tuple, list)):
        bits = "".join(str(int(b)) for b in bits)
    elif isinstance(bits, int) and not isinstance(bits, bool):
        bits = format(bits, "02b") if 0 <= bits < 4 else ""
    if bits not in _MESSAGES:
        raise DomainError(f"expected a two-bit message, got {bits!r}")
    return bits


def _is_bell00(state: QState) -> bool:
    return state.site_dims == (2, 2) and 1 - qsim.fidelity(qsim.named_state("bell00"), state) < qsim.ALGEBRA_TOL


def superdense_encode(bits, shared: QState | None = None) -> QState:
    """Alice's local operation on her half (site 0) of a shared ``|b00>``."""
    bits = _normalize_bits(bits)
    shared = qsim.named_state("bell00") if shared is None else shared
    if not _is_bell00(shared):
        raise PreconditionError("superdense coding needs the shared pair in |b00>")
    return qsim.apply_gate(shared, _encoding_gate(bits), [0])


def superdense_decode(state: QState) -> str:
    """Bob's Bell-basis measurement; deterministic on the four Bell states."""
    if state.site_dims != (2, 2):
        raise AmbiguityError("superdense decoding needs a two-qubit state")
    if not any(1 - qsim.fidelity(qsim.named_state(_BELL_NAMES[m]), state) < qsim.ALGEBRA_TOL for m in _MESSAGES):
        raise AmbiguityError("state is not one of the four Bell states")
    dist = qsim.outcome_distribution(state, [0, 1], basis="bell")
    (outcome, _), = [(k, p) for k, p in dist.items() if p > 0.5]
    return f"{outcome[0]}{outcome[1]}"


# --------------------------------------------------------------------------
# Teleportation
# --------------------------------------------------------------------------


def teleport_site(
    state: QState,
    site: int,
    rng: np.random.Generator,
    ledger: ResourceLedger | None = None,
) -> tuple[tuple[int, int], QState]:
    """Teleport qubit ``site`` of a larger register through a fresh ``|b00>``.

    The pair is appended to the register, Alice's CNOT/H and two-qubit
    measurement run on (``site``, sender half), Bob applies ``Z^L1`` then
    ``X^L2`` to the receiver half, and the two measured qubits are dropped.
    The receiver half takes the place of ``site`` so the register layout is
    unchanged; any entanglement ``site`` had with the rest is carried over.
    """
    if state.site_dims[site] != 2:
        raise DomainError("only qubits can be teleported")
    n = state.num_sites
    work = qsim.tensor(state, qsim.named_state("bell00"))
    sender, receiver = n, n + 1
    work = qsim.apply_gate(work, qsim.gate_library("CNOT"), [site, sender])
    work = qsim.apply_gate(work, qsim.gate_library("H"), [site])
    record, work = qsim.measure(work, [site, sender], rng=rng)
    l1, l2 = record.outcome
    if l1:
        work = qsim.apply_gate(work, qsim.gate_library("Z"), [receiver])
    if l2:
        work = qsim.apply_gate(work, qsim.gate_library("X"), [receiver])
    # move the receiver into the teleported qubit's slot, then discard the
    # two measured qubits which now sit at positions n-1+1 .. n
    order = list(range(n + 2))
    order[site], order[receiver] = receiver, site
    work = qsim.permute_sites(work, order)
    work = qsim.drop_sites(work, [n, n + 1])
    if ledger is not None:
        ledger.record_teleport()
    return (l1, l2), work


def teleport(psi: QState, shared: QState | None, rng: np.random.Generator) -> tuple[tuple[int, int], QState]:
    """Teleport a single qubit; returns Alice's two bits and Bob's qubit.

    Register layout during the protocol: site 0 = ``psi``, site 1 = Alice's
    half, site 2 = Bob's half.
    """
    if psi.site_dims != (2,):
        raise DomainError("teleport expects a single qubit")
    shared = qsim.named_state("bell00") if shared is None else shared
    if not _is_bell00(shared):
        raise PreconditionError("teleportation needs the shared pair in |b00>")
    work = qsim.tensor(psi, shared)
    work = qsim.apply_gate(work, qsim.gate_library("CNOT"), [0, 1])
    work = qsim.apply_gate(work, qsim.gate_library("H"), [0])
    record, work = qsim.measure(work, [0, 1], rng=rng)
    l1, l2 = record.outcome
    if l1:
        work = qsim.apply_gate(work, qsim.gate_library("Z"), [2])
    if l2:
        work = qsim.apply_gate(work, qsim.gate_library("X"), [2])
    return (l1, l2), qsim.drop_sites(work, [0, 1])


def teleport_branches(psi: QState) -> dict[tuple[int, int], tuple[float, QState]]:
    """Every measurement branch of :func:`teleport` with its probability and Bob's corrected qubit."""
    work = qsim.tensor(psi, qsim.named_state("bell00"))
    work = qsim.apply_gate(work, qsim.gate_library("CNOT"), [0, 1])
    work = qsim.apply_gate(work, qsim.gate_library("H"), [0])
    out = {}
    for outcome in qsim.outcome_distribution(work, [0, 1]):
        record, branch = qsim.measure(work, [0, 1], outcome=outcome)
        if outcome[0]:
            branch = qsim.apply_gate(branch, qsim.gate_library("Z"), [2])
        if outcome[1]:
            branch = qsim.apply_gate(branch, qsim.gate_library("X"), [2])
        out[outcome] = (record.probability, qsim.drop_sites(branch, [0, 1]))
    return out


def entangle_distribute(rng: np.random.Generator, ledger: ResourceLedger | None = None) -> tuple[QState, ResourceLedger]:
    """A router prepares ``|b00>`` and teleports one half to each neighbour.

    Each leg uses one pre-shared pair, so the Alice-Bob result costs two EPR
    pairs and four classical bits.
    """
    ledger = ResourceLedger() if ledger is None else ledger
    pair = qsim.named_state("bell00")
    _, pair = teleport_site(pair, 0, rng, ledger)
    _, pair = teleport_site(pair, 1, rng, ledger)
    return pair, ledger


__all__ = [
    "BEAM_SPLITTER",
    "DetectionStats",
    "InterferometerConfig",
    "entangle_distribute",
    "interferometer",
    "superdense_decode",
    "superdense_encode",
    "teleport",
    "teleport_branches",
    "teleport_site",
]
