"""Detectable broadcast among three players using Aharonov qutrit triplets.

Players are the sender ``S`` and receivers ``R0`` and ``R1``. Every triplet
is measured in the z basis by all three players; because the shared state
is totally antisymmetric, the three results always form a permutation of
``(0, 1, 2)``.  The protocol then runs on those classical lists:

1. ``S`` sends bit ``x`` and the index set ``J = {j : S_j = x}``.
2. ``R_p`` is consistent iff ``J_p`` is large enough and ``R_p`` never
   holds ``x_p`` on ``J_p``.
3-4. Equal flags end the protocol; a single inconsistent receiver adopts
   the other's bit.
5-6. On conflicting definite flags ``R0`` proves its bit by sending the
   indices of ``J0`` where it holds ``1 - y0``. ``R1`` switches only if
   almost all of them lie outside ``J1`` and show a 2 on its side.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import qsim
from .errors import DomainError

PLAYERS = ("S", "R0", "R1")
PERMUTATIONS = np.array(list(itertools.permutations(range(3))), dtype=np.int8)
SCENARIOS = ("all_honest", "s_cheats", "r0_cheats")


@dataclass(frozen=True)
class Thresholds:
    """Acceptance rules for the statistical steps.

    ``min_index_size`` is a 5-sigma lower bound on the binomial size of an
    honest index set (never below 1); set ``min_index_fraction`` to use a
    flat ``fraction * m`` rule instead.
    """

    outside_fraction: float = 0.75
    two_fraction: float = 0.75
    min_proof_fraction: float = 1 / 12
    index_sigmas: float = 5.0
    min_index_fraction: float | None = None

    def min_index_size(self, m: int) -> int:
        if self.min_index_fraction is not None:
            return math.ceil(self.min_index_fraction * m)
        mean, sd = m / 3, math.sqrt(2 * m / 9)
        return max(1, math.floor(mean - self.index_sigmas * sd))

    def min_proof_size(self, m: int) -> int:
        return max(1, math.ceil(self.min_proof_fraction * m))


@dataclass(frozen=True, eq=False)
class TripletPool:
    """z-basis results; column order is ``S, R0, R1``."""

    outcomes: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.outcomes, dtype=np.int8)
        if o.ndim != 2 or o.shape[1] != 3:
            raise DomainError("outcomes must have shape (m, 3)")
        if not np.all(np.sort(o, axis=1) == np.arange(3)):
            raise DomainError("every triplet must be a permutation of (0, 1, 2)")
        object.__setattr__(self, "outcomes", o)

    @property
    def m(self) -> int:
        return len(self.outcomes)

    def values(self, player: str) -> np.ndarray:
        return self.outcomes[:, PLAYERS.index(player)]


@dataclass
class BroadcastOutcome:
    scenario: str
    sender_bit: int
    decisions: dict[str, int | None]
    flags: tuple[int | None, int | None]
    detected_cheater: str | None = None
    proof_size: int = 0
    proof_accepted: bool | None = None
    index_sizes: tuple[int, int] = (0, 0)
    notes: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        """Did the loyal players end up where detectable broadcast requires?"""
        r0, r1 = self.decisions["R0"], self.decisions["R1"]
        if self.scenario == "all_honest":
            return r0 == r1 == self.sender_bit
        if self.scenario == "s_cheats":
            return r0 == r1
        return r1 == self.sender_bit


def deal_triplets(m: int, rng: np.random.Generator, statevector: bool = False) -> TripletPool:
    """z-basis outcomes of ``m`` Aharonov triplets.

    The fast path draws a uniform permutation per triplet; ``statevector=True``
    measures the three-qutrit state with the simulator instead.
    """
    if m < 1:
        raise DomainError("need at least one triplet")
    if statevector:
        state = qsim.named_state("aharonov3")
        rows = [qsim.measure(state, [0, 1, 2], rng=rng)[0].outcome for _ in range(m)]
        return TripletPool(np.array(rows, dtype=np.int8))
    return TripletPool(PERMUTATIONS[rng.integers(0, 6, m)])


def send_phase(pool: TripletPool, x: int, strategy: str = "honest"):
    """Returns ``(x0, x1, J0, J1)``.

    ``cheat_split`` sends 0 to ``R0`` and 1 to ``R1``, each with the index set
    that is consistent with the bit it received.
    """
    if x not in (0, 1):
        raise DomainError("broadcast bit must be 0 or 1")
    s = pool.values("S")
    if strategy == "honest":
        j = np.flatnonzero(s == x)
        return x, x, j, j.copy()
    if strategy == "cheat_split":
        return 0, 1, np.flatnonzero(s == 0), np.flatnonzero(s == 1)
    raise DomainError(f"unknown sender strategy {strategy!r}")


def consistency_check(pool: TripletPool, p: int, x_p: int, J_p, thresholds: Thresholds = Thresholds()) -> int | None:
    """Flag ``y_p``: ``x_p`` if the data is consistent, ``None`` for ``?``."""
    J_p = np.asarray(J_p, dtype=int)
    if J_p.size and (J_p.min() < 0 or J_p.max() >= pool.m):
        raise DomainError("index set refers to unknown triplets")
    if len(J_p) < thresholds.min_index_size(pool.m):
        return None
    mine = pool.values(f"R{p}")[J_p]
    return x_p if not np.any(mine == x_p) else None


def honest_proof(pool: TripletPool, J0, y0: int) -> np.ndarray:
    """Indices in ``J0`` where ``R0`` holds ``1 - y0`` (so ``R1`` must hold 2)."""
    J0 = np.asarray(J0, dtype=int)
    return J0[pool.values("R0")[J0] == 1 - y0]


def forged_proof(pool: TripletPool, claimed: int) -> np.ndarray:
    """A lying ``R0``'s best proof for a bit it never received.

    It needs indices where ``S`` held ``claimed`` and ``R0`` holds
    ``1 - claimed``; it can only select on its own value, so about half of
    the returned indices show ``1 - claimed`` rather than 2 on ``R1``'s side.
    """
    return np.flatnonzero(pool.values("R0") == 1 - claimed)


def verify_proof(pool: TripletPool, proof, J1, thresholds: Thresholds = Thresholds()) -> bool:
    proof = np.asarray(proof, dtype=int)
    if len(proof) < thresholds.min_proof_size(pool.m):
        return False
    outside = np.mean(~np.isin(proof, J1))
    twos = np.mean(pool.values("R1")[proof] == 2)
    return bool(outside >= thresholds.outside_fraction and twos >= thresholds.two_fraction)


def resolve(
    flags: tuple[int | None, int | None],
    proof,
    pool: TripletPool,
    J1,
    thresholds: Thresholds = Thresholds(),
) -> tuple[dict[str, int | None], str | None, bool | None]:
    """Steps 3-6. Returns ``(decisions, detected_cheater, proof_accepted)``."""
    y0, y1 = flags
    if y0 == y1:
        return {"R0": y0, "R1": y1}, ("S" if y0 is None else None), None
    if y0 is None:
        return {"R0": y1, "R1": y1}, "S", None
    if y1 is None:
        return {"R0": y0, "R1": y0}, "S", None
    accepted = verify_proof(pool, proof, J1, thresholds)
    if accepted:
        return {"R0": y0, "R1": y0}, "S", True
    return {"R0": y0, "R1": y1}, "R0", False


def run_broadcast(
    m: int,
    x: int,
    scenario: str,
    rng: np.random.Generator,
    thresholds: Thresholds = Thresholds(),
    statevector: bool = False,
) -> BroadcastOutcome:
    """One complete protocol run under the named adversary scenario."""
    if m < 12:
        raise DomainError("need at least 12 triplets")
    if scenario not in SCENARIOS:
        raise DomainError(f"unknown scenario {scenario!r}")
    pool = deal_triplets(m, rng, statevector)
    x0, x1, J0, J1 = send_phase(pool, x, "cheat_split" if scenario == "s_cheats" else "honest")
    y0 = consistency_check(pool, 0, x0, J0, thresholds)
    y1 = consistency_check(pool, 1, x1, J1, thresholds)
    if scenario == "r0_cheats" and y0 is not None:
        y0 = 1 - y0
        proof = forged_proof(pool, y0)
    else:
        proof = honest_proof(pool, J0, y0) if y0 is not None else np.empty(0, dtype=int)
    decisions, cheater, accepted = resolve((y0, y1), proof, pool, J1, thresholds)
    conflicting = y0 is not None and y1 is not None and y0 != y1
    return BroadcastOutcome(
        scenario=scenario,
        sender_bit=x,
        decisions=decisions,
        flags=(y0, y1),
        detected_cheater=cheater,
        proof_size=len(proof) if conflicting else 0,
        proof_accepted=accepted,
        index_sizes=(len(J0), len(J1)),
    )
