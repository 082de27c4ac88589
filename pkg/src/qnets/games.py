"""Quantum games and contracts.

* The quantized Prisoner's Dilemma in the Eisert-Wilkens-Lewenstein form:
  ``|psi_f> = J^dag (U_A x U_B) J |CC>`` with payoffs read off the outcome
  distribution.
* A one-sided contract: Alice entangles the qubits she lends with ancillas
  and measures the ancillas at the deadline, collapsing Bob's copy.
* A two-sided "hostage exchange" in which interleaved Bell-pair decoys
  expose a party who measures the other's qubits early.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import qsim
from .errors import DomainError, StateError
from .qsim import QState

COOPERATE = np.eye(2, dtype=complex)
DEFECT = np.array([[0, 1], [1, 0]], dtype=complex)
QUANTUM = np.diag([1j, -1j])
# U(pi, 0); its tensor square commutes with every classical strategy pair
_DD = np.kron(np.array([[0, 1], [-1, 0]]), np.array([[0, 1], [-1, 0]])).astype(complex)
_XX = np.kron(DEFECT, DEFECT)
ENTANGLERS = {"DD": _DD, "XX": _XX}


@dataclass(frozen=True)
class PayoffMatrix:
    """``entries[i, j] = (row payoff, column payoff)`` for moves ``i, j`` in {0, 1}."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.shape != (2, 2, 2):
            raise DomainError("payoff matrix must have shape (2, 2, 2)")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def row(self, i: int, j: int) -> float:
        return float(self.entries[i, j, 0])

    def col(self, i: int, j: int) -> float:
        return float(self.entries[i, j, 1])


PRISONERS_DILEMMA = PayoffMatrix([[(3, 3), (0, 5)], [(5, 0), (1, 1)]])
# rows: Alice cooperates / defects; columns: Bob faithful / not faithful
LENDING_GAME = PayoffMatrix([[(1, 3), (-5, 5)], [(0, 0), (0, 0)]])


@dataclass(frozen=True)
class GameConfig:
    gamma: float = math.pi / 2
    payoffs: PayoffMatrix = PRISONERS_DILEMMA
    entangler: str = "DD"

    def __post_init__(self):
        if not 0 <= self.gamma <= math.pi / 2 + 1e-12:
            raise DomainError("gamma must lie in [0, pi/2]")
        if self.entangler not in ENTANGLERS:
            raise DomainError(f"unknown entangler {self.entangler!r}")

    def entangling_gate(self) -> qsim.GateOp:
        g = ENTANGLERS[self.entangler]
        # g @ g = I, so exp(i*gamma*g/2) has a closed form
        m = math.cos(self.gamma / 2) * np.eye(4) + 1j * math.sin(self.gamma / 2) * g
        return qsim.GateOp("J", m, arity=2)


def ewl_strategy(theta: float, phi: float) -> np.ndarray:
    """``U(theta, phi)``; ``U(0, 0) = C`` and ``U(0, pi/2) = Q``."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[np.exp(1j * phi) * c, s], [-s, np.exp(-1j * phi) * c]])


def _as_gate(u) -> qsim.GateOp:
    if isinstance(u, qsim.GateOp):
        return u
    return qsim.GateOp("strategy", np.asarray(u, dtype=complex))


def ewl_distribution(ua, ub, config: GameConfig = GameConfig()) -> dict[tuple[int, int], float]:
    j = config.entangling_gate()
    state = qsim.apply_gate(qsim.new_state([2, 2], 0), j, [0, 1])
    state = qsim.apply_gate(state, _as_gate(ua), [0])
    state = qsim.apply_gate(state, _as_gate(ub), [1])
    state = qsim.apply_gate(state, j.dagger(), [0, 1])
    return qsim.outcome_distribution(state, [0, 1])


def ewl_play(ua, ub, config: GameConfig = GameConfig()) -> tuple[float, float]:
    """Expected payoffs ``(Alice, Bob)``; non-unitary strategies raise ``DomainError``."""
    dist = ewl_distribution(ua, ub, config)
    pa = sum(p * config.payoffs.row(i, j) for (i, j), p in dist.items())
    pb = sum(p * config.payoffs.col(i, j) for (i, j), p in dist.items())
    return float(pa), float(pb)


def deviation_grid(resolution: int) -> list[np.ndarray]:
    thetas = np.linspace(0, math.pi, resolution)
    phis = np.linspace(0, math.pi / 2, resolution)
    return [ewl_strategy(t, p) for t in thetas for p in phis]


def best_deviation(strategy, config: GameConfig = GameConfig(), grid_resolution: int = 32) -> tuple[float, float]:
    """Best payoffs Alice and Bob can reach by deviating alone from ``(s, s)``."""
    if grid_resolution < 8:
        raise DomainError("grid_resolution must be >= 8")
    grid = deviation_grid(grid_resolution)
    best_a = max(ewl_play(u, strategy, config)[0] for u in grid)
    best_b = max(ewl_play(strategy, u, config)[1] for u in grid)
    return best_a, best_b


def nash_check(strategy, config: GameConfig = GameConfig(), grid_resolution: int = 32, slack: float = 1e-6) -> bool:
    """True iff no grid deviation gains either player more than ``slack``."""
    base_a, base_b = ewl_play(strategy, strategy, config)
    best_a, best_b = best_deviation(strategy, config, grid_resolution)
    return best_a <= base_a + slack and best_b <= base_b + slack


# --------------------------------------------------------------------------
# One-sided contract
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LendingDecision:
    choice: str
    ev_cooperate: float
    ev_defect: float
    threshold: float | None
    stated_threshold: float = 0.2


def indifference_threshold(payoffs: PayoffMatrix = LENDING_GAME) -> float | None:
    """Probability of an unfaithful Bob at which Alice is indifferent."""
    gain_f = payoffs.row(0, 0) - payoffs.row(1, 0)
    gain_nf = payoffs.row(0, 1) - payoffs.row(1, 1)
    if gain_f == gain_nf:
        return None
    return gain_f / (gain_f - gain_nf)


def one_sided_decision(p: float, payoffs: PayoffMatrix = LENDING_GAME) -> LendingDecision:
    """Alice lends (``"C"``) iff it beats withholding in expectation."""
    if not 0 <= p <= 1:
        raise DomainError("p must be a probability")
    ev_c = (1 - p) * payoffs.row(0, 0) + p * payoffs.row(0, 1)
    ev_d = (1 - p) * payoffs.row(1, 0) + p * payoffs.row(1, 1)
    return LendingDecision("C" if ev_c > ev_d else "D", ev_c, ev_d, indifference_threshold(payoffs))


def contract_payoffs(payoffs: PayoffMatrix = LENDING_GAME) -> PayoffMatrix:
    """Payoffs once revocation is in force: keeping the data past the
    deadline gains Bob nothing and costs Alice nothing, so the unfaithful
    column equals the faithful one."""
    e = np.array(payoffs.entries)
    e[:, 1] = e[:, 0]
    return PayoffMatrix(e)


@dataclass(frozen=True)
class ContractState:
    """Committed pairs; site 0 of each pair is Alice's ancilla, site 1 is Bob's qubit."""

    data_qubits: tuple[QState, ...]
    originals: tuple[QState, ...]
    deadline: int = 1
    revoked: bool = False
    decoy_schedule: tuple = ()

    def bob_fidelities(self) -> list[float]:
        return [
            qsim.state_fidelity(psi, qsim.reduced_density(pair, [1]))
            for psi, pair in zip(self.originals, self.data_qubits)
        ]


def _commit_pair(psi: QState) -> QState:
    if psi.site_dims != (2,):
        raise DomainError("contract data must be single qubits")
    pair = qsim.tensor(psi, qsim.new_state([2], 0))
    return qsim.apply_gate(pair, qsim.gate_library("CNOT"), [0, 1])


def contract_commit(info, deadline: int = 1) -> ContractState:
    """``a|0> + b|1>`` becomes ``a|00> + b|11>`` for each lent qubit."""
    info = tuple(info)
    return ContractState(tuple(_commit_pair(psi) for psi in info), info, deadline)


def contract_revoke(contract: ContractState, rng: np.random.Generator) -> ContractState:
    """Alice measures every ancilla in the computational basis."""
    if contract.revoked:
        raise StateError("contract already revoked")
    pairs = tuple(qsim.measure(pair, [0], rng=rng)[1] for pair in contract.data_qubits)
    return replace(contract, data_qubits=pairs, revoked=True)


def contract_release(contract: ContractState) -> list[QState]:
    """Cooperative completion: Alice hands over her ancillas and Bob undoes the CNOT."""
    if contract.revoked:
        raise StateError("a revoked contract cannot be released")
    out = []
    for pair in contract.data_qubits:
        pair = qsim.apply_gate(pair, qsim.gate_library("CNOT"), [0, 1])
        out.append(qsim.drop_sites(pair, [1]))
    return out


def revocation_fidelity(psi: QState) -> float:
    """Exact expected fidelity of Bob's qubit after revocation, by branch enumeration."""
    pair = _commit_pair(psi)
    total = 0.0
    for outcome, p in qsim.outcome_distribution(pair, [0]).items():
        _, branch = qsim.measure(pair, [0], outcome=outcome)
        total += p * qsim.state_fidelity(psi, qsim.reduced_density(branch, [1]))
    return total


# --------------------------------------------------------------------------
# Two-sided contract (hostage exchange)
# --------------------------------------------------------------------------

ADVERSARIES = ("none", "bob_measures_early", "alice_measures_early", "both_measure_early")


@functools.lru_cache(maxsize=None)
def decoy_mismatch_probability(tampered: bool) -> float:
    """Chance that the two x-basis results on one decoy ``|b00>`` disagree.

    ``tampered`` means the holder of the second half measured it in the
    computational basis beforehand.
    """
    pair = qsim.named_state("bell00")
    branches = [(1.0, pair)]
    if tampered:
        branches = [(p, qsim.measure(pair, [1], outcome=o)[1]) for o, p in qsim.outcome_distribution(pair, [1]).items()]
    mismatch = 0.0
    for w, state in branches:
        dist = qsim.outcome_distribution(state, [0, 1], basis="hadamard")
        mismatch += w * sum(p for (a, b), p in dist.items() if a != b)
    return mismatch


@dataclass
class ExchangeResult:
    """Outcome of one hostage exchange.

    ``held`` maps each party to the data pairs it received (site 0 is the
    owner's retained half, site 1 the received half); ``fidelities`` gives
    the fidelity of each received qubit with the original after release or
    punishment.
    """

    outcome: str
    side: str | None
    caught: dict[str, bool]
    mismatches: dict[str, int]
    held: dict[str, list[QState]] = field(repr=False, default_factory=dict)
    fidelities: dict[str, list[float]] = field(default_factory=dict)

    @property
    def undetected_violation(self) -> bool:
        return self.outcome == "completed" and bool(self.mismatches.get("tampered"))


def _received_fidelities(originals, pairs, released: bool) -> list[float]:
    if released:
        return [qsim.fidelity(psi, qsim.drop_sites(qsim.apply_gate(pr, qsim.gate_library("CNOT"), [0, 1]), [1])) for psi, pr in zip(originals, pairs)]
    return [qsim.state_fidelity(psi, qsim.reduced_density(pr, [1])) for psi, pr in zip(originals, pairs)]


def hostage_exchange(
    alice_data,
    bob_data,
    decoys_per_side: int,
    adversary: str,
    rng: np.random.Generator,
) -> ExchangeResult:
    """Simulate one two-sided contract run.

    Both parties commit their data as ``a|00> + b|11>`` pairs and send the
    second halves, hiding ``t`` decoy ``|b00>`` pairs among them. A party who
    measures the received qubits early cannot tell decoys from data, so each
    decoy then fails the x-basis test with probability 1/2. A failed test
    triggers the owner's punitive measurement of its retained halves, which
    collapses the cheater's received data.
    """
    if decoys_per_side < 1:
        raise DomainError("need at least one decoy per side")
    if adversary not in ADVERSARIES:
        raise DomainError(f"unknown adversary {adversary!r}")
    originals = {"Alice": tuple(alice_data), "Bob": tuple(bob_data)}
    # pairs owned by X, second halves held by the other party
    owned = {side: [_commit_pair(psi) for psi in data] for side, data in originals.items()}
    cheats = {
        "Bob": adversary in ("bob_measures_early", "both_measure_early"),
        "Alice": adversary in ("alice_measures_early", "both_measure_early"),
    }
    other = {"Alice": "Bob", "Bob": "Alice"}

    # early measurement of everything received, data halves included
    for cheater, is_cheating in cheats.items():
        if is_cheating:
            victim = other[cheater]
            owned[victim] = [qsim.measure(pr, [1], rng=rng)[1] for pr in owned[victim]]

    caught, mismatches = {}, {}
    for owner in ("Alice", "Bob"):
        holder = other[owner]
        p = decoy_mismatch_probability(cheats[holder])
        n_bad = int(np.count_nonzero(rng.random(decoys_per_side) < p))
        mismatches[owner] = n_bad
        caught[holder] = n_bad > 0
    mismatches["tampered"] = int(any(cheats.values()))

    # punitive measurement of the owner's retained halves
    for holder, is_caught in caught.items():
        if is_caught:
            owner = other[holder]
            owned[owner] = [qsim.measure(pr, [0], rng=rng)[1] for pr in owned[owner]]

    if caught["Alice"] and caught["Bob"]:
        outcome, side = "mutual_destruction", None
    elif caught["Alice"] or caught["Bob"]:
        outcome, side = "violation_detected", "Bob" if caught["Bob"] else "Alice"
    else:
        outcome, side = "completed", None

    fidelities = {}
    for holder in ("Alice", "Bob"):
        owner = other[holder]
        intact = not caught[holder] and not cheats[holder]
        fidelities[holder] = _received_fidelities(originals[owner], owned[owner], released=intact)
    held = {holder: owned[other[holder]] for holder in ("Alice", "Bob")}
    return ExchangeResult(outcome, side, caught, mismatches, held, fidelities)


def detection_probability(decoys_per_side: int) -> float:
    return 1 - (1 - decoy_mismatch_probability(True)) ** decoys_per_side


__all__ = [
    "COOPERATE",
    "DEFECT",
    "LENDING_GAME",
    "PRISONERS_DILEMMA",
    "QUANTUM",
    "ContractState",
    "ExchangeResult",
    "GameConfig",
    "LendingDecision",
    "PayoffMatrix",
    "best_deviation",
    "contract_commit",
    "contract_payoffs",
    "contract_release",
    "contract_revoke",
    "decoy_mismatch_probability",
    "detection_probability",
    "ewl_play",
    "ewl_strategy",
    "hostage_exchange",
    "indifference_threshold",
    "nash_check",
    "one_sided_decision",
    "revocation_fidelity",
]
