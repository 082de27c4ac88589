"""Shor factoring via QFT order finding, and Grover search, at desk scale.

Both run on full state vectors from :mod:`qnets.qsim`. Modular
exponentiation is a classically built permutation of the basis; the QFT is
an explicit circuit of Hadamard and controlled-phase gates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import qsim
from .errors import DomainError
from .qsim import QState

# --------------------------------------------------------------------------
# Quantum Fourier transform
# --------------------------------------------------------------------------


def qft_circuit(n: int) -> list[tuple[qsim.GateOp, tuple[int, ...]]]:
    """Gate list for the QFT on qubits ``0..n-1``, without the final bit reversal.

    Contains ``n`` Hadamards and ``n(n-1)/2`` controlled phases.
    """
    if n < 1:
        raise DomainError("need at least one qubit")
    h = qsim.gate_library("H")
    gates = []
    for j in range(n):
        gates.append((h, (j,)))
        for k in range(j + 1, n):
            theta = 2 * math.pi / 2 ** (k - j + 1)
            gates.append((qsim.gate_library("CPHASE", theta=theta), (k, j)))
    return gates


def _reverse_sites(state: QState, sites: list[int]) -> QState:
    order = list(range(state.num_sites))
    for i, s in enumerate(sites):
        order[s] = sites[len(sites) - 1 - i]
    return qsim.permute_sites(state, order)


def _check_qubits(state: QState, sites: Sequence[int]) -> list[int]:
    sites = list(sites)
    if any(state.site_dims[s] != 2 for s in sites):
        raise DomainError("QFT sites must all be qubits")
    return sites


def qft(state: QState, sites: Sequence[int]) -> QState:
    """``|a> -> 2^{-n/2} sum_c exp(2 pi i a c / 2^n) |c>`` on ``sites`` (first = most significant).

    The bit reversal at the end is a relabelling of sites, not a gate.
    """
    sites = _check_qubits(state, sites)
    for gate, local in qft_circuit(len(sites)):
        state = qsim.apply_gate(state, gate, [sites[i] for i in local])
    return _reverse_sites(state, sites)


def inverse_qft(state: QState, sites: Sequence[int]) -> QState:
    sites = _check_qubits(state, sites)
    state = _reverse_sites(state, sites)
    for gate, local in reversed(qft_circuit(len(sites))):
        state = qsim.apply_gate(state, gate.dagger(), [sites[i] for i in local])
    return state


def qft_matrix(n: int) -> np.ndarray:
    N = 2**n
    a = np.arange(N)
    return np.exp(2j * math.pi * np.outer(a, a) / N) / math.sqrt(N)


# --------------------------------------------------------------------------
# Order finding and Shor
# --------------------------------------------------------------------------


def classical_order(y: int, M: int) -> int:
    """Multiplicative order of ``y`` mod ``M`` by direct iteration."""
    if math.gcd(y, M) != 1:
        raise DomainError(f"{y} is not invertible mod {M}")
    r, v = 1, y % M
    while v != 1:
        v = v * y % M
        r += 1
    return r


@dataclass(frozen=True)
class OrderFindingInstance:
    M: int
    y: int
    n: int = 0

    def __post_init__(self):
        if self.M < 3:
            raise DomainError("modulus must be at least 3")
        if math.gcd(self.y, self.M) != 1:
            raise DomainError(f"gcd({self.y}, {self.M}) != 1; take the gcd shortcut instead")
        n = self.n or math.ceil(math.log2(self.M**2))
        if not self.M**2 <= 2**n < 2 * self.M**2:
            raise DomainError("register size must satisfy M^2 <= 2^n < 2 M^2")
        object.__setattr__(self, "n", n)

    @property
    def work_qubits(self) -> int:
        return max(1, math.ceil(math.log2(self.M)))


@dataclass
class OrderFindingResult:
    r: int | None
    measured: int
    n: int
    reason: str = ""


def _modexp_permutation(inst: OrderFindingInstance) -> np.ndarray:
    """``|a, z> -> |a, z xor (y^a mod M)>`` as a basis permutation."""
    w = inst.work_qubits
    a = np.arange(2**inst.n)
    fa = np.array([pow(inst.y, int(k), inst.M) for k in a])
    z = np.arange(2**w)
    return ((a[:, None] << w) | (z[None, :] ^ fa[:, None])).reshape(-1)


def _minimal_order(r: int, y: int, M: int) -> int:
    p = 2
    while p <= r:
        while r % p == 0 and pow(y, r // p, M) == 1:
            r //= p
        p += 1
    return r


def extract_period(c: int, n: int, y: int, M: int) -> int | None:
    """Continued-fraction estimate of the order from a measured ``c``.

    Tries the best denominator ``s <= M`` of ``c / 2^n`` and its multiples.
    """
    if c == 0:
        return None
    s = Fraction(c, 2**n).limit_denominator(M).denominator
    cand = s
    while cand <= M:
        if pow(y, cand, M) == 1:
            return _minimal_order(cand, y, M)
        cand += s
    return None


def order_finding_state(inst: OrderFindingInstance) -> QState:
    """``2^{-n/2} sum_a |a>|y^a mod M>`` on ``n + work_qubits`` qubits."""
    n, w = inst.n, inst.work_qubits
    state = qsim.new_state([2] * (n + w), 0)
    h = qsim.gate_library("H")
    for q in range(n):
        state = qsim.apply_gate(state, h, [q])
    return qsim.apply_permutation(state, _modexp_permutation(inst))


def order_find(inst: OrderFindingInstance, rng: np.random.Generator) -> OrderFindingResult:
    n, w = inst.n, inst.work_qubits
    state = order_finding_state(inst)
    _, state = qsim.measure(state, list(range(n, n + w)), rng=rng)
    state = qft(state, range(n))
    record, _ = qsim.measure(state, list(range(n)), rng=rng)
    c = int("".join(map(str, record.outcome)), 2)
    r = extract_period(c, n, inst.y, inst.M)
    return OrderFindingResult(r, c, n, "" if r else "period_not_found")


def _is_prime(k: int) -> bool:
    return k >= 2 and all(k % p for p in range(2, math.isqrt(k) + 1))


def _is_prime_power(M: int) -> bool:
    for p in range(2, math.isqrt(M) + 1):
        if M % p == 0:
            while M % p == 0:
                M //= p
            return M == 1
    return False


@dataclass
class ShorAttempt:
    y: int
    factor: int | None
    r: int | None = None
    shortcut: bool = False
    reason: str = ""


@dataclass
class ShorResult:
    M: int
    factor: int | None
    cofactor: int | None
    attempts: list[ShorAttempt] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.factor is not None


MAX_QUANTUM_MODULUS = 21


def shor_attempt(M: int, y: int, rng: np.random.Generator) -> ShorAttempt:
    """One pass of steps 1-7 for a fixed base ``y``."""
    g = math.gcd(y, M)
    if g > 1:
        return ShorAttempt(y, g, shortcut=True)
    found = order_find(OrderFindingInstance(M, y), rng)
    r = found.r
    if r is None:
        return ShorAttempt(y, None, reason=found.reason)
    if r % 2:
        return ShorAttempt(y, None, r, reason="odd_order")
    half = pow(y, r // 2, M)
    if half == M - 1:
        return ShorAttempt(y, None, r, reason="trivial_root")
    for cand in (math.gcd(half - 1, M), math.gcd(half + 1, M)):
        if 1 < cand < M:
            return ShorAttempt(y, cand, r)
    return ShorAttempt(y, None, r, reason="trivial_factor")


def shor_factor(M: int, rng: np.random.Generator, max_attempts: int = 10) -> ShorResult:
    """Factor an odd composite ``M <= 21`` that is not a prime power."""
    if M % 2 == 0 or M < 9 or _is_prime(M) or _is_prime_power(M):
        raise DomainError("M must be an odd composite that is not a prime power")
    if M > MAX_QUANTUM_MODULUS:
        raise DomainError(f"full simulation supports M <= {MAX_QUANTUM_MODULUS}")
    result = ShorResult(M, None, None)
    for _ in range(max_attempts):
        y = int(rng.integers(2, M))
        attempt = shor_attempt(M, y, rng)
        result.attempts.append(attempt)
        if attempt.factor is not None:
            result.factor, result.cofactor = attempt.factor, M // attempt.factor
            break
    return result


def distinct_odd_prime_factors(M: int) -> int:
    return sum(1 for p in range(3, M + 1, 2) if _is_prime(p) and M % p == 0)


def shor_success_statistics(M: int) -> dict[str, float]:
    """Exhaustive fraction of coprime bases in ``[2, M)`` with a usable order.

    Usable means ``r`` even and ``y^{r/2} != -1 (mod M)``; compared with the
    lower bound ``1 - 1/2^{k-1}`` for ``k`` distinct odd prime factors.
    """
    good = total = 0
    for y in range(2, M):
        if math.gcd(y, M) != 1:
            continue
        total += 1
        r = classical_order(y, M)
        good += r % 2 == 0 and pow(y, r // 2, M) != M - 1
    k = distinct_odd_prime_factors(M)
    return {"rate": good / total, "bound": 1 - 1 / 2 ** (k - 1), "k": k, "bases": total}


# --------------------------------------------------------------------------
# Grover
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GroverInstance:
    """Search space ``[0, 2^n)`` with marked items given as a predicate or a collection."""

    n: int
    marked: Callable[[int], bool] | frozenset

    def __post_init__(self):
        if not 1 <= self.n <= 14:
            raise DomainError("Grover simulation supports 1 <= n <= 14")
        if not callable(self.marked):
            items = frozenset(int(i) for i in self.marked)
            if any(not 0 <= i < 2**self.n for i in items):
                raise DomainError("marked items out of range")
            object.__setattr__(self, "marked", items)

    def mask(self) -> np.ndarray:
        xs = range(2**self.n)
        if callable(self.marked):
            return np.fromiter((bool(self.marked(x)) for x in xs), dtype=bool, count=2**self.n)
        m = np.zeros(2**self.n, dtype=bool)
        m[list(self.marked)] = True
        return m

    @property
    def k(self) -> int:
        return int(self.mask().sum())


def default_iterations(n: int, k: int = 1) -> int:
    return math.floor(math.pi / 4 * math.sqrt(2**n / k))


def grover_angle(n: int, k: int) -> float:
    return math.asin(math.sqrt(k / 2**n))


def theoretical_success(n: int, k: int, iterations: int) -> float:
    return math.sin((2 * iterations + 1) * grover_angle(n, k)) ** 2


def inversion_about_average(state: QState, sites: Sequence[int]) -> QState:
    """``a_i -> 2 * mean - a_i`` over the computational amplitudes of ``sites``."""
    sites = list(sites)
    if any(state.site_dims[s] != 2 for s in sites):
        raise DomainError("diffusion acts on qubits")
    psi = np.moveaxis(state.amplitudes.reshape(state.site_dims), sites, range(len(sites)))
    shape = psi.shape
    flat = psi.reshape(2 ** len(sites), -1)
    flat = 2 * flat.mean(axis=0, keepdims=True) - flat
    psi = np.moveaxis(flat.reshape(shape), range(len(sites)), sites)
    return QState(state.site_dims, psi.reshape(-1))


def phase_oracle(state: QState, mask: np.ndarray) -> QState:
    """Negate the amplitude of every marked basis state."""
    return QState(state.site_dims, np.where(mask, -state.amplitudes, state.amplitudes))


def grover_state(instance: GroverInstance, iterations: int) -> QState:
    mask = instance.mask()
    state = qsim.named_state("uniform", instance.n)
    sites = range(instance.n)
    for _ in range(iterations):
        state = inversion_about_average(phase_oracle(state, mask), sites)
    return state


def success_probability(instance: GroverInstance, iterations: int) -> float:
    """Exact probability that measuring after ``iterations`` yields a marked item."""
    amps = grover_state(instance, iterations).amplitudes
    return float(np.sum(np.abs(amps[instance.mask()]) ** 2))


@dataclass
class GroverResult:
    x: int | None
    success: bool
    iterations: list[int]
    success_probability: float

    @property
    def restarts(self) -> int:
        return len(self.iterations) - 1


def grover_search(
    instance: GroverInstance,
    rng: np.random.Generator,
    iterations: int | None = None,
    k_known: bool = True,
    max_restarts: int = 0,
) -> GroverResult:
    """Search and measure.

    With ``k_known`` the default count is ``floor(pi/4 sqrt(2^n / k))``.
    Otherwise the first run uses ``floor(pi/4 sqrt(2^n))`` and each restart
    draws a count uniformly from ``[0, that]``. Restarts happen only while
    the measured item is unmarked. With no marked items the result has
    ``x = None`` once the budget is spent.
    """
    mask = instance.mask()
    k = int(mask.sum())
    if iterations is None:
        iterations = default_iterations(instance.n, k if k_known and k else 1)
    if not k_known and max_restarts == 0:
        max_restarts = 8
    used, p_first = [], None
    T = iterations
    for attempt in range(max_restarts + 1):
        if attempt:
            T = int(rng.integers(0, iterations + 1))
        state = grover_state(instance, T)
        used.append(T)
        probs = np.abs(state.amplitudes) ** 2
        if p_first is None:
            p_first = float(probs[mask].sum())
        x = int(rng.choice(len(probs), p=probs / probs.sum()))
        if mask[x]:
            return GroverResult(x, True, used, p_first)
    return GroverResult(None if k == 0 else x, False, used, p_first)


__all__ = [
    "GroverInstance",
    "GroverResult",
    "OrderFindingInstance",
    "OrderFindingResult",
    "ShorAttempt",
    "ShorResult",
    "classical_order",
    "default_iterations",
    "extract_period",
    "grover_search",
    "grover_state",
    "inverse_qft",
    "inversion_about_average",
    "order_find",
    "order_finding_state",
    "phase_oracle",
    "qft",
    "qft_circuit",
    "qft_matrix",
    "shor_attempt",
    "shor_factor",
    "shor_success_statistics",
    "success_probability",
    "theoretical_success",
]
