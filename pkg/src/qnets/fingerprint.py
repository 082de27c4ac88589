"""Quantum fingerprinting in the simultaneous-message model.

Each party expands its ``n``-bit input with an error-correcting code of
length ``m`` and sends the referee ``|h_x> = m^{-1/2} sum_i |i>|E_i(x)>``
on ``log2(m) + 1`` qubits. The referee runs the SWAP test, which accepts
with probability ``(1 + |<h_x|h_y>|^2) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qsim
from .errors import DomainError
from .qsim import QState


def _as_bits(x, n: int | None = None) -> np.ndarray:
    if isinstance(x, str):
        if set(x) - {"0", "1"}:
            raise DomainError(f"not a bitstring: {x!r}")
        bits = np.array([int(c) for c in x], dtype=np.uint8)
    else:
        bits = np.asarray(x, dtype=np.uint8)
        if bits.ndim != 1 or np.any(bits > 1):
            raise DomainError("bits must be a flat sequence of 0/1")
    if n is not None and len(bits) != n:
        raise DomainError(f"expected {n} input bits, got {len(bits)}")
    return bits


@dataclass(frozen=True)
class CodeSpec:
    """A binary code ``{0,1}^n -> {0,1}^m`` with a guaranteed minimum distance."""

    n: int
    m: int
    min_distance: int
    encoder: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"

    @property
    def delta(self) -> float:
        """Largest possible fingerprint overlap between distinct inputs."""
        return 1 - self.min_distance / self.m


def hadamard_code(n: int) -> CodeSpec:
    """``E_i(x) = <i, x> mod 2`` for ``i in [0, 2^n)``; distance exactly ``m/2``."""
    if not 1 <= n <= 16:
        raise DomainError("Hadamard code supports 1 <= n <= 16")
    m = 1 << n
    # row i holds the bits of i, most significant first, to match x's order
    index_bits = (np.arange(m)[:, None] >> np.arange(n - 1, -1, -1)) & 1

    def encode(x: np.ndarray) -> np.ndarray:
        return (index_bits @ x.astype(np.int64) % 2).astype(np.uint8)

    return CodeSpec(n=n, m=m, min_distance=m // 2, encoder=encode, name="hadamard")


def encode_codeword(x, code: CodeSpec) -> np.ndarray:
    return code.encoder(_as_bits(x, code.n))


@dataclass(frozen=True)
class Fingerprint:
    state: QState
    code: CodeSpec

    @property
    def num_qubits(self) -> int:
        return self.state.num_sites


def fingerprint_state(x, code: CodeSpec) -> Fingerprint:
    word = encode_codeword(x, code)
    index_qubits = max(1, math.ceil(math.log2(code.m)))
    amps = np.zeros(2 ** (index_qubits + 1), dtype=complex)
    # basis index = (i << 1) | E_i(x): index register first, codeword bit last
    amps[(np.arange(code.m) << 1) | word] = 1 / math.sqrt(code.m)
    return Fingerprint(qsim.from_amplitudes([2] * (index_qubits + 1), amps), code)


def fingerprint_overlap(a: Fingerprint, b: Fingerprint) -> float:
    return float(np.real(qsim.inner_product(a.state, b.state)))


def _states(a, b) -> tuple[QState, QState]:
    sa = a.state if isinstance(a, Fingerprint) else a
    sb = b.state if isinstance(b, Fingerprint) else b
    if sa.site_dims != sb.site_dims:
        raise DomainError("SWAP test needs registers of equal shape")
    if any(d != 2 for d in sa.site_dims):
        raise DomainError("SWAP test is defined on qubit registers")
    return sa, sb


def swap_test_circuit(a, b) -> QState:
    """State just before the ancilla measurement; ancilla is site 0."""
    sa, sb = _states(a, b)
    k = sa.num_sites
    work = qsim.tensor(qsim.new_state([2], 0), sa, sb)
    h, cswap = qsim.gate_library("H"), qsim.gate_library("CSWAP")
    work = qsim.apply_gate(work, h, [0])
    for j in range(k):
        work = qsim.apply_gate(work, cswap, [0, 1 + j, 1 + k + j])
    return qsim.apply_gate(work, h, [0])


def swap_test_probability(a, b) -> float:
    """Exact acceptance probability (ancilla reads 0) from the circuit."""
    dist = qsim.outcome_distribution(swap_test_circuit(a, b), [0])
    p = dist.get((0,), 0.0)
    # identical states must never be rejected because of round-off
    return 1.0 if p > 1 - qsim.ALGEBRA_TOL else p


def swap_test(a, b, rng: np.random.Generator, shots: int | None = None):
    """Run the SWAP test; returns one accept bool, or an array for ``shots``."""
    p = swap_test_probability(a, b)
    if shots is None:
        return bool(rng.random() < p)
    return rng.random(shots) < p


def referee_compare(x, y, code: CodeSpec, repetitions: int, rng: np.random.Generator) -> bool:
    """Declare equal iff all ``repetitions`` independent SWAP tests accept."""
    if repetitions < 1:
        raise DomainError("repetitions must be >= 1")
    p = swap_test_probability(fingerprint_state(x, code), fingerprint_state(y, code))
    return bool(np.all(rng.random(repetitions) < p))


def false_equal_bound(code: CodeSpec, repetitions: int) -> float:
    return ((1 + code.delta**2) / 2) ** repetitions


__all__ = [
    "CodeSpec",
    "Fingerprint",
    "encode_codeword",
    "false_equal_bound",
    "fingerprint_overlap",
    "fingerprint_state",
    "hadamard_code",
    "referee_compare",
    "swap_test",
    "swap_test_circuit",
    "swap_test_probability",
]
