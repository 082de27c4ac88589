"""Dense state-vector simulation of mixed qubit/qutrit registers.

Amplitudes are stored as a flat complex vector indexed in mixed radix with
the leftmost site most significant, so ``|01>`` on two qubits is index 1 and
``|10>`` is index 2.  All operations return new states; a :class:`QState`
is never mutated after construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, UnknownNameError

ALGEBRA_TOL = 1e-9
CHAIN_TOL = 1e-8
DEGENERATE_PROB = 1e-12
_NORM_GUARD = 1e-6

_SQRT2_INV = 1 / math.sqrt(2)


def make_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """Counter-based random stream for ``(seed, trial)``.

    Distinct trials get disjoint Philox streams, so Monte Carlo batches can be
    split across workers without changing any per-trial result.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


# --------------------------------------------------------------------------
# Core types
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QState:
    """Pure state of an ordered register of qubits and qutrits."""

    site_dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.site_dims)
        if not dims or any(d not in (2, 3) for d in dims):
            raise DomainError(f"site dimensions must be 2 or 3, got {dims}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != math.prod(dims):
            raise DomainError(f"expected {math.prod(dims)} amplitudes, got {amps.size}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > _NORM_GUARD:
            raise DomainError(f"state is not normalized (norm={norm:.3g})")
        amps.flags.writeable = False
        object.__setattr__(self, "site_dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_sites(self) -> int:
        return len(self.site_dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per site (a writable copy)."""
        return self.amplitudes.reshape(self.site_dims).copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def __repr__(self):
        return f"QState(site_dims={self.site_dims}, nnz={np.count_nonzero(np.abs(self.amplitudes) > 1e-12)})"


@dataclass(frozen=True, eq=False)
class GateOp:
    """A unitary acting on ``arity`` sites of dimension ``site_dim``."""

    name: str
    matrix: np.ndarray
    arity: int = 1
    site_dim: int = 2

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        size = self.site_dim**self.arity
        if m.shape != (size, size):
            raise DomainError(f"gate {self.name!r}: matrix shape {m.shape} does not match {size}x{size}")
        err = np.max(np.abs(m.conj().T @ m - np.eye(size)))
        if err >= ALGEBRA_TOL:
            raise DomainError(f"gate {self.name!r} is not unitary (max deviation {err:.3g})")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def dagger(self) -> "GateOp":
        return GateOp(self.name + "^dag", self.matrix.conj().T, self.arity, self.site_dim)


@dataclass(frozen=True)
class MeasurementRecord:
    sites: tuple[int, ...]
    basis: str
    outcome: tuple[int, ...]
    probability: float


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dim: int
    entries: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))


# --------------------------------------------------------------------------
# Construction
# --------------------------------------------------------------------------


def new_state(site_dims: Sequence[int], basis_index: int = 0) -> QState:
    """Computational basis state ``|basis_index>`` on the given register."""
    dims = tuple(site_dims)
    size = math.prod(dims)
    if not 0 <= basis_index < size:
        raise DomainError(f"basis index {basis_index} out of range [0, {size})")
    amps = np.zeros(size, dtype=complex)
    amps[basis_index] = 1
    return QState(dims, amps)


def from_amplitudes(site_dims: Sequence[int], amplitudes, normalize: bool = False) -> QState:
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if normalize:
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise DomainError("cannot normalize the zero vector")
        amps = amps / norm
    return QState(tuple(site_dims), amps)


def qubit(alpha: complex, beta: complex) -> QState:
    """``alpha|0> + beta|1>``; raises if the coefficients are not normalized."""
    return QState((2,), np.array([alpha, beta], dtype=complex))


def random_state(site_dims: Sequence[int], rng: np.random.Generator) -> QState:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    size = math.prod(site_dims)
    v = rng.normal(size=size) + 1j * rng.normal(size=size)
    return QState(tuple(site_dims), v / np.linalg.norm(v))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def tensor(a: QState, b: QState, *more: QState) -> QState:
    """Tensor product; sites of ``a`` come first."""
    dims = a.site_dims + b.site_dims
    amps = np.kron(a.amplitudes, b.amplitudes)
    out = QState(dims, amps)
    for extra in more:
        out = tensor(out, extra)
    return out


def named_state(name: str, n: int | None = None) -> QState:
    """Frequently used entangled and superposed states.

    ``bell00`` .. ``bell11`` follow the table
    ``b00 = |00>+|11>``, ``b01 = |01>+|10>``, ``b10 = |00>-|11>``,
    ``b11 = |01>-|10>`` (all over sqrt 2). ``aharonov3`` is the totally
    antisymmetric state of three qutrits and ``uniform`` (or ``uniform(n)``)
    is ``H^n|0...0>``.
    """
    key = name.strip().lower()
    if key.startswith("uniform"):
        if "(" in key:
            n = int(key[key.index("(") + 1 : key.rindex(")")])
        if n is None or n < 1:
            raise DomainError("uniform state needs a positive qubit count")
        size = 2**n
        return QState((2,) * n, np.full(size, 1 / math.sqrt(size), dtype=complex))
    bells = {
        "bell00": ([1, 0, 0, 1]),
        "bell01": ([0, 1, 1, 0]),
        "bell10": ([1, 0, 0, -1]),
        "bell11": ([0, 1, -1, 0]),
    }
    if key in bells:
        return QState((2, 2), np.array(bells[key], dtype=complex) * _SQRT2_INV)
    if key == "aharonov3":
        amps = np.zeros(27, dtype=complex)
        for perm in itertools.permutations(range(3)):
            amps[perm[0] * 9 + perm[1] * 3 + perm[2]] = _permutation_sign(perm)
        return QState((3, 3, 3), amps / math.sqrt(6))
    raise UnknownNameError(f"unknown state {name!r}")


def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


# --------------------------------------------------------------------------
# Gates
# --------------------------------------------------------------------------

_FIXED_GATES: dict[str, tuple[np.ndarray, int]] = {
    "I": (np.eye(2), 1),
    "X": (np.array([[0, 1], [1, 0]]), 1),
    # real sigma_y: |0> -> |1>, |1> -> -|0>
    "Y_REAL": (np.array([[0, -1], [1, 0]]), 1),
    "Y": (np.array([[0, -1j], [1j, 0]]), 1),
    "Z": (np.array([[1, 0], [0, -1]]), 1),
    "H": (np.array([[1, 1], [1, -1]]) * _SQRT2_INV, 1),
    "S": (np.diag([1, 1j]), 1),
    "T": (np.diag([1, np.exp(1j * math.pi / 4)]), 1),
    "CNOT": (np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]), 2),
    "CZ": (np.diag([1, 1, 1, -1]), 2),
    "SWAP": (np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]), 2),
}
_ALIASES = {
    "SIGMA_X": "X",
    "NOT": "X",
    "SIGMA_Y": "Y_REAL",
    "Y_PAPER": "Y_REAL",
    "SIGMA_Z": "Z",
    "CX": "CNOT",
    "ID": "I",
}


def gate_library(name: str, **params) -> GateOp:
    """Look up a named gate.

    Fixed gates: ``I, X, Y_real, Y, Z, H, S, T, CNOT, CZ, SWAP, CSWAP``.
    ``Y_real`` (alias ``sigma_y``) is the real matrix ``[[0, -1], [1, 0]]``; ``Y`` is the usual
    Pauli-Y. Parameterized gates take keyword arguments:

    * ``PHASE(theta)``  -- ``diag(1, e^{i theta})``
    * ``CPHASE(theta)`` -- controlled ``PHASE``
    * ``RY(theta)``, ``RZ(theta)``
    * ``custom(matrix, arity=1, site_dim=2)``
    """
    key = _ALIASES.get(name.upper(), name.upper())
    if key in _FIXED_GATES:
        m, arity = _FIXED_GATES[key]
        return GateOp(key if key != "Y_REAL" else "Y_real", m, arity)
    if key == "CSWAP":
        m = np.eye(8)
        m[[5, 6]] = m[[6, 5]]
        return GateOp("CSWAP", m, 3)
    if key in ("PHASE", "CPHASE", "RY", "RZ"):
        theta = float(params["theta"])
        if key == "PHASE":
            return GateOp(f"PHASE({theta:g})", np.diag([1, np.exp(1j * theta)]), 1)
        if key == "CPHASE":
            return GateOp(f"CPHASE({theta:g})", np.diag([1, 1, 1, np.exp(1j * theta)]), 2)
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        if key == "RY":
            return GateOp(f"RY({theta:g})", np.array([[c, -s], [s, c]]), 1)
        return GateOp(f"RZ({theta:g})", np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]), 1)
    if key == "CUSTOM":
        m = np.asarray(params["matrix"], dtype=complex)
        arity = int(params.get("arity", 1))
        site_dim = int(params.get("site_dim", 2))
        return GateOp(params.get("label", "custom"), m, arity, site_dim)
    raise UnknownNameError(f"unknown gate {name!r}")


def controlled(gate: GateOp, name: str | None = None) -> GateOp:
    """Qubit-controlled version of a qubit gate; control is the first site."""
    if gate.site_dim != 2:
        raise DomainError("only qubit gates can be controlled")
    size = gate.matrix.shape[0]
    m = np.eye(2 * size, dtype=complex)
    m[size:, size:] = gate.matrix
    return GateOp(name or f"C-{gate.name}", m, gate.arity + 1)


def apply_gate(state: QState, gate: GateOp, targets: Sequence[int]) -> QState:
    """Apply ``gate`` to the listed sites (first target = most significant)."""
    targets = _check_sites(state, targets)
    if len(targets) != gate.arity:
        raise DomainError(f"gate {gate.name!r} acts on {gate.arity} sites, got {len(targets)}")
    if any(state.site_dims[t] != gate.site_dim for t in targets):
        raise DomainError(f"gate {gate.name!r} needs sites of dimension {gate.site_dim}")
    return QState(state.site_dims, _apply_matrix(state, gate.matrix, targets))


def apply_matrix(state: QState, matrix: np.ndarray, targets: Sequence[int]) -> QState:
    """Apply a raw unitary matrix without wrapping it in a :class:`GateOp`."""
    targets = _check_sites(state, targets)
    return QState(state.site_dims, _apply_matrix(state, np.asarray(matrix, dtype=complex), targets))


def _apply_matrix(state: QState, matrix: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    k = len(targets)
    psi = np.moveaxis(state.amplitudes.reshape(state.site_dims), targets, range(k))
    moved_shape = psi.shape
    psi = matrix @ psi.reshape(matrix.shape[1], -1)
    psi = np.moveaxis(psi.reshape(moved_shape), range(k), targets)
    return psi.reshape(-1)


def apply_permutation(state: QState, perm: np.ndarray) -> QState:
    """Permutation unitary: amplitude at index ``i`` moves to ``perm[i]``."""
    perm = np.asarray(perm)
    if perm.shape != (state.dim,) or not np.array_equal(np.sort(perm), np.arange(state.dim)):
        raise DomainError("permutation must be a bijection on the basis indices")
    out = np.empty_like(state.amplitudes)
    out[perm] = state.amplitudes
    return QState(state.site_dims, out)


def permute_sites(state: QState, order: Sequence[int]) -> QState:
    """Relabel sites so that new site ``j`` is old site ``order[j]`` (no gate)."""
    order = list(order)
    if sorted(order) != list(range(state.num_sites)):
        raise DomainError(f"{order} is not a permutation of the sites")
    psi = np.transpose(state.amplitudes.reshape(state.site_dims), order)
    return QState(tuple(state.site_dims[i] for i in order), psi.reshape(-1))


def _check_sites(state: QState, sites: Sequence[int]) -> list[int]:
    sites = [int(s) for s in sites]
    if len(set(sites)) != len(sites):
        raise DomainError(f"sites must be distinct, got {sites}")
    for s in sites:
        if not 0 <= s < state.num_sites:
            raise DomainError(f"site {s} out of range for {state.num_sites} sites")
    return sites


# --------------------------------------------------------------------------
# Measurement
# --------------------------------------------------------------------------


def _bell_rotation() -> np.ndarray:
    cnot = _FIXED_GATES["CNOT"][0]
    h = _FIXED_GATES["H"][0]
    return np.kron(h, np.eye(2)) @ cnot


def _basis_rotation(state: QState, sites: list[int], basis) -> tuple[str, np.ndarray | None]:
    """Unitary mapping the measurement basis onto the computational one."""
    if basis is None or (isinstance(basis, str) and basis.lower() in ("computational", "z", "+")):
        return "computational", None
    if isinstance(basis, str):
        key = basis.lower()
        if key == "bell":
            if len(sites) != 2 or any(state.site_dims[s] != 2 for s in sites):
                raise DomainError("Bell measurement needs exactly two qubit sites")
            return "bell", _bell_rotation()
        if key in ("hadamard", "x", "diagonal"):
            if any(state.site_dims[s] != 2 for s in sites):
                raise DomainError("Hadamard basis needs qubit sites")
            h = _FIXED_GATES["H"][0]
            m = np.ones((1, 1))
            for _ in sites:
                m = np.kron(m, h)
            return "hadamard", m
        raise UnknownNameError(f"unknown measurement basis {basis!r}")
    if isinstance(basis, GateOp):
        matrix, label = basis.matrix, basis.name
    else:
        matrix, label = np.asarray(basis, dtype=complex), "custom"
    size = math.prod(state.site_dims[s] for s in sites)
    if matrix.shape == (size, size):
        return label, matrix
    single = state.site_dims[sites[0]]
    if matrix.shape == (single, single) and all(state.site_dims[s] == single for s in sites):
        m = np.ones((1, 1))
        for _ in sites:
            m = np.kron(m, matrix)
        return label, m
    raise DomainError(f"basis matrix of shape {matrix.shape} does not fit sites {sites}")


def _site_probabilities(state: QState, sites: list[int], rot: np.ndarray | None):
    amps = state.amplitudes if rot is None else _apply_matrix(state, rot, sites)
    psi = np.moveaxis(amps.reshape(state.site_dims), sites, range(len(sites)))
    sub_dims = psi.shape[: len(sites)]
    probs = np.sum(np.abs(psi.reshape(math.prod(sub_dims), -1)) ** 2, axis=1)
    return amps, sub_dims, probs


def outcome_distribution(state: QState, sites: Sequence[int], basis="computational") -> dict[tuple[int, ...], float]:
    """Exact outcome probabilities; zero-probability outcomes are omitted."""
    sites = _check_sites(state, sites)
    _, rot = _basis_rotation(state, sites, basis)
    _, sub_dims, probs = _site_probabilities(state, sites, rot)
    return {
        tuple(int(v) for v in np.unravel_index(i, sub_dims)): float(p)
        for i, p in enumerate(probs)
        if p > 1e-15
    }


def measure(
    state: QState,
    sites: Sequence[int],
    basis="computational",
    rng: np.random.Generator | None = None,
    outcome: Sequence[int] | None = None,
) -> tuple[MeasurementRecord, QState]:
    """Projective measurement of ``sites``.

    Pass ``rng`` to sample, or ``outcome`` to post-select a specific result
    (raises :class:`DomainError` if it has probability below 1e-12). The
    returned state lives in the original frame: a non-computational basis is
    rotated back after the projection.
    """
    sites = _check_sites(state, sites)
    label, rot = _basis_rotation(state, sites, basis)
    amps, sub_dims, probs = _site_probabilities(state, sites, rot)
    if outcome is None:
        if rng is None:
            raise DomainError("measure needs either rng or a forced outcome")
        p = probs / probs.sum()
        idx = int(rng.choice(p.size, p=p))
    else:
        outcome = tuple(int(v) for v in outcome)
        if len(outcome) != len(sites) or any(not 0 <= v < d for v, d in zip(outcome, sub_dims)):
            raise DomainError(f"outcome {outcome} invalid for sites {sites}")
        idx = int(np.ravel_multi_index(outcome, sub_dims))
    prob = float(probs[idx])
    if prob < DEGENERATE_PROB:
        raise DomainError(f"outcome has probability {prob:.3g}; refusing to renormalize")
    psi = np.moveaxis(amps.reshape(state.site_dims), sites, range(len(sites)))
    shape = psi.shape
    flat = psi.reshape(math.prod(sub_dims), -1)
    projected = np.zeros_like(flat)
    projected[idx] = flat[idx] / math.sqrt(prob)
    post = np.moveaxis(projected.reshape(shape), range(len(sites)), sites).reshape(-1)
    post_state = QState(state.site_dims, post)
    if rot is not None:
        post_state = QState(state.site_dims, _apply_matrix(post_state, rot.conj().T, sites))
    result = tuple(int(v) for v in np.unravel_index(idx, sub_dims))
    return MeasurementRecord(tuple(sites), label, result, min(prob, 1.0)), post_state


def drop_sites(state: QState, sites: Sequence[int]) -> QState:
    """Remove sites that sit in a definite computational basis state.

    Used after a measurement to discard classical registers. Raises if any
    dropped site is still in superposition or entangled with the rest.
    """
    sites = _check_sites(state, sites)
    if len(sites) == state.num_sites:
        raise DomainError("cannot drop every site")
    psi = np.moveaxis(state.amplitudes.reshape(state.site_dims), sites, range(len(sites)))
    sub_dims = psi.shape[: len(sites)]
    flat = psi.reshape(math.prod(sub_dims), -1)
    weights = np.sum(np.abs(flat) ** 2, axis=1)
    idx = int(np.argmax(weights))
    if weights[idx] < 1 - CHAIN_TOL:
        raise DomainError(f"sites {sites} are not in a definite basis state")
    keep = [s for s in range(state.num_sites) if s not in sites]
    rest = flat[idx] / np.linalg.norm(flat[idx])
    return QState(tuple(state.site_dims[s] for s in keep), rest)


# --------------------------------------------------------------------------
# Reduced states and entanglement
# --------------------------------------------------------------------------


def reduced_density(state: QState, keep_sites: Sequence[int]) -> DensityMatrix:
    """Partial trace over every site not in ``keep_sites`` (kept in given order)."""
    keep = _check_sites(state, keep_sites)
    if not keep:
        raise DomainError("keep_sites must be nonempty")
    rest = [s for s in range(state.num_sites) if s not in keep]
    psi = np.transpose(state.amplitudes.reshape(state.site_dims), keep + rest)
    d = math.prod(state.site_dims[s] for s in keep)
    m = psi.reshape(d, -1)
    rho = m @ m.conj().T
    return DensityMatrix(d, rho)


def schmidt_coefficients(state: QState, bipartition: Sequence[int]) -> np.ndarray:
    part = _check_sites(state, bipartition)
    if not part or len(part) == state.num_sites:
        raise DomainError("bipartition must be a proper nonempty subset of sites")
    rest = [s for s in range(state.num_sites) if s not in part]
    psi = np.transpose(state.amplitudes.reshape(state.site_dims), part + rest)
    d = math.prod(state.site_dims[s] for s in part)
    return np.linalg.svd(psi.reshape(d, -1), compute_uv=False)


def schmidt_rank(state: QState, bipartition: Sequence[int]) -> int:
    """Number of Schmidt coefficients above 1e-9; 1 means a product state."""
    return int(np.sum(schmidt_coefficients(state, bipartition) > ALGEBRA_TOL))


def inner_product(a: QState, b: QState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.site_dims != b.site_dims:
        raise DomainError(f"dimension mismatch: {a.site_dims} vs {b.site_dims}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: QState, b: QState) -> float:
    """Pure-state fidelity ``|<a|b>|^2``."""
    return abs(inner_product(a, b)) ** 2


def state_fidelity(psi: QState, rho: DensityMatrix) -> float:
    """``<psi|rho|psi>`` for a pure reference and a density matrix."""
    if psi.dim != rho.dim:
        raise DomainError("dimension mismatch")
    v = psi.amplitudes
    return float(np.real(np.vdot(v, rho.entries @ v)))


__all__ = [
    "ALGEBRA_TOL",
    "CHAIN_TOL",
    "DensityMatrix",
    "GateOp",
    "MeasurementRecord",
    "QState",
    "apply_gate",
    "apply_matrix",
    "apply_permutation",
    "controlled",
    "drop_sites",
    "fidelity",
    "from_amplitudes",
    "gate_library",
    "inner_product",
    "make_rng",
    "measure",
    "named_state",
    "new_state",
    "outcome_distribution",
    "permute_sites",
    "qubit",
    "random_state",
    "random_unitary",
    "reduced_density",
    "schmidt_coefficients",
    "schmidt_rank",
    "state_fidelity",
    "tensor",
]
