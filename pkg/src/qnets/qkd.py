"""BB84 and B92 key distribution with intercept-resend eavesdropping.

Pulses are simulated at symbol level: a pulse is a :class:`Polarization`
code and measurements use the closed-form statistics of the four BB84
states (matched basis reproduces the bit, mismatched basis gives a fair
coin).  :func:`symbol_statistics` derives those same statistics from
:mod:`qnets.qsim`, and ``statevector=True`` routes every pulse through the
state-vector simulator instead.

Classical post-processing follows the usual pipeline: sifting, QBER
estimation on a disclosed sample, parity-bisection reconciliation with
one discarded bit per disclosed parity, and Toeplitz-hash privacy
amplification down to ``N - K - L - R - S`` bits where

* ``N`` is the sifted length,
* ``K`` the number of parities disclosed during reconciliation,
* ``L`` the estimated eavesdropper knowledge ``ceil(eve_information(4 * qber) * N)``,
* ``R`` the number of bits revealed for QBER estimation,
* ``S`` an extra security margin.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from scipy.linalg import matmul_toeplitz

from . import qsim
from .errors import DomainError

RECTILINEAR = 0  # "+"
DIAGONAL = 1  # "x"
BASIS_SYMBOLS = ("+", "x")


class Polarization(IntEnum):
    """Photon polarization; the code is ``2 * basis + bit``."""

    H = 0  # horizontal, + basis, bit 0
    V = 1  # vertical, + basis, bit 1
    D45 = 2  # 45 degrees, x basis, bit 0
    D135 = 3  # 135 degrees, x basis, bit 1

    @property
    def basis(self) -> int:
        return int(self) >> 1

    @property
    def bit(self) -> int:
        return int(self) & 1

    @classmethod
    def encode(cls, basis: int, bit: int) -> "Polarization":
        return cls(2 * basis + bit)


def polarization_state(pol: Polarization) -> qsim.QState:
    """``H=|0>``, ``V=|1>``, ``D45=|+>``, ``D135=|->``."""
    s = qsim.new_state([2], Polarization(pol).bit)
    if Polarization(pol).basis == DIAGONAL:
        s = qsim.apply_gate(s, qsim.gate_library("H"), [0])
    return s


def _basis_label(basis: int) -> str:
    return "computational" if basis == RECTILINEAR else "hadamard"


def symbol_statistics() -> np.ndarray:
    """``P(result = 1 | polarization, measurement basis)`` from the simulator.

    Shape ``(4, 2)``; the symbol-level fast path assumes this equals
    ``bit`` on a matched basis and 1/2 otherwise.
    """
    table = np.zeros((4, 2))
    for pol in Polarization:
        for basis in (RECTILINEAR, DIAGONAL):
            dist = qsim.outcome_distribution(polarization_state(pol), [0], _basis_label(basis))
            table[pol, basis] = dist.get((1,), 0.0)
    return table


def _measure_statevector(pulses: np.ndarray, bases: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(len(pulses), dtype=np.int8)
    for i, (pol, basis) in enumerate(zip(pulses, bases)):
        record, _ = qsim.measure(polarization_state(Polarization(int(pol))), [0], _basis_label(int(basis)), rng)
        out[i] = record.outcome[0]
    return out


def _measure_symbols(pulses: np.ndarray, bases: np.ndarray, coins: np.ndarray) -> np.ndarray:
    matched = (pulses >> 1) == bases
    return np.where(matched, pulses & 1, coins).astype(np.int8)


# --------------------------------------------------------------------------
# Parameters and reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QkdParams:
    n_pulses: int = 100_000
    eve_lambda: float = 0.0
    channel_flip: float = 0.0
    sample_fraction: float = 0.1
    e_max: float = 0.11
    security_s: int = 30
    seed: int = 0
    passes: int = 2
    statevector: bool = False

    def __post_init__(self):
        if self.n_pulses < 1:
            raise DomainError("n_pulses must be positive")
        if not 0 <= self.eve_lambda <= 1:
            raise DomainError("eve_lambda must lie in [0, 1]")
        if not 0 <= self.channel_flip <= 0.5:
            raise DomainError("channel_flip must lie in [0, 0.5]")
        if not 0 < self.sample_fraction < 1:
            raise DomainError("sample_fraction must lie in (0, 1)")
        if not 0 <= self.e_max <= 1:
            raise DomainError("e_max must lie in [0, 1]")
        if self.security_s < 0:
            raise DomainError("security_s must be nonnegative")


@dataclass
class EveRecord:
    """Per-pulse eavesdropper actions; ``bases`` is -1 where she stayed idle."""

    attacked: np.ndarray
    bases: np.ndarray
    bits: np.ndarray


@dataclass
class ReconcileTranscript:
    disclosed_parities: int = 0
    discarded_positions: list[int] = field(default_factory=list)
    corrected_errors: int = 0
    rounds: int = 0
    block_sizes: list[int] = field(default_factory=list)
    e_real: float = 0.0
    aborted: bool = False
    abort_reason: str | None = None

    @property
    def discarded(self) -> int:
        return len(self.discarded_positions)

    def summary(self) -> dict:
        return {
            "disclosed_parities": self.disclosed_parities,
            "discarded": self.discarded,
            "corrected_errors": self.corrected_errors,
            "rounds": self.rounds,
            "block_sizes": list(self.block_sizes),
            "e_real": self.e_real,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
        }


@dataclass
class PulseTranscript:
    alice_bases: np.ndarray
    alice_bits: np.ndarray
    eve: EveRecord
    bob_bases: np.ndarray
    bob_bits: np.ndarray


@dataclass
class SessionReport:
    protocol: str
    n_pulses: int
    sifted_len: int
    sifted_fraction: float
    pre_sift_agreement: float
    qber: float
    true_qber: float
    revealed: int
    eve_info_estimate: float
    eve_known_fraction: float
    leak_L: int
    security_S: int
    reconciliation: dict
    final_key_len: int
    keys_equal: bool
    aborted: bool
    abort_reason: str | None = None
    alice_key: np.ndarray | None = field(default=None, repr=False)
    bob_key: np.ndarray | None = field(default=None, repr=False)
    transcript: PulseTranscript | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("alice_key", "bob_key", "transcript"):
            d.pop(k)
        return d


class KeyExhausted(DomainError):
    """Privacy amplification would leave no secret bits."""


# --------------------------------------------------------------------------
# Quantum transmission
# --------------------------------------------------------------------------


def bb84_transmit(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Alice's uniformly random bits and bases and the encoded pulses."""
    if n < 1:
        raise DomainError("need at least one pulse")
    bits = rng.integers(0, 2, n, dtype=np.int8)
    bases = rng.integers(0, 2, n, dtype=np.int8)
    return bits, bases, (2 * bases + bits).astype(np.int8)


def channel_transmit(
    pulses: np.ndarray,
    eve_lambda: float,
    channel_flip: float,
    rng: np.random.Generator,
    statevector: bool = False,
) -> tuple[np.ndarray, EveRecord]:
    """Intercept-resend on a fraction ``eve_lambda`` of pulses, then bit-flip noise.

    An attacked pulse is measured in a uniformly random basis and replaced by
    the polarization Eve observed. Noise then flips the bit of each pulse
    within its own basis with probability ``channel_flip``.
    """
    if not 0 <= eve_lambda <= 1 or not 0 <= channel_flip <= 0.5:
        raise DomainError("eve_lambda must be in [0, 1] and channel_flip in [0, 0.5]")
    pulses = np.asarray(pulses, dtype=np.int8)
    n = len(pulses)
    attacked = rng.random(n) < eve_lambda
    eve_bases = rng.integers(0, 2, n, dtype=np.int8)
    coins = rng.integers(0, 2, n, dtype=np.int8)
    flips = rng.random(n) < channel_flip
    if statevector:
        eve_bits = np.zeros(n, dtype=np.int8)
        idx = np.flatnonzero(attacked)
        eve_bits[idx] = _measure_statevector(pulses[idx], eve_bases[idx], rng)
    else:
        eve_bits = _measure_symbols(pulses, eve_bases, coins)
    out = np.where(attacked, 2 * eve_bases + eve_bits, pulses).astype(np.int8)
    out = (out ^ flips.astype(np.int8)).astype(np.int8)
    record = EveRecord(
        attacked=attacked,
        bases=np.where(attacked, eve_bases, -1).astype(np.int8),
        bits=np.where(attacked, eve_bits, -1).astype(np.int8),
    )
    return out, record


def bb84_receive(pulses: np.ndarray, rng: np.random.Generator, statevector: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Bob measures each pulse in an independently chosen random basis."""
    pulses = np.asarray(pulses, dtype=np.int8)
    n = len(pulses)
    bases = rng.integers(0, 2, n, dtype=np.int8)
    coins = rng.integers(0, 2, n, dtype=np.int8)
    if statevector:
        return bases, _measure_statevector(pulses, bases, rng)
    return bases, _measure_symbols(pulses, bases, coins)


# --------------------------------------------------------------------------
# Classical post-processing
# --------------------------------------------------------------------------


def sift(alice_bases, bob_bases, alice_bits, bob_bits) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Keep the positions where both parties used the same basis."""
    arrays = [np.asarray(x) for x in (alice_bases, bob_bases, alice_bits, bob_bits)]
    if len({len(a) for a in arrays}) != 1:
        raise DomainError("sift inputs must have equal lengths")
    ab, bb, abits, bbits = arrays
    kept = np.flatnonzero(ab == bb)
    return abits[kept].astype(np.int8), bbits[kept].astype(np.int8), kept


@dataclass
class QberEstimate:
    qber: float
    revealed: int
    alice_rest: np.ndarray
    bob_rest: np.ndarray
    sample_indices: np.ndarray


def estimate_qber(a_sifted, b_sifted, sample_fraction: float, rng: np.random.Generator) -> QberEstimate:
    """Disclose a uniformly random sample, measure its error rate, drop it."""
    a = np.asarray(a_sifted)
    b = np.asarray(b_sifted)
    if len(a) != len(b):
        raise DomainError("keys must have equal length")
    if not 0 < sample_fraction < 1:
        raise DomainError("sample_fraction must lie in (0, 1)")
    r = int(round(sample_fraction * len(a)))
    if r < 1 or r >= len(a):
        raise DomainError(f"a {sample_fraction:g} sample of {len(a)} bits is empty or exhausts the key")
    idx = np.sort(rng.choice(len(a), size=r, replace=False))
    qber = float(np.mean(a[idx] != b[idx]))
    keep = np.ones(len(a), dtype=bool)
    keep[idx] = False
    return QberEstimate(qber, r, a[keep], b[keep], idx)


def block_size_for(qber_hint: float, n: int) -> int:
    """``ceil(0.73 / qber)`` clamped to ``[4, n // 2]``: about one error per block."""
    b = math.ceil(0.73 / max(qber_hint, 1 / n))
    return int(min(max(b, 4), max(n // 2, 1)))


def _parity(x: np.ndarray) -> int:
    return int(np.bitwise_xor.reduce(x)) if len(x) else 0


def reconcile(
    a_key,
    b_key,
    qber_hint: float,
    e_max: float,
    rng: np.random.Generator,
    block_size: int | None = None,
    passes: int = 2,
    quiet_passes: int = 2,
    max_passes: int = 24,
    verify_bits: int = 32,
) -> tuple[np.ndarray, np.ndarray, ReconcileTranscript]:
    """Permute, compare block parities, bisect mismatching blocks.

    Bob's key is corrected toward Alice's. For every disclosed parity the
    last bit of that (sub)block is discarded afterwards, so the number of
    discarded bits always equals ``disclosed_parities``.

    At least ``passes`` passes run, each with a fresh shared permutation;
    further passes follow until ``quiet_passes`` consecutive passes find no
    error (or ``max_passes`` is reached). ``verify_bits`` random-subset
    parities then check for residual errors and any mismatch aborts. The
    session also aborts when the corrected error rate ``e_real`` exceeds
    ``e_max``.
    """
    a = np.asarray(a_key, dtype=np.int8).copy()
    b = np.asarray(b_key, dtype=np.int8).copy()
    if len(a) != len(b):
        raise DomainError("keys must have equal length")
    if len(a) < 8:
        raise DomainError("keys shorter than 8 bits cannot be reconciled")
    n_in = len(a)
    pos = np.arange(n_in)
    tr = ReconcileTranscript()

    quiet = 0
    while tr.rounds < max_passes and (tr.rounds < passes or quiet < quiet_passes):
        if len(a) < 2:
            break
        perm = rng.permutation(len(a))
        a, b, pos = a[perm], b[perm], pos[perm]
        size = block_size if block_size is not None else block_size_for(qber_hint, len(a))
        size = max(1, min(size, len(a)))
        tr.block_sizes.append(size)
        starts = np.arange(0, len(a), size)
        ends = np.minimum(starts + size, len(a))
        diff = np.bitwise_xor.reduceat(a ^ b, starts)
        tr.disclosed_parities += len(starts)
        drop = list(ends - 1)
        found = 0
        for block in np.flatnonzero(diff):
            lo, hi = int(starts[block]), int(ends[block])
            while hi - lo > 1:
                mid = (lo + hi) // 2
                tr.disclosed_parities += 1
                drop.append(mid - 1)
                if _parity(a[lo:mid]) != _parity(b[lo:mid]):
                    hi = mid
                else:
                    lo = mid
            b[lo] ^= 1
            found += 1
        tr.corrected_errors += found
        quiet = quiet + 1 if found == 0 else 0
        keep = np.ones(len(a), dtype=bool)
        keep[drop] = False
        tr.discarded_positions.extend(int(p) for p in pos[~keep])
        a, b, pos = a[keep], b[keep], pos[keep]
        tr.rounds += 1

    residual = False
    for _ in range(min(verify_bits, max(len(a) - 1, 0))):
        mask = rng.integers(0, 2, len(a)).astype(bool)
        if not mask.any():
            mask[rng.integers(len(a))] = True
        tr.disclosed_parities += 1
        if _parity(a[mask]) != _parity(b[mask]):
            residual = True
        last = int(np.flatnonzero(mask)[-1])
        tr.discarded_positions.append(int(pos[last]))
        a, b, pos = np.delete(a, last), np.delete(b, last), np.delete(pos, last)

    tr.e_real = tr.corrected_errors / n_in
    if tr.e_real > e_max:
        tr.aborted, tr.abort_reason = True, "error_rate"
    elif residual:
        tr.aborted, tr.abort_reason = True, "residual_mismatch"
    return a, b, tr


def toeplitz_seed(out_len: int, in_len: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, out_len + in_len - 1, dtype=np.int8)


def toeplitz_hash(key: np.ndarray, seed: np.ndarray, out_len: int) -> np.ndarray:
    """``T @ key mod 2`` with ``T[i, j] = seed[i - j + n - 1]``.

    The first column of ``T`` is ``seed[n-1:]`` and the first row is
    ``seed[n-1::-1]``; the product is evaluated by FFT.
    """
    n = len(key)
    if len(seed) != out_len + n - 1:
        raise DomainError("seed length must be out_len + len(key) - 1")
    col = seed[n - 1 :].astype(float)
    row = seed[n - 1 :: -1].astype(float)
    y = matmul_toeplitz((col, row), np.asarray(key, dtype=float))
    return (np.rint(y).astype(np.int64) % 2).astype(np.int8)


def privacy_amplify(key, K: int, L: int, R: int, S: int, rng: np.random.Generator, n_sifted: int | None = None) -> np.ndarray:
    """Compress ``key`` with a random Toeplitz hash to ``N - K - L - R - S`` bits.

    ``n_sifted`` defaults to ``len(key) + K + R``: the reconciled key is what
    remains of the sifted key after the QBER sample and discarded bits.
    Both parties obtain identical outputs from identical keys and streams.
    """
    key = np.asarray(key, dtype=np.int8)
    n = len(key) + K + R if n_sifted is None else n_sifted
    out_len = n - K - L - R - S
    if out_len < 1:
        raise KeyExhausted(f"no secret bits left (N-K-L-R-S = {out_len})")
    if out_len > len(key):
        raise DomainError("output longer than the input key")
    seed = toeplitz_seed(out_len, len(key), rng)
    return toeplitz_hash(key, seed, out_len)


def eve_information(eve_lambda: float) -> float:
    """Fraction of sifted bits known to an intercept-resend attacker."""
    if not 0 <= eve_lambda <= 1:
        raise DomainError("lambda must lie in [0, 1]")
    return 0.5 * eve_lambda


def _postprocess(
    protocol: str,
    params: QkdParams,
    rng: np.random.Generator,
    alice_raw: np.ndarray,
    bob_raw: np.ndarray,
    a_sift: np.ndarray,
    b_sift: np.ndarray,
    eve_known: np.ndarray,
    transcript: PulseTranscript | None,
) -> SessionReport:
    n_sift = len(a_sift)
    base = dict(
        protocol=protocol,
        n_pulses=params.n_pulses,
        sifted_len=n_sift,
        sifted_fraction=n_sift / params.n_pulses,
        pre_sift_agreement=float(np.mean(alice_raw == bob_raw)),
        true_qber=float(np.mean(a_sift != b_sift)) if n_sift else 0.0,
        eve_known_fraction=float(np.mean(eve_known)) if n_sift else 0.0,
        security_S=params.security_s,
        transcript=transcript,
    )
    try:
        est = estimate_qber(a_sift, b_sift, params.sample_fraction, rng)
    except DomainError:
        return SessionReport(
            qber=0.0, revealed=0, eve_info_estimate=0.0, leak_L=0, reconciliation={},
            final_key_len=0, keys_equal=False, aborted=True, abort_reason="too_short", **base,
        )
    lam_est = min(1.0, 4 * est.qber)
    info = eve_information(lam_est)
    leak = math.ceil(info * n_sift)
    base.update(qber=est.qber, revealed=est.revealed, eve_info_estimate=info, leak_L=leak)
    if len(est.alice_rest) < 8:
        return SessionReport(reconciliation={}, final_key_len=0, keys_equal=False, aborted=True,
                             abort_reason="too_short", **base)

    a_rec, b_rec, tr = reconcile(est.alice_rest, est.bob_rest, est.qber, params.e_max, rng, passes=params.passes)
    if tr.aborted:
        return SessionReport(reconciliation=tr.summary(), final_key_len=0,
                             keys_equal=bool(np.array_equal(a_rec, b_rec)), aborted=True,
                             abort_reason=tr.abort_reason, alice_key=a_rec, bob_key=b_rec, **base)
    # both parties hash with the same publicly announced seed
    state = rng.bit_generator.state
    try:
        a_fin = privacy_amplify(a_rec, tr.disclosed_parities, leak, est.revealed, params.security_s, rng, n_sifted=n_sift)
        rng.bit_generator.state = state
        b_fin = privacy_amplify(b_rec, tr.disclosed_parities, leak, est.revealed, params.security_s, rng, n_sifted=n_sift)
    except KeyExhausted:
        return SessionReport(reconciliation=tr.summary(), final_key_len=0,
                             keys_equal=bool(np.array_equal(a_rec, b_rec)), aborted=True,
                             abort_reason="key_exhausted", alice_key=a_rec, bob_key=b_rec, **base)
    return SessionReport(reconciliation=tr.summary(), final_key_len=len(a_fin),
                         keys_equal=bool(np.array_equal(a_fin, b_fin)), aborted=False,
                         alice_key=a_fin, bob_key=b_fin, **base)


def run_bb84_session(params: QkdParams, rng: np.random.Generator | None = None, keep_transcript: bool = False) -> SessionReport:
    """Transmit, eavesdrop, receive, sift, estimate, reconcile and amplify."""
    rng = qsim.make_rng(params.seed) if rng is None else rng
    bits, bases, pulses = bb84_transmit(params.n_pulses, rng)
    received, eve = channel_transmit(pulses, params.eve_lambda, params.channel_flip, rng, params.statevector)
    bob_bases, bob_bits = bb84_receive(received, rng, params.statevector)
    a_sift, b_sift, kept = sift(bases, bob_bases, bits, bob_bits)
    eve_known = eve.attacked[kept] & (eve.bases[kept] == bases[kept])
    transcript = PulseTranscript(bases, bits, eve, bob_bases, bob_bits) if keep_transcript else None
    return _postprocess("bb84", params, rng, bits, bob_bits, a_sift, b_sift, eve_known, transcript)


def b92_session(params: QkdParams, rng: np.random.Generator | None = None, keep_transcript: bool = False) -> SessionReport:
    """B92 with ``|0>`` for bit 0 and ``|+>`` for bit 1.

    Bob measures in a random basis; a result of 1 is conclusive because the
    other state could never have produced it (``+`` basis outcome 1 rules
    out ``|0>``, ``x`` basis outcome ``|->`` rules out ``|+>``). The key bit
    is ``1 - bob_basis`` on conclusive positions.
    """
    rng = qsim.make_rng(params.seed) if rng is None else rng
    bits = rng.integers(0, 2, params.n_pulses, dtype=np.int8)
    pulses = np.where(bits == 0, Polarization.H, Polarization.D45).astype(np.int8)
    received, eve = channel_transmit(pulses, params.eve_lambda, params.channel_flip, rng, params.statevector)
    bob_bases, bob_bits = bb84_receive(received, rng, params.statevector)
    kept = np.flatnonzero(bob_bits == 1)
    a_key = bits[kept]
    b_key = (1 - bob_bases[kept]).astype(np.int8)
    eve_known = eve.attacked[kept] & (eve.bits[kept] == 1)
    raw_bits = (pulses & 1).astype(np.int8)
    transcript = PulseTranscript(pulses >> 1, raw_bits, eve, bob_bases, bob_bits) if keep_transcript else None
    return _postprocess("b92", params, rng, raw_bits, bob_bits, a_key, b_key, eve_known, transcript)


# --------------------------------------------------------------------------
# Transcript files
# --------------------------------------------------------------------------

TRANSCRIPT_HEADER = "# index,alice_basis,alice_bit,eve_action,bob_basis,bob_bit"


def write_transcript(transcript: PulseTranscript, path) -> Path:
    """One pulse per line; bases are ``+``/``x``, ``eve_action`` is ``-`` or her basis."""
    path = Path(path)
    lines = [TRANSCRIPT_HEADER]
    eve_bases = transcript.eve.bases
    for i in range(len(transcript.alice_bits)):
        eve = "-" if eve_bases[i] < 0 else BASIS_SYMBOLS[eve_bases[i]]
        lines.append(
            f"{i},{BASIS_SYMBOLS[transcript.alice_bases[i]]},{int(transcript.alice_bits[i])},"
            f"{eve},{BASIS_SYMBOLS[transcript.bob_bases[i]]},{int(transcript.bob_bits[i])}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_transcript(path) -> list[tuple[int, str, int, str, str, int]]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#"):
            continue
        idx, ab, abit, eve, bb, bbit = line.split(",")
        rows.append((int(idx), ab, int(abit), eve, bb, int(bbit)))
    return rows
