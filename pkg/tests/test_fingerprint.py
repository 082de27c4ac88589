import itertools
import math

import numpy as np
import pytest

import oracle
from frozen import HADAMARD_DISTINCT_ACCEPT
from qnets import fingerprint, qsim
from qnets.errors import DomainError


def all_inputs(n):
    return ["".join(b) for b in itertools.product("01", repeat=n)]


@pytest.fixture(scope="module")
def code3():
    return fingerprint.hadamard_code(3)


class TestCode:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_distance_exhaustive(self, n):
        code = fingerprint.hadamard_code(n)
        words = np.array([fingerprint.encode_codeword(x, code) for x in all_inputs(n)])
        dist = (words[:, None, :] != words[None, :, :]).sum(axis=2)
        off = dist[~np.eye(len(words), dtype=bool)]
        assert np.all(off == code.m // 2)

    def test_n3_pairs_differ_in_four(self, code3):
        for x, y in itertools.combinations(all_inputs(3), 2):
            d = np.sum(fingerprint.encode_codeword(x, code3) != fingerprint.encode_codeword(y, code3))
            assert d == 4

    def test_zero_word(self, code3):
        assert not fingerprint.encode_codeword("000", code3).any()

    def test_delta(self, code3):
        assert code3.delta == 0.5

    @pytest.mark.parametrize("x", all_inputs(4))
    def test_matches_oracle(self, x):
        code = fingerprint.hadamard_code(4)
        assert list(fingerprint.encode_codeword(x, code)) == oracle.hadamard_codeword(x)

    @pytest.mark.parametrize("x", ["01", "0101", "012"])
    def test_bad_input(self, code3, x):
        with pytest.raises(DomainError):
            fingerprint.encode_codeword(x, code3)

    def test_array_input(self, code3):
        np.testing.assert_array_equal(
            fingerprint.encode_codeword([1, 0, 1], code3), fingerprint.encode_codeword("101", code3)
        )


class TestState:
    def test_size(self, code3):
        fp = fingerprint.fingerprint_state("101", code3)
        assert fp.num_qubits == int(math.log2(code3.m)) + 1 == 4

    def test_normalized(self, code3):
        fp = fingerprint.fingerprint_state("110", code3)
        assert qsim.inner_product(fp.state, fp.state) == pytest.approx(1)

    def test_support(self, code3):
        fp = fingerprint.fingerprint_state("011", code3)
        word = fingerprint.encode_codeword("011", code3)
        amps = np.asarray(fp.state.amplitudes)
        support = np.flatnonzero(np.abs(amps) > 1e-12)
        assert list(support) == [(i << 1) | int(word[i]) for i in range(8)]
        np.testing.assert_allclose(amps[support], 1 / math.sqrt(8))

    def test_distinct_overlap(self, code3):
        a = fingerprint.fingerprint_state("001", code3)
        b = fingerprint.fingerprint_state("111", code3)
        assert fingerprint.fingerprint_overlap(a, b) == pytest.approx(0.5, abs=1e-12)

    def test_overlap_formula(self, rng):
        code = fingerprint.hadamard_code(6)
        for _ in range(50):
            x, y = rng.integers(0, 2, 6), rng.integers(0, 2, 6)
            d = np.sum(fingerprint.encode_codeword(x, code) != fingerprint.encode_codeword(y, code))
            fx, fy = fingerprint.fingerprint_state(x, code), fingerprint.fingerprint_state(y, code)
            assert fingerprint.fingerprint_overlap(fx, fy) == pytest.approx((code.m - d) / code.m, abs=1e-9)

    def test_logarithmic_growth(self):
        sizes = [fingerprint.fingerprint_state("0" * n, fingerprint.hadamard_code(n)).num_qubits for n in range(1, 9)]
        assert sizes == [n + 1 for n in range(1, 9)]


class TestSwapTest:
    def test_equal_always_accepted(self, code3, rng):
        fp = fingerprint.fingerprint_state("101", code3)
        assert fingerprint.swap_test_probability(fp, fp) == 1.0
        assert fingerprint.swap_test(fp, fp, rng, shots=10_000).all()

    def test_orthogonal(self):
        a, b = qsim.new_state([2], 0), qsim.new_state([2], 1)
        assert fingerprint.swap_test_probability(a, b) == pytest.approx(0.5, abs=1e-12)

    def test_hadamard_distinct(self, code3):
        a = fingerprint.fingerprint_state("001", code3)
        b = fingerprint.fingerprint_state("010", code3)
        assert fingerprint.swap_test_probability(a, b) == pytest.approx(HADAMARD_DISTINCT_ACCEPT, abs=1e-9)

    @pytest.mark.parametrize("dims", [[2], [2, 2], [2, 2, 2]])
    def test_acceptance_law(self, rng, dims):
        for _ in range(50 // len(dims)):
            a, b = qsim.random_state(dims, rng), qsim.random_state(dims, rng)
            expected = (1 + abs(qsim.inner_product(a, b)) ** 2) / 2
            assert fingerprint.swap_test_probability(a, b) == pytest.approx(expected, abs=1e-9)

    def test_shape_mismatch(self, rng):
        with pytest.raises(DomainError):
            fingerprint.swap_test(qsim.new_state([2], 0), qsim.new_state([2, 2], 0), rng)

    def test_qutrits_rejected(self, rng):
        with pytest.raises(DomainError):
            fingerprint.swap_test_probability(qsim.new_state([3], 0), qsim.new_state([3], 1))

    def test_sampling_rate(self, code3, rng):
        a = fingerprint.fingerprint_state("001", code3)
        b = fingerprint.fingerprint_state("110", code3)
        rate = fingerprint.swap_test(a, b, rng, shots=10_000).mean()
        assert rate == pytest.approx(0.625, abs=3 * math.sqrt(0.625 * 0.375 / 10_000))


class TestReferee:
    @pytest.mark.parametrize("r", [1, 5, 20])
    def test_equal_inputs(self, code3, rng, r):
        assert all(fingerprint.referee_compare("011", "011", code3, r, rng) for _ in range(200))

    def test_single_round_reject_rate(self, code3, rng):
        trials = 10_000
        rejects = sum(not fingerprint.referee_compare("011", "100", code3, 1, rng) for _ in range(trials))
        assert rejects / trials == pytest.approx(0.375, abs=0.02)

    def test_ten_rounds(self, code3, rng):
        trials = 10_000
        bound = fingerprint.false_equal_bound(code3, 10)
        assert bound == pytest.approx(0.625**10)
        rate = sum(fingerprint.referee_compare("011", "100", code3, 10, rng) for _ in range(trials)) / trials
        assert abs(rate - bound) <= 3 * math.sqrt(bound * (1 - bound) / trials)

    def test_needs_repetitions(self, code3, rng):
        with pytest.raises(DomainError):
            fingerprint.referee_compare("011", "100", code3, 0, rng)
