import math

import numpy as np
import pytest

import oracle
from qnets import protocols, qsim
from qnets.errors import AmbiguityError, DomainError, PreconditionError
from qnets.protocols import InterferometerConfig


def amps(state):
    return np.asarray(state.amplitudes)


class TestInterferometer:
    @pytest.mark.parametrize(
        "splitters, obstacle, expected",
        [(1, False, (0.5, 0.5, 0.0)), (2, False, (1.0, 0.0, 0.0)), (2, True, (0.25, 0.25, 0.5))],
    )
    def test_statistics(self, splitters, obstacle, expected):
        stats = protocols.interferometer(InterferometerConfig(splitters, obstacle))
        assert (stats.p_A, stats.p_B, stats.p_absorbed) == pytest.approx(expected, abs=1e-9)
        assert stats.p_A + stats.p_B + stats.p_absorbed == pytest.approx(1, abs=1e-9)

    def test_obstacle_conditional(self):
        stats = protocols.interferometer(InterferometerConfig(2, True))
        assert stats.conditional() == pytest.approx((0.5, 0.5))

    def test_obstacle_needs_two_splitters(self):
        with pytest.raises(DomainError):
            InterferometerConfig(1, True)

    def test_three_splitters_rejected(self):
        with pytest.raises(DomainError):
            InterferometerConfig(3)


class TestSuperdense:
    @pytest.mark.parametrize(
        "bits, vector",
        [
            ("00", oracle.BELL["00"]),
            ("01", (oracle.ket("01") + oracle.ket("10")) / math.sqrt(2)),
            ("10", oracle.BELL["10"]),
            ("11", (oracle.ket("01") - oracle.ket("10")) / math.sqrt(2)),
        ],
    )
    def test_encoding_table(self, bits, vector):
        state = protocols.superdense_encode(bits)
        assert abs(np.vdot(vector, amps(state))) ** 2 == pytest.approx(1, abs=1e-9)

    @pytest.mark.parametrize("bits", ["00", "01", "10", "11"])
    def test_round_trip(self, bits):
        assert protocols.superdense_decode(protocols.superdense_encode(bits)) == bits

    @pytest.mark.parametrize("bits", [(1, 0), 2, [1, 0]])
    def test_alternate_inputs(self, bits):
        assert protocols.superdense_decode(protocols.superdense_encode(bits)) == "10"

    def test_decode_bell10(self):
        assert protocols.superdense_decode(qsim.named_state("bell10")) == "10"

    def test_encoded_states_orthonormal(self):
        states = [protocols.superdense_encode(b) for b in ("00", "01", "10", "11")]
        gram = np.array([[abs(qsim.inner_product(a, b)) for b in states] for a in states])
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-9)

    def test_decode_non_bell(self):
        with pytest.raises(AmbiguityError):
            protocols.superdense_decode(qsim.new_state([2, 2], 0))

    def test_encode_needs_bell00(self):
        with pytest.raises(PreconditionError):
            protocols.superdense_encode("01", qsim.named_state("bell11"))

    @pytest.mark.parametrize("bits", ["2", "000", 4, "ab"])
    def test_bad_message(self, bits):
        with pytest.raises(DomainError):
            protocols.superdense_encode(bits)


class TestTeleport:
    def test_basis_state(self, rng):
        for _ in range(8):
            _, bob = protocols.teleport(qsim.new_state([2], 0), None, rng)
            assert abs(amps(bob)[0]) == pytest.approx(1, abs=1e-12)

    def test_plus_all_branches(self):
        plus = qsim.qubit(1 / math.sqrt(2), 1 / math.sqrt(2))
        branches = protocols.teleport_branches(plus)
        assert set(branches) == {(0, 0), (0, 1), (1, 0), (1, 1)}
        for p, bob in branches.values():
            assert p == pytest.approx(0.25)
            assert qsim.fidelity(plus, bob) == pytest.approx(1, abs=1e-9)

    def test_branch_independence(self, rng):
        for _ in range(20):
            psi = qsim.random_state([2], rng)
            for _, bob in protocols.teleport_branches(psi).values():
                assert qsim.fidelity(psi, bob) == pytest.approx(1, abs=1e-9)

    def test_random_states(self, rng):
        worst = min(
            qsim.fidelity(psi, protocols.teleport(psi, None, rng)[1])
            for psi in (qsim.random_state([2], rng) for _ in range(100))
        )
        assert worst >= 1 - 1e-9

    def test_bits_are_outcomes(self, rng):
        seen = {protocols.teleport(qsim.random_state([2], rng), None, rng)[0] for _ in range(60)}
        assert seen == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_rejects_two_qubits(self, rng):
        with pytest.raises(DomainError):
            protocols.teleport(qsim.new_state([2, 2], 0), None, rng)

    def test_rejects_wrong_pair(self, rng):
        with pytest.raises(PreconditionError):
            protocols.teleport(qsim.new_state([2], 0), qsim.named_state("bell01"), rng)

    def test_teleport_half_keeps_entanglement(self, rng):
        _, pair = protocols.teleport_site(qsim.named_state("bell00"), 1, rng)
        assert qsim.schmidt_rank(pair, [0]) == 2
        assert qsim.fidelity(pair, qsim.named_state("bell00")) == pytest.approx(1, abs=1e-9)

    def test_teleport_site_of_register(self, rng):
        state = qsim.random_state([2, 2, 2], rng)
        _, moved = protocols.teleport_site(state, 1, rng)
        assert qsim.fidelity(state, moved) == pytest.approx(1, abs=1e-9)


class TestDistribution:
    def test_single_hop(self, rng):
        pair, ledger = protocols.entangle_distribute(rng)
        assert qsim.fidelity(pair, qsim.named_state("bell00")) == pytest.approx(1, abs=1e-9)
        assert (ledger.epr_consumed, ledger.classical_bits_sent) == (2, 4)

    def test_two_successive_hops(self, rng):
        pair, ledger = protocols.entangle_distribute(rng)
        _, pair = protocols.teleport_site(pair, 0, rng, ledger)
        _, pair = protocols.teleport_site(pair, 1, rng, ledger)
        assert qsim.fidelity(pair, qsim.named_state("bell00")) == pytest.approx(1, abs=1e-9)
        assert ledger.epr_consumed == 4 and ledger.teleports == 4
