from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnets import netsim, qsim
from qnets.errors import DomainError, NoCloningError, ResourceExhausted, StateError
from qnets.netsim import EntanglementStore
from qnets.resources import ResourceLedger


def bfs_distance(topo, a, b):
    seen, queue = {a: 0}, deque([a])
    while queue:
        u = queue.popleft()
        for v in topo.neighbors(u):
            if v not in seen:
                seen[v] = seen[u] + 1
                queue.append(v)
    return seen[b]


@pytest.fixture
def topo():
    return netsim.build_topology(2, 2, 2)


@pytest.fixture
def deep():
    return netsim.build_topology(3, 2, 1)


class TestTopology:
    def test_counts(self, topo):
        levels = sorted(topo.nodes[r].level for r in topo.routers())
        assert levels == [0, 0, 1]
        assert len(topo.hosts()) == 4

    def test_every_edge_has_both_channels(self, topo):
        assert all(set(ch) == {"classical", "quantum"} for ch in topo.edges.values())

    def test_hosts_attach_to_level0(self, topo):
        for h in topo.hosts():
            assert topo.nodes[topo.parent[h]].level == 0
            assert len(topo.neighbors(h)) == 1

    def test_tree(self, deep):
        assert len(deep.edges) == len(deep.nodes) - 1

    def test_star(self):
        star = netsim.build_topology(1, 1, 5)
        assert star.routers() == ["R0.0"]
        assert all(star.neighbors(h) == ["R0.0"] for h in star.hosts())

    def test_deterministic_ids(self):
        a, b = netsim.build_topology(2, 3, 2), netsim.build_topology(2, 3, 2)
        assert list(a.nodes) == list(b.nodes) and a.edges == b.edges

    @pytest.mark.parametrize("args", [(0, 2, 2), (2, 0, 2), (2, 2, 0)])
    def test_malformed(self, args):
        with pytest.raises(DomainError):
            netsim.build_topology(*args)


class TestRouting:
    def test_siblings(self, topo):
        assert netsim.route_path(topo, "H0", "H1") == ["H0", "R0.0", "H1"]

    def test_peaks_at_level_one(self, topo):
        path = netsim.route_path(topo, "H0", "H3")
        assert path == ["H0", "R0.0", "R1.0", "R0.1", "H3"]

    def test_same_node(self, topo):
        with pytest.raises(DomainError):
            netsim.route_path(topo, "H0", "H0")

    def test_unknown(self, topo):
        with pytest.raises(DomainError):
            netsim.route_path(topo, "H0", "H99")

    def test_all_host_pairs_routable(self, deep):
        hosts = deep.hosts()
        for a in hosts:
            for b in hosts:
                if a != b:
                    path = netsim.route_path(deep, a, b)
                    assert path[0] == a and path[-1] == b

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 3), st.integers(1, 3), st.data())
    def test_route_is_shortest_and_unimodal(self, levels, fanout, hosts, data):
        topo = netsim.build_topology(levels, fanout, hosts)
        names = list(topo.nodes)
        a = data.draw(st.sampled_from(names))
        b = data.draw(st.sampled_from([n for n in names if n != a] or [a]))
        if a == b:
            return
        path = netsim.route_path(topo, a, b)
        assert len(path) - 1 == bfs_distance(topo, a, b)
        lv = [topo.nodes[n].level for n in path]
        peak = lv.index(max(lv))
        assert all(x < y for x, y in zip(lv[:peak], lv[1 : peak + 1]))
        assert all(x > y for x, y in zip(lv[peak:], lv[peak + 1 :]))


class TestStore:
    def test_provisioned(self, topo):
        store = EntanglementStore.provisioned(topo, 3)
        assert all(store.available(*e) == 3 for e in topo.edges)

    def test_consume_decrements_once(self, topo):
        store, ledger = EntanglementStore.provisioned(topo, 1), ResourceLedger()
        pair = store.consume("H0", "R0.0", ledger)
        assert qsim.fidelity(pair, qsim.named_state("bell00")) == pytest.approx(1)
        assert store.available("R0.0", "H0") == 0 and ledger.epr_consumed == 1 == store.consumed
        with pytest.raises(ResourceExhausted):
            store.consume("H0", "R0.0", ledger)

    def test_negative(self, topo):
        with pytest.raises(DomainError):
            EntanglementStore.provisioned(topo, -1)


class TestTeleportRoute:
    def test_three_hops(self, topo, rng):
        psi = qsim.random_state([2], rng)
        store, ledger = EntanglementStore.provisioned(topo, 1), ResourceLedger()
        out = netsim.teleport_route(topo, psi, "H0", "R0.1", store, ledger, rng)
        assert qsim.fidelity(psi, out) == pytest.approx(1, abs=1e-9)
        assert (ledger.epr_consumed, ledger.classical_bits_sent) == (3, 6)

    def test_one_hop(self, topo, rng):
        psi = qsim.random_state([2], rng)
        store, ledger = EntanglementStore.provisioned(topo, 1), ResourceLedger()
        out = netsim.teleport_route(topo, psi, "H0", "R0.0", store, ledger, rng)
        assert qsim.fidelity(psi, out) == pytest.approx(1, abs=1e-9)
        assert (ledger.epr_consumed, ledger.classical_bits_sent) == (1, 2)

    def test_fail_stop(self, topo, rng):
        psi = qsim.random_state([2], rng)
        store, ledger = EntanglementStore.provisioned(topo, 1), ResourceLedger()
        store.edge_pairs[netsim.edge_key("R0.0", "R1.0")] = 0
        with pytest.raises(ResourceExhausted) as info:
            netsim.teleport_route(topo, psi, "H0", "H3", store, ledger, rng)
        assert info.value.holder == "R0.0"
        assert qsim.fidelity(psi, info.value.state) == pytest.approx(1, abs=1e-9)
        assert ledger.epr_consumed == 1

    @pytest.mark.parametrize("dst", ["H1", "H2", "H3"])
    def test_conservation_and_cost(self, deep, rng, dst):
        store, ledger = EntanglementStore.provisioned(deep, 2), ResourceLedger()
        h = len(netsim.route_path(deep, "H0", dst)) - 1
        before = sum(store.edge_pairs.values())
        psi = qsim.random_state([2], rng)
        out = netsim.teleport_route(deep, psi, "H0", dst, store, ledger, rng)
        assert before - sum(store.edge_pairs.values()) == ledger.teleports == ledger.epr_consumed == h
        assert ledger.classical_bits_sent == 2 * h
        assert qsim.fidelity(psi, out) == pytest.approx(1, abs=1e-9)

    def test_six_hops(self, deep, rng):
        store, ledger = EntanglementStore.provisioned(deep, 20), ResourceLedger()
        for _ in range(20):
            psi = qsim.random_state([2], rng)
            out = netsim.teleport_route(deep, psi, "H0", "H3", store, ledger, rng)
            assert qsim.fidelity(psi, out) == pytest.approx(1, abs=1e-9)
        assert ledger.epr_consumed == 120


class TestVirtualLink:
    @pytest.mark.parametrize("dst, hops", [("R1.0", 2), ("H2", 4)])
    def test_fidelity(self, topo, rng, dst, hops):
        store, ledger = EntanglementStore.provisioned(topo, 1), ResourceLedger()
        pair = netsim.virtual_link(topo, "H0", dst, store, ledger, rng)
        assert qsim.fidelity(pair, qsim.named_state("bell00")) == pytest.approx(1, abs=1e-9)
        assert ledger.epr_consumed == hops and ledger.classical_bits_sent == 2 * (hops - 1)

    def test_six_hop_chain(self, deep, rng):
        store, ledger = EntanglementStore.provisioned(deep, 1), ResourceLedger()
        pair = netsim.virtual_link(deep, "H0", "H3", store, ledger, rng)
        assert qsim.fidelity(pair, qsim.named_state("bell00")) == pytest.approx(1, abs=1e-9)
        assert store.consumed == ledger.epr_consumed == 6

    def test_swap_order_irrelevant(self, deep, rng):
        store, ledger = EntanglementStore.provisioned(deep, 1), ResourceLedger()
        interior = netsim.route_path(deep, "H0", "H3")[1:-1]
        pair = netsim.virtual_link(deep, "H0", "H3", store, ledger, rng, order=interior[::-1])
        assert qsim.fidelity(pair, qsim.named_state("bell00")) == pytest.approx(1, abs=1e-9)

    def test_bad_order(self, deep, rng):
        store = EntanglementStore.provisioned(deep, 1)
        with pytest.raises(DomainError):
            netsim.virtual_link(deep, "H0", "H3", store, ResourceLedger(), rng, order=["R2.0"])

    def test_incremental_teleport_cost(self, deep, rng):
        store, ledger = EntanglementStore.provisioned(deep, 1), ResourceLedger()
        netsim.virtual_link(deep, "H0", "H3", store, ledger, rng)
        before = (ledger.epr_consumed, ledger.classical_bits_sent)
        psi = qsim.random_state([2], rng)
        out = netsim.teleport_virtual(psi, "H3", "H0", store, ledger, rng)
        assert qsim.fidelity(psi, out) == pytest.approx(1, abs=1e-9)
        assert (ledger.epr_consumed - before[0], ledger.classical_bits_sent - before[1]) == (1, 2)
        assert store.virtual_count("H0", "H3") == 0

    def test_exhaustion(self, topo, rng):
        store = EntanglementStore.provisioned(topo, 0)
        with pytest.raises(ResourceExhausted):
            netsim.virtual_link(topo, "H0", "H3", store, ResourceLedger(), rng)
        with pytest.raises(ResourceExhausted):
            netsim.teleport_virtual(qsim.new_state([2], 0), "H0", "H3", store, ResourceLedger(), rng)


class TestTrustedRelay:
    def test_three_hops(self, topo, rng):
        key = rng.integers(0, 2, 128, dtype=np.uint8)
        path = netsim.route_path(topo, "H0", "R0.1")
        hop_keys = netsim.generate_hop_keys(path, 128, rng)
        ledger = ResourceLedger()
        res = netsim.trusted_relay_key_transport(topo, key, "H0", "R0.1", hop_keys, ledger)
        np.testing.assert_array_equal(res.delivered, key)
        assert res.exposure == ledger.exposure == ["R0.0", "R1.0"]
        assert set(res.memories) == set(res.exposure)
        for e, cipher in res.wire:
            assert not np.array_equal(cipher, key)
            np.testing.assert_array_equal(cipher ^ hop_keys[e], key)

    def test_one_hop(self, topo, rng):
        key = rng.integers(0, 2, 32, dtype=np.uint8)
        hop_keys = netsim.generate_hop_keys(["H0", "R0.0"], 32, rng)
        res = netsim.trusted_relay_key_transport(topo, key, "H0", "R0.0", hop_keys)
        assert res.exposure == [] and res.memories == {}

    def test_short_link_key(self, topo, rng):
        hop_keys = netsim.generate_hop_keys(["H0", "R0.0"], 8, rng)
        with pytest.raises(DomainError):
            netsim.trusted_relay_key_transport(topo, np.zeros(16, dtype=np.uint8), "H0", "R0.0", hop_keys)

    def test_missing_link_key(self, topo):
        with pytest.raises(DomainError):
            netsim.trusted_relay_key_transport(topo, np.zeros(4, dtype=np.uint8), "H0", "H1", {})

    def test_exposure_is_exactly_memory(self, deep, rng):
        key = rng.integers(0, 2, 64, dtype=np.uint8)
        path = netsim.route_path(deep, "H0", "H3")
        res = netsim.trusted_relay_key_transport(deep, key, "H0", "H3", netsim.generate_hop_keys(path, 64, rng))
        holders = {n for n, mem in res.memories.items() if np.array_equal(mem, key)}
        assert holders == set(res.exposure) == set(path[1:-1])


class TestProgramVersusData:
    def test_single_copy(self):
        assert netsim.send_mode_tradeoff(1, 1, 10, 0.5) == "send_copies"

    def test_many_copies(self):
        assert netsim.send_mode_tradeoff(5, 1000, 100, 1) == "send_program"

    def test_negative(self):
        with pytest.raises(DomainError):
            netsim.send_mode_tradeoff(-1, 1, 1, 1)

    def test_store_no_cloning(self, rng):
        store = netsim.StateStore()
        psi = qsim.random_state([2], rng)
        store.deliver("out", psi)
        with pytest.raises(NoCloningError):
            store.duplicate("out")
        assert store.take("out") is psi
        with pytest.raises(StateError, match="already sent"):
            store.take("out")

    def test_store_occupied(self):
        store = netsim.StateStore()
        store.deliver("x", qsim.new_state([2], 0))
        with pytest.raises(StateError):
            store.deliver("x", qsim.new_state([2], 1))
