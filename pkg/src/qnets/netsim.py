"""A hierarchical quantum internet.

Hosts hang off level-0 routers; routers at level ``i`` group under level
``i + 1``, up to a single root. Every edge carries a classical and a quantum
channel. On top of the tree:

* hop-by-hop teleportation that spends one stored Bell pair per hop,
* end-to-end "virtual" links built by entanglement swapping,
* a trusted-relay key transport network (one-time pad per hop),
* a cost rule for sending output copies versus the program that makes them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qsim
from .errors import DomainError, NoCloningError, ResourceExhausted, StateError
from .protocols import teleport_site
from .qsim import QState
from .resources import ResourceLedger

CHANNELS = ("classical", "quantum")


def edge_key(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    level: int  # hosts sit at level -1


@dataclass
class Topology:
    levels: int
    fanout: int
    hosts_per_router: int
    nodes: dict[str, Node]
    parent: dict[str, str | None]
    edges: dict[tuple[str, str], tuple[str, ...]]

    def hosts(self) -> list[str]:
        return [n for n, v in self.nodes.items() if v.kind == "host"]

    def routers(self) -> list[str]:
        return [n for n, v in self.nodes.items() if v.kind == "router"]

    def neighbors(self, node: str) -> list[str]:
        return [b if a == node else a for a, b in self.edges if node in (a, b)]

    def ancestors(self, node: str) -> list[str]:
        """``node`` followed by every ancestor up to the root."""
        chain = [node]
        while self.parent[chain[-1]] is not None:
            chain.append(self.parent[chain[-1]])
        return chain


def build_topology(levels: int, fanout: int, hosts_per_router: int) -> Topology:
    """Complete tree: one root at level ``levels - 1``, ``fanout`` children per router."""
    if levels < 1 or fanout < 1 or hosts_per_router < 1:
        raise DomainError("levels, fanout and hosts_per_router must all be >= 1")
    nodes: dict[str, Node] = {}
    parent: dict[str, str | None] = {}
    edges: dict[tuple[str, str], tuple[str, ...]] = {}
    current = ["R%d.0" % (levels - 1)]
    nodes[current[0]] = Node(current[0], "router", levels - 1)
    parent[current[0]] = None
    for level in range(levels - 2, -1, -1):
        nxt = []
        for p in current:
            for _ in range(fanout):
                rid = f"R{level}.{len(nxt)}"
                nodes[rid] = Node(rid, "router", level)
                parent[rid] = p
                edges[edge_key(p, rid)] = CHANNELS
                nxt.append(rid)
        current = nxt
    h = 0
    for r in current:
        for _ in range(hosts_per_router):
            hid = f"H{h}"
            nodes[hid] = Node(hid, "host", -1)
            parent[hid] = r
            edges[edge_key(r, hid)] = CHANNELS
            h += 1
    return Topology(levels, fanout, hosts_per_router, nodes, parent, edges)


def route_path(topology: Topology, a: str, b: str) -> list[str]:
    """Unique tree path from ``a`` up to the lowest common ancestor and down to ``b``."""
    for x in (a, b):
        if x not in topology.nodes:
            raise DomainError(f"unknown node {x!r}")
    if a == b:
        raise DomainError("source and destination coincide")
    up_a, up_b = topology.ancestors(a), topology.ancestors(b)
    on_b = set(up_b)
    lca = next(x for x in up_a if x in on_b)
    return up_a[: up_a.index(lca) + 1] + list(reversed(up_b[: up_b.index(lca)]))


def path_edges(path: Sequence[str]) -> list[tuple[str, str]]:
    return [edge_key(u, v) for u, v in zip(path, path[1:])]


@dataclass
class EntanglementStore:
    """Pre-provisioned ``|b00>`` pairs per edge plus end-to-end virtual pairs.

    A virtual pair for ``(a, b)`` is a two-qubit state with site 0 held by
    ``a`` and site 1 by ``b``.
    """

    edge_pairs: dict[tuple[str, str], int] = field(default_factory=dict)
    virtual: dict[tuple[str, str], list[QState]] = field(default_factory=dict)
    consumed: int = 0

    @classmethod
    def provisioned(cls, topology: Topology, pairs_per_edge: int) -> "EntanglementStore":
        if pairs_per_edge < 0:
            raise DomainError("pair counts must be non-negative")
        return cls({e: pairs_per_edge for e in topology.edges})

    def available(self, a: str, b: str) -> int:
        return self.edge_pairs.get(edge_key(a, b), 0)

    def provision(self, a: str, b: str, count: int) -> None:
        if count < 0:
            raise DomainError("pair counts must be non-negative")
        k = edge_key(a, b)
        self.edge_pairs[k] = self.edge_pairs.get(k, 0) + count

    def consume(self, a: str, b: str, ledger: ResourceLedger | None = None) -> QState:
        k = edge_key(a, b)
        if self.edge_pairs.get(k, 0) < 1:
            raise ResourceExhausted(f"no entangled pair left on edge {a}-{b}", holder=a)
        self.edge_pairs[k] -= 1
        self.consumed += 1
        if ledger is not None:
            ledger.epr_consumed += 1
        return qsim.named_state("bell00")

    def virtual_count(self, a: str, b: str) -> int:
        return len(self.virtual.get((a, b), ())) + len(self.virtual.get((b, a), ()))

    def put_virtual(self, a: str, b: str, pair: QState) -> None:
        self.virtual.setdefault((a, b), []).append(pair)

    def take_virtual(self, a: str, b: str) -> QState:
        """Pop a pair oriented so that site 0 belongs to ``a``."""
        if self.virtual.get((a, b)):
            return self.virtual[(a, b)].pop()
        if self.virtual.get((b, a)):
            return qsim.permute_sites(self.virtual[(b, a)].pop(), [1, 0])
        raise ResourceExhausted(f"no virtual link between {a} and {b}", holder=a)


def teleport_route(
    topology: Topology,
    psi: QState,
    a: str,
    b: str,
    store: EntanglementStore,
    ledger: ResourceLedger,
    rng: np.random.Generator,
) -> QState:
    """Teleport ``psi`` hop by hop from host ``a`` to host ``b``.

    Each hop spends one stored pair and two classical bits. If a hop has no
    pair left, :class:`ResourceExhausted` carries the node that still holds
    the qubit and its (intact) state.
    """
    if psi.site_dims != (2,):
        raise DomainError("teleport_route carries a single qubit")
    path = route_path(topology, a, b)
    state = psi
    for u, v in zip(path, path[1:]):
        if store.available(u, v) < 1:
            raise ResourceExhausted(f"no entangled pair left on edge {u}-{v}", holder=u, state=state)
        store.consume(u, v)
        _, state = teleport_site(state, 0, rng, ledger)
    return state


def entanglement_swap(left: QState, right: QState, rng: np.random.Generator, ledger: ResourceLedger | None = None) -> QState:
    """Bell-measure the two inner qubits of ``left (x, m1)`` and ``right (m2, y)``.

    Returns the corrected two-qubit state on ``(x, y)``. Costs two classical
    bits and no extra pairs beyond the two consumed.
    """
    work = qsim.tensor(left, right)
    work = qsim.apply_gate(work, qsim.gate_library("CNOT"), [1, 2])
    work = qsim.apply_gate(work, qsim.gate_library("H"), [1])
    record, work = qsim.measure(work, [1, 2], rng=rng)
    l1, l2 = record.outcome
    if l2:
        work = qsim.apply_gate(work, qsim.gate_library("X"), [3])
    if l1:
        work = qsim.apply_gate(work, qsim.gate_library("Z"), [3])
    if ledger is not None:
        ledger.teleports += 1
        ledger.classical_bits_sent += 2
    return qsim.drop_sites(work, [1, 2])


def virtual_link(
    topology: Topology,
    a: str,
    b: str,
    store: EntanglementStore,
    ledger: ResourceLedger,
    rng: np.random.Generator,
    order: Sequence[str] | None = None,
) -> QState:
    """Build an end-to-end ``|b00>`` between ``a`` and ``b`` by swapping.

    One pair is taken from every edge on the route, then each interior
    router swaps (left to right unless ``order`` lists the routers). The
    result is stored as a virtual link and also returned.
    """
    path = route_path(topology, a, b)
    interior = path[1:-1]
    order = list(interior) if order is None else list(order)
    if sorted(order) != sorted(interior):
        raise DomainError("swap order must list every interior router once")
    for u, v in zip(path, path[1:]):
        if store.available(u, v) < 1:
            raise ResourceExhausted(f"no entangled pair left on edge {u}-{v}", holder=u)
    # segments keyed by left endpoint: (right endpoint, two-qubit state)
    segments = {u: (v, store.consume(u, v, ledger)) for u, v in zip(path, path[1:])}
    for node in order:
        left_end = next(u for u, (v, _) in segments.items() if v == node)
        _, left = segments[left_end]
        right_end, right = segments.pop(node)
        segments[left_end] = (right_end, entanglement_swap(left, right, rng, ledger))
    (_, pair), = segments.values()
    store.put_virtual(a, b, pair)
    return pair


def teleport_virtual(
    psi: QState,
    a: str,
    b: str,
    store: EntanglementStore,
    ledger: ResourceLedger,
    rng: np.random.Generator,
) -> QState:
    """Teleport over an established virtual link: one pair, two bits, any distance."""
    if psi.site_dims != (2,):
        raise DomainError("teleport_virtual carries a single qubit")
    pair = store.take_virtual(a, b)
    work = qsim.tensor(psi, pair)
    work = qsim.apply_gate(work, qsim.gate_library("CNOT"), [0, 1])
    work = qsim.apply_gate(work, qsim.gate_library("H"), [0])
    record, work = qsim.measure(work, [0, 1], rng=rng)
    l1, l2 = record.outcome
    if l1:
        work = qsim.apply_gate(work, qsim.gate_library("Z"), [2])
    if l2:
        work = qsim.apply_gate(work, qsim.gate_library("X"), [2])
    ledger.record_teleport()
    return qsim.drop_sites(work, [0, 1])


# --------------------------------------------------------------------------
# Trusted-relay key transport
# --------------------------------------------------------------------------


@dataclass
class TransportResult:
    delivered: np.ndarray
    path: list[str]
    wire: list[tuple[tuple[str, str], np.ndarray]]
    memories: dict[str, np.ndarray]
    exposure: list[str]


def generate_hop_keys(path: Sequence[str], length: int, rng: np.random.Generator) -> dict[tuple[str, str], np.ndarray]:
    """Pairwise link keys, as a QKD layer would supply them."""
    return {e: rng.integers(0, 2, length, dtype=np.uint8) for e in path_edges(path)}


def trusted_relay_key_transport(
    topology: Topology,
    key,
    a: str,
    b: str,
    per_hop_keys: dict[tuple[str, str], np.ndarray],
    ledger: ResourceLedger | None = None,
) -> TransportResult:
    """Forward ``key`` along the route, one-time-padded separately on every link.

    Each interior relay decrypts with the incoming link key and re-encrypts
    with the outgoing one, so the key sits in the clear in its memory.
    """
    key = np.asarray(key, dtype=np.uint8)
    path = route_path(topology, a, b)
    wire, memories = [], {}
    payload = key.copy()
    for i, e in enumerate(path_edges(path)):
        pad = per_hop_keys.get(e)
        if pad is None:
            raise DomainError(f"no link key for hop {e[0]}-{e[1]}")
        pad = np.asarray(pad, dtype=np.uint8)
        if len(pad) < len(key):
            raise DomainError(f"link key for hop {e[0]}-{e[1]} is shorter than the payload")
        cipher = payload ^ pad[: len(key)]
        wire.append((e, cipher))
        payload = cipher ^ pad[: len(key)]
        receiver = path[i + 1]
        if receiver != b:
            memories[receiver] = payload.copy()
    exposure = list(path[1:-1])
    if ledger is not None:
        ledger.exposure.extend(exposure)
        ledger.classical_bits_sent += len(key) * (len(path) - 1)
    return TransportResult(payload, path, wire, memories, exposure)


# --------------------------------------------------------------------------
# Program versus data
# --------------------------------------------------------------------------


def send_mode_tradeoff(state_size: float, copies_needed: int, program_size: float, runs_cost: float) -> str:
    """``send_copies`` iff ``k*q <= g + k*r`` (linear cost in the counts)."""
    if min(state_size, copies_needed, program_size, runs_cost) < 0:
        raise DomainError("costs and counts must be non-negative")
    k = copies_needed
    return "send_copies" if k * state_size <= program_size + k * runs_cost else "send_program"


class StateStore:
    """Holds delivered quantum outputs; each can leave exactly once."""

    def __init__(self):
        self._states: dict[str, QState] = {}
        self._gone: set[str] = set()

    def __contains__(self, name: str) -> bool:
        return name in self._states

    def deliver(self, name: str, state: QState) -> None:
        if name in self._states:
            raise StateError(f"slot {name!r} already holds a state")
        self._states[name] = state
        self._gone.discard(name)

    def take(self, name: str) -> QState:
        if name not in self._states:
            detail = "was already sent" if name in self._gone else "is empty"
            raise StateError(f"slot {name!r} {detail}")
        self._gone.add(name)
        return self._states.pop(name)

    def duplicate(self, name: str):
        raise NoCloningError(f"cannot copy the unknown state in slot {name!r}")


__all__ = [
    "EntanglementStore",
    "Node",
    "StateStore",
    "Topology",
    "TransportResult",
    "build_topology",
    "edge_key",
    "entanglement_swap",
    "generate_hop_keys",
    "path_edges",
    "route_path",
    "send_mode_tradeoff",
    "teleport_route",
    "teleport_virtual",
    "trusted_relay_key_transport",
    "virtual_link",
]
