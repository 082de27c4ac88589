# %% [markdown]
# # Moving qubits across a router tree
#
# Hosts hang off a tree of routers. Every edge holds a stock of Bell pairs;
# teleporting a qubit over an edge spends one pair and two classical bits.

# %%
from qnets import netsim, protocols, qsim
from qnets.errors import ResourceExhausted
from qnets.netsim import EntanglementStore
from qnets.resources import ResourceLedger

rng = qsim.make_rng(7)
topo = netsim.build_topology(3, 2, 1)
print("routers:", topo.routers())
print("route H0 -> H3:", netsim.route_path(topo, "H0", "H3"))

# %% [markdown]
# ## Teleporting through a single pair

# %%
psi = qsim.random_state([2], rng)
corrections, out = protocols.teleport(psi, None, rng)
print("corrections", corrections, "fidelity", round(qsim.fidelity(psi, out), 12))

# %% [markdown]
# ## Hop by hop versus entanglement swapping
# Hop-by-hop teleportation spends one pair per edge for every qubit sent.
# Swapping at the interior routers first builds a single end-to-end pair.

# %%
store, ledger = EntanglementStore.provisioned(topo, 2), ResourceLedger()
out = netsim.teleport_route(topo, psi, "H0", "H3", store, ledger, rng)
print(f"hop by hop: fidelity {qsim.fidelity(psi, out):.12f}, pairs {ledger.epr_consumed}, bits {ledger.classical_bits_sent}")

ledger = ResourceLedger()
pair = netsim.virtual_link(topo, "H0", "H3", store, ledger, rng)
print(f"swap chain: Bell fidelity {qsim.fidelity(pair, qsim.named_state('bell00')):.12f}, pairs {ledger.epr_consumed}")
out = netsim.teleport_virtual(psi, "H0", "H3", store, ledger, rng)
print(f"teleport over the virtual link: fidelity {qsim.fidelity(psi, out):.12f}")

# %% [markdown]
# ## Running dry
# When an edge has no pairs left, the transfer stops and reports who holds the qubit.

# %%
store = EntanglementStore.provisioned(topo, 1)
store.edge_pairs[netsim.edge_key("R1.0", "R2.0")] = 0
try:
    netsim.teleport_route(topo, psi, "H0", "H3", store, ResourceLedger(), rng)
except ResourceExhausted as err:
    print(f"stopped at {err.holder}; state intact: {qsim.fidelity(psi, err.state):.12f}")

# %% [markdown]
# ## Trusted relays
# A classical key can be carried by one-time pads over each hop, but every
# relay on the way sees it in the clear.

# %%
small = netsim.build_topology(2, 2, 2)
path = netsim.route_path(small, "H0", "R0.1")
key = rng.integers(0, 2, 64, dtype="uint8")
res = netsim.trusted_relay_key_transport(small, key, "H0", "R0.1", netsim.generate_hop_keys(path, 64, rng))
print("delivered intact:", bool((res.delivered == key).all()), "exposed to:", res.exposure)
