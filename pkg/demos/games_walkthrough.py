# %% [markdown]
# # Games, contracts, fingerprints and broadcast

# %%
import numpy as np

from qnets import byzantine, fingerprint, games, qsim
from qnets.games import COOPERATE, DEFECT, QUANTUM, GameConfig

rng = qsim.make_rng(5)

# %% [markdown]
# ## Prisoner's Dilemma with an entangled referee
# Without entanglement the classical table comes back. With maximal
# entanglement the quantum move Q against itself pays (3, 3), and no unilateral
# deviation does better.

# %%
classical = GameConfig(gamma=0.0)
for a, ua in (("C", COOPERATE), ("D", DEFECT)):
    for b, ub in (("C", COOPERATE), ("D", DEFECT)):
        print(a, b, np.round(games.ewl_play(ua, ub, classical), 6))
print("Q Q", np.round(games.ewl_play(QUANTUM, QUANTUM), 6))
print("Q is an equilibrium:", games.nash_check(QUANTUM, GameConfig(), grid_resolution=32))

# %% [markdown]
# ## Hostage exchange
# Decoy pairs expose a party that measures early with probability 1 - 2^-t.

# %%
alice, bob = [qsim.qubit(0.6, 0.8)], [qsim.qubit(0.8, 0.6)]
for t in (1, 4, 10):
    caught = np.mean([games.hostage_exchange(alice, bob, t, "bob_measures_early", rng).caught["Bob"] for _ in range(2000)])
    print(f"t={t:>2}  caught {caught:.3f}  expected {games.detection_probability(t):.3f}")

# %% [markdown]
# ## Equality testing with fingerprints
# Distinct inputs map to states with overlap 1/2, so a single SWAP test
# wrongly accepts them with probability 5/8.

# %%
code = fingerprint.hadamard_code(3)
a, b = fingerprint.fingerprint_state("001", code), fingerprint.fingerprint_state("110", code)
print("accept distinct:", fingerprint.swap_test_probability(a, b))
print("accept equal:   ", fingerprint.swap_test_probability(a, a))

# %% [markdown]
# ## Detectable broadcast
# Whoever cheats, the honest players end up consistent. When R0 cheats only
# R1's decision has to match the sender's bit.

# %%
for scenario in ("all_honest", "s_cheats", "r0_cheats"):
    out = byzantine.run_broadcast(300, 1, scenario, rng)
    print(f"{scenario:<11} decisions {out.decisions} consistent {out.consistent}")
