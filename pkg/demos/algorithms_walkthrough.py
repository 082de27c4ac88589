# %% [markdown]
# # Search, period finding and factoring

# %%
import numpy as np

from qnets import algorithms as alg
from qnets import qsim

rng = qsim.make_rng(11)

# %% [markdown]
# ## Grover search over 1024 items
# Success probability rises to near certainty after about (pi/4) sqrt(N)
# iterations and then falls again if we keep going.

# %%
inst = alg.GroverInstance(10, {123})
for T in (0, 5, 10, 25, 40, 50):
    print(f"T={T:>2}  p={alg.success_probability(inst, T):.4f}")
print("search result:", alg.grover_search(inst, rng).x)

# %% [markdown]
# ## The Fourier transform circuit
# n(n+1)/2 gates, with the final bit reversal done by relabelling sites.

# %%
for n in range(1, 7):
    print(n, len(alg.qft_circuit(n)))
amps = np.zeros(64)
amps[::4] = 1
state = qsim.from_amplitudes([2] * 6, amps / np.linalg.norm(amps))
dist = qsim.outcome_distribution(alg.qft(state, range(6)), range(6))
print("peaks of a period-4 input:", sorted(int("".join(map(str, k)), 2) for k, p in dist.items() if p > 1e-9))

# %% [markdown]
# ## Factoring 15 and 21

# %%
attempt = alg.shor_attempt(15, 7, rng)
while attempt.factor is None:
    attempt = alg.shor_attempt(15, 7, rng)
print(f"15 with y=7: order {attempt.r}, factor {attempt.factor}")
res = alg.shor_factor(21, rng)
print(f"21 = {res.factor} x {res.cofactor} after {len(res.attempts)} attempt(s)")
