# %% [markdown]
# # Key distribution with an eavesdropper
#
# A BB84 session from pulses to a shared secret key, then the same session
# with an intercept-resend attacker on the line.

# %%
import numpy as np

from qnets import qkd, qsim
from qnets.qkd import QkdParams

rng = qsim.make_rng(2024)

# %% [markdown]
# ## Pulses and sifting
# Alice picks a random basis and bit per pulse; Bob measures in his own random
# basis. Only positions where the bases agree survive sifting.

# %%
bits, bases, pulses = qkd.bb84_transmit(20, rng)
received, eve = qkd.channel_transmit(pulses, 0.0, 0.0, rng)
bob_bases, bob_bits = qkd.bb84_receive(received, rng)
a_key, b_key, kept = qkd.sift(bases, bob_bases, bits, bob_bits)
print("kept positions:", kept)
print("alice:", "".join(map(str, a_key)))
print("bob:  ", "".join(map(str, b_key)))

# %% [markdown]
# ## A clean session
# About half the pulses are kept, and without noise the error rate is zero.

# %%
clean = qkd.run_bb84_session(QkdParams(n_pulses=100_000, seed=1))
print(f"sifted fraction {clean.sifted_fraction:.3f}, qber {clean.qber:.4f}, final key {clean.final_key_len} bits")

# %% [markdown]
# ## Intercepting a fraction of the pulses
# Eve measures a fraction lambda of the pulses in a random basis. Each
# intercepted pulse causes an error a quarter of the time, so the error rate
# grows as lambda / 4 while she learns about lambda / 2 of the key.

# %%
for lam in (0.0, 0.1, 0.5, 1.0):
    r = qkd.run_bb84_session(QkdParams(n_pulses=100_000, eve_lambda=lam, seed=3))
    status = r.abort_reason if r.aborted else f"{r.final_key_len} secret bits"
    print(f"lambda={lam:.1f}  qber={r.qber:.4f}  eve knows {r.eve_known_fraction:.3f}  -> {status}")

# %% [markdown]
# ## Reconciliation and privacy amplification
# Parity checks remove the residual errors, and a Toeplitz hash shrinks the
# key by everything that was disclosed or may have leaked.

# %%
noisy = qkd.run_bb84_session(QkdParams(n_pulses=50_000, channel_flip=0.03, seed=5))
rec = noisy.reconciliation
print(f"parities disclosed {rec['disclosed_parities']}, errors corrected {rec['corrected_errors']}")
print(f"keys equal: {noisy.keys_equal}, final length {noisy.final_key_len}")
assert np.array_equal(noisy.alice_key, noisy.bob_key)
