"""Expected values derived once by the reference oracle and frozen here.

``test_frozen.py`` recomputes each one so any drift in the oracle is caught.
"""

# P(Bin(30, 1/3) < 5): honest-abort rate of a flat m/6 index-set threshold at m = 30
HONEST_ABORT_M30_FLAT_RULE = 0.012229723837675848
# Grover, n = 10, k = 1
GROVER_SUCCESS_T25 = 0.9994612447444079
GROVER_SUCCESS_T50 = 0.00023015022573646832
# SWAP-test acceptance for distinct Hadamard-code fingerprints: (1 + (1/2)^2) / 2
HADAMARD_DISTINCT_ACCEPT = 0.625
# exhaustive usable-base fractions for Shor
SHOR_GOOD_FRACTION_15 = 6 / 7
SHOR_GOOD_FRACTION_21 = 6 / 11
# revocation fidelity |a|^4 + |b|^4 for a = 0.6, b = 0.8
REVOKE_FIDELITY_06_08 = 0.5392
# best payoff a lone deviator reaches against Q at gamma = pi/2 with an X(x)X entangler
XX_BEST_DEVIATION_AGAINST_Q = 5.0
# B92: conclusive fraction on a clean channel
B92_CONCLUSIVE_FRACTION = 0.25
