"""
Testing with exact set masses
=============================

Equivalence, grainedness and a second-moment sketch, all from SET-EVAL queries.
"""

from fractions import Fraction

import numpy as np

from condlab import DiscreteDistribution, OracleSession
from condlab import testers
from condlab.instances import intro_perturbed_uniform

rng = np.random.default_rng(7)
n = 100

# U and U' differ on two elements only; their distance is 2/n.
U = DiscreteDistribution.uniform(n)
U2 = intro_perturbed_uniform(n, 4, 17)
verdicts = [testers.test_equivalence(OracleSession(U, rng), OracleSession(U2, rng), rng) for _ in range(2000)]
print("U vs U': reject rate", np.mean([str(v) == "Reject" for v in verdicts]))

# Grained distributions: every mass is a multiple of 1/m.
m = 10
D = DiscreteDistribution(n, {1: Fraction(3, 10), 2: Fraction(7, 10)})
print("grained verdict:", testers.test_grained(OracleSession(D, rng), m, rng))
E = DiscreteDistribution(n, {1: Fraction(3, 10) - Fraction(1, 20), 2: Fraction(7, 10), 3: Fraction(1, 20)})
rate = np.mean([str(testers.test_grained(OracleSession(E, rng), m, rng)) == "Reject" for _ in range(2000)])
print("perturbed reject rate:", rate)

# The sign sketch: (D(S+) - D(S-))^2 has mean sum_j D(j)^2.
for eps in (0.5, 0.2, 0.1):
    s = OracleSession(U, rng)
    est = testers.estimate_l2_squared(s, eps, rng)
    print(f"eps={eps}: estimate {float(est):.5f} vs {1 / n:.5f}, {s.ledger.set_eval} queries")

# Exact family moments at width 3 on eight points.
E8, V8 = testers.l2_family_moments(DiscreteDistribution.uniform(8), w=3)
print(f"uniform on 8: E[X] = {E8}, Var[X] = {V8}, E[X]^2 = {E8 ** 2}")
