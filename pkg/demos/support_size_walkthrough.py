"""
Estimating support size with conditional samples
================================================

A walk through the two estimators on a uniform distribution over a random
subset of a 2^16-element domain.
"""

import math

import numpy as np

from condlab import OracleSession
from condlab.estimators import LevelSets, estimate_support_constant, estimate_support_eps
from condlab.hashing import draw_pairwise
from condlab.instances import random_uniform_support

rng = np.random.default_rng(2024)
n = 1 << 16
s = 3000
D = random_uniform_support(n, s, rng)

# The hash cuts the domain into nested levels L_0 ⊇ L_1 ⊇ ...; level t keeps
# roughly n / 2^t elements, so it meets the support until 2^t passes s.
h = draw_pairwise(16, rng)
levels = LevelSets(h, n)
supp = set(D.support)
for t in range(0, 17, 2):
    L = levels(t)
    print(f"t={t:2d}  |L_t|={len(L):6d}  |L_t ∩ supp|={len(supp.intersection(L)):5d}")

# A binary search over t finds the first empty level with a handful of COND queries.
session = OracleSession(D, rng)
rep = estimate_support_constant(session, rng)
lo, hi = rep.constant_factor_window
print(f"\nconstant factor: t'={rep.t_prime}, estimate {rep.estimate:.0f}, window ({lo:.0f}, {hi:.0f}], "
      f"{session.ledger.cond} queries")

# The refinement walks down from t' counting each level exactly.
session = OracleSession(D, rng)
rep = estimate_support_eps(session, 0.25, rng)
print(f"(1+eps), eps=0.25: estimate {rep.exact} (true {s}), t*={rep.t_star}, "
      f"{rep.t_prime_queries} search + {rep.descent_queries} descent queries")

# Repeating shows the spread of the constant-factor estimate.
est = [estimate_support_constant(OracleSession(D, rng), rng).estimate for _ in range(200)]
ratios = np.log2(np.array(est) / s)
print(f"\nlog2(estimate / s) over 200 runs: mean {ratios.mean():+.2f}, "
      f"within a factor 4·√2: {np.mean(np.abs(ratios) <= math.log2(4 * math.sqrt(2))):.2f}")
