"""
The lower-bound instances, simulated
====================================

The geometric family behind the integer guessing game, its bit encoding,
and the two-party simulation of COND-EVAL on Gap-Hamming instances.
"""

import numpy as np

from condlab import protocols
from condlab.instances import gap_hamming_instance, geometric_hard

D = geometric_hard(16, 3)
print("D_3 masses:", [str(D[j]) for j in range(1, 10)])

# Alice runs the guesser against D_x and writes one short block per query.
rng = np.random.default_rng(3)
tr = protocols.record_run(geometric_hard(1 << 16, 11), protocols.interval_guesser, 5, rng)
msg = protocols.encode_run(tr)
print("\nsteps:", [(len(s.A), s.z, str(s.p)) for s in tr.steps])
print("message:", msg.bits, f"({len(msg)} bits)")
back = protocols.decode_run(msg, protocols.interval_guesser, 5, 1 << 16)
print("Bob recovers x =", back.output, "| round trip:", back == tr)

rep = protocols.run_integer_guessing(1 << 16, 1000, rng=rng)
print(f"\n1000 games: mean rank {rep.mean_rank:.2f}, mean rank² {rep.mean_rank_sq:.2f}, "
      f"|M| <= 16t in {rep.frac_short:.2%}")

# Gap-Hamming: the joint instance has support (|I_x| + |I_y| + d_H) / 2.
n = 128
y = rng.integers(0, 2, n).astype(bool)
x = y.copy()
x[rng.choice(n, 90, replace=False)] ^= True
J = gap_hamming_instance(x, y)
print(f"\nsupport {J.support_size()} = ({x.sum()} + {y.sum()} + {(x != y).sum()}) / 2")
res = protocols.ghd_two_party(x, y, 16, rng=rng)
print(f"decision {res.decision} (promise {res.promise}), {res.queries} queries, {res.bits} bits, "
      f"C = {res.c_measured:.2f}")
