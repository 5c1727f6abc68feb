"""Property testers built on SET-EVAL.

All three algorithms compare masses of random sets exactly:

* :func:`test_equivalence` queries two uniformly random subsets on both
  distributions and accepts iff the masses agree.
* :func:`test_grained` accepts iff ``m * D(S)`` is an integer for two random
  subsets.
* :func:`estimate_l2_squared` averages ``X = (D(S+) - D(S-))^2`` where the
  split ``S+ / S-`` comes from a 4-wise independent sign hash, an unbiased
  estimate of ``sum_j D(j)^2``.
"""
import enum
from fractions import Fraction
import itertools
import math

import numpy as np

from ._random import as_rng, fair_bits
from .dist import IndexSet
from .errors import DomainError, UsageError
from .hashing import FourWiseSignHash, draw_fourwise_sign, sign_width


class Verdict(enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"

    def __str__(self):
        return self.value


def random_half_set(n, rng):
    """Each element of ``[n]`` kept independently with probability 1/2."""
    return IndexSet._trusted(np.flatnonzero(fair_bits(rng, n)) + 1)


def test_equivalence(session_d, session_e, rng=None, repetitions=1):
    """Accept iff ``D(S) = D'(S)`` on two random subsets (per repetition).

    Never rejects equal distributions.  Each repetition makes two
    ``set_eval`` queries to each session; all repetitions must agree.
    """
    if session_d.n != session_e.n:
        raise DomainError(f"domain sizes differ: {session_d.n} vs {session_e.n}")
    rng = as_rng(session_d.rng if rng is None else rng)
    verdict = Verdict.ACCEPT
    for _ in range(repetitions):
        for _ in range(2):
            S = random_half_set(session_d.n, rng)
            if session_d.set_eval(S).q != session_e.set_eval(S).q:
                verdict = Verdict.REJECT
    return verdict


def test_grained(session, m, rng=None, repetitions=1):
    """Accept iff ``m * D(S)`` is an integer on two random subsets (per repetition)."""
    if m < 1:
        raise UsageError("m must be at least 1")
    rng = as_rng(session.rng if rng is None else rng)
    verdict = Verdict.ACCEPT
    for _ in range(repetitions):
        for _ in range(2):
            S = random_half_set(session.n, rng)
            if (m * session.set_eval(S).q).denominator != 1:
                verdict = Verdict.REJECT
    return verdict


def l2_repetitions(eps):
    """``ceil(4 / eps^2)``, the number of sketches averaged."""
    if not 0 < eps <= 1:
        raise UsageError(f"eps must lie in (0, 1], got {eps}")
    e = Fraction(repr(eps)) if isinstance(eps, float) else Fraction(eps)
    return math.ceil(4 / e ** 2)


def sign_split(h, n):
    """``(S+, S-)`` for sign hash ``h``: element ``j`` goes by the sign of ``h(j - 1)``."""
    signs = 1 - 2 * (h.poly_range(n) & 1)
    plus = np.flatnonzero(signs == 1) + 1
    minus = np.flatnonzero(signs == -1) + 1
    return IndexSet._trusted(plus), IndexSet._trusted(minus)


def sketch_value(session, h, optimize_complement=False):
    """One exact sample ``X = (D(S+) - D(S-))^2``."""
    plus, minus = sign_split(h, session.n)
    a = session.set_eval(plus).q
    b = 1 - a if optimize_complement else session.set_eval(minus).q
    return (a - b) ** 2


def estimate_l2_squared(session, eps, rng=None, optimize_complement=False):
    """Estimate ``sum_j D(j)^2`` as the exact mean of ``ceil(4/eps^2)`` sketches.

    Returns a :class:`~fractions.Fraction`.  Uses ``2 * ceil(4/eps^2)``
    ``set_eval`` queries, or half as many with ``optimize_complement`` (which
    uses ``D(S-) = 1 - D(S+)``).
    """
    reps = l2_repetitions(eps)
    rng = as_rng(session.rng if rng is None else rng)
    w = sign_width(session.n)
    total = Fraction(0)
    for _ in range(reps):
        total += sketch_value(session, draw_fourwise_sign(w, rng), optimize_complement)
    return total / reps


def l2_family_moments(distribution, w=3):
    """Exact ``(E[X], Var[X])`` of one sketch over the whole sign-hash family at width ``w``.

    The family has ``2^{4w}`` members, so this is for ``w <= 4`` and
    ``n <= 2^w``.
    """
    n = distribution.n
    if n > 1 << w:
        raise UsageError(f"domain of size {n} does not fit width {w}")
    if w > 4:
        raise UsageError("exhaustive enumeration is limited to w <= 4")
    masses = [distribution[j] for j in range(1, n + 1)]
    den = math.lcm(*(p.denominator for p in masses))
    ints = np.array([int(p * den) for p in masses], dtype=object)
    xs = np.arange(n, dtype=np.int64)
    s1 = 0
    s2 = 0
    count = 0
    for coeffs in itertools.product(range(1 << w), repeat=4):
        signs = FourWiseSignHash(w, coeffs)(xs)
        diff = int(np.dot(signs.astype(object), ints))
        x = diff * diff
        s1 += x
        s2 += x * x
        count += 1
    mean = Fraction(s1, count * den ** 2)
    second = Fraction(s2, count * den ** 4)
    return mean, second - mean * mean
