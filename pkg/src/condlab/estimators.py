"""Support-size estimation from subset queries.

The estimators hash the domain with a random :class:`~condlab.hashing.BitAffineHash`
and look at the nested level sets ``L_t = {j : h_t(j - 1) = 0}``.  With
``X_t = |L_t ∩ supp(D)|`` the emptiness predicate ``X_t = 0`` is monotone in
``t``, so a binary search finds ``t' = min{t : X_t = 0}`` in ``O(log log n)``
queries and ``2^{t'} / sqrt(2)`` is a constant-factor estimate.  The
``(1 + eps)`` estimator walks down from ``t'`` and counts ``X_t`` exactly with
:func:`enumerate_up_to` until the count first exceeds ``c / eps^2``.

A domain whose size is not a power of two is padded to the next one; the
padding elements have mass zero and are never queried.
"""
from dataclasses import dataclass, field
import math
import statistics

import numpy as np

from .dist import IndexSet
from .errors import UsageError
from .hashing import draw_pairwise
from .responses import is_failure

DEFAULT_C = 576


def has_support_intersection(session, S, oracle="cond"):
    """Whether ``S`` meets the support, decided by one conditional query."""
    return not is_failure(session.query(oracle, S))


@dataclass(frozen=True)
class ExactSet:
    """``S ∩ supp(D)`` found in full, in discovery order."""

    members: tuple

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class MoreThan:
    """``|S ∩ supp(D)| > d``; ``found`` holds the ``d + 1`` elements seen."""

    d: int
    found: tuple = ()


def enumerate_up_to(session, S, d, oracle="cond"):
    """Find ``S ∩ supp(D)`` if it has at most ``d`` elements.

    Queries ``S``, removes the returned element and queries again, stopping at
    the first failure or after ``d + 1`` successful draws.  Uses at most
    ``d + 1`` queries.
    """
    if d < 0:
        raise UsageError("d must be nonnegative")
    current = S if isinstance(S, IndexSet) else IndexSet(S)
    found = []
    for _ in range(d + 1):
        r = session.query(oracle, current)
        if is_failure(r):
            return ExactSet(tuple(found))
        found.append(r.j)
        current = current.without(r.j)
    return MoreThan(d, tuple(found))


@dataclass
class EstimatorReport:
    """Outcome of one estimator run.

    ``estimate`` is ``2^{t'} / sqrt(2)`` for the constant-factor estimator and
    the exact integer ``r * 2^{t*}`` for the refinement (where ``exact`` is then
    that integer).  ``t_prime_queries`` counts the queries of the binary search;
    ``queries`` is the ledger delta of the whole run.
    """

    estimate: float
    t_prime: int
    t_star: int = None
    r: int = None
    exact: int = None
    queries: dict = field(default_factory=dict)
    t_prime_queries: int = 0
    descent_queries: int = 0
    guardrail_tripped: bool = False
    hash_hex: str = ""

    @property
    def constant_factor_window(self):
        """The interval ``(2^{t'}/8, 4 * 2^{t'}]`` expected to contain the support size."""
        return (2.0 ** self.t_prime / 8, 4.0 * 2.0 ** self.t_prime)

    def in_window(self, s):
        lo, hi = self.constant_factor_window
        return lo < s <= hi


def _width(n):
    return max(1, (int(n) - 1).bit_length())


class LevelSets:
    """The level sets ``L_t`` of a hash, restricted to ``[n]``.

    ``L_t`` for ``t`` beyond the hash width is empty by convention and needs no
    query.
    """

    def __init__(self, h, n):
        self.h = h
        self.n = n
        self.levels = h.zero_levels()[:n]

    def __call__(self, t):
        if t > self.h.w:
            return IndexSet._trusted(np.zeros(0, dtype=np.int64))
        return IndexSet._trusted(np.flatnonzero(self.levels >= t) + 1)


def find_t_prime(levels, intersects):
    """Binary search for ``min{t >= 1 : L_t ∩ supp = ∅}``; returns ``(t', queries)``.

    ``t = w + 1`` is the virtual empty level, so the result always exists.
    ``L_0 = [n]`` always meets the support and is never queried.
    """
    lo, hi = 1, levels.h.w + 1
    queries = 0
    while lo < hi:
        mid = (lo + hi) // 2
        queries += 1
        if intersects(levels(mid)):
            lo = mid + 1
        else:
            hi = mid
    return lo, queries


def estimate_support_constant(session, rng=None, intersects=None, oracle="cond", h=None):
    """Constant-factor support-size estimate from ``O(log log n)`` emptiness queries.

    Parameters
    ----------
    session : OracleSession
    rng : optional
        Source for the hash; defaults to the session's generator.
    intersects : callable, optional
        ``S -> bool`` emptiness test.  Defaults to one ``oracle`` query on the
        session; :func:`condlab.adapters.split_emptiness` plugs in here to run
        the estimator on a bounded oracle.
    h : BitAffineHash, optional
        Use this hash instead of drawing one.
    """
    rng = session.rng if rng is None else rng
    before = session.ledger.snapshot()
    if h is None:
        h = draw_pairwise(_width(session.n), rng)
    if intersects is None:
        def intersects(S):
            return has_support_intersection(session, S, oracle)
    levels = LevelSets(h, session.n)
    t_prime, used = find_t_prime(levels, intersects)
    return EstimatorReport(
        estimate=2.0 ** t_prime / math.sqrt(2),
        t_prime=t_prime,
        queries=(session.ledger - before).as_dict(),
        t_prime_queries=used,
        hash_hex=h.to_hex(),
    )


def estimate_support_eps(session, eps, rng=None, c=DEFAULT_C, oracle="cond", h=None):
    """``(1 + eps)``-factor support-size estimate.

    After the binary search for ``t'`` the levels ``t' - 1, t' - 2, ...`` are
    counted exactly, each new level only enumerating ``L_t`` minus the elements
    already known, until a count exceeds ``floor(c / eps**2)``.  If that happens
    at ``t' - j`` then ``t* = t' - j + 1`` and the estimate is ``r * 2^{t*}``
    with ``r = X_{t*}``.  Reaching ``t = 0`` returns the support size exactly.
    The descent gives up (``guardrail_tripped``) after ``c / eps**2`` levels.
    """
    if not 0 < eps <= 1:
        raise UsageError(f"eps must lie in (0, 1], got {eps}")
    rng = session.rng if rng is None else rng
    threshold = math.floor(c / eps ** 2)
    before = session.ledger.snapshot()
    if h is None:
        h = draw_pairwise(_width(session.n), rng)
    levels = LevelSets(h, session.n)
    t_prime, used = find_t_prime(levels, lambda S: has_support_intersection(session, S, oracle))
    after_search = session.ledger.total

    known = []                       # T^{j-1}, in discovery order
    known_set = IndexSet()
    t_star = r = None
    tripped = False
    j = 1
    while True:
        t = t_prime - j
        if t < 0:
            t_star, r = 0, len(known)
            break
        if j > threshold + 1:
            tripped = True
            break
        fresh = levels(t).difference(known_set)
        res = enumerate_up_to(session, fresh, threshold - len(known), oracle)
        if isinstance(res, MoreThan):
            t_star, r = t + 1, len(known)
            break
        if res.members:
            known.extend(res.members)
            known_set = IndexSet(known)
        j += 1

    exact = None if tripped else r << t_star
    return EstimatorReport(
        estimate=float("nan") if tripped else float(exact),
        t_prime=t_prime,
        t_star=t_star,
        r=r,
        exact=exact,
        queries=(session.ledger - before).as_dict(),
        t_prime_queries=used,
        descent_queries=session.ledger.total - after_search,
        guardrail_tripped=tripped,
        hash_hex=h.to_hex(),
    )


def median_estimate(reports):
    """Median of the estimates of independent runs (simple amplification)."""
    values = [rep.estimate for rep in reports if not math.isnan(rep.estimate)]
    if not values:
        return float("nan")
    return statistics.median(values)
