"""Oracle access to a distribution, with exact per-kind query accounting.

An :class:`OracleSession` wraps an immutable distribution and a random
source.  Every public oracle method increments exactly one counter of the
session's :class:`QueryLedger`.  Zero-mass conditioning returns
:data:`~condlab.responses.FAILURE` as an ordinary value; asking for a set that
is too large for a bounded oracle raises :class:`~condlab.errors.UsageError`.
"""
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from ._random import as_rng
from .dist import as_index_set
from .errors import UsageError
from .responses import FAILURE, Mass, Sample, SampleEval, SamplePr

ORACLE_KINDS = ("samp", "cond", "cond-pr", "cond-eval", "set-eval")
_FIELD = {k: k.replace("-", "_") for k in ORACLE_KINDS}


@dataclass
class QueryLedger:
    """Number of calls made to each oracle kind.

    ``bounded`` maps ``(kind, k)`` to the number of size-``k`` bounded calls;
    those calls are not added to the unbounded counters.
    """

    samp: int = 0
    cond: int = 0
    cond_pr: int = 0
    cond_eval: int = 0
    set_eval: int = 0
    bounded: Counter = field(default_factory=Counter)

    def count(self, kind):
        return getattr(self, _FIELD[kind])

    def bounded_total(self, k=None):
        return sum(v for (kind, kk), v in self.bounded.items() if k is None or kk == k)

    @property
    def total(self):
        return self.samp + self.cond + self.cond_pr + self.cond_eval + self.set_eval + self.bounded_total()

    def snapshot(self):
        return QueryLedger(self.samp, self.cond, self.cond_pr, self.cond_eval, self.set_eval, Counter(self.bounded))

    def __sub__(self, other):
        bounded = Counter(self.bounded)
        bounded.subtract(other.bounded)
        return QueryLedger(
            self.samp - other.samp,
            self.cond - other.cond,
            self.cond_pr - other.cond_pr,
            self.cond_eval - other.cond_eval,
            self.set_eval - other.set_eval,
            +bounded,
        )

    def as_dict(self):
        out = {k: self.count(k) for k in ORACLE_KINDS}
        for (kind, k), v in sorted(self.bounded.items()):
            out[f"{kind}@{k}"] = v
        return out


def parse_oracle_kind(name):
    """Split ``"cond-eval@8"`` into ``("cond-eval", 8)``; unbounded kinds give ``k=None``."""
    kind, sep, k = name.partition("@")
    if kind not in ORACLE_KINDS:
        raise UsageError(f"unknown oracle kind {kind!r}; expected one of {', '.join(ORACLE_KINDS)}")
    if not sep:
        return kind, None
    try:
        k = int(k)
    except ValueError:
        raise UsageError(f"bad bound in oracle kind {name!r}") from None
    if k < 1:
        raise UsageError("the bound k must be positive")
    return kind, k


class OracleSession:
    """Single-owner oracle access to ``distribution``.

    Parameters
    ----------
    distribution : DiscreteDistribution
    rng : optional
        A seed, a ``numpy.random.Generator`` or any object exposing
        ``uniform_below``.
    """

    def __init__(self, distribution, rng=None):
        self.distribution = distribution
        self.rng = as_rng(rng)
        self.ledger = QueryLedger()

    @property
    def n(self):
        return self.distribution.n

    # Untallied primitives, shared by the public and bounded entry points.

    def _sample(self, S):
        return self.distribution.sample_conditional(S, self.rng)

    def _answer(self, kind, S):
        D = self.distribution
        if kind == "set-eval":
            return Mass(D.mass(S))
        if kind == "samp":
            return Sample(D.sample_conditional(D.support, self.rng))
        drawn = D._draw(S, self.rng)
        if drawn is None:
            return FAILURE
        j, p, total = drawn
        if kind == "cond":
            return Sample(j)
        if kind == "cond-pr":
            return SamplePr(j, p)
        return SampleEval(j, p, p / total)

    def samp(self):
        """An unconditioned draw."""
        self.ledger.samp += 1
        return self._answer("samp", None)

    def cond(self, S):
        """A draw conditioned on ``S``, or ``FAILURE`` when ``D(S) = 0``."""
        S = as_index_set(S)
        self.ledger.cond += 1
        return self._answer("cond", S)

    def cond_pr(self, S):
        """Like :meth:`cond`, also revealing the mass ``D(j)`` of the drawn element."""
        S = as_index_set(S)
        self.ledger.cond_pr += 1
        return self._answer("cond-pr", S)

    def cond_eval(self, S):
        """Like :meth:`cond_pr`, also revealing ``D(j) / D(S)``."""
        S = as_index_set(S)
        self.ledger.cond_eval += 1
        return self._answer("cond-eval", S)

    def set_eval(self, S):
        """The exact mass ``D(S)``; never fails."""
        S = as_index_set(S)
        self.ledger.set_eval += 1
        return self._answer("set-eval", S)

    def bounded(self, kind, S, k):
        """Call oracle ``kind`` restricted to sets of size at most ``k``."""
        if kind not in ORACLE_KINDS:
            raise UsageError(f"unknown oracle kind {kind!r}")
        if k < 1:
            raise UsageError("the bound k must be positive")
        S = as_index_set(S) if kind != "samp" else None
        if S is not None and len(S) > k:
            raise UsageError(f"query set has {len(S)} elements, bound is {k}")
        self.ledger.bounded[(kind, int(k))] += 1
        return self._answer(kind, S)

    def query(self, name, S=None):
        """Dispatch by CLI-style name, e.g. ``"cond-pr"`` or ``"cond-eval@4"``."""
        kind, k = parse_oracle_kind(name)
        if k is not None:
            return self.bounded(kind, S, k)
        if kind == "samp":
            return self.samp()
        return getattr(self, _FIELD[kind])(S)


def exact_response_distribution(distribution, kind, S):
    """Every possible response to one query, with its exact probability.

    Returns a dict ``response -> Fraction``.
    """
    S = as_index_set(S) if kind != "samp" else distribution.support
    if kind == "set-eval":
        return {Mass(distribution.mass(S)): Fraction(1)}
    total = distribution.mass(S)
    if total == 0:
        return {FAILURE: Fraction(1)}
    out = {}
    for j in S:
        p = distribution[j]
        if not p:
            continue
        if kind in ("samp", "cond"):
            r = Sample(j)
        elif kind == "cond-pr":
            r = SamplePr(j, p)
        else:
            r = SampleEval(j, p, p / total)
        out[r] = p / total
    return out
