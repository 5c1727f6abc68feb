"""Simulating one oracle model with another.

An *algorithm* is any callable ``algorithm(oracle, rng)`` whose queries go
through ``oracle.set_eval(S)`` or ``oracle.cond_eval(S)`` and which reads the
domain size from ``oracle.n``.  The same callable can therefore be run
directly against a session (:func:`run_direct`) or through a simulator:

* :func:`laminarize_set_eval` and :func:`laminarize_cond_eval` answer every
  query from queries on the atoms of the Venn partition of the earlier query
  sets, so the sets actually sent to the oracle form a laminar family.
* :func:`simulate_bounded_cond_eval` answers a COND-EVAL query on a large set
  with ``ceil(|S|/k)`` COND-EVAL queries on sets of size at most ``k``.
* :func:`split_emptiness` does the same for the emptiness test used by the
  support-size estimators.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import math

from ._random import uniform_below
from .dist import IndexSet, as_index_set
from .errors import UsageError
from .responses import FAILURE, Mass, SampleEval, is_failure

DEFAULT_CAP = 20


@dataclass
class SimulationTranscript:
    """What the algorithm saw (``outer``) and what the oracle was asked (``inner``)."""

    outer: list = field(default_factory=list)     # (IndexSet, response)
    inner: list = field(default_factory=list)     # IndexSet
    flags: list = field(default_factory=list)     # (outer step index, note)
    marks: list = field(default_factory=list)     # len(inner) after each outer step

    @property
    def responses(self):
        return tuple(r for _, r in self.outer)

    def outer_sets(self):
        return [S for S, _ in self.outer]

    def inner_per_step(self):
        return [b - a for a, b in zip([0] + self.marks[:-1], self.marks)]


def choose_weighted(weights, rng):
    """Index ``i`` with probability ``weights[i] / sum(weights)`` (exact rationals)."""
    weights = [Fraction(w) for w in weights]
    den = math.lcm(*(w.denominator for w in weights))
    ints = [w.numerator * (den // w.denominator) for w in weights]
    r = uniform_below(rng, sum(ints))
    for i, v in enumerate(ints):
        if r < v:
            return i
        r -= v
    raise AssertionError("weights must have a positive sum")


def is_laminar(sets):
    """Whether every two of ``sets`` are disjoint or nested."""
    frozen = [frozenset(as_index_set(S)) for S in sets]
    for a in range(len(frozen)):
        A = frozen[a]
        for b in range(a + 1, len(frozen)):
            B = frozen[b]
            if A & B and not (A <= B or B <= A):
                return False
    return True


class _Recorder:
    """Direct oracle access that records the transcript."""

    def __init__(self, session, kind):
        self.n = session.n
        self._session = session
        self._kind = kind
        self.transcript = SimulationTranscript()

    def _ask(self, kind, S):
        if kind != self._kind:
            raise UsageError(f"this run only allows {self._kind} queries")
        S = as_index_set(S)
        r = self._session.set_eval(S) if kind == "set-eval" else self._session.cond_eval(S)
        self.transcript.outer.append((S, r))
        self.transcript.inner.append(S)
        self.transcript.marks.append(len(self.transcript.inner))
        return r

    def set_eval(self, S):
        return self._ask("set-eval", S)

    def cond_eval(self, S):
        return self._ask("cond-eval", S)


def run_direct(algorithm, session, kind, rng):
    """Run ``algorithm`` straight against ``session``; returns ``(output, transcript)``."""
    rec = _Recorder(session, kind)
    return algorithm(rec, rng), rec.transcript


class _Laminarizer:
    """Shared bookkeeping of the two laminar simulators.

    ``cells`` partitions ``[n]`` minus the already-sampled elements into the
    nonempty atoms cut out by the earlier query sets.
    """

    def __init__(self, session, cap, kind):
        self.n = session.n
        self._session = session
        self._cap = cap
        self._kind = kind
        self.cells = [IndexSet.interval(1, session.n)]
        self.known = {}              # sampled element -> mass (COND-EVAL variant)
        self.seen = set()
        self.transcript = SimulationTranscript()

    def _start(self, kind, S):
        if kind != self._kind:
            raise UsageError(f"this simulator only handles {self._kind} queries")
        step = len(self.transcript.outer)
        if step >= self._cap:
            raise UsageError(f"more than {self._cap} queries; the 2^t simulation cost is capped")
        S = as_index_set(S)
        key = S.array.tobytes()
        if key in self.seen:
            self.transcript.flags.append((step, "repeated query set"))
        self.seen.add(key)
        return S

    def _refine(self, S, removed=()):
        cells = []
        for C in self.cells:
            for part in (C.intersection(S), C.difference(S)):
                if removed:
                    part = part.difference(removed)
                if len(part):
                    cells.append(part)
        self.cells = cells

    def set_eval(self, S):
        S = self._start("set-eval", S)
        total = Fraction(0)
        for C in self.cells:
            X = C.intersection(S)
            if len(X):
                self.transcript.inner.append(X)
                total += self._session.set_eval(X).q
        self._refine(S)
        r = Mass(total)
        self.transcript.outer.append((S, r))
        self.transcript.marks.append(len(self.transcript.inner))
        return r

    def cond_eval(self, S):
        S = self._start("cond-eval", S)
        options = []                 # (mass, element, element mass)
        sampled = []
        for C in self.cells:
            X = C.intersection(S)
            if not len(X):
                continue
            self.transcript.inner.append(X)
            r = self._session.cond_eval(X)
            if is_failure(r):
                continue
            options.append((r.set_mass, r.j, r.p))
            sampled.append((r.j, r.p))
        for e in S:
            if e in self.known:
                options.append((self.known[e], e, self.known[e]))
        for e, p in sampled:
            self.known[e] = p
        self._refine(S, IndexSet([e for e, _ in sampled]))
        if not options:
            r = FAILURE
        else:
            total = sum((m for m, _, _ in options), Fraction(0))
            _, j, p = options[choose_weighted([m for m, _, _ in options], self._session.rng)]
            r = SampleEval(j, p, p / total)
        self.transcript.outer.append((S, r))
        self.transcript.marks.append(len(self.transcript.inner))
        return r


def laminarize_set_eval(algorithm, session, rng, cap=DEFAULT_CAP):
    """Run a SET-EVAL ``algorithm`` through laminar atom queries.

    Every answer is the sum of the masses of the atoms ``A_i ∩ cell`` over the
    current cells, so the output is identical to a direct run with the same
    ``rng``.  At most ``2^t - 1`` inner queries for ``t`` outer queries.
    """
    sim = _Laminarizer(session, cap, "set-eval")
    return algorithm(sim, rng), sim.transcript


def laminarize_cond_eval(algorithm, session, rng, cap=DEFAULT_CAP):
    """Run a COND-EVAL ``algorithm`` through laminar atom queries.

    For query ``A`` each atom ``A ∩ cell`` is queried once; previously sampled
    elements are kept out of the cells and contribute their known masses as
    singletons.  One atom or singleton ``U`` is then chosen with probability
    ``D(U)/D(A)`` and its element is returned as ``(j, D(j), D(j)/D(A))``,
    which has exactly the law of a direct answer.  Re-asking an earlier set
    is flagged in the transcript and answered the same way.
    """
    sim = _Laminarizer(session, cap, "cond-eval")
    return algorithm(sim, rng), sim.transcript


def blocks(S, k):
    """Consecutive runs of at most ``k`` members of ``S`` (in ascending order)."""
    if k < 1:
        raise UsageError("the bound k must be positive")
    a = as_index_set(S).array
    return [IndexSet._trusted(a[i:i + k]) for i in range(0, a.size, k)]


def simulate_bounded_cond_eval(session_k, S, k, rng=None):
    """COND-EVAL on ``S`` from ``ceil(|S|/k)`` COND-EVAL queries on blocks of size at most ``k``.

    Block ``S_i`` is chosen with probability ``D(S_i)/D(S)`` and its sample is
    returned with ``D(S)`` in place of ``D(S_i)``.
    """
    rng = session_k.rng if rng is None else rng
    parts = blocks(S, k)
    if not parts:
        raise UsageError("S must be nonempty")
    answers = []
    for B in parts:
        r = session_k.bounded("cond-eval", B, k)
        if not is_failure(r):
            answers.append(r)
    if not answers:
        return FAILURE
    i = choose_weighted([r.set_mass for r in answers], rng)
    total = sum((r.set_mass for r in answers), Fraction(0))
    chosen = answers[i]
    return SampleEval(chosen.j, chosen.p, chosen.p / total)


def split_emptiness(session_k, S, k, early_exit=True):
    """Whether ``S`` meets the support, from bounded COND queries on its blocks."""
    hit = False
    for B in blocks(S, k):
        if not is_failure(session_k.bounded("cond", B, k)):
            hit = True
            if early_exit:
                break
    return hit


def estimate_support_bounded(session_k, k, rng=None, early_exit=True):
    """The constant-factor support estimator on a size-``k`` bounded COND oracle."""
    from .estimators import estimate_support_constant

    return estimate_support_constant(
        session_k, rng, intersects=lambda S: split_emptiness(session_k, S, k, early_exit))


def bounded_query_budget(n, k):
    """``ceil(n/k) * (ceil(log2 log2 n) + 2)``, the ledger ceiling of :func:`estimate_support_bounded`."""
    w = max(1, (int(n) - 1).bit_length())
    return math.ceil(n / k) * (math.ceil(math.log2(w)) + 2)
