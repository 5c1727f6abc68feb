"""Communication protocols that simulate conditional oracles.

Integer guessing
    Alice runs a deterministic (given a shared seed) COND-PR algorithm on the
    geometric instance ``D_x`` and sends Bob, for every step, the rank of the
    sampled element inside the query set and a two-bit class of its mass.
    Bob replays the algorithm from the message alone.

Gap-Hamming
    Alice holds ``I_x``, Bob holds ``I_y``; together they answer COND-EVAL
    queries on ``gap_hamming_instance(x, y)`` while counting every bit sent,
    and decide the Gap-Hamming promise problem from a support-size estimate.

A block is ``rank - 1`` written in exactly ``ceil(log2 rank)`` bits followed
by the class bits ``00`` (mass 0 or failure), ``01`` (``2^-z``) or ``10``
(``2^-(z-1)``).  The message interleaves each block bit with a framing bit
that is 1 only after the last bit of a block.
"""
from dataclasses import dataclass, field
import enum
from fractions import Fraction
import math

import numpy as np

from ._random import as_rng, uniform_below
from .dist import IndexSet, as_index_set
from .errors import DecodeError, EncodingError, UsageError
from .hashing import draw_pairwise
from .instances import gap_hamming_instance, geometric_hard, hamming_distance
from .oracles import OracleSession, QueryLedger
from .responses import FAILURE, SampleEval, SamplePr, is_failure


class PClass(enum.Enum):
    ZERO = "00"
    HALF_POW = "01"            # p = 2^-z
    HALF_POW_MINUS_ONE = "10"  # p = 2^-(z-1)


def rank_in_set(S, j):
    """Position of ``j`` in ``S`` sorted ascending, starting at 1."""
    return as_index_set(S).rank(j)


def rank_bits(rank):
    """``ceil(log2 rank)``."""
    return (rank - 1).bit_length()


def encode_block(rank, p_class):
    """``rank - 1`` in ``ceil(log2 rank)`` bits, then the two class bits."""
    if rank < 1:
        raise EncodingError("rank must be at least 1")
    p_class = PClass(p_class)
    k = rank_bits(rank)
    head = format(rank - 1, f"0{k}b") if k else ""
    return head + p_class.value


def classify_mass(z, p):
    """The class of mass ``p`` for sampled element ``z``; raises for any other mass."""
    if p == 0:
        return PClass.ZERO
    if p == Fraction(1, 1 << z):
        return PClass.HALF_POW
    if z >= 1 and p == Fraction(1, 1 << (z - 1)):
        return PClass.HALF_POW_MINUS_ONE
    raise EncodingError(f"mass {p} of element {z} is none of 0, 2^-z, 2^-(z-1)")


def mass_of_class(z, p_class):
    if p_class is PClass.ZERO:
        return Fraction(0)
    if p_class is PClass.HALF_POW:
        return Fraction(1, 1 << z)
    return Fraction(1, 1 << (z - 1))


@dataclass(frozen=True)
class Step:
    """One query: set ``A``, sampled element ``z`` (``None`` on failure) and revealed mass ``p``."""

    A: IndexSet
    z: int
    p: Fraction

    @property
    def failed(self):
        return self.z is None


@dataclass
class Transcript:
    steps: list = field(default_factory=list)
    shared_seed: int = 0
    output: object = None

    def __eq__(self, other):
        if not isinstance(other, Transcript):
            return NotImplemented
        return self.steps == other.steps and self.output == other.output


@dataclass(frozen=True)
class BitMessage:
    """Payload bits interleaved with framing bits, as a ``0``/``1`` string."""

    bits: str

    def __len__(self):
        return len(self.bits)

    @property
    def payload(self):
        return self.bits[0::2]

    @property
    def framing(self):
        return self.bits[1::2]

    def flip(self, i):
        b = "1" if self.bits[i] == "0" else "0"
        return BitMessage(self.bits[:i] + b + self.bits[i + 1:])


def step_block(step):
    if step.failed:
        return encode_block(1, PClass.ZERO)
    return encode_block(rank_in_set(step.A, step.z), classify_mass(step.z, step.p))


def encode_run(transcript):
    """The framed message for a transcript; its length is ``2 * sum |block|``."""
    out = []
    for step in transcript.steps:
        blk = step_block(step)
        for i, b in enumerate(blk):
            out.append(b)
            out.append("1" if i == len(blk) - 1 else "0")
    return BitMessage("".join(out))


def message_length_formula(transcript):
    """``2 * sum_l (ceil(log2 X_l) + 2)`` with ``X_l`` the rank at step ``l``."""
    total = 0
    for step in transcript.steps:
        rank = 1 if step.failed else rank_in_set(step.A, step.z)
        total += rank_bits(rank) + 2
    return 2 * total


class _Reader:
    def __init__(self, message):
        bits = message.bits if isinstance(message, BitMessage) else str(message)
        if set(bits) - {"0", "1"}:
            raise DecodeError("message may only contain 0 and 1")
        if len(bits) % 2:
            raise DecodeError("message has odd length")
        self.bits = bits
        self.pos = 0

    def next_block(self):
        payload = []
        while True:
            if self.pos + 2 > len(self.bits):
                raise DecodeError("message ended inside a block" if payload else "message ended before the last query")
            payload.append(self.bits[self.pos])
            frame = self.bits[self.pos + 1]
            self.pos += 2
            if frame == "1":
                return "".join(payload)

    def finish(self):
        if self.pos != len(self.bits):
            raise DecodeError(f"{len(self.bits) - self.pos} bits left over after the last query")


def decode_block(block, A):
    """``(z, p_class)`` from one block against the known query set ``A``."""
    if len(block) < 2:
        raise DecodeError(f"block {block!r} is shorter than its two class bits")
    head, cls = block[:-2], block[-2:]
    if cls == "11":
        raise DecodeError("class bits 11 are unused")
    p_class = PClass(cls)
    if p_class is PClass.ZERO:
        if head:
            raise DecodeError("a zero-mass block carries no rank bits")
        return None, p_class
    if head and head[0] == "0":
        raise DecodeError(f"rank field {head!r} is not of minimal length")
    rank = (int(head, 2) if head else 0) + 1
    if rank > len(A):
        raise DecodeError(f"rank {rank} exceeds the query set size {len(A)}")
    if rank_bits(rank) != len(head):
        raise DecodeError(f"rank field {head!r} is not of minimal length")
    return int(A.array[rank - 1]), p_class


class _AliceOracle:
    """COND-PR access for Alice, recording each step."""

    def __init__(self, session):
        self.n = session.n
        self._session = session
        self.steps = []

    def cond_pr(self, S):
        S = as_index_set(S)
        r = self._session.cond_pr(S)
        if is_failure(r):
            self.steps.append(Step(S, None, Fraction(0)))
        else:
            self.steps.append(Step(S, r.j, r.p))
        return r


class _BobOracle:
    """COND-PR answers replayed from Alice's message."""

    def __init__(self, n, reader):
        self.n = n
        self._reader = reader
        self.steps = []

    def cond_pr(self, S):
        S = as_index_set(S)
        z, p_class = decode_block(self._reader.next_block(), S)
        if z is None:
            self.steps.append(Step(S, None, Fraction(0)))
            return FAILURE
        p = mass_of_class(z, p_class)
        self.steps.append(Step(S, z, p))
        return SamplePr(z, p)


def record_run(distribution, algorithm, shared_seed, rng=None):
    """Alice's side: run ``algorithm(oracle, shared_rng)``; returns its :class:`Transcript`.

    ``rng`` drives the oracle's sampling and is private to Alice.
    """
    session = OracleSession(distribution, rng if rng is not None else np.random.default_rng())
    alice = _AliceOracle(session)
    output = algorithm(alice, np.random.default_rng(shared_seed))
    return Transcript(alice.steps, shared_seed, output)


def decode_run(message, algorithm, shared_seed, n):
    """Bob's side: replay ``algorithm`` over ``[n]`` with answers read from ``message``."""
    reader = _Reader(message)
    bob = _BobOracle(n, reader)
    output = algorithm(bob, np.random.default_rng(shared_seed))
    reader.finish()
    return Transcript(bob.steps, shared_seed, output)


def hash_search_guesser(oracle, rng):
    """Guess ``x`` from COND-PR access to ``D_x`` with a fixed number of queries.

    Binary search over the hash levels ``L_t`` for ``t`` in ``[1, 2^K]``,
    ``K = ceil(log2(w + 1))``, always taking exactly ``K`` steps; levels above
    the hash width are queried as the empty set.  The guess is the first
    empty level, clamped to ``[1, w]``.
    """
    from .estimators import LevelSets

    w = max(1, (oracle.n - 1).bit_length())
    levels = LevelSets(draw_pairwise(w, rng), oracle.n)
    K = max(1, math.ceil(math.log2(w + 1)))
    lo, hi = 1, 1 << K
    for _ in range(K):
        mid = (lo + hi) // 2
        if is_failure(oracle.cond_pr(levels(mid))):
            hi = mid
        else:
            lo = mid + 1
    return min(max(lo, 1), w)


def interval_guesser(oracle, rng):
    """Recover ``x`` exactly from COND-PR access to ``D_x`` in a fixed number of queries.

    ``D_x`` puts mass beyond ``2^m`` iff ``x > m``, so a binary search over
    ``m`` in ``[1, 2^K]``, ``K = ceil(log2 log2 n)``, asks ``{2^m + 1, ..., n}``
    (empty once ``2^m >= n``) exactly ``K`` times.  ``rng`` is unused.
    """
    n = oracle.n
    L = max(1, (n - 1).bit_length())
    K = max(1, math.ceil(math.log2(L)))
    lo, hi = 1, 1 << K
    for _ in range(K):
        mid = (lo + hi) // 2
        start = (1 << mid) + 1 if mid < n.bit_length() else n + 1
        if is_failure(oracle.cond_pr(IndexSet.interval(min(start, n + 1), n))):
            hi = mid
        else:
            lo = mid + 1
    return min(lo, L)


@dataclass
class GuessingReport:
    trials: int
    queries_per_trial: float
    mean_rank: float
    mean_rank_sq: float
    frac_short: float           # fraction of trials with |M| <= 16 t
    accuracy: float
    round_trip_ok: bool
    rows: list = field(default_factory=list)


def run_integer_guessing(n, trials, algorithm=None, rng=None):
    """Play the integer guessing game ``trials`` times on ``D_x``, ``x`` uniform in ``[log2 n]``.

    Each trial encodes Alice's run, decodes it on Bob's side, checks the round
    trip and scores Bob's guess.  A failed step counts as rank 1, the rank
    its block encodes.
    """
    if n < 2 or n & (n - 1):
        raise UsageError("n must be a power of two, at least 2")
    algorithm = interval_guesser if algorithm is None else algorithm
    rng = as_rng(rng)
    log_n = n.bit_length() - 1
    ranks = []
    short = correct = 0
    ok = True
    rows = []
    for trial in range(trials):
        x = 1 + uniform_below(rng, log_n)
        seed = uniform_below(rng, 1 << 63)
        tr = record_run(geometric_hard(n, x), algorithm, seed, rng)
        msg = encode_run(tr)
        back = decode_run(msg, algorithm, seed, n)
        same = back == tr
        ok &= same
        t = len(tr.steps)
        step_ranks = [1 if s.failed else rank_in_set(s.A, s.z) for s in tr.steps]
        ranks.extend(step_ranks)
        short += len(msg) <= 16 * t
        correct += back.output == x
        rows.append({"trial": trial, "x": x, "guess": back.output, "steps": t,
                     "length": len(msg), "max_rank": max(step_ranks, default=1), "round_trip": same})
    ranks = np.array(ranks, dtype=float) if ranks else np.zeros(1)
    return GuessingReport(
        trials=trials,
        queries_per_trial=float(np.mean([r["steps"] for r in rows])) if rows else 0.0,
        mean_rank=float(ranks.mean()),
        mean_rank_sq=float((ranks ** 2).mean()),
        frac_short=short / trials if trials else 0.0,
        accuracy=correct / trials if trials else 0.0,
        round_trip_ok=ok,
        rows=rows,
    )


# -- Gap-Hamming ----------------------------------------------------------------

def _code_bits(n):
    """Bits charged for one element or count: ``ceil(log2 n)``, at least 1."""
    return max(1, math.ceil(math.log2(n)))


def ghd_simulate_query(I_x, I_y, S, rng, n):
    """One COND-EVAL answer on the Gap-Hamming instance via the Alice/Bob exchange.

    Returns ``(response, bits)``.  Alice sends ``|S ∩ I_x|`` and, if nonzero, a
    uniform element ``a`` of it; Bob sends ``|S ∩ I_y|`` and the chosen
    element ``c`` (``a`` with probability ``k_a / (k_a + k_b)``, else his
    uniform ``b``), plus one bit telling whether ``a`` lies in ``I_y`` when
    ``c = a``.
    """
    S = as_index_set(S)
    code = _code_bits(n)
    ax = S.intersection(I_x).array
    by = S.intersection(I_y).array
    ka, kb = int(ax.size), int(by.size)
    bits = code                                   # Alice: k_a
    a = None
    if ka:
        a = int(ax[uniform_below(rng, ka)])
        bits += code                              # Alice: a
    bits += code                                  # Bob: k_b
    if ka + kb == 0:
        return FAILURE, bits
    b = int(by[uniform_below(rng, kb)]) if kb else None
    c = a if uniform_below(rng, ka + kb) < ka else b
    bits += code                                  # Bob: c
    if c == a:
        bits += 1                                 # Bob: is a in I_y
        both = a in I_y
    else:
        both = c in I_x
    total = len(I_x) + len(I_y)
    p = Fraction(2 if both else 1, total)
    return SampleEval(c, p, p / Fraction(ka + kb, total)), bits


class GHDOracle:
    """A session-like COND-EVAL oracle realised by the two-party exchange."""

    def __init__(self, x_bits, y_bits, rng, shared_rng=None):
        from .instances import _bits

        x, y = _bits(x_bits), _bits(y_bits)
        if x.size != y.size:
            raise UsageError("the two bit strings differ in length")
        self.n = int(x.size)
        self.I_x = IndexSet._trusted(np.flatnonzero(x) + 1)
        self.I_y = IndexSet._trusted(np.flatnonzero(y) + 1)
        if not len(self.I_x) + len(self.I_y):
            raise UsageError("both bit strings are all zero")
        self._private = rng
        self.rng = rng if shared_rng is None else shared_rng
        self.ledger = QueryLedger()
        self.bits = 2 * _code_bits(self.n)        # preamble: |I_x| and |I_y|
        self.per_query_bits = []

    def cond_eval(self, S):
        self.ledger.cond_eval += 1
        r, bits = ghd_simulate_query(self.I_x, self.I_y, S, self._private, self.n)
        self.bits += bits
        self.per_query_bits.append(bits)
        return r

    def cond(self, S):
        return self.cond_eval(S)

    def cond_pr(self, S):
        return self.cond_eval(S)

    def query(self, name, S=None):
        if name not in ("cond", "cond-pr", "cond-eval"):
            raise UsageError(f"the two-party oracle only answers conditional queries, not {name!r}")
        return self.cond_eval(S)


def default_ghd_estimator(oracle, eps, rng):
    from .estimators import estimate_support_eps

    return estimate_support_eps(oracle, eps, rng, oracle="cond-eval").estimate


@dataclass
class GHDResult:
    decision: str               # "Yes" or "No"
    bits: int
    queries: int
    estimate: float
    threshold: float
    promise: str                # "Yes", "No" or "outside promise"
    bits_per_query_max: int
    code_bits: int

    @property
    def c_measured(self):
        """Largest per-query bit count in units of ``ceil(log2 n)``."""
        return self.bits_per_query_max / self.code_bits


def ghd_two_party(x_bits, y_bits, g, estimator=None, rng=None):
    """Decide Gap-Hamming by estimating the support of the joint instance.

    The estimator runs with ``eps = g / (3n)`` on a :class:`GHDOracle`; the
    answer is Yes iff the estimate is at least ``(|I_x| + |I_y| + n/2) / 2``.
    """
    estimator = default_ghd_estimator if estimator is None else estimator
    rng = as_rng(rng)
    oracle = GHDOracle(x_bits, y_bits, rng)
    n = oracle.n
    eps = g / (3 * n)
    if not 0 < eps <= 1:
        raise UsageError(f"g must lie in (0, 3n], got {g}")
    estimate = estimator(oracle, eps, rng)
    threshold = 0.5 * (len(oracle.I_x) + len(oracle.I_y) + n / 2)
    d = hamming_distance(x_bits, y_bits)
    promise = "Yes" if d >= n / 2 + g else "No" if d < n / 2 - g else "outside promise"
    return GHDResult(
        decision="Yes" if estimate >= threshold else "No",
        bits=oracle.bits,
        queries=oracle.ledger.cond_eval,
        estimate=float(estimate),
        threshold=threshold,
        promise=promise,
        bits_per_query_max=max(oracle.per_query_bits, default=0),
        code_bits=_code_bits(n),
    )


def direct_ghd_response_distribution(x_bits, y_bits, S):
    """Exact law of a direct COND-EVAL answer on ``gap_hamming_instance(x, y)``."""
    from .oracles import exact_response_distribution

    return exact_response_distribution(gap_hamming_instance(x_bits, y_bits), "cond-eval", S)
