"""Exact discrete distributions on ``[n] = {1, ..., n}`` and exact conditional sampling.

Masses are :class:`fractions.Fraction` values. Internally a distribution keeps
its support as a sorted integer array and its masses in one of three layouts:

``int``     integer weights over a common denominator that fits in 62 bits
            (numpy fast path, used by uniform-style instances);
``big``     Python-integer weights over an arbitrary common denominator;
``dyadic``  ``(numerator, exponent)`` pairs meaning ``numerator / 2**exponent``.
            The geometric hard instances have denominators up to
            ``2**(2**16 - 1)``, so a common denominator is never materialised.

Sampling conditional on ``S`` scales the masses of ``S`` to a common
denominator, draws a uniform integer below their total and walks the
cumulative sum, so conditional probabilities are exact.
"""
from fractions import Fraction
import math

import numpy as np

from ._random import uniform_below
from .errors import DistributionFormatError, DomainError
from .responses import FAILURE

_INT_LIMIT = 1 << 62


def _as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        raise DomainError("floating-point masses are not exact; pass a Fraction or 'num/den'")
    return Fraction(value)


def _pow2_exponent(d):
    """Exponent ``e`` with ``d == 2**e``, or ``None``."""
    if d & (d - 1):
        return None
    return d.bit_length() - 1


class IndexSet:
    """An immutable, sorted, duplicate-free set of positive indices.

    Members are stored in a read-only ``int64`` numpy array. Construction from
    arbitrary input sorts and deduplicates; the set algebra methods preserve
    order without re-sorting.

    :meth:`without` is lazy: it records the removed element against a base
    set and only materialises the member array on demand.  Together with the
    per-distribution position cache this keeps the remove-and-requery loops of
    the estimators proportional to the support inside the set, not to its size.
    """

    __slots__ = ("_a", "_base", "_removed", "_cache")

    def __init__(self, members=()):
        if isinstance(members, IndexSet):
            a = members.array
        else:
            if isinstance(members, range):
                a = np.arange(members.start, members.stop, members.step, dtype=np.int64)
            else:
                a = np.asarray(list(members) if not isinstance(members, np.ndarray) else members)
            if a.size == 0:
                a = np.zeros(0, dtype=np.int64)
            elif a.dtype.kind not in "iu":
                raise DomainError("index sets hold integers")
            a = np.unique(a.astype(np.int64, copy=False))
            if a.size and a[0] < 1:
                raise DomainError(f"index {int(a[0])} is not in [1, n]")
            a.flags.writeable = False
        self._a = a
        self._base = None
        self._removed = None
        self._cache = None

    @classmethod
    def _trusted(cls, arr):
        obj = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.int64)
        arr.flags.writeable = False
        obj._a = arr
        obj._base = None
        obj._removed = None
        obj._cache = None
        return obj

    @classmethod
    def interval(cls, lo, hi):
        """The contiguous set ``{lo, ..., hi}`` (empty when ``hi < lo``)."""
        if lo < 1:
            raise DomainError(f"index {lo} is not in [1, n]")
        return cls._trusted(np.arange(lo, hi + 1, dtype=np.int64))

    @property
    def array(self):
        if self._a is None:
            base = self._base.array
            a = base[~np.isin(base, self._removed, assume_unique=True)]
            a.flags.writeable = False
            self._a = a
        return self._a

    @property
    def max(self):
        a = self.array
        return int(a[-1]) if a.size else 0

    def _bound(self):
        """An upper bound on the members, available without materialising."""
        a = self._base._a if self._a is None else self._a
        return int(a[-1]) if a.size else 0

    def __len__(self):
        if self._a is None:
            return int(self._base._a.size - self._removed.size)
        return int(self._a.size)

    def __iter__(self):
        return iter(self.array.tolist())

    def __contains__(self, j):
        if self._a is None:
            return _sorted_contains(self._base._a, j) and not _sorted_contains(self._removed, j)
        return _sorted_contains(self._a, j)

    def __eq__(self, other):
        if not isinstance(other, IndexSet):
            return NotImplemented
        return np.array_equal(self.array, other.array)

    def __hash__(self):
        return hash(self.array.tobytes())

    def __repr__(self):
        a = self.array
        if a.size <= 12:
            return f"IndexSet({a.tolist()})"
        return f"IndexSet(<{a.size} members, {int(a[0])}..{int(a[-1])}>)"

    def tolist(self):
        return self.array.tolist()

    def without(self, j):
        """This set with ``j`` removed (unchanged if ``j`` is absent)."""
        if j not in self:
            return self
        obj = IndexSet.__new__(IndexSet)
        obj._a = None
        if self._a is None:
            obj._base = self._base
            k = int(np.searchsorted(self._removed, j))
            obj._removed = np.insert(self._removed, k, j)
        else:
            obj._base = self
            obj._removed = np.array([j], dtype=np.int64)
        obj._cache = None
        if self._cache is not None:
            D, pos = self._cache
            k = int(D._pos[j])
            if k >= 0:
                pos = np.delete(pos, int(np.searchsorted(pos, k)))
            obj._cache = (D, pos)
        return obj

    def difference(self, other):
        other = as_index_set(other)
        keep = ~np.isin(self.array, other.array, assume_unique=True)
        return IndexSet._trusted(self.array[keep])

    def intersection(self, other):
        other = as_index_set(other)
        return IndexSet._trusted(np.intersect1d(self.array, other.array, assume_unique=True))

    def union(self, other):
        other = as_index_set(other)
        return IndexSet._trusted(np.union1d(self.array, other.array))

    def complement(self, n):
        """``[n]`` minus this set."""
        a = self.array
        mask = np.ones(n + 1, dtype=bool)
        mask[0] = False
        mask[a[a <= n]] = False
        return IndexSet._trusted(np.flatnonzero(mask))

    def isdisjoint(self, other):
        return len(self.intersection(other)) == 0

    def issubset(self, other):
        other = as_index_set(other)
        return bool(np.isin(self.array, other.array, assume_unique=True).all())

    def rank(self, j):
        """1-based position of ``j`` in ascending order."""
        a = self.array
        k = int(np.searchsorted(a, j))
        if k >= a.size or a[k] != j:
            raise DomainError(f"{j} is not a member of the set")
        return k + 1


def _sorted_contains(a, j):
    k = np.searchsorted(a, j)
    return bool(k < a.size and a[k] == j)


def as_index_set(members):
    return members if isinstance(members, IndexSet) else IndexSet(members)


def _check_dyadic_total_is_one(nums, exps):
    """Exact test of ``sum(nums[i] / 2**exps[i]) == 1`` by carrying level by level."""
    levels = {}
    for num, e in zip(nums.tolist(), exps.tolist()):
        levels[e] = levels.get(e, 0) + num
    carry = 0
    prev = None
    for e in sorted(levels, reverse=True):
        if prev is not None:
            gap = prev - e
            if carry & ((1 << gap) - 1):
                return False
            carry >>= gap
        carry += levels[e]
        prev = e
    if prev is None:
        return False
    if prev > 0:
        if carry & ((1 << prev) - 1):
            return False
        carry >>= prev
    return carry == 1


class DiscreteDistribution:
    """An exact probability distribution on ``[n]``.

    Parameters
    ----------
    n : int
        Domain size.
    pmf : mapping
        ``index -> mass``. Masses may be ``Fraction``, ``int`` or ``"num/den"``
        strings. Zero masses are dropped; the masses must sum to exactly one.

    Instances are immutable and may be shared between threads.
    """

    def __init__(self, n, pmf):
        n = int(n)
        if n < 1:
            raise DomainError("domain size must be positive")
        items = []
        for j, value in pmf.items():
            j = int(j)
            if not 1 <= j <= n:
                raise DomainError(f"index {j} is not in [1, {n}]")
            p = _as_fraction(value)
            if p < 0:
                raise DomainError(f"mass of {j} is negative")
            if p:
                items.append((j, p))
        items.sort()
        support = np.array([j for j, _ in items], dtype=np.int64)
        masses = [p for _, p in items]
        self._init_from_fractions(n, support, masses)

    # -- construction -------------------------------------------------------

    def _init_from_fractions(self, n, support, masses):
        if not masses:
            raise DomainError("masses sum to 0, not 1")
        dens = [p.denominator for p in masses]
        exps = [_pow2_exponent(d) for d in dens]
        if all(e is not None for e in exps):
            E = max(exps)
            if E <= 61:
                weights = np.array([p.numerator << (E - e) for p, e in zip(masses, exps)], dtype=np.int64)
                self._set_int(n, support, weights, 1 << E)
            else:
                nums = [p.numerator for p in masses]
                self._set_dyadic(n, support, nums, np.array(exps, dtype=np.int64))
            return
        L = math.lcm(*dens)
        weights = [p.numerator * (L // p.denominator) for p in masses]
        if L < _INT_LIMIT:
            self._set_int(n, support, np.array(weights, dtype=np.int64), L)
        else:
            self._set_big(n, support, weights, L)

    def _base(self, n, support):
        self.n = n
        support = np.asarray(support, dtype=np.int64)
        support.flags.writeable = False
        self._support = support
        pos = np.full(n + 1, -1, dtype=np.int64)
        pos[support] = np.arange(support.size, dtype=np.int64)
        pos.flags.writeable = False
        self._pos = pos
        self._pmf = None

    def _set_int(self, n, support, weights, den, check=True):
        if check and sum(weights.tolist()) != den:
            raise DomainError(f"masses sum to {Fraction(sum(weights.tolist()), den)}, not 1")
        self._base(n, support)
        weights.flags.writeable = False
        self._mode = "int"
        self._w = weights
        self._den = int(den)

    def _set_big(self, n, support, weights, den, check=True):
        if check and sum(weights) != den:
            raise DomainError(f"masses sum to {Fraction(sum(weights), den)}, not 1")
        self._base(n, support)
        self._mode = "big"
        self._w = np.array(weights, dtype=object)
        self._den = int(den)

    def _set_dyadic(self, n, support, nums, exps, check=True):
        if max(nums) < _INT_LIMIT:
            nums = np.array(nums, dtype=np.int64)
        else:
            nums = np.array(nums, dtype=object)
        if check and not _check_dyadic_total_is_one(nums, exps):
            raise DomainError("dyadic masses do not sum to 1")
        self._base(n, support)
        exps.flags.writeable = False
        self._mode = "dyadic"
        self._w = nums
        self._exp = exps

    @classmethod
    def from_weights(cls, n, support, weights, denominator):
        """Build from integer ``weights`` over a common ``denominator``.

        ``support`` must be strictly increasing; zero weights are dropped.
        """
        support = np.asarray(support, dtype=np.int64)
        weights = [int(w) for w in weights]
        if len(weights) != support.size:
            raise DomainError("support and weights differ in length")
        if support.size and (np.any(np.diff(support) <= 0) or support[0] < 1 or support[-1] > n):
            raise DomainError("support must be strictly increasing within [1, n]")
        if any(w < 0 for w in weights):
            raise DomainError("negative weight")
        keep = [i for i, w in enumerate(weights) if w]
        support = support[keep]
        weights = [weights[i] for i in keep]
        obj = cls.__new__(cls)
        den = int(denominator)
        if den < _INT_LIMIT:
            obj._set_int(int(n), support, np.array(weights, dtype=np.int64), den)
        else:
            obj._set_big(int(n), support, weights, den)
        return obj

    @classmethod
    def from_dyadic(cls, n, support, numerators, exponents):
        """Build from masses ``numerators[i] / 2**exponents[i]`` on ``support``."""
        support = np.asarray(support, dtype=np.int64)
        exps = np.asarray(exponents, dtype=np.int64)
        nums = [int(v) for v in numerators]
        if len(nums) != support.size or exps.size != support.size:
            raise DomainError("support, numerators and exponents differ in length")
        if support.size and (np.any(np.diff(support) <= 0) or support[0] < 1 or support[-1] > n):
            raise DomainError("support must be strictly increasing within [1, n]")
        if any(v <= 0 for v in nums) or np.any(exps < 0):
            raise DomainError("dyadic numerators must be positive and exponents nonnegative")
        obj = cls.__new__(cls)
        obj._set_dyadic(int(n), support, nums, exps)
        return obj

    @classmethod
    def uniform(cls, n, support=None):
        """Uniform distribution on ``support`` (default: all of ``[n]``)."""
        if support is None:
            support = np.arange(1, n + 1, dtype=np.int64)
        else:
            support = as_index_set(support).array
            if support.size == 0 or support[-1] > n:
                raise DomainError("support must be a nonempty subset of [n]")
        obj = cls.__new__(cls)
        obj._set_int(int(n), support, np.ones(support.size, dtype=np.int64), support.size, check=False)
        return obj

    @classmethod
    def point_mass(cls, n, j):
        return cls(n, {j: 1})

    # -- inspection ---------------------------------------------------------

    @property
    def support(self):
        return IndexSet._trusted(self._support)

    def support_size(self):
        return int(self._support.size)

    @property
    def is_dyadic(self):
        return self._mode == "dyadic"

    def _mass_at(self, k):
        """Mass of the ``k``-th support element."""
        if self._mode == "dyadic":
            return Fraction(int(self._w[k]), 1 << int(self._exp[k]))
        return Fraction(int(self._w[k]), self._den)

    def __getitem__(self, j):
        if not 1 <= j <= self.n:
            raise DomainError(f"index {j} is not in [1, {self.n}]")
        k = int(self._pos[j])
        return Fraction(0) if k < 0 else self._mass_at(k)

    @property
    def pmf(self):
        """Mapping ``index -> Fraction`` over the support (materialised on first use)."""
        if self._pmf is None:
            self._pmf = {int(j): self._mass_at(k) for k, j in enumerate(self._support.tolist())}
        return self._pmf

    def items(self):
        for k, j in enumerate(self._support.tolist()):
            yield j, self._mass_at(k)

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._support, other._support) and all(
            self._mass_at(k) == other._mass_at(k) for k in range(self._support.size))

    __hash__ = None

    def __repr__(self):
        return f"DiscreteDistribution(n={self.n}, support_size={self.support_size()}, layout={self._mode!r})"

    # -- exact queries --------------------------------------------------------

    def _positions(self, S):
        """Support positions (ascending) of the members of ``S``, cached on ``S``."""
        S = as_index_set(S)
        if S._cache is not None and S._cache[0] is self:
            return S._cache[1]
        if S._bound() > self.n:
            raise DomainError(f"index {S.max} is not in [1, {self.n}]")
        pos = self._pos[S.array]
        pos = pos[pos >= 0]
        pos.flags.writeable = False
        S._cache = (self, pos)
        return pos

    def _weights(self, pos):
        """Integer weights of support positions ``pos`` and their common denominator.

        Only used for the ``int`` and ``big`` layouts.
        """
        if self._mode == "int":
            return self._w[pos], self._den
        return self._w[pos].tolist(), self._den

    def _dyadic_total(self, pos):
        """``(T, top)`` with ``sum_{k in pos} D(support[k]) == T / 2**top``."""
        exps = self._exp[pos]
        top = int(exps.max())
        nums = self._w[pos]
        if nums.dtype == object:
            return sum(int(v) << (top - int(e)) for v, e in zip(nums.tolist(), exps.tolist())), top
        # Scatter every set bit of every numerator into a count per bit position
        # (position = power of two inside the total), then sum bit planes of the counts.
        shifts = top - exps
        width = int(nums.max()).bit_length()
        counts = np.zeros(top + width + 1, dtype=np.int64)
        for b in range(width):
            sel = (nums >> b) & 1 == 1
            if sel.any():
                counts += np.bincount(shifts[sel] + b, minlength=counts.size)
        total = 0
        plane = 0
        while counts.any():
            bits = (counts & 1).astype(np.uint8)
            if bits.any():
                total += int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little") << plane
            counts >>= 1
            plane += 1
        return total, top

    def mass(self, S):
        """Exact ``D(S)``."""
        pos = self._positions(S)
        if pos.size == 0:
            return Fraction(0)
        if self._mode == "dyadic":
            total, top = self._dyadic_total(pos)
            return Fraction(total, 1 << top)
        w, den = self._weights(pos)
        total = int(w.sum()) if isinstance(w, np.ndarray) else sum(w)
        return Fraction(total, den)

    def _draw(self, S, rng):
        """``(j, D(j), D(S))`` for ``j`` drawn from ``D`` conditioned on ``S``, or ``None``."""
        pos = self._positions(S)
        if pos.size == 0:
            return None
        if self._mode == "dyadic":
            total, top = self._dyadic_total(pos)
            r = uniform_below(rng, total)
            # Walk from the heaviest masses down; for near-geometric masses this
            # stops after a handful of steps.
            order = np.argsort(self._exp[pos], kind="stable")
            for k in pos[order].tolist():
                wk = int(self._w[k]) << (top - int(self._exp[k]))
                if r < wk:
                    break
                r -= wk
            return int(self._support[k]), self._mass_at(k), Fraction(total, 1 << top)
        w, den = self._weights(pos)
        if isinstance(w, np.ndarray):
            cum = np.cumsum(w)
            total = int(cum[-1])
            r = uniform_below(rng, total)
            i = int(np.searchsorted(cum, r, side="right"))
            wk = int(w[i])
        else:
            total = sum(w)
            r = uniform_below(rng, total)
            acc = 0
            for i, wk in enumerate(w):
                acc += wk
                if r < acc:
                    break
        j = int(self._support[pos[i]])
        return j, Fraction(wk, den), Fraction(total, den)

    def sample_conditional(self, S, rng):
        """Element of ``S`` drawn with probability ``D(j)/D(S)``; ``FAILURE`` if ``D(S) = 0``."""
        drawn = self._draw(S, rng)
        return FAILURE if drawn is None else drawn[0]

    def squared_l2(self):
        """Exact ``sum_j D(j)**2``."""
        return sum((p * p for _, p in self.items()), Fraction(0))


# -- module-level operations ---------------------------------------------------

def mass(D, S):
    """Exact mass ``D(S)``; zero for the empty set."""
    return D.mass(S)


def support_size(D):
    return D.support_size()


def sample_conditional(D, S, rng):
    return D.sample_conditional(S, rng)


def total_variation(D, E):
    """``sum_i |D(i) - E(i)|`` computed exactly.

    The 1/2 factor of the usual convention is omitted, so disjoint point
    masses are at distance 2.
    """
    if D.n != E.n:
        raise DomainError(f"domain sizes differ: {D.n} vs {E.n}")
    a, b = D.pmf, E.pmf
    total = Fraction(0)
    for j in set(a) | set(b):
        total += abs(a.get(j, 0) - b.get(j, 0))
    return total


# -- text format ------------------------------------------------------------------

def parse_distribution(text):
    """Parse the ``n=<size>`` / ``<index> <num>/<den>`` text format."""
    n = None
    pmf = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            key, sep, value = line.partition("=")
            if not sep or key.strip() != "n":
                raise DistributionFormatError("expected header 'n=<domain size>'", lineno)
            try:
                n = int(value)
            except ValueError:
                raise DistributionFormatError(f"bad domain size {value.strip()!r}", lineno) from None
            if n < 1:
                raise DistributionFormatError("domain size must be positive", lineno)
            continue
        fields = line.split()
        if len(fields) != 2:
            raise DistributionFormatError(f"expected '<index> <num>/<den>', got {line!r}", lineno)
        try:
            j = int(fields[0])
            p = Fraction(fields[1])
        except (ValueError, ZeroDivisionError):
            raise DistributionFormatError(f"cannot parse entry {line!r}", lineno) from None
        if not 1 <= j <= n:
            raise DistributionFormatError(f"index {j} is not in [1, {n}]", lineno)
        if p < 0:
            raise DistributionFormatError(f"negative mass {fields[1]}", lineno)
        if j in pmf:
            raise DistributionFormatError(f"index {j} listed twice", lineno)
        pmf[j] = p
    if n is None:
        raise DistributionFormatError("missing header 'n=<domain size>'")
    total = sum(pmf.values(), Fraction(0))
    if total != 1:
        raise DistributionFormatError(f"masses sum to {total}, not 1")
    return DiscreteDistribution(n, pmf)


def format_distribution(D):
    lines = [f"n={D.n}"]
    for j, p in D.items():
        lines.append(f"{j} {p.numerator}/{p.denominator}")
    return "\n".join(lines) + "\n"


def load_distribution(path):
    with open(path, encoding="utf-8") as fh:
        return parse_distribution(fh.read())


def save_distribution(D, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_distribution(D))
