"""Hash families over bit vectors.

:class:`BitAffineHash` is a uniformly random affine map ``x -> A x + b`` over
GF(2)^w.  Any fixed set of output coordinates of such a map is again a
uniform affine map, so each suffix projection ``h_t`` (the last ``t`` output
bits) is pairwise independent.

:class:`FourWiseSignHash` evaluates a uniformly random polynomial of degree
at most three over GF(2^w) and maps its lowest bit to a sign.

Inputs are integers ``x`` in ``[0, 2**w)``; domain elements ``j`` of ``[n]``
are mapped to ``x = j - 1`` by the callers.
"""
from functools import lru_cache

import numpy as np

from ._random import uniform_below
from .errors import UsageError

# Irreducible polynomials over GF(2): the exponents strictly between 0 and w
# of x^w + ... + 1 (low-weight entries of the standard published table).
IRREDUCIBLE_EXPONENTS = {
    2: (1,), 3: (1,), 4: (1,), 5: (2,), 6: (1,), 7: (1,), 8: (4, 3, 1),
    9: (4,), 10: (3,), 11: (2,), 12: (6, 4, 1), 13: (4, 3, 1), 14: (5, 3, 1),
    15: (1,), 16: (5, 3, 1), 17: (3,), 18: (7,), 19: (5, 2, 1), 20: (3,),
    21: (2,), 22: (1,), 23: (5,), 24: (4, 3, 1), 25: (3,), 26: (4, 3, 1),
    27: (5, 2, 1), 28: (3,), 29: (2,), 30: (6, 4, 1), 31: (3,), 32: (7, 3, 2),
}


def irreducible_modulus(w):
    """The modulus polynomial of GF(2^w) as an integer bit mask."""
    try:
        exps = IRREDUCIBLE_EXPONENTS[w]
    except KeyError:
        raise UsageError(f"no irreducible polynomial tabulated for w={w} (supported: 2..32)") from None
    m = (1 << w) | 1
    for e in exps:
        m |= 1 << e
    return m


def _popcount_parity(v):
    return np.bitwise_count(v) & 1


def _check_width(w, low=1):
    if not isinstance(w, (int, np.integer)) or not low <= w <= 62:
        raise UsageError(f"word width must be an integer in [{low}, 62], got {w!r}")
    return int(w)


class BitAffineHash:
    """``h(x) = A x XOR b`` over GF(2)^w.

    ``rows[i]`` is row ``i`` of ``A`` as a w-bit integer and produces output
    bit ``i`` (bit 0 is the least significant output bit).  ``b`` is the
    offset.  The suffix projection ``h_t`` keeps output bits ``0..t-1``.
    """

    __slots__ = ("w", "rows", "b")

    def __init__(self, w, rows, b):
        self.w = _check_width(w)
        rows = tuple(int(r) for r in rows)
        if len(rows) != self.w or any(not 0 <= r < (1 << self.w) for r in rows):
            raise UsageError("need w rows, each a w-bit integer")
        if not 0 <= int(b) < (1 << self.w):
            raise UsageError("offset must be a w-bit integer")
        self.rows = rows
        self.b = int(b)

    def __eq__(self, other):
        return isinstance(other, BitAffineHash) and (self.w, self.rows, self.b) == (other.w, other.rows, other.b)

    def __hash__(self):
        return hash((self.w, self.rows, self.b))

    def __repr__(self):
        return f"BitAffineHash({self.to_hex()!r})"

    def __call__(self, x):
        """``h(x)`` for an integer or an integer array."""
        if isinstance(x, np.ndarray):
            x = x.astype(np.int64, copy=False)
            out = np.full(x.shape, self.b, dtype=np.int64)
            for i, row in enumerate(self.rows):
                out ^= _popcount_parity(x & row).astype(np.int64) << i
            return out
        x = int(x)
        out = self.b
        for i, row in enumerate(self.rows):
            out ^= (bin(row & x).count("1") & 1) << i
        return out

    def suffix(self, t, x):
        """``h_t(x)``: the last ``t`` bits of ``h(x)``."""
        return self(x) & ((1 << t) - 1)

    def table(self):
        """``h(x)`` for every ``x`` in ``[0, 2**w)``, as an int64 array."""
        # h(x) = b XOR (XOR of the columns of A selected by the bits of x)
        cols = [0] * self.w
        for i, row in enumerate(self.rows):
            for c in range(self.w):
                if row >> c & 1:
                    cols[c] |= 1 << i
        out = np.array([self.b], dtype=np.int64)
        for c in range(self.w):
            out = np.concatenate([out, out ^ cols[c]])
        return out

    def zero_levels(self):
        """For every ``x``, the largest ``t`` with ``h_t(x) = 0`` (trailing zeros of ``h(x)``, capped at w)."""
        tab = self.table()
        low = tab & -tab
        lv = np.full(tab.shape, self.w, dtype=np.int64)
        nz = tab != 0
        lv[nz] = np.log2(low[nz]).astype(np.int64)
        return lv

    def to_hex(self):
        digits = (self.w + 3) // 4
        return f"w={self.w};A=" + ",".join(f"{r:0{digits}x}" for r in self.rows) + f";b={self.b:0{digits}x}"

    @classmethod
    def from_hex(cls, text):
        try:
            fields = dict(part.split("=", 1) for part in text.strip().split(";"))
            w = int(fields["w"])
            rows = [int(r, 16) for r in fields["A"].split(",")]
            b = int(fields["b"], 16)
        except (KeyError, ValueError) as exc:
            raise UsageError(f"malformed affine hash {text!r}") from exc
        return cls(w, rows, b)


def draw_pairwise(w, rng):
    """A uniformly random :class:`BitAffineHash` of width ``w``."""
    w = _check_width(w)
    rows = [uniform_below(rng, 1 << w) for _ in range(w)]
    return BitAffineHash(w, rows, uniform_below(rng, 1 << w))


def prefix_zero_member(h, t, x):
    """Whether ``h_t(x) = 0``; always true for ``t = 0``."""
    if not 0 <= t <= h.w:
        raise UsageError(f"t must lie in [0, {h.w}]")
    return h.suffix(t, x) == 0


def gf2_mul(a, b, w, modulus=None):
    """Product in GF(2^w) (carry-less multiply, then reduce)."""
    if modulus is None:
        modulus = irreducible_modulus(w)
    prod = 0
    while b:
        if b & 1:
            prod ^= a
        b >>= 1
        a <<= 1
        if a >> w & 1:
            a ^= modulus
    return prod


def _gf2_mul_array(a, b, w, modulus):
    """Elementwise GF(2^w) product of int64 array ``a`` by scalar or array ``b``."""
    a = np.asarray(a, dtype=np.int64).copy()
    b = np.broadcast_to(np.asarray(b, dtype=np.int64), a.shape).copy()
    prod = np.zeros(a.shape, dtype=np.int64)
    top = np.int64(1) << w
    for _ in range(w):
        prod ^= np.where(b & 1 == 1, a, 0)
        b >>= 1
        a <<= 1
        a = np.where(a & top != 0, a ^ modulus, a)
    return prod


@lru_cache(maxsize=16)
def _power_shift_table(w, n):
    """``T[k][i] = x^k * u^i`` over GF(2^w) for ``x = 0..n-1``, ``k = 1..3``, ``i < w``.

    ``u`` is the field element ``2``; with it any coefficient ``c`` times
    ``x^k`` is the XOR of ``T[k][i]`` over the set bits ``i`` of ``c``.
    """
    mod = irreducible_modulus(w)
    x = np.arange(n, dtype=np.int64)
    table = {}
    power = x
    for k in (1, 2, 3):
        if k > 1:
            power = _gf2_mul_array(power, x, w, mod)
        rows = [power]
        for _ in range(w - 1):
            rows.append(_gf2_mul_array(rows[-1], 2, w, mod))
        table[k] = np.stack(rows)
        table[k].flags.writeable = False
    return table


class FourWiseSignHash:
    """``x -> (-1)^(low bit of c0 + c1 x + c2 x^2 + c3 x^3)`` over GF(2^w)."""

    __slots__ = ("w", "coefficients", "_modulus")

    def __init__(self, w, coefficients):
        self.w = _check_width(w, low=2)
        if self.w > 32:
            raise UsageError("sign hashes support w <= 32")
        coefficients = tuple(int(c) for c in coefficients)
        if len(coefficients) != 4 or any(not 0 <= c < (1 << self.w) for c in coefficients):
            raise UsageError("need four coefficients in GF(2^w)")
        self.coefficients = coefficients
        self._modulus = irreducible_modulus(self.w)

    def __eq__(self, other):
        return isinstance(other, FourWiseSignHash) and (self.w, self.coefficients) == (other.w, other.coefficients)

    def __hash__(self):
        return hash((self.w, self.coefficients))

    def __repr__(self):
        return f"FourWiseSignHash({self.to_hex()!r})"

    def poly(self, x):
        """The polynomial value at ``x`` (Horner's rule)."""
        c0, c1, c2, c3 = self.coefficients
        if isinstance(x, np.ndarray):
            acc = np.full(x.shape, c3, dtype=np.int64)
            for c in (c2, c1, c0):
                acc = _gf2_mul_array(acc, x, self.w, self._modulus) ^ c
            return acc
        acc = c3
        for c in (c2, c1, c0):
            acc = gf2_mul(acc, int(x), self.w, self._modulus) ^ c
        return acc

    def poly_range(self, n):
        """``poly(x)`` for ``x = 0..n-1``, from cached power tables."""
        if n > 1 << self.w:
            raise UsageError(f"{n} points do not fit width {self.w}")
        table = _power_shift_table(self.w, int(n))
        acc = np.full(int(n), self.coefficients[0], dtype=np.int64)
        for k, c in zip((1, 2, 3), self.coefficients[1:]):
            bits = [i for i in range(self.w) if c >> i & 1]
            if bits:
                acc ^= np.bitwise_xor.reduce(table[k][bits], axis=0)
        return acc

    def __call__(self, x):
        """Sign in ``{+1, -1}``; arrays give an int64 array of signs."""
        return 1 - 2 * (self.poly(x) & 1)

    def to_hex(self):
        digits = (self.w + 3) // 4
        return f"w={self.w};c=" + ",".join(f"{c:0{digits}x}" for c in self.coefficients)

    @classmethod
    def from_hex(cls, text):
        try:
            fields = dict(part.split("=", 1) for part in text.strip().split(";"))
            return cls(int(fields["w"]), [int(c, 16) for c in fields["c"].split(",")])
        except (KeyError, ValueError) as exc:
            raise UsageError(f"malformed sign hash {text!r}") from exc


def draw_fourwise_sign(w, rng):
    """A uniformly random :class:`FourWiseSignHash` of width ``w``."""
    w = _check_width(w, low=2)
    return FourWiseSignHash(w, [uniform_below(rng, 1 << w) for _ in range(4)])


def sign_width(n):
    """Field width used to sign-hash the domain ``[n]``: ``max(2, ceil(log2 n))``."""
    return max(2, (int(n) - 1).bit_length())
