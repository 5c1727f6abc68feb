"""Hard instance families, all exact.

Every constructor returns a :class:`~condlab.dist.DiscreteDistribution` whose
masses sum to exactly one.
"""
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np

from ._random import uniform_below
from .dist import DiscreteDistribution, IndexSet
from .errors import UsageError

MAX_GEOMETRIC_LEVEL = 16


@lru_cache(maxsize=64)
def geometric_hard(n, i):
    """``D_i``: mass ``2^-j`` on ``j < 2^i`` and ``2^-(2^i - 1)`` on ``j = 2^i``.

    The support is ``[2^i]``; ``i = 0`` gives the point mass on 1.
    """
    if not 0 <= i <= MAX_GEOMETRIC_LEVEL:
        raise UsageError(f"level i must lie in [0, {MAX_GEOMETRIC_LEVEL}], got {i}")
    size = 1 << i
    if size > n:
        raise UsageError(f"2^{i} = {size} exceeds the domain size {n}")
    support = np.arange(1, size + 1, dtype=np.int64)
    exps = support.copy()
    exps[-1] = size - 1
    return DiscreteDistribution.from_dyadic(n, support, np.ones(size, dtype=np.int64), exps)


def polya_weights(x):
    """Initial urn weights ``alpha_j = 2^-j`` for the ``K = 2^x`` colours."""
    return [Fraction(1, 1 << j) for j in range(1, (1 << x) + 1)]


def polya_dirichlet(n, x, m, rng):
    """Rational Polya-urn approximation of ``Dirichlet(alpha)`` with ``alpha_j = 2^-j``.

    Colour ``j`` of ``K = 2^x`` colours is drawn at each of ``m`` steps with
    probability ``(alpha_j + X_j) / (sum(alpha) + steps so far)``, where
    ``X_j`` counts earlier draws of ``j``; the result puts mass ``X_j / m``
    on element ``j``.
    """
    K = 1 << x
    if K > n:
        raise UsageError(f"2^{x} colours exceed the domain size {n}")
    if m < 1:
        raise UsageError("the urn needs at least one step")
    # Scale by 2^K so every weight is an integer: alpha_j -> 2^(K - j), one draw -> 2^K.
    unit = 1 << K
    weights = [1 << (K - j) for j in range(1, K + 1)]
    counts = [0] * K
    for _ in range(m):
        r = uniform_below(rng, sum(weights))
        for c, wgt in enumerate(weights):
            if r < wgt:
                break
            r -= wgt
        counts[c] += 1
        weights[c] += unit
    pmf = {j + 1: Fraction(counts[j], m) for j in range(K) if counts[j]}
    return DiscreteDistribution(n, pmf)


def _bits(v):
    if isinstance(v, str):
        if set(v) - {"0", "1"}:
            raise UsageError(f"bit string may only contain 0 and 1: {v!r}")
        return np.array([ch == "1" for ch in v], dtype=bool)
    return np.asarray(v).astype(bool)


def gap_hamming_instance(x_bits, y_bits):
    """``D(j) = ([x_j = 1] + [y_j = 1]) / (|I_x| + |I_y|)``.

    Its support is ``I_x ∪ I_y`` of size ``(|I_x| + |I_y| + d_H(x, y)) / 2``.
    """
    x, y = _bits(x_bits), _bits(y_bits)
    if x.size != y.size:
        raise UsageError("the two bit strings differ in length")
    weights = x.astype(np.int64) + y.astype(np.int64)
    total = int(weights.sum())
    if total == 0:
        raise UsageError("both bit strings are all zero")
    support = np.flatnonzero(weights) + 1
    return DiscreteDistribution.from_weights(x.size, support, weights[weights > 0], total)


def hamming_distance(x_bits, y_bits):
    return int(np.count_nonzero(_bits(x_bits) != _bits(y_bits)))


def l2_lower_instance(n, k, G):
    """Mass ``1/sqrt(n)`` at ``k`` and ``1/n`` on each of the ``n - sqrt(n)`` elements of ``G``."""
    r = math.isqrt(n)
    if r * r != n:
        raise UsageError(f"n = {n} is not a perfect square")
    G = IndexSet(G)
    if k in G:
        raise UsageError(f"k = {k} must not lie in G")
    if len(G) != n - r:
        raise UsageError(f"|G| must be n - sqrt(n) = {n - r}, got {len(G)}")
    if not 1 <= k <= n or G.max > n:
        raise UsageError("k and G must lie in [1, n]")
    pmf = {j: Fraction(1, n) for j in G}
    pmf[k] = Fraction(1, r)
    return DiscreteDistribution(n, pmf)


def bounded_cond_instances(n, variant, indices):
    """The two-point family ``D_i`` or the three-point family ``D_{i,i'}``.

    ``variant="single"``: ``D(1) = 1 - 2/n`` and ``D(i) = 2/n``.
    ``variant="pair"``: ``D(1) = 1 - 2/n`` and ``D(i) = D(i') = 1/n``.
    """
    if n < 4:
        raise UsageError("n must be at least 4")
    indices = tuple(int(i) for i in indices)
    if any(not 2 <= i <= n for i in indices) or len(set(indices)) != len(indices):
        raise UsageError(f"indices must be distinct members of [2, n], got {indices}")
    pmf = {1: 1 - Fraction(2, n)}
    if variant == "single":
        if len(indices) != 1:
            raise UsageError("the single variant takes one index")
        pmf[indices[0]] = Fraction(2, n)
    elif variant == "pair":
        if len(indices) != 2:
            raise UsageError("the pair variant takes two indices")
        for i in indices:
            pmf[i] = Fraction(1, n)
    else:
        raise UsageError(f"unknown variant {variant!r}; use 'single' or 'pair'")
    return DiscreteDistribution(n, pmf)


def intro_perturbed_uniform(n, i, j):
    """Uniform on ``[n]`` with the mass of ``j`` moved onto ``i``."""
    if i == j:
        raise UsageError("i and j must differ")
    if not (1 <= i <= n and 1 <= j <= n):
        raise UsageError("i and j must lie in [1, n]")
    weights = np.ones(n, dtype=np.int64)
    weights[i - 1] = 2
    weights[j - 1] = 0
    return DiscreteDistribution.from_weights(n, np.arange(1, n + 1), weights, n)


def random_uniform_support(n, s, rng):
    """Uniform distribution on a uniformly random ``s``-subset of ``[n]``."""
    if not 1 <= s <= n:
        raise UsageError(f"support size must lie in [1, {n}]")
    support = np.sort(rng.choice(n, size=s, replace=False)) + 1
    return DiscreteDistribution.uniform(n, support)
