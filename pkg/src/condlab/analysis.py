"""Numerical checks of the special-function facts used against Dirichlet instances.

Own implementations of ``digamma`` and ``lgamma`` (recurrence lift plus
asymptotic series) back the closed-form KL divergence between Beta laws.
Dirichlet draws are generated in log space so that parameters as small as
``2^-256`` still produce usable samples.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy import stats

from ._random import as_rng
from .errors import DomainError, UsageError

_LIFT = 8.0
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
# Bernoulli-number coefficients B_2k / (2k) of the digamma series and
# B_2k / (2k (2k - 1)) of the Stirling series.
_PSI_COEF = (1 / 12, -1 / 120, 1 / 252, -1 / 240, 1 / 132, -691 / 32760, 1 / 12)
_LG_COEF = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156)


def digamma(w):
    """``psi(w)`` for ``w > 0``, accurate to about 1e-13 relative."""
    w = float(w)
    if not w > 0 or math.isinf(w):
        raise DomainError(f"digamma needs a positive finite argument, got {w}")
    shift = 0.0
    while w < _LIFT:            # psi(w) = psi(w + 1) - 1/w
        shift -= 1.0 / w
        w += 1.0
    inv2 = 1.0 / (w * w)
    series = 0.0
    p = inv2
    for c in _PSI_COEF:
        series += c * p
        p *= inv2
    return shift + math.log(w) - 0.5 / w - series


def lgamma(w):
    """``ln Gamma(w)`` for ``w > 0`` (Stirling series after lifting to ``w >= 8``)."""
    w = float(w)
    if not w > 0 or math.isinf(w):
        raise DomainError(f"lgamma needs a positive finite argument, got {w}")
    shift = 0.0
    while w < _LIFT:            # Gamma(w) = Gamma(w + 1) / w
        shift -= math.log(w)
        w += 1.0
    inv = 1.0 / w
    inv2 = inv * inv
    series = 0.0
    p = inv
    for c in _LG_COEF:
        series += c * p
        p *= inv2
    return shift + (w - 0.5) * math.log(w) - w + _HALF_LOG_2PI + series


def log_beta(a, b):
    return lgamma(a) + lgamma(b) - lgamma(a + b)


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"Beta parameters must be positive, got ({self.a}, {self.b})")

    @property
    def mean(self):
        return self.a / (self.a + self.b)

    @property
    def variance(self):
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1))


def kl_beta(p, q):
    """``KL(Beta(p.a, p.b) || Beta(q.a, q.b))`` in nats, from the closed form."""
    a, b = p.a, p.b
    a2, b2 = q.a, q.b
    return (log_beta(a2, b2) - log_beta(a, b)
            + (a - a2) * digamma(a) + (b - b2) * digamma(b)
            + (a2 - a + b2 - b) * digamma(a + b))


def check_digamma_bound(points=10_000):
    """``max |w psi(w)|`` over the grid ``w = k / points``, ``k = 1..points``."""
    return max(abs(k / points * digamma(k / points)) for k in range(1, points + 1))


def geometric_alphas(K):
    """``alpha_j = 2^-j`` for ``j = 1..K``."""
    return [2.0 ** -j for j in range(1, K + 1)]


@dataclass
class KLScan:
    max_kl: float
    configurations: int
    worst: tuple               # ((aC, aU), (aC', aU'))


def _random_config(x, x2, rng):
    """Disjoint nonempty ``C, U`` inside ``[2^x]``, grown by elements of ``(2^x, 2^x2]``."""
    size = 1 << x
    while True:
        lab = rng.integers(0, 3, size=size)        # 0: C, 1: U, 2: neither
        if (lab == 0).any() and (lab == 1).any():
            break
    ext = rng.integers(0, 3, size=(1 << x2) - size)
    return lab, ext


def kl_bound_scan(trials, rng=None, max_level=8):
    """Largest Beta KL, in both directions, over random laminar configurations.

    For levels ``1 <= x <= x2 <= max_level`` the pair is
    ``Beta(alpha(C), alpha(U))`` against ``Beta(alpha(C'), alpha(U'))`` with
    ``C ⊆ C'``, ``U ⊆ U'``, where the extension only adds elements beyond
    ``2^x`` and ``alpha_j = 2^-j``.
    """
    if max_level < 1 or max_level > 9:
        raise UsageError("max_level must lie in [1, 9]")
    rng = as_rng(rng)
    alphas = np.array(geometric_alphas(1 << max_level))
    best = -math.inf
    worst = None
    for _ in range(trials):
        x = int(rng.integers(1, max_level + 1))
        x2 = int(rng.integers(x, max_level + 1))
        lab, ext = _random_config(x, x2, rng)
        size = 1 << x
        aC = float(alphas[:size][lab == 0].sum())
        aU = float(alphas[:size][lab == 1].sum())
        tail = alphas[size:1 << x2]
        aC2 = aC + float(tail[ext == 0].sum())
        aU2 = aU + float(tail[ext == 1].sum())
        p, q = BetaParams(aC, aU), BetaParams(aC2, aU2)
        for kl in (kl_beta(p, q), kl_beta(q, p)):
            if kl > best:
                best, worst = kl, ((aC, aU), (aC2, aU2))
    return KLScan(best, trials, worst)


def _log_gamma_variates(alphas, rng, size):
    """``log G`` with ``G ~ Gamma(alpha)``, via ``G = Gamma(alpha + 1) * U^(1/alpha)``."""
    alphas = np.asarray(alphas, dtype=float)
    g = rng.gamma(alphas + 1.0, size=(size, alphas.size))
    u = rng.random(size=(size, alphas.size))
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    return np.log(g) + np.log(u) / alphas


def dirichlet_sample(alphas, rng=None, size=None):
    """Draw(s) from ``Dirichlet(alphas)``; rows sum to one up to rounding."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.ndim != 1 or alphas.size < 1 or not (alphas > 0).all():
        raise DomainError("Dirichlet parameters must be a nonempty vector of positive numbers")
    rng = as_rng(rng)
    k = 1 if size is None else int(size)
    logs = _log_gamma_variates(alphas, rng, k)
    logs -= logs.max(axis=1, keepdims=True)
    w = np.exp(logs)
    out = w / w.sum(axis=1, keepdims=True)
    return out[0] if size is None else out


@dataclass
class BetaTail:
    tail: float                # empirical Pr[Y <= 1 - delta]
    bound: float               # 4 Var / delta^2
    mc_sigma: float
    mean: float
    mean_se: float
    exact_mean: float

    @property
    def passed(self):
        return self.tail <= self.bound + 3 * self.mc_sigma

    @property
    def mean_ok(self):
        return abs(self.mean - self.exact_mean) <= 3 * self.mean_se


def beta_tail_check(a, b, c, delta, samples, rng=None):
    """Monte Carlo ``Pr[Y <= 1 - delta]`` for ``Y ~ Beta(a, b)`` against Chebyshev.

    Requires ``b <= a / c``.  ``1 - Y`` is computed in log space, so tiny ``b``
    does not round the tail away.
    """
    if not b <= a / c:
        raise UsageError(f"need b <= a/c, got b={b}, a/c={a / c}")
    if not 0 < delta < 1:
        raise UsageError("delta must lie in (0, 1)")
    rng = as_rng(rng)
    logs = _log_gamma_variates([a, b], rng, int(samples))
    la, lb = logs[:, 0], logs[:, 1]
    top = np.maximum(la, lb)
    log_total = top + np.log(np.exp(la - top) + np.exp(lb - top))
    one_minus_y = np.exp(lb - log_total)
    y = np.exp(la - log_total)
    hits = one_minus_y >= delta
    tail = float(hits.mean())
    params = BetaParams(a, b)
    return BetaTail(
        tail=tail,
        bound=4 * params.variance / delta ** 2,
        mc_sigma=math.sqrt(max(tail * (1 - tail), 1.0 / samples) / samples),
        mean=float(y.mean()),
        mean_se=float(y.std(ddof=1) / math.sqrt(samples)) if samples > 1 else math.inf,
        exact_mean=params.mean,
    )


@dataclass
class IndependenceCheck:
    statistic: float
    p_value: float
    in_bucket: int
    beta: BetaParams
    inconclusive: bool = False

    def passed(self, significance=0.01):
        return not self.inconclusive and self.p_value >= significance


def independence_property_check(alphas, A, B, d_bucket, samples, rng=None, min_in_bucket=50):
    """KS test of ``sum_B P / sum_A P`` against ``Beta(alpha(B), alpha(A \\ B))``.

    Draws are kept when ``sum_A P`` falls in the bucket ``d_bucket = (d, half_width)``
    (a bare ``d`` uses half width 0.02).  ``A`` and ``B`` hold 1-based coordinates,
    ``B`` a nonempty strict subset of ``A``.
    """
    alphas = np.asarray(alphas, dtype=float)
    A = sorted(set(int(i) for i in A))
    B = sorted(set(int(i) for i in B))
    if not B or not set(B) < set(A) or A[0] < 1 or A[-1] > alphas.size:
        raise UsageError("need a nonempty B strictly inside A, both within [1, K]")
    d, half = d_bucket if isinstance(d_bucket, tuple) else (d_bucket, 0.02)
    rng = as_rng(rng)
    ia = np.array(A) - 1
    ib = np.array(B) - 1
    logs = _log_gamma_variates(alphas, rng, int(samples))
    top = logs.max(axis=1, keepdims=True)
    w = np.exp(logs - top)
    total = w.sum(axis=1)
    sa = w[:, ia].sum(axis=1)
    sb = w[:, ib].sum(axis=1)
    keep = np.abs(sa / total - d) <= half
    ratio = sb[keep] / sa[keep]
    rest = [i for i in A if i not in set(B)]
    beta = BetaParams(float(alphas[ib].sum()), float(alphas[np.array(rest) - 1].sum()))
    if ratio.size < min_in_bucket:
        return IndependenceCheck(math.nan, math.nan, int(ratio.size), beta, inconclusive=True)
    res = stats.kstest(ratio, stats.beta(beta.a, beta.b).cdf)
    return IndependenceCheck(float(res.statistic), float(res.pvalue), int(ratio.size), beta)
