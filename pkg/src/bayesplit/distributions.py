"""Random variate helpers shared by the samplers."""

from __future__ import annotations

import math

import numpy as np
from scipy import special

# Rejection is abandoned once the acceptance rate drops below this.
MIN_ACCEPTANCE = 1e-3
_REJECTION_BATCH = 1000


def _trunc_exponential(rng, rate, width):
    # inverse CDF of Exp(rate) truncated to [0, width]
    u = rng.random()
    if rate * width < 1e-12:  # flat over so short a range (includes rate == 0)
        return u * width
    if rate * width > 700:
        return -math.log1p(-u) / rate
    return -math.log1p(-u * (1.0 - math.exp(-rate * width))) / rate


def truncated_beta(rng: np.random.Generator, a: float, b: float, lo: float, hi: float) -> float:
    """Draw from ``Beta(a, b)`` restricted to ``[lo, hi]``.

    Plain rejection while the region holds at least ``MIN_ACCEPTANCE`` of the
    mass, inverse-CDF sampling below that.  When the region's mass underflows
    double precision the density is log-concave and extremely steep at the
    nearer boundary, so an exponential tail approximation is used there.
    """
    lo, hi = max(0.0, float(lo)), min(1.0, float(hi))
    if hi <= lo:
        return lo
    if lo == 0.0 and hi == 1.0:
        return float(rng.beta(a, b))
    median = a / (a + b)
    if lo >= median:
        # upper tail: work with survival functions
        s_lo, s_hi = special.betaincc(a, b, lo), special.betaincc(a, b, hi)
        mass = s_lo - s_hi
    else:
        c_lo, c_hi = special.betainc(a, b, lo), special.betainc(a, b, hi)
        mass = c_hi - c_lo
    if mass >= MIN_ACCEPTANCE:
        while True:
            x = rng.beta(a, b, size=min(_REJECTION_BATCH, int(4 / mass) + 1))
            ok = x[(x >= lo) & (x <= hi)]
            if ok.size:
                return float(ok[0])
    if mass > 0:
        u = rng.random()
        if lo >= median:
            x = special.betainccinv(a, b, s_hi + u * (s_lo - s_hi))
        else:
            x = special.betaincinv(a, b, c_lo + u * (c_hi - c_lo))
        if np.isfinite(x):
            return float(min(max(x, lo), hi))
    def logpdf(x):
        return special.xlogy(a - 1, x) + special.xlog1py(b - 1, -x)

    def dlogpdf(x):
        return (a - 1) / x - (b - 1) / (1 - x)

    if logpdf(hi) >= logpdf(lo):
        rate = dlogpdf(hi) if 0 < hi < 1 else np.inf
        if not np.isfinite(rate) or rate <= 0:
            return hi
        return hi - _trunc_exponential(rng, rate, hi - lo)
    rate = -dlogpdf(lo) if 0 < lo < 1 else np.inf
    if not np.isfinite(rate) or rate <= 0:
        return lo
    return lo + _trunc_exponential(rng, rate, hi - lo)


def truncated_beta_pair(rng, pa, pb, t: float, side: int, current=None) -> tuple[float, float]:
    """Draw ``(x, y)``, ``x ~ Beta(*pa)``, ``y ~ Beta(*pb)`` independently,
    restricted to ``x - y >= t`` (side 1) or ``0 <= x - y < t`` (side 0).

    Rejection from the product of Betas; if none of ``_REJECTION_BATCH``
    proposals is accepted, one sweep of coordinate-wise truncated draws is
    made from ``current`` instead (a valid Gibbs move on the same target).
    """

    def ok(x, y):
        d = x - y
        return (d >= t) if side == 1 else ((d >= 0) & (d < t))

    for size in (32, _REJECTION_BATCH):
        x = rng.beta(pa[0], pa[1], size=size)
        y = rng.beta(pb[0], pb[1], size=size)
        hit = np.flatnonzero(ok(x, y))
        if hit.size:
            return float(x[hit[0]]), float(y[hit[0]])

    if current is None or not bool(ok(np.float64(current[0]), np.float64(current[1]))):
        current = (min(1.0, t + 0.5 * (1 - t)), 0.5 * (1 - t) * 0.5) if side == 1 else (0.5, 0.5)
    x, y = current
    if side == 1:
        x = truncated_beta(rng, pa[0], pa[1], y + t, 1.0)
        y = truncated_beta(rng, pb[0], pb[1], 0.0, x - t)
    else:
        x = truncated_beta(rng, pa[0], pa[1], y, min(1.0, y + t))
        y = truncated_beta(rng, pb[0], pb[1], max(0.0, x - t), x)
        if x - y >= t:  # closed endpoint hit through rounding
            y = np.nextafter(x - t, 1.0)
    return float(x), float(y)


def sample_dirichlet(rng, alpha) -> np.ndarray:
    """Dirichlet draw that tolerates tiny concentration parameters."""
    g = rng.gamma(np.asarray(alpha, dtype=float))
    s = g.sum()
    if not s > 0:
        out = np.zeros(len(g))
        out[int(rng.integers(len(g)))] = 1.0
        return out
    return g / s


def scaled_inv_chi2(rng, scale: float, df: float) -> float:
    """Draw ``scale / X``, ``X ~ chi^2_df``."""
    return float(scale / rng.chisquare(df))


def logsumexp_mean(logx) -> float:
    """``log(mean(exp(logx)))`` evaluated stably."""
    logx = np.asarray(logx, dtype=float)
    if logx.size == 0:
        raise ValueError("empty input")
    m = np.max(logx)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.mean(np.exp(logx - m))))


def truncated_normal(rng, loc: float, sd: float, lo: float, hi: float) -> float:
    """Inverse-CDF draw from ``N(loc, sd^2)`` restricted to ``[lo, hi]``.

    The tail on the far side of the mean is handled through the reflected
    variable so the CDF differences keep their precision; beyond the range of
    double precision the exponential limit of the Gaussian tail is used.
    """
    a, b = (lo - loc) / sd, (hi - loc) / sd
    if b <= a:
        return float(lo)
    flip = a > 0
    if flip:  # reflect so the interval sits in the lower tail
        a, b = -b, -a
    pa, pb = special.ndtr(a), special.ndtr(b)
    if pb - pa > 1e-300 and pb > 1e-300:
        x = special.ndtri(pa + rng.random() * (pb - pa))
        x = min(max(x, a), b)
    else:
        # far lower tail: density ~ exp(b * (x - b)) for x <= b, b << 0
        rate = -b
        x = b - _trunc_exponential(rng, rate, b - a)
    if flip:
        x = -x
    # the affine map back can round one ulp past an endpoint
    return float(min(max(loc + sd * x, lo), hi))
