"""Distribution functions used to turn test statistics into p-values.

Three CDFs are provided: standard normal, Student t (integer degrees of
freedom) and binomial.  All accept scalars or arrays and are pure.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, ndtr

from .errors import UsageError

_EPS = 1e-16
_TINY = 1e-300
_MAXIT = 20000
# above this many trials the binomial CDF switches to the incomplete beta identity
BINOM_DIRECT_MAX = 10_000


def _scalar_or_array(a, like):
    if np.ndim(like) == 0:
        return float(a)
    return a


def std_normal_cdf(t):
    """Standard normal CDF Phi(t).

    Accepts +/- infinity.  Backed by an erf/erfc evaluation accurate to a
    few ulps over the whole real line, so tail values do not saturate.
    """
    t = np.asarray(t, dtype=float)
    return _scalar_or_array(ndtr(t), t)


def std_normal_sf(t):
    """Upper tail 1 - Phi(t), evaluated as Phi(-t) to avoid cancellation."""
    t = np.asarray(t, dtype=float)
    return _scalar_or_array(ndtr(-t), t)


def _betacf(a, b, x):
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = h * d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < _EPS * 4):
            break
    return h


def betainc_regularized(a, b, x):
    """Regularized incomplete beta function I_x(a, b), vectorized.

    Continued fraction on whichever of x, 1 - x converges quickly, with the
    symmetry I_x(a, b) = 1 - I_{1-x}(b, a) for the other side.
    """
    a, b, x = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(x, dtype=float)
    )
    out = np.empty(x.shape)
    out[x <= 0.0] = 0.0
    out[x >= 1.0] = 1.0
    inner = (x > 0.0) & (x < 1.0)
    if np.any(inner):
        ai, bi, xi = a[inner], b[inner], x[inner]
        with np.errstate(divide="ignore"):
            log_front = (
                gammaln(ai + bi) - gammaln(ai) - gammaln(bi)
                + ai * np.log(xi) + bi * np.log1p(-xi)
            )
        front = np.exp(log_front)
        direct = xi < (ai + 1.0) / (ai + bi + 2.0)
        val = np.empty(xi.shape)
        if np.any(direct):
            val[direct] = front[direct] * _betacf(ai[direct], bi[direct], xi[direct]) / ai[direct]
        flip = ~direct
        if np.any(flip):
            val[flip] = 1.0 - front[flip] * _betacf(bi[flip], ai[flip], 1.0 - xi[flip]) / bi[flip]
        out[inner] = np.clip(val, 0.0, 1.0)
    return out


def _check_df(df):
    df_arr = np.asarray(df, dtype=float)
    if np.any(df_arr < 1) or np.any(~np.isfinite(df_arr)):
        raise UsageError(f"degrees of freedom must be >= 1, got {df!r}", code="invalid-df")
    return df_arr


def student_t_cdf(t, df):
    """CDF of Student's t distribution with ``df`` degrees of freedom.

    Uses P(T <= t) = 1 - I_{df/(df+t^2)}(df/2, 1/2) / 2 for t > 0 and the
    mirror image for t < 0.
    """
    df_arr = _check_df(df)
    t_arr = np.asarray(t, dtype=float)
    tt, dd = np.broadcast_arrays(t_arr, df_arr)
    with np.errstate(over="ignore", invalid="ignore"):
        x = dd / (dd + tt * tt)
    x = np.where(np.isinf(tt), 0.0, x)
    half_tail = 0.5 * betainc_regularized(0.5 * dd, 0.5, x)
    out = np.where(tt > 0, 1.0 - half_tail, half_tail)
    out = np.where(tt == 0, 0.5, out)
    return _scalar_or_array(out, np.broadcast(t_arr, df_arr))


def student_t_sf(t, df):
    """Upper tail P(T > t), computed as the CDF at -t."""
    return student_t_cdf(-np.asarray(t, dtype=float), df)


def _check_p(p):
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise UsageError(f"probability must lie in [0, 1], got {p!r}", code="invalid-p")


def _log_pmf_terms(ks, m, p):
    logc = gammaln(m + 1) - gammaln(ks + 1) - gammaln(m - ks + 1)
    return logc + ks * math.log(p) + (m - ks) * math.log1p(-p)


def _logsumexp(v):
    if v.size == 0:
        return -math.inf
    top = float(np.max(v))
    return top + math.log(float(np.sum(np.exp(v - top))))


def binomial_cdf(y, m: int, p: float) -> float:
    """P(Y <= y) for Y ~ Binomial(m, p).

    Values of ``y`` below 0 give 0 and values at or above ``m`` give 1.
    """
    _check_p(p)
    if m < 1:
        raise UsageError(f"number of trials must be positive, got {m}", code="invalid-m")
    y = math.floor(y)
    if y < 0:
        return 0.0
    if y >= m:
        return 1.0
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    if m > BINOM_DIRECT_MAX:
        return float(betainc_regularized(m - y, y + 1, 1.0 - p))
    # sum whichever tail is shorter in probability mass terms
    mode = (m + 1) * p
    if y < mode:
        return min(1.0, math.exp(_logsumexp(_log_pmf_terms(np.arange(0, y + 1), m, p))))
    upper = math.exp(_logsumexp(_log_pmf_terms(np.arange(y + 1, m + 1), m, p)))
    return max(0.0, 1.0 - upper)


def binomial_sf(y, m: int, p: float) -> float:
    """Strict exceedance P(Y > y), summed directly in the upper tail."""
    _check_p(p)
    if m < 1:
        raise UsageError(f"number of trials must be positive, got {m}", code="invalid-m")
    y = math.floor(y)
    if y < 0:
        return 1.0
    if y >= m:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if m > BINOM_DIRECT_MAX:
        return float(betainc_regularized(y + 1, m - y, p))
    mode = (m + 1) * p
    if y >= mode:
        return min(1.0, math.exp(_logsumexp(_log_pmf_terms(np.arange(y + 1, m + 1), m, p))))
    lower = math.exp(_logsumexp(_log_pmf_terms(np.arange(0, y + 1), m, p)))
    return max(0.0, 1.0 - lower)
