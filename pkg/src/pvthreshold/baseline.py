"""Threshold estimation when the baseline level is unknown.

Method 1 estimates the baseline first, as the level at which the p-values
are centred at 1/2 on average, and then fits the (1/2, 0) stump to the
plug-in p-values.  Method 2 skips the first step: each dose is tested
against the running mean of all responses at or below it.

The min/max region procedure runs a restricted Method 1 search for the
lowest plateau, fits a baseline interval there, and repeats the whole
thing on sign-flipped responses for the highest plateau.

Functions ending in ``_core`` work on stacked replicate arrays
``means``/``ss`` of shape ``(B, n)`` for the Monte Carlo harness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._optimize import golden_section
from .errors import DataError, NumericError, UsageError
from .fitters import (
    IntervalFit,
    fit_baseline_interval,
    fit_sigmoid,
    fit_stump_adaptive,
    fit_stump_fixed,
    split_value,
    stump_fixed_core,
)
from .pvalues import (
    DoseResponseData,
    PValueSeries,
    VarianceModel,
    _clamp,
    noise_scale,
    pvalues_for,
    z_values,
)

# bound on B * grid_chunk * n doubles held at once while tabulating the tau criterion
_CHUNK_ELEMS = 2_000_000


@dataclass(frozen=True)
class TauSearch:
    """Where to look for the baseline level.

    ``lo``/``hi`` default to the smallest and largest dose mean.  The
    criterion is tabulated on ``grid_size`` equispaced points and, when
    ``refine`` is set, polished by golden section on the cell around the
    best grid point.
    """

    lo: float | None = None
    hi: float | None = None
    grid_size: int = 2001
    refine: bool = True

    def __post_init__(self):
        if self.grid_size < 2:
            raise UsageError("tau grid needs at least 2 points", code="invalid-grid")
        if self.lo is not None and self.hi is not None and not self.lo < self.hi:
            raise UsageError(f"empty tau range [{self.lo}, {self.hi}]", code="empty-range")

    def bounds(self, means):
        """Search range per row of ``means`` (shape ``(..., n)``)."""
        means = np.asarray(means, dtype=float)
        lo = means.min(axis=-1) if self.lo is None else np.full(means.shape[:-1], float(self.lo))
        hi = means.max(axis=-1) if self.hi is None else np.full(means.shape[:-1], float(self.hi))
        if np.any(lo > hi):
            raise UsageError("tau range lies above the data range", code="empty-range")
        return lo, hi

    def negated(self) -> "TauSearch":
        lo = None if self.hi is None else -self.hi
        hi = None if self.lo is None else -self.lo
        return TauSearch(lo, hi, self.grid_size, self.refine)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "grid_size": self.grid_size, "refine": self.refine}


@dataclass(frozen=True)
class ThresholdEstimate:
    d_hat: float
    tau_hat: float | None
    method: str
    variance: str
    criterion: float
    tau_range: tuple | None = None
    fit: object = None
    pvalues: PValueSeries | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "d_hat": self.d_hat,
            "tau_hat": self.tau_hat,
            "method": self.method,
            "variance": self.variance,
            "criterion": self.criterion,
        }
        if self.tau_range is not None:
            out["tau_range"] = list(self.tau_range)
        return out


@dataclass(frozen=True)
class RegionFit:
    """Baseline interval for one extreme plateau and its fitted level."""

    interval: IntervalFit
    level: float
    tau_range: tuple
    pvalues: PValueSeries | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "a_hat": self.interval.a_hat,
            "b_hat": self.interval.b_hat,
            "level": self.level,
            "sse": self.interval.sse,
            "tau_range": list(self.tau_range),
        }


@dataclass(frozen=True)
class MinMaxRegions:
    min: RegionFit
    max: RegionFit

    def to_dict(self) -> dict:
        return {"min": self.min.to_dict(), "max": self.max.to_dict()}


# ---------------------------------------------------------------------------
# batched cores


def tau_criterion(tau, means, counts, scale, df=None):
    """sum_i (Z_i(tau) - 1/2)^2 for trial levels ``tau`` of shape ``(B, k)``."""
    counts = np.asarray(counts)
    if counts.ndim == 2:
        counts = counts[:, None, :]
    if df is not None and np.ndim(df) == 2:
        df = np.asarray(df)[:, None, :]
    z = z_values(means[:, None, :], tau[..., None], counts, scale[:, None, :], df)
    return np.sum((z - 0.5) ** 2, axis=-1)


def tau_method1_core(means, counts, scale, df, lo, hi, grid_size=2001, refine=True):
    """Method 1 baseline estimate for each row; returns ``(tau_hat, criterion)``."""
    means = np.atleast_2d(means)
    B, n = means.shape
    scale = np.broadcast_to(scale, means.shape)
    frac = np.linspace(0.0, 1.0, grid_size)
    width = hi - lo
    chunk = max(1, _CHUNK_ELEMS // max(1, B * n))
    crit = np.empty((B, grid_size))
    for s in range(0, grid_size, chunk):
        taus = lo[:, None] + width[:, None] * frac[None, s:s + chunk]
        crit[:, s:s + chunk] = tau_criterion(taus, means, counts, scale, df)
    j = np.argmin(crit, axis=-1)
    rows = np.arange(B)
    tau = lo + width * frac[j]
    best = crit[rows, j]
    if refine and grid_size > 2 and np.any(width > 0):
        a = lo + width * frac[np.maximum(j - 1, 0)]
        b = lo + width * frac[np.minimum(j + 1, grid_size - 1)]
        tol = 1e-12 * max(1.0, float(np.max(np.abs(np.concatenate([lo, hi])))))
        t_ref, c_ref = golden_section(
            lambda t: tau_criterion(t[:, None], means, counts, scale, df)[:, 0], a, b, tol=tol
        )
        take = c_ref < best
        tau = np.where(take, t_ref, tau)
        best = np.where(take, c_ref, best)
    return tau, best


def running_mean_core(means, counts):
    """Mean of every response at doses up to each dose; shape of ``means``."""
    counts = np.asarray(counts, dtype=float)
    return np.cumsum(means * counts, axis=-1) / np.cumsum(counts, axis=-1)


def method1_core(x, means, ss, counts, variance: VarianceModel, search: TauSearch):
    """Method 1 on stacked replicates; returns ``(d_hat, tau_hat, sse, ok)``.

    Rows whose variance estimate is zero are marked ``ok = False``.
    """
    scale, df = noise_scale(variance, ss, counts)
    ok = np.all(scale > 0, axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    lo, hi = search.bounds(means)
    tau, _ = tau_method1_core(means, counts, safe, df, lo, hi, search.grid_size, search.refine)
    z = _clamp(z_values(means, tau[:, None], counts, safe, df))
    k, sse = stump_fixed_core(z, 0.5, 0.0, allow_empty_left=np.asarray(x)[..., 0] > 0)
    return split_value(x, k), tau, sse, ok


def method2_core(x, means, ss, counts, variance: VarianceModel):
    """Method 2 on stacked replicates; returns ``(d_hat, tau_hat, sse, ok)``."""
    scale, df = noise_scale(variance, ss, counts)
    ok = np.all(scale > 0, axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    xi = running_mean_core(means, counts)
    z = _clamp(z_values(means, xi, counts, safe, df))
    k, sse = stump_fixed_core(z, 0.5, 0.0, allow_empty_left=np.asarray(x)[..., 0] > 0)
    # d_hat = 0 has no dose at or below it; the first dose's running mean stands in
    tau = np.take_along_axis(xi, np.maximum(k - 1, 0)[:, None], axis=-1)[:, 0]
    return split_value(x, k), tau, sse, ok


def known_tau_core(x, means, ss, counts, tau0, variance: VarianceModel, left=0.5, right=0.0):
    """Fixed-level stump at a known baseline; returns ``(d_hat, sse, ok)``."""
    scale, df = noise_scale(variance, ss, counts)
    ok = np.all(scale > 0, axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    z = _clamp(z_values(means, tau0, counts, safe, df))
    k, sse = stump_fixed_core(z, left, right, allow_empty_left=np.asarray(x)[..., 0] > 0)
    return split_value(x, k), sse, ok


# ---------------------------------------------------------------------------
# single-dataset API


def _stats(data: DoseResponseData, variance: VarianceModel):
    if not isinstance(data, DoseResponseData):
        raise DataError("expected DoseResponseData", code="empty-data")
    counts = data.counts
    scale, df = noise_scale(variance, data.sum_squares(), counts)
    if np.any(~(scale > 0)):
        raise NumericError(
            "estimated standard deviation is zero (identical replicates)", code="degenerate-variance"
        )
    return data.means[None, :], counts, scale[None, :], df


def estimate_tau_method1(data: DoseResponseData, variance: VarianceModel, search: TauSearch | None = None) -> float:
    """Baseline level minimizing sum_i (Z_i(tau) - 1/2)^2 over the search range."""
    tau, _ = _tau_method1(data, variance, search or TauSearch())
    return tau


def _tau_method1(data, variance, search):
    means, counts, scale, df = _stats(data, variance)
    lo, hi = search.bounds(means)
    tau, crit = tau_method1_core(means, counts, scale, df, lo, hi, search.grid_size, search.refine)
    return float(tau[0]), (float(lo[0]), float(hi[0]))


def estimate_method1(data: DoseResponseData, variance: VarianceModel, search: TauSearch | None = None) -> ThresholdEstimate:
    """Estimate the baseline by Method 1, then fit the (1/2, 0) stump to the plug-in p-values."""
    search = search or TauSearch()
    tau, rng = _tau_method1(data, variance, search)
    series = pvalues_for(data, tau, variance, method=variance.tag)
    fit = fit_stump_fixed(series, 0.5, 0.0)
    return ThresholdEstimate(fit.d_hat, tau, "method1", variance.tag, fit.sse, rng, fit, series)


def running_mean(data: DoseResponseData) -> list:
    """``(x_k, xi_k)`` pairs: xi_k is the mean of all responses at doses <= x_k."""
    if not isinstance(data, DoseResponseData):
        raise DataError("expected DoseResponseData", code="empty-data")
    xi = running_mean_core(data.means, data.counts)
    return list(zip(data.x.tolist(), xi.tolist()))


def running_mean_at(data: DoseResponseData, d: float) -> float:
    """Running mean at ``d``; below the first dose the first dose's value is used."""
    xi = running_mean_core(data.means, data.counts)
    k = int(np.searchsorted(data.x, d, side="right"))
    return float(xi[max(k - 1, 0)])


def estimate_method2(data: DoseResponseData, variance: VarianceModel) -> ThresholdEstimate:
    """Test each dose against the running mean below it, fit the (1/2, 0) stump.

    Heuristic when the regression function is not nondecreasing.
    """
    _stats(data, variance)
    xi = running_mean_core(data.means, data.counts)
    series = pvalues_for(data, xi, variance, method=variance.tag)
    fit = fit_stump_fixed(series, 0.5, 0.0)
    tau = running_mean_at(data, fit.d_hat)
    return ThresholdEstimate(fit.d_hat, tau, "method2", variance.tag, fit.sse, None, fit, series)


def estimate_known_tau(data: DoseResponseData, tau0: float, variance: VarianceModel, fitter: str = "stump") -> ThresholdEstimate:
    """Threshold at a known baseline with the chosen working model.

    ``fitter`` is ``stump`` (levels 1/2 and 0), ``stump3`` (adaptive
    levels) or ``sigmoid``.
    """
    series = pvalues_for(data, tau0, variance)
    if fitter == "stump":
        fit = fit_stump_fixed(series, 0.5, 0.0)
    elif fitter == "stump3":
        fit = fit_stump_adaptive(series)
    elif fitter == "sigmoid":
        fit = fit_sigmoid(series)
    else:
        raise UsageError(f"unknown fitter {fitter!r}", code="invalid-fitter")
    return ThresholdEstimate(fit.d_hat, float(tau0), "known-tau", variance.tag, fit.sse, None, fit, series)


def estimate_composite(data: DoseResponseData, zeta0: float, variance: VarianceModel) -> ThresholdEstimate:
    """Where the regression function crosses the level ``zeta0``: stump with levels (1, 0)."""
    series = pvalues_for(data, zeta0, variance, method="composite")
    fit = fit_stump_fixed(series, 1.0, 0.0)
    return ThresholdEstimate(fit.d_hat, float(zeta0), "composite", variance.tag, fit.sse, None, fit, series)


def estimate_interval(data: DoseResponseData, variance: VarianceModel, tau0: float | None = None,
                      search: TauSearch | None = None) -> RegionFit:
    """Baseline interval at ``tau0``, or at the Method 1 level when ``tau0`` is None."""
    if tau0 is None:
        tau0, rng = _tau_method1(data, variance, search or TauSearch())
    else:
        rng = (float(tau0), float(tau0))
    series = pvalues_for(data, tau0, variance)
    return RegionFit(fit_baseline_interval(series, 0.5, 0.0), float(tau0), rng, series)


def _default_ranges(data: DoseResponseData, min_search, max_search):
    means = data.means
    mid = 0.5 * (means.min() + means.max())
    if min_search is None:
        min_search = TauSearch(None, mid) if mid > means.min() else TauSearch()
    if max_search is None:
        max_search = TauSearch(mid, None) if mid < means.max() else TauSearch()
    return min_search, max_search


def estimate_minmax_regions(data: DoseResponseData, variance: VarianceModel,
                            min_search: TauSearch | None = None,
                            max_search: TauSearch | None = None) -> MinMaxRegions:
    """Intervals where the regression function sits at its minimum and at its maximum.

    The max side is the min side applied to negated responses with the
    negated search range, and its level is negated back.  Unset ranges
    split the span of dose means at its midpoint.
    """
    min_search, max_search = _default_ranges(data, min_search, max_search)
    lo_min, hi_min = (float(v[0]) for v in min_search.bounds(data.means[None, :]))
    lo_max, hi_max = (float(v[0]) for v in max_search.bounds(data.means[None, :]))
    if hi_min > lo_max:
        raise UsageError(
            f"min range [{lo_min}, {hi_min}] overlaps max range [{lo_max}, {hi_max}]",
            code="overlapping-ranges",
        )
    low = estimate_interval(data, variance, None, min_search)
    flipped = estimate_interval(data.negated(), variance, None, max_search.negated())
    high = RegionFit(flipped.interval, -flipped.level, (-flipped.tau_range[1], -flipped.tau_range[0]), flipped.pvalues)
    return MinMaxRegions(low, high)
