"""Least-squares working models fitted to a p-value series.

All fitters search a finite candidate set for the split location: the
criterion of a stump only changes when the split crosses an observed
covariate, so ``{0} U {x_1, ..., x_n}`` is exhaustive.  Ties go to the
smallest candidate.

The ``*_core`` functions operate on stacked series ``z`` of shape
``(B, n)`` and return candidate indices; they are what the Monte Carlo
harness calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._optimize import golden_section
from .errors import DataError
from .pvalues import PValueSeries

ALPHA_GRID = np.array([0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0])
ALPHA_CAP = 1e6
SIGMOID_STARTS = 4
_CELL_POINTS = 4


@dataclass(frozen=True)
class StumpFit:
    d_hat: float
    alpha_level: float
    beta_level: float
    sse: float
    candidate_index: int
    # "left" or "right" when that side of the split is empty
    unidentified: str | None = None


@dataclass(frozen=True)
class SigmoidFit:
    d_hat: float
    steepness: float
    sse: float


@dataclass(frozen=True)
class IntervalFit:
    a_hat: float | None
    b_hat: float | None
    sse: float
    inner_level: float = 0.5
    outer_level: float = 0.0

    @property
    def empty(self) -> bool:
        return self.a_hat is None


def _check(series: PValueSeries, min_len: int = 1):
    if not isinstance(series, PValueSeries) or len(series) < min_len:
        raise DataError("empty p-value series", code="empty-series")


def candidate_splits(x) -> np.ndarray:
    """Split candidates ``{0} U x`` along the last axis."""
    x = np.asarray(x, dtype=float)
    zero = np.zeros(x.shape[:-1] + (1,))
    return np.concatenate([zero, x], axis=-1)


def _left_masks(n: int) -> np.ndarray:
    # row k marks the k points left of (or at) the split
    return np.arange(n)[None, :] < np.arange(n + 1)[:, None]


def stump_sse_table(z, left_level, right_level) -> np.ndarray:
    """Criterion at every candidate: shape ``(..., n+1)``, index k = points on the left."""
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    rl = (z - left_level) ** 2
    rr = (z - right_level) ** 2
    mask = _left_masks(n)
    return np.where(mask, rl[..., None, :], rr[..., None, :]).sum(axis=-1)


def _argmin_first(table, allow_empty_left):
    table = np.array(table, dtype=float, copy=True)
    allow = np.broadcast_to(np.asarray(allow_empty_left), table.shape[:-1])
    table[..., 0] = np.where(allow, table[..., 0], np.inf)
    k = np.argmin(table, axis=-1)
    return k, np.take_along_axis(table, k[..., None], axis=-1)[..., 0]


def stump_fixed_core(z, left_level=0.5, right_level=0.0, allow_empty_left=True):
    """Best split index and criterion for each stacked series."""
    return _argmin_first(stump_sse_table(z, left_level, right_level), allow_empty_left)


def split_value(x, k):
    """Candidate value for split index ``k`` (0 means "everything on the right").

    ``x`` is ``(n,)`` or ``(B, n)``; ``k`` has shape ``(B,)``.
    """
    k = np.asarray(k)
    cand = np.broadcast_to(candidate_splits(x), k.shape + (np.shape(x)[-1] + 1,))
    return np.take_along_axis(cand, k[..., None], axis=-1)[..., 0]


def fit_stump_fixed(series: PValueSeries, left_level: float = 0.5, right_level: float = 0.0) -> StumpFit:
    """Stump with given levels: minimize
    sum_{x_i <= d} (z_i - left)^2 + sum_{x_i > d} (z_i - right)^2.

    ``d_hat = 0`` means every point sits right of the split.  When the
    smallest covariate is 0 itself that configuration is unreachable and
    is skipped.
    """
    _check(series)
    if not (0 <= left_level <= 1 and 0 <= right_level <= 1):
        raise DataError("stump levels must lie in [0, 1]", code="invalid-level")
    x, z = series.x, series.z
    k, sse = stump_fixed_core(z, left_level, right_level, allow_empty_left=x[0] > 0)
    k = int(k)
    d_hat = 0.0 if k == 0 else float(x[k - 1])
    side = "left" if k == 0 else ("right" if k == len(x) else None)
    return StumpFit(d_hat, float(left_level), float(right_level), float(sse), k, side)


def adaptive_sse_table(z):
    """Criterion with per-side mean levels at each candidate, plus the levels."""
    z = np.asarray(z, dtype=float)
    n = z.shape[-1]
    csum = np.concatenate([np.zeros(z.shape[:-1] + (1,)), np.cumsum(z, axis=-1)], axis=-1)
    total = csum[..., -1:]
    k = np.arange(n + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        left_mean = np.where(k > 0, csum / np.maximum(k, 1), np.nan)
        right_mean = np.where(k < n, (total - csum) / np.maximum(n - k, 1), np.nan)
    mask = _left_masks(n)
    level = np.where(mask, left_mean[..., :, None], right_mean[..., :, None])
    table = ((z[..., None, :] - level) ** 2).sum(axis=-1)
    return table, left_mean, right_mean


def fit_stump_adaptive(series: PValueSeries) -> StumpFit:
    """Stump whose two levels are fitted together with the split.

    For a fixed split the optimal levels are the per-side means.  An empty
    side has no data to identify its level; it is reported as the mean of
    all points and flagged in ``unidentified``.
    """
    _check(series)
    x, z = series.x, series.z
    table, lm, rm = adaptive_sse_table(z)
    k, sse = _argmin_first(table, x[0] > 0)
    k = int(k)
    overall = float(z.mean())
    alpha = overall if k == 0 else float(lm[k])
    beta = overall if k == len(x) else float(rm[k])
    side = "left" if k == 0 else ("right" if k == len(x) else None)
    d_hat = 0.0 if k == 0 else float(x[k - 1])
    return StumpFit(d_hat, alpha, beta, float(sse), k, side)


# ---------------------------------------------------------------------------
# sigmoid working model


def sigmoid_curve(x, d, alpha):
    """1/2 up to ``d``, then a logistic decay e^{-a(x-d)} / (1 + e^{-a(x-d)})."""
    u = np.maximum(np.asarray(x, dtype=float) - d, 0.0)
    return 0.5 - 0.5 * np.tanh((0.5 * alpha) * u)


def sigmoid_criterion(x, z, d, alpha):
    """Mean squared residual of the sigmoid fit; broadcasts over leading axes."""
    return np.mean((z - sigmoid_curve(x, d, alpha)) ** 2, axis=-1)


def _u(alpha):
    return np.log1p(alpha)


def _alpha(u):
    return np.minimum(np.expm1(u), ALPHA_CAP)


# finer steepness ladder used inside the search; the coarse grid is a subset
ALPHA_SEARCH = np.unique(np.concatenate([ALPHA_GRID, np.geomspace(0.05, ALPHA_CAP, 43)]))
_U_SEARCH = _u(ALPHA_SEARCH)
_U_LO = np.concatenate([[0.0], _U_SEARCH[:-1]])
_U_HI = np.concatenate([_U_SEARCH[1:], [_U_SEARCH[-1]]])
_COARSE_IDX = np.searchsorted(ALPHA_SEARCH, ALPHA_GRID)


def _profile_alpha(x, z, d, j=None, g0=None, tol=1e-9):
    """Best steepness for each row at split ``d``: ladder, then golden in log1p(alpha).

    Pass the ladder argmin ``j`` and its value ``g0`` when already known.
    """
    if j is None:
        R = z.shape[0]
        vals = sigmoid_criterion(x[:, None, :], z[:, None, :], d[:, None, None], ALPHA_SEARCH[None, :, None])
        j = np.argmin(vals, axis=-1)
        g0 = vals[np.arange(R), j]
    un, gn = golden_section(
        lambda uu: sigmoid_criterion(x, z, d[:, None], _alpha(uu)[:, None]),
        _U_LO[j], _U_HI[j], tol=tol,
    )
    better = gn < g0
    return np.where(better, _alpha(un), ALPHA_SEARCH[j]), np.where(better, gn, g0)


def sigmoid_core(x, z, starts: int = SIGMOID_STARTS):
    """Fit the sigmoid to every row of ``z``.

    ``x`` is ``(n,)`` or ``(B, n)``.  The criterion is first tabulated at
    four points per split cell against a ladder of steepness
    values.  The ``starts`` most promising split cells are then refined
    together: golden-section search over the split inside each half cell, with
    the steepness profiled out (ladder plus golden section) at every trial
    split.  A grid point is only replaced by a strictly better refined
    point.  Returns ``(d, alpha, G)``.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    B, n = z.shape
    x = np.broadcast_to(np.asarray(x, dtype=float), (B, n))
    cand = candidate_splits(x)  # (B, n+1)
    cells_lo = cand
    cells_hi = np.concatenate([cand[:, 1:], np.ones((B, 1))], axis=-1)
    # grid columns: cell k sampled at 4k + (0, 1/4, 1/2, 3/4) of its width, then d = 1
    frac = np.arange(_CELL_POINTS) / _CELL_POINTS
    dgrid = (cells_lo[..., None] + frac * (cells_hi - cells_lo)[..., None]).reshape(B, -1)
    dgrid = np.concatenate([dgrid, np.ones((B, 1))], axis=-1)

    A = ALPHA_SEARCH.size
    grid = np.empty(dgrid.shape + (A,))
    for j, a in enumerate(ALPHA_SEARCH):
        grid[:, :, j] = sigmoid_criterion(x[:, None, :], z[:, None, :], dgrid[..., None], a)
    # grid-first minimizer in (split, steepness) order, restricted to the coarse ladder
    coarse = grid[:, :, _COARSE_IDX].reshape(B, -1)
    first = np.argmin(coarse, axis=-1)
    gi, gj = np.divmod(first, _COARSE_IDX.size)
    rows = np.arange(B)
    d_best = dgrid[rows, gi]
    a_best = ALPHA_GRID[gj]
    g_best = coarse[rows, first]

    # rank cells by the profiled criterion at their sample points and right end
    P = dgrid.shape[1]
    jp = np.argmin(grid, axis=-1).reshape(-1)
    gp = grid.min(axis=-1).reshape(-1)
    rp = np.repeat(rows, P)
    _, by_point = _profile_alpha(x[rp], z[rp], dgrid.reshape(-1), jp, gp, tol=1e-4)
    by_point = by_point.reshape(B, P)
    cell_score = np.minimum(
        by_point[:, :-1].reshape(B, n + 1, _CELL_POINTS).min(axis=-1),
        by_point[:, _CELL_POINTS::_CELL_POINTS],
    )
    order = np.argsort(cell_score, axis=-1, kind="stable")
    S = min(starts, n + 1)
    k = np.repeat(order[:, :S], 2, axis=-1).reshape(-1)
    rr = np.repeat(rows, 2 * S)
    xs, zs = x[rr], z[rr]
    # each cell is searched in two halves: the profile can have a mode near either end
    lo, hi = cells_lo[rr, k], cells_hi[rr, k]
    mid = 0.5 * (lo + hi)
    right = np.tile([False, True], B * S)
    lo, hi = np.where(right, mid, lo), np.where(right, hi, mid)
    dn, _ = golden_section(lambda dd: _profile_alpha(xs, zs, dd)[1], lo, hi, tol=1e-10)
    an, gn = _profile_alpha(xs, zs, dn)
    dn, an, gn = dn.reshape(B, 2 * S), an.reshape(B, 2 * S), gn.reshape(B, 2 * S)
    pick = np.argmin(gn, axis=-1)
    dn, an, gn = dn[rows, pick], an[rows, pick], gn[rows, pick]
    take = gn < g_best
    return np.where(take, dn, d_best), np.where(take, an, a_best), np.where(take, gn, g_best)


def fit_sigmoid(series: PValueSeries) -> SigmoidFit:
    """Least-squares fit of the two-parameter sigmoid family.

    Minimizes (1/n) sum (z_i - psi_{d,alpha}(x_i))^2 over d in [0, 1] and
    alpha >= 0, where psi is 1/2 up to d and decays logistically after it.
    The problem is nonconvex; see :func:`sigmoid_core` for the search.
    """
    _check(series)
    d, a, g = sigmoid_core(series.x, series.z[None, :])
    return SigmoidFit(float(d[0]), float(a[0]), float(g[0]))


# ---------------------------------------------------------------------------
# baseline interval


def interval_sse_table(z, inner_level=0.5, outer_level=0.0):
    """Criterion for every index pair ``i <= j`` (inf below the diagonal) and the empty interval."""
    z = np.asarray(z, dtype=float)
    n = z.size
    rin = (z - inner_level) ** 2
    rout = (z - outer_level) ** 2
    diff = np.concatenate([[0.0], np.cumsum(rin - rout)])
    base = float(rout.sum())
    table = base + diff[None, 1:] - diff[:-1, None]
    table[np.tril_indices(n, -1)] = np.inf
    return table, base


def fit_baseline_interval(series: PValueSeries, left_level: float = 0.5, out_level: float = 0.0) -> IntervalFit:
    """Interval [a, b] of covariates at the baseline: minimize
    sum_{x_i in [a,b]} (z_i - left_level)^2 + sum_{x_i not in [a,b]} (z_i - out_level)^2.

    Endpoints range over observed covariates (a = b allowed); the empty
    interval is also a candidate and wins ties.  Among equal pairs the
    lexicographically smallest is returned.
    """
    _check(series)
    x, z = series.x, series.z
    table, empty_sse = interval_sse_table(z, left_level, out_level)
    flat = int(np.argmin(table))
    i, j = divmod(flat, x.size)
    best = float(table[i, j])
    if empty_sse <= best:
        return IntervalFit(None, None, empty_sse, left_level, out_level)
    return IntervalFit(float(x[i]), float(x[j]), best, left_level, out_level)


def stump_criterion(series: PValueSeries, d: float, left_level: float, right_level: float) -> float:
    """Direct evaluation of the stump criterion at split ``d``."""
    left = series.x <= d
    return float(
        np.sum(np.where(left, (series.z - left_level) ** 2, (series.z - right_level) ** 2))
    )

