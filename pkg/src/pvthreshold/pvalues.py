"""Per-dose p-values for testing that the regression function sits at a
null level at each distinct covariate value.

The array-level helpers (``_sf``, ``_z_from_means`` ...) accept leading
batch dimensions so the Monte Carlo harness can evaluate thousands of
replicates at once.  The public engines wrap them for a single
:class:`DoseResponseData`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, NumericError, UsageError
from .special import binomial_sf, std_normal_sf, student_t_sf

Z_FLOOR = 1e-300
Z_CEIL = 1.0 - 1e-16


@dataclass(frozen=True)
class DoseResponseData:
    """Replicated responses grouped by distinct, sorted covariate value.

    Use :meth:`from_pairs` (long format, duplicates merged) or
    :meth:`from_matrix` (balanced ``(n, m)`` layout) rather than the raw
    constructor.
    """

    x: np.ndarray
    responses: tuple

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise DataError("no doses", code="empty-data")
        if len(self.responses) != x.size:
            raise DataError("one response array per dose is required", code="shape-mismatch")
        if np.any(np.diff(x) <= 0):
            raise DataError("doses must be strictly increasing", code="unsorted-doses")
        resp = tuple(np.asarray(r, dtype=float).ravel() for r in self.responses)
        if any(r.size == 0 for r in resp):
            raise DataError("every dose needs at least one response", code="empty-dose")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "responses", resp)

    @classmethod
    def from_pairs(cls, x: Iterable[float], y: Iterable[float]) -> "DoseResponseData":
        x = np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=float)
        y = np.asarray(list(y) if not isinstance(y, np.ndarray) else y, dtype=float)
        if x.size == 0:
            raise DataError("no observations", code="empty-data")
        if x.shape != y.shape:
            raise DataError("x and y lengths differ", code="shape-mismatch")
        order = np.argsort(x, kind="stable")
        xs, ys = x[order], y[order]
        uniq, start = np.unique(xs, return_index=True)
        groups = np.split(ys, start[1:])
        return cls(uniq, tuple(groups))

    @classmethod
    def from_matrix(cls, x: Sequence[float], Y) -> "DoseResponseData":
        Y = np.asarray(Y, dtype=float)
        if Y.ndim != 2:
            raise DataError("response matrix must be 2-D (doses x replicates)", code="shape-mismatch")
        return cls(np.asarray(x, dtype=float), tuple(Y))

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.size for r in self.responses])

    @property
    def balanced(self) -> bool:
        c = self.counts
        return bool(np.all(c == c[0]))

    @property
    def means(self) -> np.ndarray:
        return np.array([r.mean() for r in self.responses])

    def sum_squares(self) -> np.ndarray:
        """Within-dose sums of squared deviations from the dose mean."""
        return np.array([np.sum((r - r.mean()) ** 2) for r in self.responses])

    def subset(self, idx) -> "DoseResponseData":
        idx = np.sort(np.asarray(idx))
        return DoseResponseData(self.x[idx], tuple(self.responses[i] for i in idx))

    def negated(self) -> "DoseResponseData":
        return DoseResponseData(self.x, tuple(-r for r in self.responses))


@dataclass(frozen=True)
class PValueSeries:
    """Sorted ``(x, z)`` pairs plus the test that produced them."""

    x: np.ndarray
    z: np.ndarray
    method: str = "given"
    counts: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        z = np.asarray(self.z, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise DataError("empty p-value series", code="empty-series")
        if z.shape != x.shape:
            raise DataError("x and z lengths differ", code="shape-mismatch")
        if np.any(np.diff(x) <= 0):
            order = np.argsort(x, kind="stable")
            x, z = x[order], z[order]
            if np.any(np.diff(x) <= 0):
                raise DataError("duplicate covariate values in series", code="duplicate-doses")
        if np.any(np.isnan(z)) or np.any(z < 0) or np.any(z > 1):
            raise DataError("p-values must lie in [0, 1]", code="invalid-pvalue")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", np.clip(z, Z_FLOOR, Z_CEIL))
        if self.counts is not None:
            object.__setattr__(self, "counts", np.asarray(self.counts))

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class VarianceModel:
    """How the noise scale in each test statistic is obtained.

    ``kind`` is ``"known"`` (fixed ``sigma0``), ``"pooled"`` (one estimate
    from all within-dose deviations, balanced designs only) or
    ``"per-dose"`` (separate estimate at each dose).  ``use_t`` swaps the
    normal reference distribution for the matching t distribution.
    """

    kind: str = "pooled"
    sigma0: float | None = None
    use_t: bool = False

    def __post_init__(self):
        if self.kind not in ("known", "pooled", "per-dose"):
            raise UsageError(f"unknown variance model {self.kind!r}", code="invalid-variance")
        if self.kind == "known":
            if self.sigma0 is None or not self.sigma0 > 0:
                raise UsageError("known variance model needs sigma0 > 0", code="invalid-sigma")
            if self.use_t:
                raise UsageError("t reference requires an estimated variance", code="invalid-variance")

    @classmethod
    def known(cls, sigma0: float) -> "VarianceModel":
        return cls("known", float(sigma0))

    @classmethod
    def pooled(cls, use_t: bool = False) -> "VarianceModel":
        return cls("pooled", None, use_t)

    @classmethod
    def per_dose(cls, use_t: bool = False) -> "VarianceModel":
        return cls("per-dose", None, use_t)

    @property
    def tag(self) -> str:
        if self.kind == "known":
            return "known-sigma"
        if self.kind == "pooled":
            return "t-pooled" if self.use_t else "pooled"
        return "t-per-dose" if self.use_t else "per-dose"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma0": self.sigma0, "use_t": self.use_t}


# ---------------------------------------------------------------------------
# array-level core


def _sf(t, df=None):
    """Upper tail of the reference distribution (normal when df is None)."""
    if df is None:
        return std_normal_sf(t)
    return student_t_sf(t, df)


def _clamp(z):
    return np.clip(z, Z_FLOOR, Z_CEIL)


def noise_scale(variance: VarianceModel, ss, counts):
    """Noise SD and reference df for each dose.

    ``ss`` holds within-dose sums of squares with shape ``(..., n)``;
    ``counts`` the replicate numbers, ``(n,)`` or matching ``ss``.  Returns ``(scale, df)``
    where ``scale`` broadcasts against ``(..., n)`` and ``df`` is ``None``
    for a normal reference.
    """
    ss = np.asarray(ss, dtype=float)
    counts = np.asarray(counts)
    if variance.kind == "known":
        return np.full(ss.shape, variance.sigma0), None
    if np.any(counts < 2):
        raise DataError(
            "variance estimation needs at least 2 replicates per dose", code="too-few-replicates"
        )
    if variance.kind == "pooled":
        if np.any(counts != counts.flat[0]):
            raise DataError(
                "pooled variance requires equal replicate counts", code="unbalanced-design"
            )
        n = counts.shape[-1]
        dof = int(counts.flat[0]) * n - n
        s = np.sqrt(ss.sum(axis=-1, keepdims=True) / dof)
        scale = np.broadcast_to(s, ss.shape)
        df = float(dof) if variance.use_t else None
        return scale, df
    scale = np.sqrt(ss / (counts - 1))
    df = (counts - 1).astype(float) if variance.use_t else None
    return scale, df


def z_values(means, null, counts, scale, df=None):
    """1 - G(sqrt(m_i) (ybar_i - null) / scale_i), unclamped.

    Zero scales must be screened by the caller.
    """
    t = np.sqrt(counts) * (np.asarray(means) - null) / scale
    return _sf(t, df)


def _check_scale(scale):
    if np.any(~(np.asarray(scale) > 0)):
        raise NumericError(
            "estimated standard deviation is zero (identical replicates)",
            code="degenerate-variance",
        )


def _require(data: DoseResponseData):
    if not isinstance(data, DoseResponseData):
        raise DataError("expected DoseResponseData", code="empty-data")


# ---------------------------------------------------------------------------
# public engines


def pvalues_for(data: DoseResponseData, null, variance: VarianceModel, method: str | None = None) -> PValueSeries:
    """p-values at null level(s) ``null`` (scalar or one value per dose)."""
    _require(data)
    counts = data.counts
    scale, df = noise_scale(variance, data.sum_squares(), counts)
    _check_scale(scale)
    z = z_values(data.means, null, counts, scale, df)
    return PValueSeries(data.x, z, method or variance.tag, counts)


def pvalues_known_sigma(data: DoseResponseData, tau0: float, sigma0: float) -> PValueSeries:
    """z_i = 1 - Phi(sqrt(m_i) (ybar_i - tau0) / sigma0)."""
    return pvalues_for(data, tau0, VarianceModel.known(sigma0))


def pvalues_pooled(data: DoseResponseData, tau0: float, use_t: bool = False) -> PValueSeries:
    """p-values with the pooled within-dose variance estimate.

    The reference is the t distribution on ``mn - n`` degrees of freedom
    when ``use_t`` is set.
    """
    return pvalues_for(data, tau0, VarianceModel.pooled(use_t))


def pvalues_per_dose(data: DoseResponseData, tau0: float, use_t: bool = False) -> PValueSeries:
    """p-values with a separate variance estimate at every dose."""
    return pvalues_for(data, tau0, VarianceModel.per_dose(use_t))


def pvalues_binomial(counts, m, p0: float, exact: bool = False) -> PValueSeries:
    """p-values for success counts against a baseline success rate ``p0``.

    ``counts`` is a sequence of ``(x, y)`` pairs; ``m`` the number of trials
    (one value, or one per dose).  ``exact`` uses the strict binomial
    exceedance P(Y > y) instead of the normal approximation.
    """
    if not 0.0 < p0 < 1.0:
        raise UsageError("baseline rate p0 must lie strictly between 0 and 1", code="invalid-p0")
    pairs = sorted((float(x), y) for x, y in counts)
    if not pairs:
        raise DataError("no doses", code="empty-data")
    xs = np.array([p[0] for p in pairs])
    ys = np.array([p[1] for p in pairs], dtype=float)
    ms = np.broadcast_to(np.asarray(m), xs.shape).astype(float)
    if np.any(ms < 1) or np.any(ms != np.round(ms)):
        raise UsageError("trial counts must be positive integers", code="invalid-m")
    if np.any(ys != np.round(ys)) or np.any(ys < 0) or np.any(ys > ms):
        raise UsageError("success counts must be integers in [0, m]", code="non-integer-count")
    if exact:
        z = np.array([binomial_sf(int(y), int(mi), p0) for y, mi in zip(ys, ms)])
        tag = "binom-exact"
    else:
        z = std_normal_sf((ys - ms * p0) / np.sqrt(ms * p0 * (1 - p0)))
        tag = "binom-normal"
    return PValueSeries(xs, z, tag, ms.astype(int))


def pvalues_composite(data: DoseResponseData, zeta0: float, variance: VarianceModel) -> PValueSeries:
    """p-values for H0: mu(x) < zeta0 against mu(x) > zeta0.

    Same statistic as the simple null with ``zeta0`` in place of the
    baseline; fit the result with stump levels (1, 0).
    """
    return pvalues_for(data, zeta0, variance, method="composite")
