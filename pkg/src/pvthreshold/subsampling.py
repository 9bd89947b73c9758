"""Subsampling confidence intervals for the threshold.

Doses (each with all of its replicates) are drawn without replacement,
the threshold is re-estimated on every subsample, and the spread of
m_n^{1/3} (d* - d_hat) is mapped back to the full sample at rate
n^{-1/3}.  The cube-root rate is established for a known baseline; the
Method 2 variant borrows it and is marked heuristic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .baseline import (
    TauSearch,
    estimate_known_tau,
    estimate_method1,
    estimate_method2,
    known_tau_core,
    method1_core,
    method2_core,
)
from .errors import DataError, NumericError, UsageError
from .pvalues import DoseResponseData, VarianceModel

VARIANTS = ("1a", "1b", "2")
MAX_FAIL_FRACTION = 0.05


@dataclass(frozen=True)
class SubsampleConfig:
    m_n: int
    B: int = 1000
    variant: str = "1a"
    level: float = 0.95
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise UsageError(f"unknown variant {self.variant!r}; choose from 1a, 1b, 2", code="invalid-variant")
        if self.m_n < 2:
            raise UsageError("subsample size must be at least 2", code="invalid-subsample")
        if self.B < 100:
            raise UsageError("at least 100 subsampling iterations are required", code="invalid-iterations")
        if not 0.0 < self.level < 1.0:
            raise UsageError("confidence level must lie in (0, 1)", code="invalid-level")


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    variant: str
    q_lo: float
    q_hi: float
    d_hat: float
    tau_hat: float | None
    m_n: int
    B: int
    level: float
    seed: int
    failures: int = 0
    heuristic: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "d_hat": self.d_hat,
            "lower": self.lower,
            "upper": self.upper,
            "m_n": self.m_n,
            "B": self.B,
            "level": self.level,
            "seed": self.seed,
            "tau_hat": self.tau_hat,
            "quantiles": [self.q_lo, self.q_hi],
            "failures": self.failures,
            "heuristic": self.heuristic,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def type1_quantile(values, p: float) -> float:
    """Order statistic at rank ceil(p * B) (1-based) of ``values``."""
    v = np.sort(np.asarray(values, dtype=float))
    # guard against p * B landing a hair above an integer in floating point
    rank = math.ceil(p * v.size - 1e-9)
    return float(v[min(max(rank, 1), v.size) - 1])


def _draw(seed: int, it: int, attempt: int, n: int, m_n: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed, spawn_key=(it, attempt))
    rng = np.random.Generator(np.random.Philox(ss))
    return np.sort(rng.choice(n, size=m_n, replace=False))


def _full_sample(data, config, variance, tau0, search):
    if config.variant == "2":
        return estimate_method2(data, variance)
    if tau0 is not None:
        return estimate_known_tau(data, tau0, variance)
    return estimate_method1(data, variance, search)


def subsample_statistics(data: DoseResponseData, config: SubsampleConfig, variance: VarianceModel,
                         d_hat: float, tau_hat: float | None, tau0: float | None = None,
                         search: TauSearch | None = None):
    """Subsample estimates d* for all ``B`` iterations plus the failure count.

    Variant 1a holds the baseline at ``tau_hat``; 1b re-estimates it on each
    subsample unless ``tau0`` is known; 2 uses Method 2.
    """
    search = search or TauSearch()
    n = data.n
    x, means, ss, counts = data.x, data.means, data.sum_squares(), data.counts
    fixed_tau = tau0 if tau0 is not None else tau_hat

    def estimate(idx):
        xs, ms, ss_, cs = x[idx], means[idx], ss[idx], counts[idx]
        if config.variant == "2":
            d, _, _, ok = method2_core(xs, ms, ss_, cs, variance)
        elif config.variant == "1a" or tau0 is not None:
            d, _, ok = known_tau_core(xs, ms, ss_, cs, fixed_tau, variance)
        else:
            d, _, _, ok = method1_core(xs, ms, ss_, cs, variance, search)
        return d, ok

    idx = np.stack([_draw(config.seed, b, 0, n, config.m_n) for b in range(config.B)])
    d_star, ok = estimate(idx)
    attempts = np.zeros(config.B, dtype=int)
    failures = 0
    budget = MAX_FAIL_FRACTION * config.B
    while not np.all(ok):
        bad = np.flatnonzero(~ok)
        failures += bad.size
        if failures > budget:
            raise NumericError(
                f"{failures} subsample estimates failed (limit {int(budget)})",
                code="subsample-failures", failures=failures, iterations=config.B,
            )
        attempts[bad] += 1
        redraw = np.stack([_draw(config.seed, b, attempts[b], n, config.m_n) for b in bad])
        d_new, ok_new = estimate(redraw)
        d_star[bad] = d_new
        ok[bad] = ok_new
    return d_star, failures


def subsample_ci(data: DoseResponseData, config: SubsampleConfig, variance: VarianceModel,
                 tau0: float | None = None, search: TauSearch | None = None) -> ConfidenceInterval:
    """Confidence interval [d_hat - n^{-1/3} q_hi, d_hat - n^{-1/3} q_lo].

    q_lo and q_hi are type-1 empirical quantiles of m_n^{1/3} (d* - d_hat)
    at (1 - level) / 2 and (1 + level) / 2.  Supplying ``tau0`` switches
    variants 1a and 1b to the known-baseline fit.
    """
    if not isinstance(data, DoseResponseData):
        raise DataError("expected DoseResponseData", code="empty-data")
    if config.m_n >= data.n:
        raise UsageError(
            f"subsample size {config.m_n} must be below the number of doses {data.n}",
            code="invalid-subsample",
        )
    full = _full_sample(data, config, variance, tau0, search)
    d_star, failures = subsample_statistics(data, config, variance, full.d_hat, full.tau_hat, tau0, search)
    t_star = config.m_n ** (1.0 / 3.0) * (d_star - full.d_hat)
    alpha = 1.0 - config.level
    q_lo = type1_quantile(t_star, alpha / 2)
    q_hi = type1_quantile(t_star, 1.0 - alpha / 2)
    scale = data.n ** (-1.0 / 3.0)
    return ConfidenceInterval(
        full.d_hat - scale * q_hi, full.d_hat - scale * q_lo, config.variant, q_lo, q_hi,
        full.d_hat, full.tau_hat, config.m_n, config.B, config.level, config.seed,
        failures, config.variant == "2",
    )
