"""Monte Carlo RMSE studies on the fixed design x_i = i / (n + 1).

Every replicate draws its noise from its own counter-based stream keyed
by (master seed, cell, replicate index).  Replicates are processed in
fixed blocks, so a cell's result does not depend on how many workers
run it or in which order blocks finish.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from ._optimize import golden_section
from .baseline import TauSearch, known_tau_core, method1_core, method2_core
from .errors import DataError, NumericError, UsageError
from .fitters import adaptive_sse_table, _argmin_first, sigmoid_core, split_value
from .pvalues import DoseResponseData, VarianceModel, _clamp, noise_scale, z_values

BLOCK = 250
# failures tolerated (and excluded) before a cell is declared failed
MAX_FAIL_FRACTION = 1e-3
THREADS_ENV = "THRESHOLD_PV_THREADS"

LAMBDA_M3 = 0.5 * math.log(2.0)


def _m0(x):
    return np.where(x > 0.5, 0.5, 0.0)


def _m1(x):
    return np.maximum(x - 0.5, 0.0)


def _m2(x):
    return 2.0 * np.maximum(x - 0.5, 0.0) ** 2


def _m3(x):
    u = np.asarray(x, dtype=float) - 0.5
    with np.errstate(divide="ignore"):
        return np.where(u > 0, np.exp(-LAMBDA_M3 / np.where(u > 0, u, 1.0)), 0.0)


def _m4(x):
    return np.where(x <= 0.5, 0.0, np.where(x <= 0.75, x - 0.5, 1.0 - x))


def _m5(x):
    return np.where(x <= 0.5, 0.0, np.where(x <= 0.8, x - 0.5, 0.3 - (x - 0.8)))


def _m1_tilde(x):
    return np.maximum(x - 0.2, 0.0)


def _m2_tilde(x):
    return np.maximum(x - 0.8, 0.0)


@dataclass(frozen=True)
class RegressionModel:
    """Regression function flat at ``baseline`` up to ``d0``."""

    name: str
    d0: float
    func: Callable = field(compare=False, repr=False)
    baseline: float = 0.0


MODELS = {
    "M0": RegressionModel("M0", 0.5, _m0),
    "M1": RegressionModel("M1", 0.5, _m1),
    "M2": RegressionModel("M2", 0.5, _m2),
    "M3": RegressionModel("M3", 0.5, _m3),
    "M4": RegressionModel("M4", 0.5, _m4),
    "M5": RegressionModel("M5", 0.5, _m5),
    "M1tilde": RegressionModel("M1tilde", 0.2, _m1_tilde),
    "M2tilde": RegressionModel("M2tilde", 0.8, _m2_tilde),
}

ESTIMATORS = ("stump", "stump3", "sigmoid", "method1", "method2", "p2")
# estimators that also estimate the baseline level
_TAU_ESTIMATORS = ("method1", "method2")


def get_model(name) -> RegressionModel:
    if isinstance(name, RegressionModel):
        return name
    try:
        return MODELS[name]
    except KeyError:
        raise UsageError(
            f"unknown model {name!r}; choose from {', '.join(MODELS)}", code="invalid-model"
        ) from None


def eval_model(model, x):
    """mu(x) for a named or custom model; ``x`` must lie in [0, 1]."""
    model = get_model(model)
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DataError("model evaluated outside [0, 1]", code="domain-error")
    out = model.func(arr)
    return float(out) if np.ndim(x) == 0 else np.asarray(out, dtype=float)


def design(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / (n + 1.0)


# ---------------------------------------------------------------------------
# P2 comparator: least-squares kink beta * (x - d)_+ with the baseline known


def kink_sse(d, x, sums, sumsq, counts):
    """Profiled kink criterion at splits ``d`` of shape ``(B, k)``.

    ``sums`` are per-dose response totals ``(B, n)``; ``sumsq`` the total
    sum of squares ``(B,)``.  Returns ``(sse, beta)``.
    """
    u = np.maximum(x[None, None, :] - d[..., None], 0.0)
    num = np.einsum("bkn,bn->bk", u, sums)
    den = (u * u) @ counts
    with np.errstate(invalid="ignore", divide="ignore"):
        beta = np.where(den > 0, np.maximum(num / den, 0.0), 0.0)
    sse = sumsq[:, None] - 2.0 * beta * num + beta * beta * den
    return sse, beta


def kink_core(x, sums, sumsq, counts):
    """P2 on stacked replicates; returns ``(d_hat, slope, sse)``."""
    x = np.asarray(x, dtype=float)
    counts = np.asarray(counts, dtype=float)
    sums = np.atleast_2d(sums)
    sumsq = np.atleast_1d(sumsq)
    B, n = sums.shape
    K = 4 * n
    grid = np.arange(K + 1) / K
    sse, _ = kink_sse(np.broadcast_to(grid, (B, K + 1)), x, sums, sumsq, counts)
    j = np.argmin(sse, axis=-1)
    rows = np.arange(B)
    d = grid[j]
    best = sse[rows, j]
    lo = grid[np.maximum(j - 1, 0)]
    hi = grid[np.minimum(j + 1, K)]
    dr, sr = golden_section(lambda t: kink_sse(t[:, None], x, sums, sumsq, counts)[0][:, 0], lo, hi, tol=1e-12)
    take = sr < best
    d = np.where(take, dr, d)
    sse_d, beta = kink_sse(d[:, None], x, sums, sumsq, counts)
    return d, beta[:, 0], np.maximum(sse_d[:, 0], 0.0)


def fit_kink_p2(data: DoseResponseData):
    """Hockey-stick fit beta * (x - d)_+ to the raw responses (baseline 0).

    Returns ``(d_hat, slope, sse)``.  With no observations right of any
    grid split the slope is 0 and every split fits equally.
    """
    if not isinstance(data, DoseResponseData):
        raise DataError("expected DoseResponseData", code="empty-data")
    sums = np.array([r.sum() for r in data.responses])
    sumsq = float(sum(np.sum(r * r) for r in data.responses))
    d, b, s = kink_core(data.x, sums[None, :], np.array([sumsq]), data.counts)
    if not np.any(data.x > 0):
        return float(data.x.max()), 0.0, float(s[0])
    return float(d[0]), float(b[0]), float(s[0])


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class SimulationConfig:
    model: str
    m: int
    n: int
    sigma: float
    estimator: str = "stump"
    reps: int = 2000
    seed: int = 0
    variance: VarianceModel = field(default_factory=VarianceModel.pooled)
    search: TauSearch = field(default_factory=TauSearch)

    def __post_init__(self):
        get_model(self.model)
        if self.m < 1 or self.n < 1:
            raise UsageError("m and n must be positive", code="invalid-config")
        if not self.sigma > 0:
            raise UsageError("sigma must be positive", code="invalid-config")
        if self.reps < 1:
            raise UsageError("reps must be positive", code="invalid-config")
        if self.estimator not in ESTIMATORS:
            raise UsageError(
                f"unknown estimator {self.estimator!r}; choose from {', '.join(ESTIMATORS)}",
                code="invalid-estimator",
            )

    @property
    def model_name(self) -> str:
        return get_model(self.model).name

    def cell_key(self) -> int:
        # estimators share the data of a (model, m, n, sigma) cell
        return zlib.crc32(f"{self.model_name}|{self.m}|{self.n}|{self.sigma!r}".encode())


@dataclass(frozen=True)
class CellResult:
    model: str
    m: int
    n: int
    sigma: float
    estimator: str
    reps: int
    seed: int
    rmse_d: float | None
    rmse_tau: float | None
    failures: int
    status: str  # ok | flagged | failed

    def row(self) -> dict:
        return asdict(self)


def _rng(seed: int, key: int, rep: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(key, rep))
    return np.random.Generator(np.random.Philox(ss))


def draw_block(config: SimulationConfig, start: int, stop: int):
    """Dose means and within-dose sums of squares for replicates ``start..stop-1``."""
    model = get_model(config.model)
    x = design(config.n)
    mu = eval_model(model, x)
    key = config.cell_key()
    B = stop - start
    means = np.empty((B, config.n))
    ss = np.empty((B, config.n))
    for b in range(B):
        eps = _rng(config.seed, key, start + b).standard_normal((config.n, config.m))
        y = mu[:, None] + config.sigma * eps
        means[b] = y.mean(axis=1)
        ss[b] = np.sum((y - means[b][:, None]) ** 2, axis=1)
    return x, means, ss


def estimate_block(config: SimulationConfig, x, means, ss):
    """Run the configured estimator on stacked replicates: ``(d_hat, tau_hat, ok)``."""
    model = get_model(config.model)
    counts = np.full(config.n, config.m)
    tau0 = model.baseline
    est = config.estimator
    B = means.shape[0]
    if est == "p2":
        sums = means * config.m
        sumsq = (ss + config.m * means ** 2).sum(axis=1)
        d, _, _ = kink_core(x, sums, sumsq, counts)
        return d, None, np.ones(B, dtype=bool)
    if est == "method1":
        d, tau, _, ok = method1_core(x, means, ss, counts, config.variance, config.search)
        return d, tau, ok
    if est == "method2":
        d, tau, _, ok = method2_core(x, means, ss, counts, config.variance)
        return d, tau, ok
    if est == "stump":
        d, _, ok = known_tau_core(x, means, ss, counts, tau0, config.variance)
        return d, None, ok
    scale, df = noise_scale(config.variance, ss, counts)
    ok = np.all(scale > 0, axis=-1)
    z = _clamp(z_values(means, tau0, counts, np.where(scale > 0, scale, 1.0), df))
    if est == "stump3":
        table, _, _ = adaptive_sse_table(z)
        k, _ = _argmin_first(table, x[0] > 0)
        return split_value(x, k), None, ok
    d = np.empty(B)
    for s in range(0, B, 50):
        d[s:s + 50], _, _ = sigmoid_core(x, z[s:s + 50])
    return d, None, ok


def _block_errors(config: SimulationConfig, start: int, stop: int):
    x, means, ss = draw_block(config, start, stop)
    d, tau, ok = estimate_block(config, x, means, ss)
    model = get_model(config.model)
    ed = (d - model.d0) ** 2
    et = None if tau is None else (tau - model.baseline) ** 2
    return ed, et, ok


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    cpus = os.cpu_count() or 1
    if raw is None:
        return cpus
    try:
        val = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}", code="invalid-threads") from None
    if val < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}", code="invalid-threads")
    return val


def _map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda it: fn(*it), items))


def run_cell(config: SimulationConfig, workers: int | None = None) -> CellResult:
    """RMSE of the configured estimator over ``config.reps`` replicates.

    Replicates whose variance estimate degenerates are excluded when they
    are fewer than 0.1% of the total (the cell is then ``flagged``);
    otherwise the cell is ``failed`` and carries no RMSE.
    """
    workers = worker_count() if workers is None else workers
    blocks = [(config, s, min(s + BLOCK, config.reps)) for s in range(0, config.reps, BLOCK)]
    parts = _map(_block_errors, blocks, workers)
    ed = np.concatenate([p[0] for p in parts])
    ok = np.concatenate([p[2] for p in parts])
    fails = int(np.sum(~ok))
    status = "ok" if fails == 0 else "flagged"
    rmse_d = rmse_tau = None
    if fails >= MAX_FAIL_FRACTION * config.reps:
        status = "failed"
    else:
        rmse_d = float(np.sqrt(np.mean(ed[ok])))
        if parts[0][1] is not None:
            et = np.concatenate([p[1] for p in parts])
            rmse_tau = float(np.sqrt(np.mean(et[ok])))
    return CellResult(
        config.model_name, config.m, config.n, float(config.sigma), config.estimator,
        config.reps, config.seed, rmse_d, rmse_tau, fails, status,
    )


# ---------------------------------------------------------------------------
# reports


CSV_FIELDS = ["model", "m", "n", "sigma", "estimator", "reps", "seed", "rmse_d", "rmse_tau", "failures", "status"]


@dataclass
class SimulationReport:
    """Cells keyed by (model, m, n, sigma, estimator).  Wall time is kept
    out of the emitted files so reruns are byte-identical."""

    cells: list
    seed: int
    label: str = "simulation"
    wall_time: float | None = field(default=None, compare=False)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        keys = [(c.model, c.m, c.n, c.sigma, c.estimator) for c in self.cells]
        if len(set(keys)) != len(keys):
            raise UsageError("duplicate cell in report", code="duplicate-cell")

    def cell(self, model, m, n, sigma, estimator) -> CellResult:
        for c in self.cells:
            if (c.model, c.m, c.n, c.sigma, c.estimator) == (model, m, n, float(sigma), estimator):
                return c
        raise KeyError((model, m, n, sigma, estimator))

    @property
    def failed(self) -> bool:
        return any(c.status == "failed" for c in self.cells)

    def to_dict(self) -> dict:
        out = {"label": self.label, "seed": self.seed, "cells": [c.row() for c in self.cells]}
        out.update(self.extra)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for c in self.cells:
            w.writerow({k: ("" if v is None else (repr(v) if isinstance(v, float) else v)) for k, v in c.row().items()})
        return buf.getvalue()

    def write(self, stem: str) -> tuple:
        paths = (stem + ".json", stem + ".csv")
        with open(paths[0], "w") as fh:
            fh.write(self.to_json())
        with open(paths[1], "w") as fh:
            fh.write(self.to_csv())
        return paths


def run_grid(configs, workers: int | None = None, label: str = "simulation", seed: int = 0) -> SimulationReport:
    import time

    t0 = time.perf_counter()
    cells = [run_cell(c, workers) for c in configs]
    return SimulationReport(cells, seed, label, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# budget allocation


def allocation_pairs(budget: int, rule: str = "budget", min_n: int = 3) -> list:
    """Candidate ``(m, n)`` pairs for a total budget ``N``.

    ``budget``: every pair with N - min(m, n) <= m n <= N.
    ``round``: n = round(N / m) for each m.
    Pairs with fewer than ``min_n`` doses are dropped.
    """
    if budget < 4:
        raise UsageError("budget must be at least 4", code="invalid-budget")
    pairs = []
    if rule == "budget":
        for m in range(1, budget + 1):
            for n in range(min_n, budget // m + 1):
                if m * n >= budget - min(m, n):
                    pairs.append((m, n))
    elif rule == "round":
        for m in range(1, budget + 1):
            n = int(round(budget / m))
            if n >= min_n:
                pairs.append((m, n))
    else:
        raise UsageError(f"unknown allocation rule {rule!r}", code="invalid-rule")
    return pairs


def allocation_sweep(model, sigma: float, budget: int, estimator: str = "method1", reps: int = 2000,
                     seed: int = 0, rule: str = "budget", workers: int | None = None,
                     variance: VarianceModel | None = None) -> SimulationReport:
    """RMSE for every admissible ``(m, n)`` pair; the arg-min pair is in ``extra['best']``.

    Pairs with a single replicate are skipped (and listed in ``extra['skipped']``)
    unless the noise level is known.
    """
    variance = variance or VarianceModel.pooled()
    pairs = allocation_pairs(budget, rule)
    # an estimated variance needs two replicates per dose
    skipped = [p for p in pairs if p[0] < 2 and variance.kind != "known"]
    configs = [
        SimulationConfig(get_model(model).name, m, n, sigma, estimator, reps, seed, variance)
        for m, n in pairs if (m, n) not in skipped
    ]
    report = run_grid(configs, workers, label=f"allocation-N{budget}", seed=seed)
    usable = [c for c in report.cells if c.rmse_d is not None]
    if not usable:
        raise NumericError("every allocation cell failed", code="estimator-failures")
    best = min(usable, key=lambda c: (c.rmse_d, c.m))
    report.extra = {
        "budget": budget, "rule": rule, "best": {"m": best.m, "n": best.n, "rmse_d": best.rmse_d},
        "skipped": [list(p) for p in skipped],
    }
    return report


# ---------------------------------------------------------------------------
# presets reproducing the published grids

TABLE_MN = [(5, 5), (5, 10), (10, 10), (10, 20), (10, 50), (20, 50), (50, 100)]


def table_configs(table: int, reps: int = 2000, seed: int = 0) -> list:
    """Cell configurations for preset tables 1, 2, 3, 5 and 6."""
    grids = {
        1: (["M0", "M1", "M2", "M3", "M4"], ["stump", "sigmoid"], TABLE_MN),
        2: (["M3", "M4"], ["method1", "method2"], TABLE_MN),
        3: (["M1tilde", "M2tilde"], ["stump", "method1", "method2"], TABLE_MN),
        5: (["M1", "M2"], ["stump", "p2"], TABLE_MN),
        6: (["M3", "M5"], ["stump", "p2"], TABLE_MN),
    }
    if table not in grids:
        raise UsageError(f"no preset for table {table}", code="invalid-table")
    models, estimators, mn = grids[table]
    sigmas = [0.3] if table in (5, 6) else [0.1, 0.3]
    return [
        SimulationConfig(mod, m, n, s, est, reps, seed)
        for s in sigmas for mod in models for (m, n) in mn for est in estimators
    ]


def table4(reps: int = 2000, seed: int = 0, rule: str = "round", workers: int | None = None) -> SimulationReport:
    """Optimal allocations for M1 and M5, both methods, N in {100, 200}, sigma in {0.1, 0.3}."""
    cells, best = [], []
    for model in ("M1", "M5"):
        for est in ("method1", "method2"):
            for budget in (100, 200):
                for sigma in (0.1, 0.3):
                    rep = allocation_sweep(model, sigma, budget, est, reps, seed, rule, workers)
                    cells.extend(rep.cells)
                    best.append({"model": model, "estimator": est, "budget": budget, "sigma": sigma, **rep.extra["best"]})
    # sweeps for different budgets share cells; keep the first occurrence
    seen, uniq = set(), []
    for c in cells:
        k = (c.model, c.m, c.n, c.sigma, c.estimator)
        if k not in seen:
            seen.add(k)
            uniq.append(c)
    return SimulationReport(uniq, seed, "table4", extra={"optima": best, "rule": rule})
