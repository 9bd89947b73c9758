from __future__ import annotations

import numpy as np
import pytest

from pvthreshold import PValueSeries

# filled by test_acceptance; printed once at the end of the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def four_point():
    return PValueSeries([0.2, 0.4, 0.6, 0.8], [0.6, 0.5, 0.1, 0.0])


def brute_stump(x, z, left, right):
    """Smallest candidate in {0} U x minimizing the fixed-level stump criterion."""
    best = None
    for d in sorted(set([0.0] + list(x))):
        sse = sum((zi - left) ** 2 if xi <= d else (zi - right) ** 2 for xi, zi in zip(x, z))
        if best is None or sse < best[1]:
            best = (d, sse)
    return best


def brute_adaptive(x, z):
    best = None
    for d in sorted(set([0.0] + list(x))):
        lz = [zi for xi, zi in zip(x, z) if xi <= d]
        rz = [zi for xi, zi in zip(x, z) if xi > d]
        sse = 0.0
        if lz:
            a = sum(lz) / len(lz)
            sse += sum((v - a) ** 2 for v in lz)
        if rz:
            b = sum(rz) / len(rz)
            sse += sum((v - b) ** 2 for v in rz)
        if best is None or sse < best[1]:
            best = (d, sse)
    return best


def brute_interval(x, z, inner, outer):
    """Empty interval first, then pairs in lexicographic order; first strict minimum wins."""
    best = (None, None, sum((v - outer) ** 2 for v in z))
    for i in range(len(x)):
        for j in range(i, len(x)):
            sse = sum(
                (zi - inner) ** 2 if x[i] <= xi <= x[j] else (zi - outer) ** 2 for xi, zi in zip(x, z)
            )
            if sse < best[2]:
                best = (x[i], x[j], sse)
    return best


def sigmoid_grid_min(x, z):
    """Dense-grid oracle: d step 1e-3, alpha in {0} U logspace(-2, 4)."""
    from pvthreshold.fitters import sigmoid_criterion

    dgrid = np.linspace(0.0, 1.0, 1001)
    agrid = np.concatenate([[0.0], np.logspace(-2, 4, 121)])
    out = np.inf
    for a in agrid:
        out = min(out, float(sigmoid_criterion(x, z, dgrid[:, None], a).min()))
    return out


def random_series(rng, n_max=50):
    """Random p-value series of three shapes: uniform noise, noisy step, noisy sigmoid."""
    n = int(rng.integers(1, n_max + 1))
    x = np.sort(rng.choice(np.arange(1, 1000), n, replace=False)) / 1000.0
    if rng.uniform() < 0.1:
        x[0] = 0.0
    kind = int(rng.integers(0, 3))
    if kind == 0:
        z = rng.uniform(size=n)
    elif kind == 1:
        z = np.where(x < rng.uniform(), rng.uniform(size=n), 0.1 * rng.uniform(size=n))
    else:
        z = 0.5 / (1.0 + np.exp(rng.uniform(1, 50) * (x - rng.uniform())))
        z = np.clip(z + rng.normal(0, 0.05, n), 0.0, 1.0)
    return x, z
