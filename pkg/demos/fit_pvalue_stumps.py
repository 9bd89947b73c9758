"""Threshold estimation by fitting a stump to per-dose p-values.

Below the threshold each dose mean sits at the baseline, so its one-sided
p-value is uniform with mean 1/2.  Above it the p-values collapse to 0.
A stump with levels 1/2 and 0 fitted by least squares locates the switch.

Run from the repository root:  python3 demos/fit_pvalue_stumps.py
"""

from __future__ import annotations

import numpy as np

from pvthreshold import (
    DoseResponseData,
    PValueSeries,
    fit_baseline_interval,
    fit_sigmoid,
    fit_stump_adaptive,
    fit_stump_fixed,
    pvalues_known_sigma,
    pvalues_pooled,
)
from pvthreshold.simulation import design, eval_model


def four_points():
    series = PValueSeries([0.2, 0.4, 0.6, 0.8], [0.6, 0.5, 0.1, 0.0])
    fixed = fit_stump_fixed(series)
    free = fit_stump_adaptive(series)
    print("four-point series, z =", series.z.tolist())
    print(f"  fixed levels (1/2, 0): d_hat = {fixed.d_hat}, sse = {fixed.sse:.4f}")
    print(f"  free levels:           d_hat = {free.d_hat}, levels = ({free.alpha_level:.3f}, {free.beta_level:.3f})")


def kink_model():
    rng = np.random.default_rng(2)
    x = design(50)
    y = eval_model("M1", x)[:, None] + 0.1 * rng.standard_normal((50, 10))
    data = DoseResponseData.from_matrix(x, y)
    print("\nkink model M1 (threshold 0.5), 50 doses x 10 replicates, sigma 0.1")
    for label, series in [("known sigma", pvalues_known_sigma(data, 0.0, 0.1)), ("pooled sigma", pvalues_pooled(data, 0.0))]:
        stump = fit_stump_fixed(series)
        sig = fit_sigmoid(series)
        print(f"  {label:12s}: stump d_hat = {stump.d_hat:.3f}   sigmoid d_hat = {sig.d_hat:.3f} (steepness {sig.steepness:.1f})")


def baseline_window():
    # the response leaves the baseline on both sides of a middle window
    rng = np.random.default_rng(3)
    x = design(40)
    mu = np.where((x > 0.3) & (x < 0.7), 0.0, np.abs(x - 0.5) - 0.2)
    data = DoseResponseData.from_matrix(x, mu[:, None] + 0.05 * rng.standard_normal((40, 6)))
    fit = fit_baseline_interval(pvalues_pooled(data, 0.0))
    print(f"\nbaseline window (0.3, 0.7): estimated [{fit.a_hat:.3f}, {fit.b_hat:.3f}]")


if __name__ == "__main__":
    four_points()
    kink_model()
    baseline_window()
