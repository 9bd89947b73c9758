"""Monte Carlo RMSE of the stump estimator, in the layout of the
published simulation tables.

Doses sit at i/(n+1) with m normal replicates each.  The baseline is
known (0) and the noise level is estimated from pooled residuals.
Pass --reps 2000 to match the published replicate count.

Run from the repository root:  python3 demos/rmse_tables.py [--reps N]
"""

from __future__ import annotations

import argparse

from pvthreshold.simulation import TABLE_MN, SimulationConfig, run_grid

PUBLISHED_M0 = {(10, 50): 0.030, (50, 100): 0.014}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=300)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()

    configs = [SimulationConfig(model, m, n, 0.1, "stump", args.reps, args.seed)
               for model in ("M0", "M1", "M4") for m, n in TABLE_MN]
    report = run_grid(configs, seed=args.seed)
    print(f"stump RMSE, sigma 0.1, {args.reps} replicates")
    print("  (m, n)      M0      M1      M4")
    for m, n in TABLE_MN:
        row = [report.cell(model, m, n, 0.1, "stump").rmse_d for model in ("M0", "M1", "M4")]
        print(f"  ({m:2d},{n:3d})  " + "  ".join(f"{v:.3f}" for v in row))
    for (m, n), ref in PUBLISHED_M0.items():
        got = report.cell("M0", m, n, 0.1, "stump").rmse_d
        print(f"M0 ({m},{n}): {got:.3f}, published {ref}")


if __name__ == "__main__":
    main()
