"""How to split a fixed budget of N observations between doses and replicates.

For each admissible (m, n) with m * n close to N the Method 1 RMSE is
simulated; low noise favours many doses, high noise favours many
replicates.

Run from the repository root:  python3 demos/allocation.py [--reps N]
"""

from __future__ import annotations

import argparse

from pvthreshold import allocation_sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=200)
    parser.add_argument("--budget", type=int, default=100)
    args = parser.parse_args()
    for sigma in (0.1, 0.3):
        rep = allocation_sweep("M1", sigma, args.budget, "method1", args.reps, seed=1, rule="round")
        best = rep.extra["best"]
        print(f"sigma {sigma}: best (m, n) = ({best['m']}, {best['n']}), RMSE {best['rmse_d']:.3f}")


if __name__ == "__main__":
    main()
