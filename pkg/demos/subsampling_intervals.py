"""Subsampling confidence intervals for the threshold of queue_like.

Half of the 100 doses are drawn without replacement 1000 times, the
threshold is re-estimated each time, and the spread is rescaled at the
cube-root rate.  Variant 1a keeps the full-sample baseline, 1b
re-estimates it, 2 uses the running-mean method (heuristic).

Run from the repository root:  python3 demos/subsampling_intervals.py
"""

from __future__ import annotations

from pvthreshold import SubsampleConfig, VarianceModel, load_dataset, subsample_ci


def main():
    data = load_dataset("queue_like").data
    print("variant  d_hat   95% interval      width")
    for variant in ("1a", "1b", "2"):
        ci = subsample_ci(data, SubsampleConfig(50, 1000, variant, seed=0), VarianceModel.pooled())
        note = " (heuristic)" if ci.heuristic else ""
        print(f"  {variant:5s}  {ci.d_hat:.2f}   [{ci.lower:.3f}, {ci.upper:.3f}]   {ci.width:.3f}{note}")


if __name__ == "__main__":
    main()
