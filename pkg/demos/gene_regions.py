"""Minimum and maximum plateaus of a time-course expression profile.

gene_like holds triplicate measurements at 0 to 72 hours.  The times are
mapped to [0, 1] on ingestion and mapped back for reporting.  The low
plateau is fitted with baseline levels below the midpoint of the dose
means, the high plateau (by sign flip) with levels above it.

Run from the repository root:  python3 demos/gene_regions.py
"""

from __future__ import annotations

from pvthreshold import VarianceModel, estimate_minmax_regions, load_dataset


def main():
    ing = load_dataset("gene_like")
    for variance in (VarianceModel.pooled(), VarianceModel.per_dose()):
        regions = estimate_minmax_regions(ing.data, variance)
        print(f"{variance.tag} variance")
        for side in ("min", "max"):
            fit = getattr(regions, side)
            a, b = (ing.original_x(v) for v in (fit.interval.a_hat, fit.interval.b_hat))
            print(f"  {side}: level {fit.level:.3f} on [{a:g} h, {b:g} h]")


if __name__ == "__main__":
    main()
