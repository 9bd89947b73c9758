"""Regenerate the synthetic datasets bundled in ``src/pvthreshold/data``.

Neither motivating dataset is public, so the package ships stand-ins
with the same layout:

* ``gene_like.csv``: expression of one gene measured in triplicate at
  0, 0.5, 1, 2, 4, 8, 16, 24 and 72 hours.  Flat until 4 h, rising
  until 24 h, flat again afterwards.  Noise grows with the level.
* ``queue_like.csv``: average delay of a queueing system at 100
  loadings i/100, ten simulation replicates each.  Flat until a
  loading of 0.15, then increasing; noise proportional to the delay.

Run from the repository root:  python3 demos/make_datasets.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "src" / "pvthreshold" / "data"


def gene_like(rng):
    hours = np.array([0, 0.5, 1, 2, 4, 8, 16, 24, 72], dtype=float)
    level = np.array([3.97, 3.97, 3.97, 3.97, 3.97, 4.12, 4.28, 4.37, 4.37])
    sd = 0.02 + 0.08 * (level - level.min())
    rows = []
    for h, mu, s in zip(hours, level, sd):
        for y in mu + s * rng.standard_normal(3):
            rows.append((float(h), round(float(y), 4)))
    return rows


def queue_like(rng):
    load = np.arange(1, 101) / 100.0
    delay = 2.6 + 10.0 * np.maximum(load - 0.15, 0.0) ** 1.2
    rows = []
    for x, mu in zip(load, delay):
        for y in mu * (1.0 + 0.04 * rng.standard_normal(10)):
            rows.append((float(x), round(float(y), 5)))
    return rows


def write(path, rows):
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for x, y in rows:
            fh.write(f"{x!r},{y!r}\n")
    print(f"wrote {len(rows)} rows to {path}")


if __name__ == "__main__":
    rng = np.random.default_rng(20100)
    OUT.mkdir(parents=True, exist_ok=True)
    write(OUT / "gene_like.csv", gene_like(rng))
    write(OUT / "queue_like.csv", queue_like(rng))
