"""Long-format CSV ingestion and p-value emission.

Input files have a header ``x,y`` (plus an optional ``count`` column for
binomial data, holding the number of trials behind each success count)
and one observation per row.  Covariates outside [0, 1] are mapped
affinely onto [0, 1]; the map is kept so estimates can be reported on
the original scale.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DataError, UsageError
from .pvalues import DoseResponseData, PValueSeries

DATASETS = ("gene_like", "queue_like")


@dataclass(frozen=True)
class RescaleMap:
    """x_unit = (x - lo) / (hi - lo)."""

    lo: float
    hi: float

    def to_unit(self, x):
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)

    def to_original(self, u):
        out = self.lo + np.asarray(u, dtype=float) * (self.hi - self.lo)
        return float(out) if np.ndim(u) == 0 else out

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Ingested:
    data: DoseResponseData
    rescale: RescaleMap | None
    # per-dose trial totals when a count column is present
    trials: np.ndarray | None = None
    path: str | None = None

    def original_x(self, u):
        return u if self.rescale is None else self.rescale.to_original(u)


def _parse_float(cell: str, line: int, column: str) -> float:
    try:
        val = float(cell)
    except ValueError:
        raise DataError(
            f"line {line}: column {column!r} is not numeric: {cell!r}", code="non-numeric", line=line
        ) from None
    if not math.isfinite(val):
        raise DataError(f"line {line}: column {column!r} is not finite", code="non-numeric", line=line)
    return val


def parse_rows(text: str):
    """Parse CSV text into ``x``, ``y`` and optional ``count`` arrays."""
    reader = csv.reader(io.StringIO(text))
    header = None
    xs, ys, cs = [], [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if header is None:
            header = [c.lower() for c in cells]
            if header[:2] != ["x", "y"] or len(header) > 3 or (len(header) == 3 and header[2] != "count"):
                raise DataError(
                    f"line {line}: header must be 'x,y' or 'x,y,count', got {','.join(cells)!r}",
                    code="parse-error", line=line,
                )
            continue
        if len(cells) != len(header):
            raise DataError(
                f"line {line}: expected {len(header)} columns, found {len(cells)}",
                code="parse-error", line=line,
            )
        xs.append(_parse_float(cells[0], line, "x"))
        ys.append(_parse_float(cells[1], line, "y"))
        if len(header) == 3:
            cs.append(_parse_float(cells[2], line, "count"))
    if header is None:
        raise DataError("file is empty", code="empty-file")
    if not xs:
        raise DataError("file has a header but no data rows", code="empty-file")
    counts = np.array(cs) if len(header) == 3 else None
    return np.array(xs), np.array(ys), counts


def _rescale(x):
    lo, hi = float(x.min()), float(x.max())
    if lo >= 0.0 and hi <= 1.0:
        return x, None
    if hi == lo:
        raise DataError("all covariate values are equal; cannot rescale", code="degenerate-covariate")
    rmap = RescaleMap(lo, hi)
    return rmap.to_unit(x), rmap


def ingest_text(text: str, path: str | None = None) -> Ingested:
    x, y, counts = parse_rows(text)
    xu, rmap = _rescale(x)
    data = DoseResponseData.from_pairs(xu, y)
    trials = None
    if counts is not None:
        order = np.argsort(xu, kind="stable")
        _, start = np.unique(xu[order], return_index=True)
        trials = np.add.reduceat(counts[order], start)
    return Ingested(data, rmap, trials, path)


def ingest_csv(path) -> Ingested:
    """Read a long-format ``x,y[,count]`` file, grouping rows by exact x value."""
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}", code="missing-file") from None
    return ingest_text(text, str(path))


def load_dataset(name: str) -> Ingested:
    """One of the bundled synthetic datasets (``gene_like`` or ``queue_like``)."""
    if name not in DATASETS:
        raise UsageError(f"unknown dataset {name!r}", code="invalid-dataset")
    text = resources.files("pvthreshold").joinpath("data", f"{name}.csv").read_text()
    return ingest_text(text, name)


def pvalues_csv(series: PValueSeries) -> str:
    """``x,y`` rows with exact float reprs, readable back by :func:`ingest_csv`."""
    lines = ["x,y"]
    lines += [f"{float(a)!r},{float(b)!r}" for a, b in zip(series.x, series.z)]
    return "\n".join(lines) + "\n"


def write_pvalues(series: PValueSeries, path) -> None:
    with open(path, "w") as fh:
        fh.write(pvalues_csv(series))
