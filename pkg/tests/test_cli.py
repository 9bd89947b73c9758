from __future__ import annotations

import json

import numpy as np
import pytest
from scipy import stats

from pvthreshold import DataError, UsageError, load_dataset
from pvthreshold.cli import main
from pvthreshold.csvio import RescaleMap, ingest_csv, ingest_text, parse_rows, pvalues_csv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), (json.loads(err) if err else None)


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestIngest:
    def test_grouping(self):
        ing = ingest_text("x,y\n0.2,1.0\n0.2,3.0\n0.6,5.0\n0.6,7.0\n")
        assert ing.data.x.tolist() == [0.2, 0.6]
        assert [r.tolist() for r in ing.data.responses] == [[1.0, 3.0], [5.0, 7.0]]
        assert ing.rescale is None

    def test_unsorted_rows(self):
        ing = ingest_text("x,y\n0.6,5\n0.2,1\n0.6,7\n0.2,3\n")
        assert ing.data.x.tolist() == [0.2, 0.6]
        assert ing.data.means.tolist() == [2.0, 6.0]

    def test_gene_rescale(self):
        ing = load_dataset("gene_like")
        assert ing.rescale == RescaleMap(0.0, 72.0)
        assert ing.data.x[0] == 0.0 and ing.data.x[-1] == 1.0
        assert ing.original_x(ing.data.x[1]) == pytest.approx(0.5)

    def test_header_only(self, tmp_path):
        with pytest.raises(DataError) as e:
            ingest_csv(write(tmp_path, "x,y\n"))
        assert e.value.code == "empty-file"

    def test_empty(self, tmp_path):
        with pytest.raises(DataError) as e:
            ingest_csv(write(tmp_path, ""))
        assert e.value.code == "empty-file"

    @pytest.mark.parametrize(
        "text,code,line",
        [
            ("x,y\n0.1,2\n0.2,abc\n", "non-numeric", 3),
            ("x,y\n0.1,2\n0.2\n", "parse-error", 3),
            ("a,b\n0.1,2\n", "parse-error", 1),
            ("x,y\n0.1,nan\n", "non-numeric", 2),
        ],
    )
    def test_errors_carry_line(self, text, code, line):
        with pytest.raises(DataError) as e:
            parse_rows(text)
        assert e.value.code == code
        assert e.value.details["line"] == line
        assert f"line {line}" in str(e.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(UsageError) as e:
            ingest_csv(tmp_path / "nope.csv")
        assert e.value.code == "missing-file"

    def test_count_column(self):
        ing = ingest_text("x,y,count\n0.1,3,10\n0.1,4,10\n0.5,9,10\n")
        assert ing.trials.tolist() == [20.0, 10.0]


def four_point_csv(tmp_path):
    # one replicate per dose with unit noise: the p-values are 0.6, 0.5, 0.1 and ~0
    z = [0.6, 0.5, 0.1]
    y = [float(stats.norm.isf(v)) for v in z] + [40.0]
    rows = "".join(f"{x},{v!r}\n" for x, v in zip([0.2, 0.4, 0.6, 0.8], y))
    return write(tmp_path, "x,y\n" + rows)


class TestEstimate:
    def test_four_point(self, tmp_path, capsys):
        code, out, _ = run(capsys, "estimate", four_point_csv(tmp_path), "--tau", 0, "--variance", "known", "--sigma", 1)
        assert code == 0
        assert out["d_hat"] == 0.4
        assert out["criterion"] == pytest.approx(0.02, abs=1e-12)
        assert out["method"] == "known-tau"

    def test_methods(self, capsys):
        for method in ("method1", "method2"):
            code, out, _ = run(capsys, "estimate", "dataset:queue_like", "--method", method)
            assert code == 0 and out["method"] == method
            assert 0.1 < out["d_hat"] < 0.25 and out["tau_hat"] is not None

    def test_other_fitters(self, capsys):
        for fitter in ("stump3", "sigmoid"):
            code, out, _ = run(capsys, "estimate", "dataset:queue_like", "--fitter", fitter)
            assert code == 0 and out["fitter"] == fitter

    def test_composite(self, capsys):
        code, out, _ = run(capsys, "estimate", "dataset:queue_like", "--fitter", "composite", "--zeta0", 3.0)
        assert code == 0
        code, _, err = run(capsys, "estimate", "dataset:queue_like", "--fitter", "composite")
        assert code == 2 and err["error"] == "missing-zeta0"

    def test_rescale_transparency(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        x = np.repeat(np.arange(1, 21) / 21, 4)
        y = np.where(x > 0.5, x - 0.5, 0.0) + 0.05 * rng.standard_normal(x.size)
        unit = write(tmp_path, "x,y\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(x, y)), "unit.csv")
        wide = write(tmp_path, "x,y\n" + "".join(f"{float(a * 21 * 10)!r},{float(b)!r}\n" for a, b in zip(x, y)), "wide.csv")
        _, a, _ = run(capsys, "estimate", unit, "--tau", 0)
        _, b, _ = run(capsys, "estimate", wide, "--tau", 0)
        # covariate 10..200 maps to (x - 10) / 190 on the unit scale
        assert b["rescale"] == {"lo": 10.0, "hi": 200.0}
        assert b["d_hat_original"] == pytest.approx(a["d_hat"] * 210, rel=1e-12)

    def test_emit_pvalues_round_trip(self, tmp_path, capsys):
        path = tmp_path / "p.csv"
        code, out, _ = run(capsys, "estimate", "dataset:queue_like", "--emit-pvalues", path)
        assert code == 0
        ing = ingest_csv(path)
        assert [r[0] for r in ing.data.responses] == [row["z"] for row in out["pvalues"]]
        assert ing.data.x.tolist() == [row["x"] for row in out["pvalues"]]

    def test_pvalues_csv_exact(self):
        from pvthreshold import PValueSeries

        s = PValueSeries([0.1, 1 / 3], [0.1 + 0.2, 2 / 3])
        back = ingest_text(pvalues_csv(s)).data
        assert back.x.tolist() == s.x.tolist()
        assert [r[0] for r in back.responses] == s.z.tolist()

    def test_binomial(self, tmp_path, capsys):
        p = write(tmp_path, "x,y,count\n0.2,2,20\n0.4,1,20\n0.6,12,20\n0.8,18,20\n")
        for dist in ("binomial-exact", "binomial-normal"):
            code, out, _ = run(capsys, "estimate", p, "--dist", dist, "--p0", 0.1)
            assert code == 0 and out["d_hat"] == 0.4

    def test_binomial_non_integer(self, tmp_path, capsys):
        p = write(tmp_path, "x,y,count\n0.2,2.5,20\n0.4,3,20\n")
        code, _, err = run(capsys, "estimate", p, "--dist", "binomial-exact", "--p0", 0.1)
        assert code == 2 and err["error"] == "non-integer-count"


class TestMulti:
    def test_minmax_gene(self, capsys):
        code, out, _ = run(capsys, "multi", "dataset:gene_like", "--tau-range", 3.9, 4.1, "--max-range", 4.1, 4.5)
        assert code == 0
        lo, hi = out["min"]["interval_original"], out["max"]["interval_original"]
        assert lo[1] < hi[0]
        assert out["min"]["level"] < out["max"]["level"]

    def test_overlap_exit_2(self, capsys):
        code, _, err = run(capsys, "multi", "dataset:gene_like", "--tau-range", 3.9, 4.3, "--max-range", 4.1, 4.5)
        assert code == 2 and err["error"] == "overlapping-ranges"

    def test_interval(self, capsys):
        code, out, _ = run(capsys, "multi", "dataset:gene_like", "--fitter", "interval", "--tau", 3.97)
        assert code == 0 and out["method"] == "interval"


class TestSimulateAndCi:
    def test_simulate_files(self, tmp_path, capsys):
        stem = tmp_path / "sim"
        code, out, _ = run(capsys, "simulate", "--model", "M1", "--m", 5, "--n", 10, "--sigma", 0.1,
                           "--reps", 50, "--out", stem)
        assert code == 0
        assert out["cells"][0]["model"] == "M1"
        assert json.loads((tmp_path / "sim.json").read_text())["cells"] == out["cells"]
        assert (tmp_path / "sim.csv").read_text().startswith("model,m,n")

    def test_allocate(self, tmp_path, capsys):
        code, out, _ = run(capsys, "allocate", "--model", "M1", "--sigma", 0.1, "--budget", 12,
                           "--reps", 20, "--out", tmp_path / "a")
        assert code == 0 and {"m", "n", "rmse_d"} <= set(out["best"])

    def test_ci(self, tmp_path, capsys):
        code, out, _ = run(capsys, "ci", "dataset:queue_like", "--m-n", 50, "--B", 200, "--out", tmp_path / "ci.json")
        assert code == 0
        assert out["lower"] <= out["d_hat"] <= out["upper"]
        assert json.loads((tmp_path / "ci.json").read_text())["upper"] == out["upper"]


class TestExitCodes:
    def test_usage(self, capsys):
        assert run(capsys)[0] == 2
        assert run(capsys, "estimate")[0] == 2
        assert run(capsys, "simulate", "--model", "M1")[0] == 2
        code, _, err = run(capsys, "estimate", "dataset:queue_like", "--variance", "known")
        assert code == 2 and err["error"] == "invalid-sigma"

    def test_data(self, tmp_path, capsys):
        code, _, err = run(capsys, "estimate", write(tmp_path, "x,y\n0.1,oops\n"))
        assert code == 3 and err["error"] == "non-numeric"

    def test_numeric(self, tmp_path, capsys):
        # only two doses carry spread, so most subsamples lack a variance estimate
        rows = ["x,y"]
        for i in range(1, 41):
            spread = (-0.1, 0.1) if i <= 2 else (0.0, 0.0)
            rows += [f"{i / 41!r},{s!r}" for s in spread]
        code, _, err = run(capsys, "ci", write(tmp_path, "\n".join(rows) + "\n"), "--m-n", 20, "--B", 100, "--tau", 0)
        assert code == 4 and err["error"] == "subsample-failures"
