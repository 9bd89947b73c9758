"""``pvthreshold`` command line: estimate, multi, simulate, allocate, ci.

Results are printed as JSON on stdout.  Failures print an error object
on stderr and exit with 2 (usage), 3 (data) or 4 (numeric).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .baseline import (
    TauSearch,
    estimate_composite,
    estimate_interval,
    estimate_known_tau,
    estimate_method1,
    estimate_method2,
    estimate_minmax_regions,
)
from .csvio import ingest_csv, load_dataset, write_pvalues
from .errors import ThresholdError, UsageError
from .fitters import fit_sigmoid, fit_stump_adaptive, fit_stump_fixed
from .pvalues import PValueSeries, VarianceModel, pvalues_binomial
from .simulation import (
    ESTIMATORS,
    MODELS,
    SimulationConfig,
    allocation_sweep,
    run_grid,
    table4,
    table_configs,
)
from .subsampling import SubsampleConfig, subsample_ci

FITTERS = ("stump", "stump3", "sigmoid", "composite", "interval", "minmax")
DISTS = ("normal", "t", "binomial-normal", "binomial-exact")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, code="usage")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _variance(args) -> VarianceModel:
    use_t = args.dist == "t"
    if args.variance == "known":
        if args.sigma is None:
            raise UsageError("--variance known needs --sigma", code="invalid-sigma")
        if use_t:
            raise UsageError("the t reference needs an estimated variance", code="invalid-variance")
        return VarianceModel.known(args.sigma)
    if args.variance == "pooled":
        return VarianceModel.pooled(use_t)
    return VarianceModel.per_dose(use_t)


def _load(args):
    if args.input.startswith("dataset:"):
        return load_dataset(args.input.split(":", 1)[1])
    return ingest_csv(args.input)


def _binomial_series(ing, args) -> PValueSeries:
    if args.p0 is None:
        raise UsageError("binomial p-values need --p0", code="invalid-p0")
    data = ing.data
    # each dose is one success count; repeated rows at a dose are summed
    successes = [float(np.sum(r)) for r in data.responses]
    if ing.trials is not None:
        trials = ing.trials
    elif args.trials is not None:
        trials = np.asarray(data.counts) * args.trials
    else:
        raise UsageError("binomial p-values need a count column or --trials", code="invalid-m")
    return pvalues_binomial(list(zip(data.x, successes)), trials, args.p0, exact=args.dist == "binomial-exact")


def _fit_series(series, fitter, zeta_levels=None):
    if fitter == "stump":
        return fit_stump_fixed(series, *(zeta_levels or (0.5, 0.0)))
    if fitter == "stump3":
        return fit_stump_adaptive(series)
    if fitter == "sigmoid":
        return fit_sigmoid(series)
    raise UsageError(f"fitter {fitter!r} is not available for binomial data", code="invalid-fitter")


def _fit_info(fit) -> dict:
    out = {}
    for name in ("alpha_level", "beta_level", "steepness", "unidentified"):
        if hasattr(fit, name):
            out[name] = getattr(fit, name)
    return out


def _pvalue_rows(series: PValueSeries) -> list:
    return [{"x": float(a), "z": float(b)} for a, b in zip(series.x, series.z)]


def cmd_estimate(args) -> dict:
    ing = _load(args)
    report = {"input": ing.path, "fitter": args.fitter, "rescale": None if ing.rescale is None else ing.rescale.to_dict()}
    series = None

    if args.dist.startswith("binomial"):
        series = _binomial_series(ing, args)
        fit = _fit_series(series, args.fitter)
        report.update(d_hat=fit.d_hat, tau_hat=args.p0, method="known-tau", variance=series.method,
                      criterion=fit.sse, **_fit_info(fit))
    elif args.fitter in ("interval", "minmax"):
        report.update(_regions(ing, args))
    else:
        variance = _variance(args)
        est = _estimate(ing, args, variance)
        series = est.pvalues
        report.update(est.to_dict())
        report.update(_fit_info(est.fit))

    if "d_hat" in report:
        report["d_hat_original"] = ing.original_x(report["d_hat"])
    if args.emit_pvalues and series is not None:
        write_pvalues(series, args.emit_pvalues)
        report["pvalues"] = _pvalue_rows(series)
        report["pvalues_csv"] = args.emit_pvalues
    return report


def _estimate(ing, args, variance):
    data = ing.data
    if args.fitter == "composite":
        if args.zeta0 is None:
            raise UsageError("the composite fitter needs --zeta0", code="missing-zeta0")
        return estimate_composite(data, args.zeta0, variance)
    if args.tau is not None:
        return estimate_known_tau(data, args.tau, variance, args.fitter)
    if args.method == "method2":
        est = estimate_method2(data, variance)
    else:
        est = estimate_method1(data, variance, _search(args.tau_range, args.grid_size))
    if args.fitter == "stump":
        return est
    fit = _fit_series(est.pvalues, args.fitter)
    return type(est)(fit.d_hat, est.tau_hat, est.method, est.variance, fit.sse, est.tau_range, fit, est.pvalues)


def _search(pair, grid_size):
    return TauSearch(None if pair is None else pair[0], None if pair is None else pair[1], grid_size)


def _regions(ing, args) -> dict:
    variance = _variance(args)
    if args.fitter == "interval":
        reg = estimate_interval(ing.data, variance, args.tau, _search(args.tau_range, args.grid_size))
        out = {"method": "interval", "variance": variance.tag, "interval": reg.to_dict()}
        out["interval_original"] = [
            None if v is None else ing.original_x(v) for v in (reg.interval.a_hat, reg.interval.b_hat)
        ]
        return out
    regions = estimate_minmax_regions(
        ing.data, variance,
        None if args.tau_range is None else _search(args.tau_range, args.grid_size),
        None if args.max_range is None else _search(args.max_range, args.grid_size),
    )
    out = {"method": "minmax", "variance": variance.tag}
    out.update(regions.to_dict())
    for side in ("min", "max"):
        iv = getattr(regions, side).interval
        out[side]["interval_original"] = [None if v is None else ing.original_x(v) for v in (iv.a_hat, iv.b_hat)]
    return out


def cmd_simulate(args) -> dict:
    if args.table:
        configs = table_configs(args.table, args.reps, args.seed)
        if args.variance == "known":
            configs = [replace(c, variance=VarianceModel.known(c.sigma)) for c in configs]
        label = f"table{args.table}"
    else:
        missing = [k for k in ("model", "m", "n", "sigma") if getattr(args, k) is None]
        if missing:
            raise UsageError(f"missing --{', --'.join(missing)}", code="usage")
        variance = VarianceModel.known(args.sigma) if args.variance == "known" else VarianceModel.pooled()
        configs = [SimulationConfig(args.model, args.m, args.n, args.sigma, args.estimator,
                                    args.reps, args.seed, variance)]
        label = "simulation"
    report = run_grid(configs, label=label, seed=args.seed)
    paths = report.write(args.out)
    out = report.to_dict()
    out["files"] = list(paths)
    return out


def cmd_allocate(args) -> dict:
    if args.table4:
        report = table4(args.reps, args.seed, args.rule)
    else:
        missing = [k for k in ("model", "sigma", "budget") if getattr(args, k) is None]
        if missing:
            raise UsageError(f"missing --{', --'.join(missing)}", code="usage")
        report = allocation_sweep(args.model, args.sigma, args.budget, args.estimator, args.reps,
                                  args.seed, args.rule)
    paths = report.write(args.out)
    out = report.to_dict()
    out["files"] = list(paths)
    return out


def cmd_ci(args) -> dict:
    ing = _load(args)
    variance = _variance(args)
    config = SubsampleConfig(args.m_n, args.B, args.variant, args.level, args.seed)
    ci = subsample_ci(ing.data, config, variance, args.tau, _search(args.tau_range, args.grid_size))
    out = ci.to_dict()
    if ing.rescale is not None:
        out["rescale"] = ing.rescale.to_dict()
        out["original"] = [ing.original_x(ci.lower), ing.original_x(ci.upper)]
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(ci.to_json())
    return out


def _data_options(p, fitters=FITTERS, default_fitter="stump"):
    p.add_argument("input", help="CSV path with header x,y[,count], or dataset:gene_like / dataset:queue_like")
    p.add_argument("--tau", type=float, help="known baseline level (skips baseline estimation)")
    p.add_argument("--method", choices=("method1", "method2"), default="method1",
                   help="baseline estimation when --tau is not given")
    p.add_argument("--variance", choices=("known", "pooled", "per-dose"), default="pooled")
    p.add_argument("--sigma", type=float, help="noise SD for --variance known")
    p.add_argument("--dist", choices=DISTS, default="normal", help="reference distribution of the test")
    p.add_argument("--fitter", choices=fitters, default=default_fitter)
    p.add_argument("--zeta0", type=float, help="crossing level for the composite fitter")
    p.add_argument("--p0", type=float, help="baseline success rate for binomial data")
    p.add_argument("--trials", type=int, help="trials per row when the file has no count column")
    p.add_argument("--tau-range", type=float, nargs=2, metavar=("LO", "HI"),
                   help="baseline search range (min side for minmax)")
    p.add_argument("--max-range", type=float, nargs=2, metavar=("LO", "HI"), help="max-side search range")
    p.add_argument("--grid-size", type=int, default=2001)
    p.add_argument("--emit-pvalues", metavar="PATH", help="also write the per-dose p-values as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pvthreshold", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    est = sub.add_parser("estimate", help="threshold estimate for one dataset")
    _data_options(est)

    multi = sub.add_parser("multi", help="baseline interval or min/max regions")
    _data_options(multi, ("interval", "minmax"), "minmax")

    sim = sub.add_parser("simulate", help="Monte Carlo RMSE for one cell or a preset table")
    sim.add_argument("--model", choices=sorted(MODELS))
    sim.add_argument("--m", type=int)
    sim.add_argument("--n", type=int)
    sim.add_argument("--sigma", type=float)
    sim.add_argument("--estimator", choices=ESTIMATORS, default="stump")
    sim.add_argument("--variance", choices=("known", "pooled"), default="pooled")
    sim.add_argument("--reps", type=int, default=2000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--table", type=int, choices=(1, 2, 3, 5, 6))
    for t in (1, 2, 3, 5, 6):
        sim.add_argument(f"--table{t}", dest="table", action="store_const", const=t)
    sim.add_argument("--out", default="simulation", help="output stem for .json and .csv")

    al = sub.add_parser("allocate", help="RMSE over (m, n) pairs for a fixed budget")
    al.add_argument("--model", choices=sorted(MODELS))
    al.add_argument("--sigma", type=float)
    al.add_argument("--budget", type=int)
    al.add_argument("--estimator", choices=ESTIMATORS, default="method1")
    al.add_argument("--rule", choices=("budget", "round"), default="budget")
    al.add_argument("--reps", type=int, default=2000)
    al.add_argument("--seed", type=int, default=0)
    al.add_argument("--table4", action="store_true")
    al.add_argument("--out", default="allocation")

    ci = sub.add_parser("ci", help="subsampling confidence interval for the threshold")
    ci.add_argument("input")
    ci.add_argument("--m-n", type=int, required=True, dest="m_n", help="doses per subsample")
    ci.add_argument("--B", type=int, default=1000)
    ci.add_argument("--variant", choices=("1a", "1b", "2"), default="1a")
    ci.add_argument("--level", type=float, default=0.95)
    ci.add_argument("--seed", type=int, default=0)
    ci.add_argument("--tau", type=float)
    ci.add_argument("--variance", choices=("known", "pooled", "per-dose"), default="pooled")
    ci.add_argument("--sigma", type=float)
    ci.add_argument("--dist", choices=("normal", "t"), default="normal")
    ci.add_argument("--tau-range", type=float, nargs=2, metavar=("LO", "HI"))
    ci.add_argument("--grid-size", type=int, default=2001)
    ci.add_argument("--out")
    return parser


COMMANDS = {
    "estimate": cmd_estimate,
    "multi": cmd_estimate,
    "simulate": cmd_simulate,
    "allocate": cmd_allocate,
    "ci": cmd_ci,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS), code="usage")
        result = COMMANDS[args.command](args)
    except ThresholdError as exc:
        sys.stderr.write(_dumps(exc.to_dict()))
        return exc.exit_status
    sys.stdout.write(_dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
