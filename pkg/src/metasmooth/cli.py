"""Command-line interface: ``metasmooth <subcommand> ...``.

Exit status is 0 on success, 1 on usage or input errors, and 2 when
``estimate`` cannot produce parameters.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from .bench import BenchmarkConfig, default_jobs, run_benchmark
from .errors import EstimationFailed, MetaSmoothError
from .estimators import ESTIMATORS, estimate
from .forecast import forecast_experiment, forecast_path, write_forecast_csv
from .model import ReducedParams, StructuralParams, params_from_json, structural_to_reduced
from .simulate import SimulationSpec, difference, preset, read_csv, simulate, write_csv
from .vma_ml import MLConfig

logger = logging.getLogger("metasmooth")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _load_params(path):
    try:
        return params_from_json(_load_json(path))
    except (ValueError, MetaSmoothError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_series(path):
    try:
        return read_csv(sys.stdin if path == "-" else path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _emit_json(obj, path):
    text = json.dumps(obj, indent=2, default=_json_default)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _ml_config(args):
    kw = {"init": getattr(args, "init", "moment") or "moment"}
    if getattr(args, "max_iter", None):
        kw["max_iterations"] = args.max_iter
    return MLConfig(**kw)


def _structural_from_args(args) -> StructuralParams:
    if args.params:
        p = _load_params(args.params)
        if not isinstance(p, StructuralParams):
            raise UsageError(f"{args.params}: simulation needs structural parameters (sigma_eta/sigma_eps)")
        return p
    if args.model is None:
        raise UsageError("give --model or --params")
    return preset(args.model)


def cmd_simulate(args):
    params = _structural_from_args(args)
    levels = simulate(SimulationSpec(params, args.T, args.seed))
    series = difference(levels) if args.differences else levels
    if args.out in (None, "-"):
        write_csv(series, sys.stdout)
    else:
        write_csv(series, args.out)
    return 0


def _differences_from(args):
    series = _load_series(args.input)
    if args.difference:
        if series.kind != "levels":
            raise UsageError(f"{args.input}: --difference given but the file already holds differences")
        return difference(series)
    if series.kind != "differences":
        raise UsageError(f"{args.input}: file holds levels; pass --difference")
    return series


def cmd_estimate(args):
    Z = _differences_from(args)
    try:
        est = estimate(Z, args.estimator, fallback=args.fallback, ml_config=_ml_config(args))
    except EstimationFailed as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 2
    except MetaSmoothError as exc:
        print(f"estimation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = est.to_json()
    report["columns"] = list(Z.columns)
    _emit_json(report, args.out)
    return 0


def cmd_forecast(args):
    levels = _load_series(args.input)
    if levels.kind != "levels":
        raise UsageError(f"{args.input}: forecasting needs levels, got differences")
    if args.params:
        p = _load_params(args.params)
        if isinstance(p, StructuralParams):
            theta, source = structural_to_reduced(p).theta, "structural parameters"
        elif isinstance(p, ReducedParams):
            theta, source = p.theta, "reduced parameters"
        else:
            raise UsageError(f"{args.params}: need structural or reduced parameters")
    else:
        try:
            est = estimate(difference(levels), args.estimator, fallback=args.fallback, ml_config=_ml_config(args))
        except MetaSmoothError as exc:
            print(f"estimation failed: {exc}", file=sys.stderr)
            return 2
        theta, source = est.reduced.theta, est.used
    if theta.shape[0] != levels.n:
        raise UsageError(f"parameters are {theta.shape[0]}-dimensional, data has {levels.n} columns")
    y_next = forecast_path(levels, theta)[-1]
    _emit_json({
        "columns": list(levels.columns),
        "forecast": y_next.tolist(),
        "theta": theta.tolist(),
        "source": source,
        "observations": levels.T,
    }, args.out)
    return 0


def cmd_forecast_experiment(args):
    ests = _str_list(args.estimators)
    rows = forecast_experiment(args.model, T=args.T, R=args.reps, estimators=ests, seed=args.seed,
                               ml_config=_ml_config(args))
    if args.out in (None, "-"):
        write_forecast_csv(rows, sys.stdout)
    else:
        write_forecast_csv(rows, args.out)
    return 0


def cmd_benchmark(args):
    if args.config:
        obj = _load_json(args.config)
        if not isinstance(obj, dict):
            raise UsageError(f"{args.config}: benchmark config must be a JSON object")
    else:
        obj = {}
    for key, val in (("models", args.models), ("sample_sizes", args.T), ("replications", args.reps),
                     ("estimators", args.estimators and _str_list(args.estimators)),
                     ("master_seed", args.seed), ("output", args.out)):
        if val is not None:
            obj[key] = val
    if args.fallback:
        obj["fallback"] = True
    obj["jobs"] = args.jobs
    try:
        cfg = BenchmarkConfig.from_json(obj)
    except (ValueError, TypeError, MetaSmoothError) as exc:
        raise UsageError(f"invalid benchmark configuration: {exc}") from None
    if cfg.output == "-":
        cfg.output = None
    result = run_benchmark(cfg)
    if cfg.output is None:
        sys.stdout.write(result.to_csv())
        table_stream = sys.stderr
    else:
        table_stream = sys.stdout
    if args.timing_out:
        with open(args.timing_out, "w", newline="") as fh:
            fh.write(result.timing_csv())
    if not args.quiet:
        print(result.table(), file=table_stream)
    return 0


def build_parser():
    p = _Parser(prog="metasmooth", description="Multivariate exponential smoothing: META/ML estimation, "
                                               "simulation, forecasting and benchmarks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate levels from a preset or parameter file")
    s.add_argument("--model", type=int, choices=[1, 2, 3, 4])
    s.add_argument("--params", help="JSON file with sigma_eta/sigma_eps")
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--differences", action="store_true", help="write z_t instead of y_t")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate reduced/structural parameters from a CSV")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--difference", action="store_true", help="input holds levels; difference it first")
    e.add_argument("--estimator", choices=ESTIMATORS, default="meta")
    e.add_argument("--init", choices=["moment", "meta"], default="moment", help="ML starting point")
    e.add_argument("--max-iter", type=int)
    e.add_argument("--fallback", action="store_true", help="use the moment estimator if META fails")
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    f = sub.add_parser("forecast", help="one-step-ahead EWMA forecast from a level CSV")
    f.add_argument("--in", dest="input", required=True)
    f.add_argument("--params", help="JSON with structural or reduced parameters")
    f.add_argument("--estimator", choices=ESTIMATORS, default="meta")
    f.add_argument("--init", choices=["moment", "meta"], default="moment")
    f.add_argument("--max-iter", type=int)
    f.add_argument("--fallback", action="store_true")
    f.add_argument("--out")
    f.set_defaults(func=cmd_forecast)

    x = sub.add_parser("forecast-experiment", help="forecast-error data for boxplots")
    x.add_argument("--model", type=int, choices=[1, 2, 3, 4], required=True)
    x.add_argument("--T", type=int, default=200)
    x.add_argument("--reps", type=int, default=200)
    x.add_argument("--estimators", default="meta,ml,true")
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--init", choices=["moment", "meta"], default="moment")
    x.add_argument("--max-iter", type=int)
    x.add_argument("--out")
    x.set_defaults(func=cmd_forecast_experiment)

    b = sub.add_parser("benchmark", help="Monte Carlo accuracy/timing table")
    b.add_argument("--config", help="JSON benchmark configuration; flags override its fields")
    b.add_argument("--models", type=_int_list)
    b.add_argument("--T", type=_int_list)
    b.add_argument("--reps", type=int)
    b.add_argument("--estimators")
    b.add_argument("--seed", type=int)
    b.add_argument("--fallback", action="store_true")
    b.add_argument("--jobs", type=int, default=default_jobs())
    b.add_argument("--out", help="CSV path (default: stdout)")
    b.add_argument("--timing-out", help="also write per-cell mean seconds to this CSV")
    b.add_argument("--quiet", action="store_true", help="do not print the summary table")
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return 1
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MetaSmoothError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
