"""Command-line interface.

Subcommands:

* ``simulate``    draw one dataset from a canonical scenario -> CSV
* ``prepare``     align raw price CSVs and build a model-ready dataset
* ``fit``         fit one model on a prepared dataset -> report
* ``select``      full workflow: fit, test, select, refit -> report
* ``montecarlo``  run an experiment grid -> tables + structured results
* ``report``      re-emit an existing report in another format

Every subcommand accepts ``--config FILE`` with JSON values for its
options; explicit flags override the file.  Exit codes: 0 success, 1 usage
or data errors, 2 numerical failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .exceptions import DataError, GarchXError, NumericalError
from .io import (
    PreparedData,
    emit_report,
    fit_summary,
    ingest_csv,
    read_prepared_csv,
    read_report,
    selection_report,
    transform_series,
    write_prepared_csv,
    SCHEMA_VERSION,
)
from .model import ModelSpec
from .montecarlo import ExperimentPlan, format_tables, run_experiment
from .qmle import FitOptions, fit_qmle
from .selection import select_variables
from .simulate import ShockDist, scenario_config, simulate_garchx


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems via exception, not exit(2)."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="garchx", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="command",
                                parser_class=_Parser)

    sim = sub.add_parser("simulate",
                         help="simulate one dataset from a canonical scenario")
    sim.add_argument("--config", help="JSON file with option values")
    sim.add_argument("--scenario", type=int)
    sim.add_argument("--d", type=int)
    sim.add_argument("--shock", help="normal, t5, t7, ...")
    sim.add_argument("--n", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--burnin", type=int)
    sim.add_argument("--gamma", help="comma-separated coefficients (overrides default)")
    sim.add_argument("--out", help="output CSV path")

    prep = sub.add_parser("prepare",
                          help="build a model-ready dataset from raw CSVs")
    prep.add_argument("--config", help="JSON file with option values")
    prep.add_argument("--response", help="CSV file with the response prices")
    prep.add_argument("--covariate", action="append",
                      help="FILE:TRANSFORM (level, abs_log_return_x100, "
                           "squared_log_return_x100); repeatable")
    prep.add_argument("--date-column")
    prep.add_argument("--no-demean", action="store_const", const=False,
                      dest="demean")
    prep.add_argument("--out", help="output CSV path")

    fit = sub.add_parser("fit",
                         help="fit one model on a prepared dataset")
    fit.add_argument("--config", help="JSON file with option values")
    fit.add_argument("--data", help="prepared CSV (eps + covariate columns)")
    fit.add_argument("--p", type=int)
    fit.add_argument("--q", type=int)
    fit.add_argument("--format", choices=("structured", "json", "dsv"))
    fit.add_argument("--out", help="report path ('-' for stdout)")

    sel = sub.add_parser("select",
                         help="fit, test each covariate, select, refit")
    sel.add_argument("--config", help="JSON file with option values")
    sel.add_argument("--data", help="prepared CSV (eps + covariate columns)")
    sel.add_argument("--p", type=int)
    sel.add_argument("--q", type=int)
    sel.add_argument("--alpha", type=float)
    sel.add_argument("--method", choices=("by", "by_fdr", "bonferroni"))
    sel.add_argument("--format", choices=("structured", "json", "dsv"))
    sel.add_argument("--out", help="report path ('-' for stdout)")

    mc = sub.add_parser("montecarlo",
                        help="run a Monte Carlo experiment grid")
    mc.add_argument("--config", help="JSON file with option values")
    mc.add_argument("--scenario", type=int)
    mc.add_argument("--d", type=int)
    mc.add_argument("--shocks", help="comma-separated codes, e.g. normal,t5,t7")
    mc.add_argument("--sample-sizes", help="comma-separated, e.g. 500,1000,5000")
    mc.add_argument("--reps", "--replications", dest="replications", type=int)
    mc.add_argument("--alpha", type=float)
    mc.add_argument("--method", choices=("by", "by_fdr", "bonferroni"))
    mc.add_argument("--seed", "--master-seed", dest="master_seed", type=int)
    mc.add_argument("--burnin", type=int)
    mc.add_argument("--gamma", help="comma-separated or 'null' for the default")
    mc.add_argument("--workers", type=int)
    mc.add_argument("--out-tables", help="tables path ('-' for stdout)")
    mc.add_argument("--out-json", help="structured results path")

    rep = sub.add_parser("report",
                         help="re-emit a structured report in another format")
    rep.add_argument("--config", help="JSON file with option values")
    rep.add_argument("--in", dest="in_path", help="existing report file")
    rep.add_argument("--format", choices=("structured", "json", "dsv"))
    rep.add_argument("--out", help="report path ('-' for stdout)")
    return parser


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise DataError(f"config {path} must hold a JSON object")
    return config


def _resolve(args, defaults: dict) -> None:
    """Fill unset options from the config file, then hard defaults."""
    config = _load_config(getattr(args, "config", None))
    unknown = set(config) - set(defaults) - {"fit"}
    if unknown:
        raise DataError(f"unknown config keys: {sorted(unknown)}")
    for key, hard in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, config.get(key, hard))
    args.fit_config = config.get("fit", {})


_FLAG_NAMES = {"in_path": "in"}


def _require(args, *keys) -> None:
    for key in keys:
        if getattr(args, key) is None:
            flag = _FLAG_NAMES.get(key, key.replace("_", "-"))
            raise _UsageError(f"garchx: --{flag} is required")


def _parse_floats(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _write_text(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _fit_options(args) -> FitOptions:
    fit_config = getattr(args, "fit_config", {}) or {}
    try:
        return FitOptions(**fit_config)
    except TypeError as exc:
        raise DataError(f"bad fit options in config: {exc}") from exc


def _norm_method(method: str) -> str:
    return "by_fdr" if method == "by" else method


def _norm_format(fmt: str) -> str:
    return "json" if fmt == "structured" else fmt


def _cmd_simulate(args) -> int:
    _resolve(args, {
        "scenario": 1, "d": 5, "shock": "normal", "n": None, "seed": 0,
        "burnin": 500, "gamma": None, "out": None,
    })
    _require(args, "n", "out")
    gamma = None if args.gamma in (None, "null", "") else np.asarray(
        _parse_floats(args.gamma)
    )
    config = scenario_config(args.scenario, args.d, ShockDist.parse(args.shock),
                             gamma=gamma)
    data = simulate_garchx(config, args.n, seed=args.seed, burnin=args.burnin)
    names = tuple(f"x{k}" for k in range(1, data.d + 1))
    write_prepared_csv(args.out, PreparedData(dataset=data, names=names, dates=()))
    print(f"wrote n={data.n} d={data.d} scenario={args.scenario} "
          f"shock={config.shocks.code} to {args.out}")
    return 0


def _cmd_prepare(args) -> int:
    _resolve(args, {
        "response": None, "covariate": None, "date_column": "Date",
        "demean": True, "out": None,
    })
    _require(args, "response", "out")
    cov_args = args.covariate or []
    files = [args.response]
    pairs = []
    for item in cov_args:
        file_part, sep, transform = str(item).rpartition(":")
        if not sep or not file_part:
            raise DataError(
                f"covariate {item!r} must look like FILE:TRANSFORM"
            )
        files.append(file_part)
        pairs.append((Path(file_part).stem, transform))
    table = ingest_csv(files, date_column=args.date_column)
    response_name = Path(args.response).stem
    prepared = transform_series(table, response_name, pairs, demean=args.demean)
    write_prepared_csv(args.out, prepared)
    print(f"wrote n={prepared.dataset.n} d={prepared.dataset.d} "
          f"({len(prepared.dates)} dates) to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    _resolve(args, {"data": None, "p": 1, "q": 1, "format": "json", "out": "-"})
    _require(args, "data")
    prepared = read_prepared_csv(args.data)
    spec = ModelSpec(p=args.p, q=args.q, d=prepared.dataset.d)
    result = fit_qmle(spec, prepared.dataset, _fit_options(args))
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "fit_report",
        "covariates": list(prepared.names),
        "fit": fit_summary(result),
    }
    _write_text(emit_report(report, _norm_format(args.format)), args.out)
    return 0


def _cmd_select(args) -> int:
    _resolve(args, {
        "data": None, "p": 1, "q": 1, "alpha": 0.05, "method": "by_fdr",
        "format": "json", "out": "-",
    })
    _require(args, "data")
    prepared = read_prepared_csv(args.data)
    spec = ModelSpec(p=args.p, q=args.q, d=prepared.dataset.d)
    method = _norm_method(args.method)
    outcome = select_variables(
        spec, prepared.dataset, alpha=args.alpha, method=method,
        opts=_fit_options(args),
    )
    report = selection_report(outcome, names=prepared.names)
    _write_text(emit_report(report, _norm_format(args.format)), args.out)
    if args.out not in (None, "-"):
        chosen = ",".join(str(k) for k in outcome.selected) or "none"
        print(f"selected: {chosen} (alpha={args.alpha}, {method}); "
              f"report at {args.out}")
    return 0


def _cmd_montecarlo(args) -> int:
    # Desk-scale defaults (200 replications, n <= 5000); larger cells by
    # explicit flag or config.
    _resolve(args, {
        "scenario": 1, "d": 5, "shocks": "normal",
        "sample_sizes": "500,1000,5000", "replications": 200,
        "alpha": 0.05, "method": "by_fdr", "master_seed": 0, "burnin": 500,
        "gamma": None, "workers": None, "out_tables": "-", "out_json": None,
    })
    shocks = args.shocks
    if isinstance(shocks, str):
        shocks = [s for s in shocks.split(",") if s.strip()]
    gamma = None if args.gamma in (None, "null", "") else _parse_floats(args.gamma)
    plan = ExperimentPlan(
        scenario=args.scenario,
        d=args.d,
        shocks=tuple(ShockDist.parse(str(s)) for s in shocks),
        sample_sizes=tuple(int(v) for v in _parse_floats(args.sample_sizes)),
        replications=args.replications,
        alpha=args.alpha,
        method=_norm_method(args.method),
        master_seed=args.master_seed,
        burnin=args.burnin,
        gamma=gamma,
        workers=args.workers,
        fit_options=_fit_options(args),
    )

    def progress(row):
        print(f"cell done: shock={row.shock} n={row.n} "
              f"used={row.replications_used}/{row.replications}", file=sys.stderr)

    rows = run_experiment(plan, progress=progress)
    _write_text(format_tables(rows), args.out_tables)
    if args.out_json:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "kind": "montecarlo_results",
            "plan": {
                "scenario": plan.scenario,
                "d": plan.d,
                "shocks": [s.code for s in plan.shocks],
                "sample_sizes": list(plan.sample_sizes),
                "replications": plan.replications,
                "alpha": plan.alpha,
                "method": plan.method,
                "master_seed": plan.master_seed,
                "burnin": plan.burnin,
                "gamma": None if plan.gamma is None else list(plan.gamma),
                "fit": asdict(plan.fit_options),
            },
            "rows": [row.to_dict() for row in rows],
        }
        _write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    args.out_json)
    return 0


def _cmd_report(args) -> int:
    _resolve(args, {"in_path": None, "format": "json", "out": "-"})
    _require(args, "in_path")
    try:
        text = Path(args.in_path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read report {args.in_path}: {exc}") from exc
    report = read_report(text)
    _write_text(emit_report(report, _norm_format(args.format)), args.out)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "prepare": _cmd_prepare,
    "fit": _cmd_fit,
    "select": _cmd_select,
    "montecarlo": _cmd_montecarlo,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2
    except GarchXError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
