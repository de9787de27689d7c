"""Command-line front end.

Every analysis is a subcommand reading CSV input and writing JSON to
standard output.  Each JSON document embeds a run manifest (subcommand,
input digest, options, version, and the master seed for stochastic
commands), so identical manifests produce byte-identical output.

Exit codes: 0 success, 2 input/validation error, 3 degenerate estimation
problem (irrelevant instruments, rank deficiency).  Errors are reported as
machine-readable JSON on standard error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._jsonio import dumps, file_digest, text_digest
from .datasets import ColumnRoles, flu_table, load_csv, table_from_dataset, write_csv
from .errors import EstimationError, MonotonicityError, ValidationError
from .kclass import ils, iv_ratio, liml, per_instrument_estimates, tsls
from .late import compliance_shares, exclusion_tests, late, natural_bounds
from .market import MarketParams, ZLaw, simulate_markets
from .ols import ols
from .published import reproduce_rows
from .weakiv import (
    DEFAULT_CRITICAL_VALUE,
    McConfig,
    ar_confidence_set,
    ar_statistic,
    run_weak_iv_study,
)

_EXIT_OK = 0
_EXIT_VALIDATION = 2
_EXIT_ESTIMATION = 3


def _manifest(subcommand, options, input_digest=None, master_seed=None):
    manifest = {
        "subcommand": subcommand,
        "input_digest": input_digest,
        "options": options,
        "version": __version__,
    }
    if master_seed is not None:
        manifest["master_seed"] = master_seed
    return manifest


def _print_json(payload) -> None:
    sys.stdout.write(dumps(payload, indent=2) + "\n")


def _split_names(raw: str | None) -> tuple[str, ...]:
    if not raw:
        return ()
    return tuple(name.strip() for name in raw.split(",") if name.strip())


def _load_dataset(args) -> tuple:
    roles = ColumnRoles(
        outcome=args.outcome,
        treatment=args.treatment,
        instruments=_split_names(args.instruments),
        covariates=_split_names(getattr(args, "covariates", None)),
    )
    return load_csv(args.data, roles), file_digest(args.data)


def _cmd_estimate(args) -> int:
    dataset, digest = _load_dataset(args)
    options = {
        "method": args.method,
        "outcome": args.outcome,
        "treatment": args.treatment,
        "instruments": args.instruments,
        "covariates": args.covariates or "",
        "data": str(args.data),
    }

    if args.method == "ols":
        design = np.column_stack([dataset.treatment[:, None], dataset.covariates])
        names = [dataset.treatment_name, *dataset.covariate_names]
        fit = ols(dataset.outcome, design, regressor_names=names)
        payload = {
            "manifest": _manifest("estimate", options, digest),
            "estimand": "ols_slope",
            "point": fit.coefficient(dataset.treatment_name),
            "std_error": fit.std_error(dataset.treatment_name),
            "n": fit.n,
        }
        _print_json(payload)
        return _EXIT_OK

    fitters = {"iv": iv_ratio, "ils": ils, "tsls": tsls, "liml": liml}
    fit = fitters[args.method](dataset)
    report = fit.to_report()
    payload = {
        "manifest": _manifest("estimate", options, digest),
        "estimand": report.estimand,
        "point": report.point,
        "std_error": report.std_error,
        "n": report.n_used,
        "kappa": fit.kappa,
    }
    if dataset.n_instruments >= 2:
        payload["per_instrument"] = list(per_instrument_estimates(dataset))
    _print_json(payload)
    return _EXIT_OK


def _cmd_late(args) -> int:
    if args.builtin:
        if args.builtin != "flu":
            raise ValidationError(f"unknown builtin dataset {args.builtin!r}")
        table = flu_table()
        digest = text_digest("builtin:flu:" + ",".join(map(str, table.counts.ravel())))
        options = {"builtin": "flu"}
    else:
        if not args.data:
            raise ValidationError("provide a CSV file or --builtin flu")
        roles = ColumnRoles(
            outcome=args.outcome,
            treatment=args.treatment,
            instruments=(args.instrument,),
        )
        dataset = load_csv(args.data, roles)
        table = table_from_dataset(dataset)
        digest = file_digest(args.data)
        options = {
            "outcome": args.outcome,
            "treatment": args.treatment,
            "instrument": args.instrument,
            "data": str(args.data),
        }

    shares = compliance_shares(table)
    itt_y = table.p_outcome(1) - table.p_outcome(0)
    itt_x = table.p_treatment(1) - table.p_treatment(0)
    try:
        late_report = late(table)
        late_point, late_se = late_report.point, late_report.std_error
    except MonotonicityError:
        late_point, late_se = None, None
    bounds = natural_bounds(table).intervals[0]
    tests = exclusion_tests(table)

    payload = {
        "manifest": _manifest("late", options, digest),
        "shares": {
            "pi_a": shares.pi_a,
            "pi_a_se": shares.pi_a_se,
            "pi_n": shares.pi_n,
            "pi_n_se": shares.pi_n_se,
            "pi_c": shares.pi_c,
            "pi_c_se": shares.pi_c_se,
        },
        "monotonicity_violated": shares.monotonicity_violated,
        "itt_y": itt_y,
        "itt_x": itt_x,
        "late": late_point,
        "late_se": late_se,
        "bounds": [bounds.lower, bounds.upper],
        "exclusion_tests": [
            {
                "outcome": record.outcome,
                "treatment_arm": record.treatment_arm,
                "label": record.label,
                "lhs": record.lhs,
                "rhs": record.rhs,
                "slack": record.slack,
                "violated": record.violated,
            }
            for record in tests.records
        ],
    }
    _print_json(payload)
    return _EXIT_OK


def _cmd_ar(args) -> int:
    roles = ColumnRoles(
        outcome=args.outcome, treatment=args.treatment, instruments=(args.instrument,)
    )
    dataset = load_csv(args.data, roles)
    digest = file_digest(args.data)
    options = {
        "outcome": args.outcome,
        "treatment": args.treatment,
        "instrument": args.instrument,
        "critical_value": args.critical_value,
        "data": str(args.data),
    }

    confidence_set = ar_confidence_set(dataset, critical_value=args.critical_value)
    try:
        point = iv_ratio(dataset).beta1
        ar_at_point = ar_statistic(dataset, point)
    except EstimationError:
        point, ar_at_point = None, None

    payload = {
        "manifest": _manifest("ar", options, digest),
        "critical_value": args.critical_value,
        "confidence_set": [list(pair) for pair in confidence_set.endpoint_pairs()],
        "point_estimate": point,
        "ar_at_point": ar_at_point,
    }
    _print_json(payload)
    return _EXIT_OK


def _cmd_simulate_market(args) -> int:
    params = MarketParams.from_file(args.params)
    z_law = ZLaw.parse(args.z_law)
    dataset = simulate_markets(params, args.n, z_law, args.seed)
    write_csv(dataset, args.out)
    options = {
        "params": str(args.params),
        "n": args.n,
        "seed": args.seed,
        "z_law": args.z_law,
        "out": str(args.out),
    }
    payload = {
        "manifest": _manifest(
            "simulate market", options, file_digest(args.params), master_seed=args.seed
        ),
        "true_params": params.to_mapping(),
        "n": dataset.n,
        "output_path": str(args.out),
        "output_digest": file_digest(args.out),
    }
    _print_json(payload)
    return _EXIT_OK


def _cmd_simulate_weakiv(args) -> int:
    cfg = McConfig.from_file(args.config)
    report = run_weak_iv_study(cfg)
    options = {"config": str(args.config)}
    payload = {
        "manifest": _manifest(
            "simulate weakiv", options, file_digest(args.config), master_seed=cfg.master_seed
        ),
        **report.to_json_dict(),
    }
    _print_json(payload)
    return _EXIT_OK


def _cmd_reproduce(args) -> int:
    rows = reproduce_rows()
    payload = {
        "manifest": _manifest("reproduce", {"json": args.json or ""}),
        "rows": [row.to_json_dict() for row in rows],
        "all_checked_rows_pass": all(
            row.status == "pass" for row in rows if row.status != "reference_only"
        ),
    }
    if args.json == "-":
        _print_json(payload)
        return _EXIT_OK

    width = max(len(row.name) for row in rows)
    header = f"{'quantity':<{width}}  {'computed':>12}  {'published':>10}  {'tol':>8}  status"
    lines = [header, "-" * len(header)]
    for row in rows:
        computed = f"{row.computed:.4f}" if row.computed is not None else "n/a"
        tol = f"{row.tolerance:g}" if row.tolerance is not None else "n/a"
        status = {"pass": "PASS", "fail": "FAIL", "reference_only": "reference-only (raw data unavailable)"}[row.status]
        lines.append(
            f"{row.name:<{width}}  {computed:>12}  {row.published:>10}  {tol:>8}  {status}"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    if args.json:
        Path(args.json).write_text(dumps(payload, indent=2) + "\n", encoding="utf-8")
    return _EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivkit",
        description="Instrumental-variables estimation, bounds, and simulation toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"ivkit {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    estimate = commands.add_parser("estimate", help="fit an estimator on a CSV dataset")
    estimate.add_argument("data", type=Path)
    estimate.add_argument("--method", required=True, choices=["ols", "iv", "ils", "tsls", "liml"])
    estimate.add_argument("--outcome", required=True)
    estimate.add_argument("--treatment", required=True)
    estimate.add_argument("--instruments", required=True, help="comma-separated column names")
    estimate.add_argument("--covariates", default="", help="comma-separated column names")
    estimate.set_defaults(handler=_cmd_estimate)

    late_cmd = commands.add_parser(
        "late", help="compliance shares, LATE, bounds and exclusion diagnostics"
    )
    late_cmd.add_argument("data", nargs="?", type=Path)
    late_cmd.add_argument("--builtin", choices=["flu"], help="use a bundled dataset")
    late_cmd.add_argument("--outcome", default="y")
    late_cmd.add_argument("--treatment", default="x")
    late_cmd.add_argument("--instrument", default="z")
    late_cmd.set_defaults(handler=_cmd_late)

    ar = commands.add_parser("ar", help="weak-instrument-robust confidence set")
    ar.add_argument("data", type=Path)
    ar.add_argument("--outcome", default="y")
    ar.add_argument("--treatment", default="x")
    ar.add_argument("--instrument", default="z")
    ar.add_argument("--critical-value", type=float, default=DEFAULT_CRITICAL_VALUE)
    ar.set_defaults(handler=_cmd_ar)

    simulate = commands.add_parser("simulate", help="generate data or run a Monte Carlo study")
    simulate_sub = simulate.add_subparsers(dest="simulate_command", required=True)

    market = simulate_sub.add_parser("market", help="simulate supply/demand equilibria")
    market.add_argument("--params", required=True, type=Path, help="key=value parameter file")
    market.add_argument("--n", required=True, type=int)
    market.add_argument("--seed", required=True, type=int)
    market.add_argument("--out", required=True, type=Path)
    market.add_argument(
        "--z-law",
        default="three_valued",
        help="normal, bernoulli:q, or three_valued[:stormy,mixed]",
    )
    market.set_defaults(handler=_cmd_simulate_market)

    weakiv = simulate_sub.add_parser("weakiv", help="run a weak-instrument Monte Carlo study")
    weakiv.add_argument("--config", required=True, type=Path, help="key=value study config")
    weakiv.set_defaults(handler=_cmd_simulate_weakiv)

    reproduce = commands.add_parser(
        "reproduce", help="recompute published reference values on the bundled data"
    )
    reproduce.add_argument(
        "--json",
        default="",
        help="write the JSON report to this path ('-' prints JSON instead of the table)",
    )
    reproduce.set_defaults(handler=_cmd_reproduce)

    return parser


def _error_json(exc: Exception, exit_code: int) -> str:
    return dumps(
        {
            "error": {
                "type": type(exc).__name__,
                "message": str(exc),
                "exit_code": exit_code,
            }
        },
        indent=2,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValidationError as exc:
        sys.stderr.write(_error_json(exc, _EXIT_VALIDATION) + "\n")
        return _EXIT_VALIDATION
    except EstimationError as exc:
        sys.stderr.write(_error_json(exc, _EXIT_ESTIMATION) + "\n")
        return _EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
