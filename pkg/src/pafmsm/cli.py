"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
All randomness is seeded explicitly; identical invocations on identical
input bytes produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .cohort import (
    Cohort,
    TiePolicy,
    cohort_to_csv,
    discretize,
    parse_cohort,
    summarize,
    to_transitions,
)
from .continuous import cif_counterfactual, cpf_unexposed, ht_cif
from .cox import fit_cox_td, markov_test
from .curves import StepCurve
from .discrete import compute_weights, ipw_f01, naive_f01, nonparametric_daily_hazard
from .errors import DataError, NumericalError
from .paf import ESTIMAND_ESTIMATORS, bootstrap_ci, estimate_paf
from .simulate import HazardSpec, analytic_curves, simulate_cohort

__all__ = ["main", "run"]

_EXIT_OK, _EXIT_USAGE, _EXIT_DATA, _EXIT_NUMERICAL = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="paf-msm", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        return p

    def cohort_flags(p):
        p.add_argument("--input", required=True, help="cohort CSV path")
        p.add_argument("--tie-policy", default="shift:0.001", help="reject or shift:<eps>")

    p = add("validate", "check a cohort file and report invariants")
    cohort_flags(p)

    p = add("summary", "tabulate exposure and outcome counts")
    cohort_flags(p)

    p = add("estimate", "estimate a PAF curve")
    cohort_flags(p)
    p.add_argument("--estimand", required=True, choices=sorted(ESTIMAND_ESTIMATORS))
    p.add_argument("--estimator", default="multistate", choices=["multistate", "naive", "ipw"])
    p.add_argument("--grid", default="jumps", choices=["days", "jumps"])
    p.add_argument("--at", type=float, default=None, help="print the value at one time only")
    p.add_argument("--covariates", default="", help="comma-separated exposure-model covariates")
    p.add_argument("--allow-drop-censored", action="store_true")
    p.add_argument("--out", default=None, help="output directory (default stdout)")

    p = add("bootstrap", "PAF curve with percentile confidence bands")
    cohort_flags(p)
    p.add_argument("--estimand", required=True, choices=sorted(ESTIMAND_ESTIMATORS))
    p.add_argument("--estimator", default="multistate", choices=["multistate", "naive", "ipw"])
    p.add_argument("--grid", default="days", choices=["days", "jumps"])
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--covariates", default="")
    p.add_argument("--allow-drop-censored", action="store_true")
    p.add_argument("--out", default=None)

    p = add("cox", "hazard ratios for the time-dependent exposure")
    cohort_flags(p)
    p.add_argument("--outcome", default="death", choices=["death", "discharge"])
    p.add_argument("--covariates", default="")
    p.add_argument("--markov-test", action="store_true", help="test inf_time as a post-exposure covariate")
    p.add_argument("--out", default=None)

    p = add("simulate", "draw a cohort from a hazard specification")
    p.add_argument("--spec", required=True, help="HazardSpec JSON path")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=None)

    p = add("oracle", "analytic model curves by quadrature")
    p.add_argument("--spec", required=True, help="HazardSpec JSON path")
    p.add_argument("--step", type=float, default=1.0, help="grid step in days")
    p.add_argument("--out", default=None)

    p = add("check", "run the exact-equivalence suite on a cohort")
    cohort_flags(p)
    return parser


def _load_cohort(args) -> Cohort:
    try:
        policy = TiePolicy.parse(args.tie_policy)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    path = Path(args.input)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    return parse_cohort(path, tie_policy=policy)


def _emit(text: str, out, filename: str):
    if out is None:
        sys.stdout.write(text)
    else:
        directory = Path(out)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / filename).write_text(text)


def _covariate_list(args):
    return tuple(c for c in args.covariates.split(",") if c) if getattr(args, "covariates", "") else ()


def _cmd_validate(args) -> int:
    cohort = _load_cohort(args)
    for diag in cohort.diagnostics:
        print(f"adjusted {diag.subject_id}: {diag.message}")
    exposed = sum(1 for s in cohort.subjects if s.exposed)
    print(f"ok: n={len(cohort)} exposed={exposed} horizon={cohort.horizon:g}")
    return _EXIT_OK


def _cmd_summary(args) -> int:
    s = summarize(_load_cohort(args))
    print("field,value")
    for name in (
        "n", "exposed", "unexposed_deaths", "unexposed_discharges",
        "unexposed_censored", "exposed_deaths", "exposed_discharges",
        "exposed_censored", "person_days",
    ):
        print(f"{name},{getattr(s, name):g}")
    return _EXIT_OK


def _check_pair(args):
    if args.estimator not in ESTIMAND_ESTIMATORS[args.estimand]:
        raise _UsageError(
            f"--estimator {args.estimator} does not estimate {args.estimand}; "
            f"valid: {', '.join(ESTIMAND_ESTIMATORS[args.estimand])}"
        )


def _on_grid(curve: StepCurve, kind: str, horizon: float) -> StepCurve:
    if kind == "jumps":
        return curve
    days = np.arange(1.0, math.ceil(horizon) + 1.0)
    return StepCurve(days, np.atleast_1d(curve(days)), initial=curve.initial,
                     undefined_from=curve.undefined_from)


def _cmd_estimate(args) -> int:
    _check_pair(args)
    cohort = _load_cohort(args)
    paf = estimate_paf(
        cohort, args.estimand, args.estimator,
        covariates=_covariate_list(args), allow_drop=args.allow_drop_censored,
    )
    if args.at is not None:
        value = paf(args.at)
        print("nan" if np.isnan(value) else format(value, ".6g"))
        return _EXIT_OK
    curve = _on_grid(paf.curve, args.grid, cohort.horizon)
    _emit(curve.to_csv(), args.out, f"{args.estimand}_{args.estimator}.csv")
    return _EXIT_OK


def _cmd_bootstrap(args) -> int:
    _check_pair(args)
    if args.B < 2:
        raise _UsageError("--B must be >= 2")
    cohort = _load_cohort(args)
    if args.grid == "days":
        grid = np.arange(1.0, math.ceil(cohort.horizon) + 1.0)
    else:
        grid = estimate_paf(cohort, args.estimand, args.estimator,
                            covariates=_covariate_list(args),
                            allow_drop=args.allow_drop_censored).times
    bands = bootstrap_ci(
        cohort, args.estimand, args.estimator, B=args.B, seed=args.seed,
        grid=grid, covariates=_covariate_list(args), allow_drop=args.allow_drop_censored,
    )
    _emit(bands.to_csv(), args.out, f"{args.estimand}_{args.estimator}_bands.csv")
    if args.out is not None:
        manifest = {
            "subcommand": "bootstrap",
            "input": args.input,
            "tie_policy": args.tie_policy,
            "estimand": args.estimand,
            "estimator": args.estimator,
            "B": args.B,
            "seed": args.seed,
            "covariates": list(_covariate_list(args)),
        }
        _emit(json.dumps(manifest, indent=2) + "\n", args.out, "manifest.json")
    return _EXIT_OK


def _cmd_cox(args) -> int:
    cohort = _load_cohort(args)
    records = to_transitions(cohort)
    if args.markov_test:
        fit = markov_test(records, f"{args.outcome}_after")
        name = f"markov_{args.outcome}.csv"
    else:
        fit = fit_cox_td(records, args.outcome, extra_covariates=_covariate_list(args))
        name = f"cox_{args.outcome}.csv"
    _emit(fit.summary_csv(), args.out, name)
    return _EXIT_OK


def _read_spec(path) -> HazardSpec:
    p = Path(path)
    if not p.exists():
        raise DataError(f"spec file not found: {p}")
    return HazardSpec.from_json(p.read_text())


def _cmd_simulate(args) -> int:
    if args.n < 1:
        raise _UsageError("--n must be >= 1")
    spec = _read_spec(args.spec)
    cohort = simulate_cohort(spec, args.n, args.seed)
    _emit(cohort_to_csv(cohort), args.out, "cohort.csv")
    return _EXIT_OK


def _cmd_oracle(args) -> int:
    spec = _read_spec(args.spec)
    if args.step <= 0:
        raise _UsageError("--step must be > 0")
    grid = np.arange(0.0, spec.tau + args.step / 2, args.step)
    oc = analytic_curves(spec, grid)
    curves = oc.as_dict()
    lines = ["t," + ",".join(curves)]
    for j, t in enumerate(oc.grid):
        row = [format(t, ".12g")]
        for c in curves.values():
            v = c.values[j]
            row.append("" if np.isnan(v) else format(v, ".12g"))
        lines.append(",".join(row))
    _emit("\n".join(lines) + "\n", args.out, "oracle.csv")
    return _EXIT_OK


def _cmd_check(args) -> int:
    cohort = _load_cohort(args)
    for s in cohort.subjects:
        for value, label in ((s.inf_time, "inf_time"), (s.end_time, "end_time")):
            if value is not None and value != int(value):
                raise DataError(
                    f"subject {s.id}: {label} {value:g} is not an integer day; "
                    "the exact equivalences hold on integer-time cohorts"
                )
    panel = discretize(cohort)  # rejects censored cohorts
    records = to_transitions(cohort)
    days = np.arange(1.0, panel.n_days + 1.0)

    def compare(a, b):
        av, bv = np.atleast_1d(a(days)), np.atleast_1d(b(days))
        if not np.array_equal(np.isnan(av), np.isnan(bv)):
            return math.inf
        mask = ~np.isnan(av)
        return float(np.max(np.abs(av[mask] - bv[mask]))) if mask.any() else 0.0

    weights = compute_weights(panel, nonparametric_daily_hazard(panel))
    checks = [
        ("naive == cpf_unexposed", compare(naive_f01(panel), cpf_unexposed(records))),
        ("ipw == counterfactual_cif", compare(ipw_f01(panel, weights), cif_counterfactual(records))),
        ("horvitz_thompson == counterfactual_cif", compare(ht_cif(records), cif_counterfactual(records))),
    ]
    failed = False
    for label, dev in checks:
        ok = dev < 1e-12
        failed = failed or not ok
        print(f"{label}: max deviation {dev:.3e} {'PASS' if ok else 'FAIL'}")
    if failed:
        print("check failed: an exact equivalence exceeded 1e-12")
        return _EXIT_NUMERICAL
    print("all equivalences hold")
    return _EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "summary": _cmd_summary,
    "estimate": _cmd_estimate,
    "bootstrap": _cmd_bootstrap,
    "cox": _cmd_cox,
    "simulate": _cmd_simulate,
    "oracle": _cmd_oracle,
    "check": _cmd_check,
}


def run(argv) -> int:
    parser = _build_parser()
    try:
        threads = os.environ.get("PAF_MSM_THREADS")
        if threads is not None and (not threads.isdigit() or int(threads) < 1):
            raise _UsageError("PAF_MSM_THREADS must be a positive integer")
        args = parser.parse_args(argv)
        return _COMMANDS[args.subcommand](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return _EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL


def main() -> None:
    sys.exit(run(sys.argv[1:]))
