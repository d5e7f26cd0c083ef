"""Command-line front end.

Exit codes: 0 success, 2 usage, 3 bad input, 4 infeasible budget or
constraint, 5 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import reproduce
from .estimator import (
    EstimatorConfig,
    estimate_renyi,
    estimate_von_neumann,
    estimate_with_plan,
    report_to_dict,
    resource_report,
)
from .exceptions import (
    AlphaOutOfRange,
    BadDimension,
    BadDt,
    DimMismatch,
    InfeasibleBudget,
    InfeasibleFloor,
    NonpositiveArgument,
    NotHermitian,
    NotPSD,
    TraceNotOne,
)
from .series import (
    build_plan_renyi,
    build_plan_vn,
    plan_from_dict,
    plan_to_dict,
    power_trace_budget,
)
from .states import load_state, purity_exact

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_INFEASIBLE = 4
EXIT_INTERNAL = 5

_INPUT_ERRORS = (
    BadDimension,
    NotHermitian,
    TraceNotOne,
    NotPSD,
    DimMismatch,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    json.JSONDecodeError,
    KeyError,
)
_INFEASIBLE_ERRORS = (InfeasibleBudget, InfeasibleFloor, NonpositiveArgument, BadDt)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entropyscope",
        description="Entropy estimation from state copies: series plans, "
        "circuit-level estimators, and experiment reproduction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan_p = sub.add_parser("plan", help="build a series plan and emit it as JSON")
    _common_plan_flags(plan_p)
    plan_p.add_argument("--state", help="state JSON file (used for the oracle purity)")
    plan_p.add_argument("--purity", type=float, help="purity value for the renyi budget")
    plan_p.add_argument(
        "--trace-budget",
        type=float,
        help="set the power-trace budget directly instead of deriving it from --eps",
    )
    plan_p.add_argument("--out", help="write the plan JSON here instead of stdout")

    est_p = sub.add_parser("estimate", help="estimate an entropy of a state file")
    _common_plan_flags(est_p)
    est_p.add_argument("--state", required=True, help="state JSON file {re: [[..]], im: [[..]]}")
    est_p.add_argument("--delta", type=float, default=0.1, help="failure probability")
    est_p.add_argument("--seed", type=int, default=0)
    est_p.add_argument("--level", choices=("matrix", "gate"), default="matrix")
    est_p.add_argument("--shot-mode", choices=("exact", "sampled"), default="sampled")
    est_p.add_argument("--samples", type=int, help="override the number of sampled terms")
    est_p.add_argument(
        "--enumerate",
        action="store_true",
        dest="enumerate_terms",
        help="evaluate every plan term with its weight instead of sampling",
    )
    est_p.add_argument("--plan-file", help="reuse a plan exported by the plan subcommand")
    est_p.add_argument(
        "--purity-source", choices=("oracle", "swap_test", "user"), default="oracle"
    )
    est_p.add_argument("--purity", type=float, help="purity value for --purity-source user")
    est_p.add_argument("--purity-shots", type=int, default=100_000)
    est_p.add_argument("--copy-ceiling", type=int, help="fail if the copy budget exceeds this")
    est_p.add_argument("--out", help="write the report JSON here instead of stdout")

    rep_p = sub.add_parser("reproduce", help="run a bundled experiment")
    rep_p.add_argument("figure", choices=sorted(reproduce.EXPERIMENTS))
    rep_p.add_argument("--out", default="reports", help="output directory (default: reports)")
    rep_p.add_argument("--seed", type=int, default=2)
    rep_p.add_argument("--repeats", type=int, default=20)
    rep_p.add_argument("--samples", type=int, default=100, help="draws per estimate")
    rep_p.add_argument("--level", choices=("matrix", "gate"), default="matrix")
    rep_p.add_argument("--no-figures", action="store_true", help="write CSV only")
    return parser


def _common_plan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--entropy", choices=("vn", "renyi"), required=True)
    p.add_argument("--alpha", type=float, help="Renyi order (required for --entropy renyi)")
    p.add_argument(
        "--lambda",
        dest="lambda_floor",
        type=float,
        required=True,
        help="lower bound on the nonzero eigenvalues",
    )
    p.add_argument("--eps", type=float, required=True, help="target accuracy")
    p.add_argument("--log-base", type=float, default=math.e)


def _check_ranges(parser, args) -> None:
    if not 0 < args.eps < 1:
        parser.error(f"--eps must lie in (0,1), got {args.eps}")
    if not 0 < args.lambda_floor < 1:
        parser.error(f"--lambda must lie in (0,1), got {args.lambda_floor}")
    if args.entropy == "renyi":
        if args.alpha is None:
            parser.error("--entropy renyi requires --alpha")
        if args.alpha <= 0 or args.alpha == 1:
            parser.error(f"--alpha must be in (0,1) or (1,inf), got {args.alpha}")
    delta = getattr(args, "delta", None)
    if delta is not None and not 0 < delta < 1:
        parser.error(f"--delta must lie in (0,1), got {delta}")


def _renyi_budget(args) -> float:
    if getattr(args, "trace_budget", None) is not None:
        return args.trace_budget
    if args.purity is not None:
        purity = args.purity
    elif args.state:
        purity = purity_exact(load_state(args.state))
    else:
        raise ValueError("renyi plan needs --purity, --trace-budget, or --state")
    return power_trace_budget(args.alpha, args.eps, purity)


def _cmd_plan(parser, args) -> int:
    _check_ranges(parser, args)
    if args.entropy == "vn":
        plan = build_plan_vn(args.lambda_floor, args.eps)
    else:
        xi = min(_renyi_budget(args), 1.0 - 1e-9)
        plan = build_plan_renyi(args.alpha, args.lambda_floor, xi)
    payload = json.dumps(plan_to_dict(plan), indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
        print(
            f"plan: target={plan.target} K={plan.taylor_order} L={plan.degree} "
            f"terms={plan.n_terms} l1={plan.l1_norm:.6f} -> {args.out}"
        )
    else:
        print(payload)
    return EXIT_OK


def _cmd_estimate(parser, args) -> int:
    _check_ranges(parser, args)
    rho = load_state(args.state)
    cfg = EstimatorConfig(
        epsilon=args.eps,
        delta=args.delta,
        lambda_floor=args.lambda_floor,
        alpha=args.alpha if args.entropy == "renyi" else None,
        seed=args.seed,
        level=args.level,
        shot_mode="exact_expectation" if args.shot_mode == "exact" else "sampled",
        purity_source=args.purity_source,
        purity_value=args.purity,
        purity_shots=args.purity_shots,
        num_samples=args.samples,
        enumerate_terms=args.enumerate_terms,
        copy_ceiling=args.copy_ceiling,
        log_base=args.log_base,
    )
    if args.plan_file:
        with open(args.plan_file) as fh:
            plan = plan_from_dict(json.load(fh))
        if plan.target != args.entropy:
            parser.error(f"plan file targets {plan.target!r} but --entropy is {args.entropy!r}")
        report = estimate_with_plan(rho, plan, cfg)
    elif args.entropy == "vn":
        report = estimate_von_neumann(rho, cfg)
    else:
        report = estimate_renyi(rho, cfg)

    summary = resource_report(report)
    label = "S" if report.target == "vn" else f"R_{report.alpha:g}"
    line = (
        f"{label} = {report.estimate:.6f} +/- {report.stderr:.6f} "
        f"(draws={report.num_samples}, shots/draw={report.shots_per_sample}, "
        f"copies={summary.copies_total}, gates={summary.gates_total if summary.gates_applicable else 'n/a'}, "
        f"seed={report.seed})"
    )
    payload = json.dumps(report_to_dict(report), indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
        print(line)
    else:
        print(line, file=sys.stderr)
        print(payload)
    return EXIT_OK


def _cmd_reproduce(parser, args) -> int:
    driver = reproduce.EXPERIMENTS[args.figure]
    kwargs = {"seed": args.seed, "level": args.level, "render": not args.no_figures}
    if args.figure in ("fig3", "fig4"):
        kwargs["repeats"] = args.repeats
        kwargs["draws"] = args.samples
    outputs = driver(args.out, **kwargs)
    for name, path in outputs.items():
        print(f"{name}: {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"plan": _cmd_plan, "estimate": _cmd_estimate, "reproduce": _cmd_reproduce}
    try:
        return handlers[args.command](parser, args)
    except _INFEASIBLE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AlphaOutOfRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
