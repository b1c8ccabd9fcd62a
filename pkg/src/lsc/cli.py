"""Command-line front door.

Subcommands: validate, solve, factors, value, sweep, certify.  Every command
takes --scenario <path> and writes JSON or CSV to --out (default stdout).
Exit codes: 0 success, 1 validation failure, 2 solver failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .cost_model import growth_scan
from .errors import LscError, ScenarioError
from .fluctuation import Side, extremum_law, moments, solve_phi_equals_delta
from .levy_model import check_assumption1
from .mc_simulator import barrier_sweep
from .scenario import Scenario, load_scenario
from .threshold_solver import residual_profile, solve

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SOLVER = 2
EXIT_IO = 3


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _clean_floats(obj):
    """Round-trip floats through 17 significant digits for stable output."""
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _clean_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean_floats(v) for v in obj]
    return obj


def _write(out_path: str, text: str) -> None:
    if out_path == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _emit_json(args, payload: dict) -> None:
    _write(args.out, json.dumps(_clean_floats(payload), indent=2, sort_keys=True))


def _emit_csv(args, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write(args.out, "\n".join(lines) + "\n")


def _validation_payload(sc: Scenario) -> tuple[dict, bool]:
    a1 = check_assumption1(sc.model, sc.delta, sc.theta)
    scan = growth_scan(sc.cost, sc.theta)
    pre = sc.cost.precondition_report(sc.model, sc.delta)
    passed = a1.passed and scan["bounded"]
    return {
        "assumption1": a1.as_dict(),
        "growth_scan": scan,
        "family_preconditions": pre.as_dict(),
        "passed": passed,
    }, passed


def cmd_validate(args) -> int:
    sc = load_scenario(args.scenario)
    payload, passed = _validation_payload(sc)
    _emit_json(args, payload)
    return EXIT_OK if passed else EXIT_VALIDATION


def _validated_scenario(args) -> Scenario:
    sc = load_scenario(args.scenario)
    _, passed = _validation_payload(sc)
    if not passed:
        raise ScenarioError("scenario fails validation; run the validate command for details")
    return sc


def cmd_solve(args) -> int:
    sc = _validated_scenario(args)
    sol = solve(sc.cost, sc.model, sc.delta, certify=False)
    _emit_json(args, {
        "x_star": sol.x_star,
        "closed_form_x_star": sol.closed_form_x_star,
        "assumption4": sol.assumption4_report.as_dict(),
    })
    return EXIT_OK


def cmd_factors(args) -> int:
    sc = _validated_scenario(args)
    roots = solve_phi_equals_delta(sc.model, sc.delta)
    sup = extremum_law(roots, sc.model, Side.SUP)
    inf = extremum_law(roots, sc.model, Side.INF)
    sup_m, inf_m = moments(sup), moments(inf)
    _emit_json(args, {
        "delta": sc.delta,
        "positive_roots": list(roots.positive_roots),
        "negative_roots": list(roots.negative_roots),
        "sup_law": {"atom_at_zero": sup.atom_at_zero,
                    "mixture": [{"weight": w, "rate": r} for w, r in sup.mixture]},
        "inf_law": {"atom_at_zero": inf.atom_at_zero,
                    "mixture": [{"weight": w, "rate": r} for w, r in inf.mixture]},
        "moments": {"sup_mean": sup_m[0], "sup_second": sup_m[1],
                    "inf_mean": inf_m[0], "inf_second": inf_m[1]},
    })
    return EXIT_OK


def cmd_value(args) -> int:
    sc = _validated_scenario(args)
    sol = solve(sc.cost, sc.model, sc.delta, certify=False)
    lo = sol.x_star - 3.0 if args.x_min is None else args.x_min
    hi = sol.x_star + 3.0 if args.x_max is None else args.x_max
    xs = np.linspace(lo, hi, args.points)
    rows = zip(
        xs,
        np.asarray(sol.q(xs), dtype=float),
        np.asarray(sol.v(xs), dtype=float),
        np.asarray(sc.cost.c(xs), dtype=float),
        np.asarray(sol.u(xs), dtype=float),
        residual_profile(sol.u, sc.cost, sc.model, sc.delta, xs),
    )
    _emit_csv(args, ["x", "Q", "v", "c", "u", "hjb_residual"], rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc = _validated_scenario(args)
    sol = solve(sc.cost, sc.model, sc.delta, certify=False)
    lo = sol.x_star - 1.0 if args.b_min is None else args.b_min
    hi = sol.x_star + 1.0 if args.b_max is None else args.b_max
    barriers = np.linspace(lo, hi, args.points)
    config = sc.sim_config(sol.x_star, seed=args.seed, paths=args.paths,
                           dt=args.dt, horizon=args.horizon)
    result = barrier_sweep(sc.model, sc.cost, sc.delta, config, barriers,
                           theta=sc.theta)
    print(f"sweep report: {result.report.as_dict()}", file=sys.stderr)
    rows = [
        (b, est.mean, est.stderr,
         est.components["running"], est.components["continuous_control"],
         est.components["jump_control"], est.components["initial_control"],
         est.tail_bound)
        for b, est in result.entries
    ]
    _emit_csv(args, ["barrier", "mean", "stderr", "running", "continuous_control",
                     "jump_control", "initial_control", "tail_bound"], rows)
    return EXIT_OK


def cmd_certify(args) -> int:
    sc = _validated_scenario(args)
    sol = solve(sc.cost, sc.model, sc.delta, certify=True)
    _emit_json(args, sol.hjb_report.as_dict())
    return EXIT_OK if sol.hjb_report.passed else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsc",
        description="Reflecting-barrier singular control: solve, certify, simulate.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="path to a scenario JSON document")
        p.add_argument("--out", default="-", help="output path, or - for stdout")
        p.add_argument("--seed", type=int, default=None, help="override sim seed")
        p.add_argument("--paths", type=int, default=None, help="override sim path count")
        p.add_argument("--dt", type=float, default=None, help="override sim grid step")
        p.add_argument("--horizon", type=float, default=None, help="override sim horizon")

    common(sub.add_parser("validate", help="check assumptions and growth bounds"))
    common(sub.add_parser("solve", help="solve for the optimal barrier x*"))
    common(sub.add_parser("factors", help="roots, extremum laws and their moments"))

    p_value = sub.add_parser("value", help="tabulate Q, v, c, u and the HJB residual")
    common(p_value)
    p_value.add_argument("--x-min", type=float, default=None)
    p_value.add_argument("--x-max", type=float, default=None)
    p_value.add_argument("--points", type=int, default=100)

    p_sweep = sub.add_parser("sweep", help="Monte Carlo cost across barriers")
    common(p_sweep)
    p_sweep.add_argument("--b-min", type=float, default=None)
    p_sweep.add_argument("--b-max", type=float, default=None)
    p_sweep.add_argument("--points", type=int, default=11)

    common(sub.add_parser("certify", help="HJB residual certification report"))
    return parser


_COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "factors": cmd_factors,
    "value": cmd_value,
    "sweep": cmd_sweep,
    "certify": cmd_certify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LscError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
