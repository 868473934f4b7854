"""Command-line harness: single solves and the benchmark studies.

All outputs are CSV files written under --out (default ./out); see the
README for the schema of each file. Exit codes: 0 converged / study done,
2 stalled, 3 iteration limit, 64 bad usage or configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .errors import ConfigError
from .presets import PRESETS, make_config
from .problems import PROBLEM_NAMES, build_problem
from .solver import STATUS_CONVERGED, STATUS_MAX_ITERATIONS, STATUS_STALLED
from .solver import solve as run_solve
from .studies import (
    EC_SWEEP_HEADER,
    PENALTY_HEADER,
    RATE_HEADER,
    run_ec_study,
    run_local_convergence,
    run_penalty_study,
)

EXIT_OK = 0
EXIT_STALLED = 2
EXIT_MAX_ITERATIONS = 3
EXIT_USAGE = 64

_STATUS_EXIT = {
    STATUS_CONVERGED: EXIT_OK,
    STATUS_STALLED: EXIT_STALLED,
    STATUS_MAX_ITERATIONS: EXIT_MAX_ITERATIONS,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msddp", description="Multiple-shooting DDP benchmark harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, problem_default):
        p.add_argument("--problem", default=problem_default, choices=PROBLEM_NAMES)
        p.add_argument("--config", default=None, help="problem config file override")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory")

    p_solve = sub.add_parser("solve", help="run one solve and dump CSV artifacts")
    common(p_solve, "acrobot")
    p_solve.add_argument("--preset", default="msilqr-exact", choices=sorted(PRESETS))
    p_solve.add_argument("--segments", type=int, default=None,
                         help="shooting segments (default: every state shooting)")
    p_solve.add_argument("--penalty", type=float, default=0.0,
                         help="defect penalty scale (times the problem's base weight)")
    p_solve.add_argument("--max-iterations", type=int, default=300)

    p_rate = sub.add_parser("local-convergence", help="Monte Carlo local rate study")
    common(p_rate, "quadrotor")
    p_rate.add_argument("--samples", type=int, default=100)
    p_rate.add_argument("--segments", type=int, default=200)
    p_rate.add_argument("--radius", type=float, default=3e-4)
    p_rate.add_argument("--jobs", type=int, default=1)

    p_ec = sub.add_parser("ec-study", help="expected-cost-change ablation")
    common(p_ec, "acrobot")
    p_ec.add_argument("--max-iterations", type=int, default=200)

    p_pen = sub.add_parser("penalty-study", help="defect-penalty ablation")
    common(p_pen, "arm")
    p_pen.add_argument("--segments", type=int, nargs="*", default=[2, 4, 8, 16, 32])
    p_pen.add_argument("--penalty", type=float, default=1.0,
                       help="penalty scale (times the problem's base weight)")
    p_pen.add_argument("--max-iterations", type=int, default=300)
    return parser


def cmd_solve(args) -> int:
    problem = build_problem(args.problem, config_path=args.config, seed=args.seed)
    plan = problem.plan(args.segments)
    qd = args.penalty * problem.penalty_weight if args.penalty else None
    config = make_config(args.preset, max_iterations=args.max_iterations, penalty=qd)
    result = run_solve(problem.ocp, plan, problem.initial_guess(plan), config)
    out = Path(args.out)
    io.write_trajectory(out / f"{args.problem}_trajectory.csv", result.trajectory)
    io.write_history(out / f"{args.problem}_history.csv", result.history)
    print(
        f"{args.problem}: {result.status} after {result.iterations} iterations, "
        f"cost {result.cost:.6e}, defect {result.defect_norm:.3e}"
    )
    return _STATUS_EXIT[result.status]


def cmd_local_convergence(args) -> int:
    rows = run_local_convergence(
        problem_name=args.problem,
        samples=args.samples,
        segments=args.segments,
        radius=args.radius,
        seed=args.seed,
        jobs=args.jobs,
    )
    path = Path(args.out) / "local_convergence.csv"
    io.write_rows(path, RATE_HEADER, rows)
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def cmd_ec_study(args) -> int:
    study = run_ec_study(args.problem, max_iterations=args.max_iterations)
    out = Path(args.out)
    for preset, result in study.histories.items():
        io.write_history(out / f"ec_history_{preset}.csv", result.history)
        print(f"{preset}: {result.status} after {result.iterations} iterations")
    io.write_rows(out / "ec_alpha_sweep.csv", EC_SWEEP_HEADER, study.sweep_rows)
    return EXIT_OK


def cmd_penalty_study(args) -> int:
    rows = run_penalty_study(
        args.problem,
        segment_list=args.segments,
        penalty_scale=args.penalty,
        max_iterations=args.max_iterations,
    )
    path = Path(args.out) / "penalty_study.csv"
    io.write_rows(path, PENALTY_HEADER, rows)
    for row in rows:
        if row[2] == "skipped_not_divisor":
            print(f"warning: {row[0]} segments does not divide the horizon; skipped")
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


_COMMANDS = {
    "solve": cmd_solve,
    "local-convergence": cmd_local_convergence,
    "ec-study": cmd_ec_study,
    "penalty-study": cmd_penalty_study,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
