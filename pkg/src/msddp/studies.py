"""Experiment drivers behind the command-line harness.

Each driver returns plain rows ready for CSV serialization so the CLI stays
a thin argument-parsing shell and the acceptance tests can call the same
code without touching the filesystem.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .derivatives import expand
from .errors import ConfigError
from .globalization import MeritOptions
from .presets import make_config
from .problems import Problem, build_problem
from .rollout import nonlinear_rollout
from .solver import SolverConfig, fit_convergence_rate, solve, truncate_at_floor
from .sweep import (
    SweepOptions,
    approximate_cost_change,
    backward_sweep,
    expected_cost_coefficients,
)
from .trajectory import ShootingPlan, Trajectory, measure_defects, total_cost

RATE_HEADER = ["variant", "rollout", "sample", "kappa", "epsilon", "pairs", "excluded"]
EC_SWEEP_HEADER = ["alpha", "dj_actual", "ec_exact", "ec_approx"]
PENALTY_HEADER = [
    "segments", "penalized", "status", "iterations", "final_cost", "final_defect", "mean_alpha",
]

RATE_CONFIGS = (
    ("ms-ddp", "nonlinear"),
    ("ms-ddp", "hybrid"),
    ("ms-ilqr", "nonlinear"),
    ("ms-ilqr", "hybrid"),
)

EC_PRESETS = ("filqr", "filqr-exact", "msilqr-exact")


def reference_optimum(problem: Problem, plan: ShootingPlan) -> Trajectory:
    """Tightly solved optimum used as the ground truth for rate fits."""
    base = solve(
        problem.ocp, plan, problem.initial_guess(plan), make_config("msddp", max_iterations=300)
    )
    tight = make_config(
        "msddp", max_iterations=300, cost_tol=1e-12, defect_tol=1e-10
    )
    return solve(problem.ocp, plan, base.trajectory, tight).trajectory


def _rate_sample(args):
    (problem_name, horizon, segments, variant, rollout, ref_states, ref_controls,
     radius, seed, sample) = args
    problem = build_problem(problem_name, horizon=horizon)
    plan = (
        ShootingPlan.all_states(horizon)
        if segments == horizon
        else ShootingPlan.even(horizon, segments)
    )
    config = make_config_for_rate(variant, rollout)
    rng = np.random.default_rng([seed, sample])
    states = ref_states.copy()
    idx = list(plan.shooting_indices)
    if idx:
        states[idx] += rng.uniform(-radius, radius, size=(len(idx), states.shape[1]))
    errors = []

    def track(traj, iteration):
        dev = np.concatenate(
            [(traj.states - ref_states).ravel(), (traj.controls - ref_controls).ravel()]
        )
        errors.append(float(np.linalg.norm(dev)))

    solve(problem.ocp, plan, Trajectory(states, ref_controls.copy()), config, iterate_hook=track)
    kappa, epsilon, pairs, excluded = fit_convergence_rate(truncate_at_floor(errors))
    return [variant, rollout, sample, kappa, epsilon, pairs, int(excluded)]


def make_config_for_rate(variant: str, rollout: str) -> SolverConfig:
    # tight tolerances so the iterate sequence runs deep into the fit window
    return SolverConfig(
        variant=variant,
        rollout=rollout,
        merit=MeritOptions(),
        max_iterations=60,
        cost_tol=1e-14,
        defect_tol=1e-10,
    )


def run_local_convergence(
    problem_name: str = "quadrotor",
    samples: int = 100,
    segments: int = 200,
    radius: float = 3e-4,
    seed: int = 0,
    horizon: int | None = None,
    jobs: int = 1,
) -> list:
    """Monte Carlo local-rate study over the four sweep/roll-out pairings.

    Rows are emitted in deterministic order regardless of worker scheduling.
    """
    problem = build_problem(problem_name, horizon=horizon)
    N = problem.ocp.horizon
    if N % segments != 0:
        raise ConfigError(f"segment count {segments} must divide the horizon {N}")
    plan = ShootingPlan.all_states(N) if segments == N else ShootingPlan.even(N, segments)
    optimum = reference_optimum(problem, plan)
    tasks = [
        (problem_name, N, segments, variant, rollout, optimum.states,
         optimum.controls, radius, seed, sample)
        for variant, rollout in RATE_CONFIGS
        for sample in range(samples)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_rate_sample, tasks, chunksize=4))
    else:
        rows = [_rate_sample(task) for task in tasks]
    return rows


@dataclass
class EcStudyResult:
    histories: dict
    sweep_rows: list


def ec_history_runs(problem: Problem, max_iterations: int = 200) -> dict:
    """Convergence histories of the three acceptance-condition presets."""
    plan = problem.plan()  # every state is a shooting state
    start = problem.initial_guess(plan)
    out = {}
    for preset in EC_PRESETS:
        config = make_config(preset, max_iterations=max_iterations)
        out[preset] = solve(problem.ocp, plan, start.copy(), config)
    return out


def ec_reference_iterate(problem: Problem, plan: ShootingPlan, blend: float = 0.1) -> Trajectory:
    """Mildly infeasible early iterate for the step-size sweep.

    Blends the interpolated task guess into the passive roll-out, giving
    defects small enough that the local model is meaningful at moderate
    step sizes but large enough to separate the two expectation models.
    """
    N = problem.ocp.horizon
    controls = np.tile(problem.nominal_control, (N, 1))
    passive = problem.ocp.model.simulate(problem.ocp.x0, controls)
    interp = np.linspace(problem.ocp.x0, problem.ocp.cost.x_goal, N + 1)
    states = (1.0 - blend) * passive + blend * interp
    return measure_defects(Trajectory(states, controls), plan, problem.ocp)


def ec_alpha_sweep(problem: Problem, blend: float = 0.1, step: float = 0.05) -> list:
    """(alpha, actual cost change, exact EC, approximate EC) rows."""
    plan = problem.plan()
    traj = ec_reference_iterate(problem, plan, blend)
    local = expand(traj, problem.ocp, order=1)
    _, policy = backward_sweep(local, traj, SweepOptions("ms-ilqr"), plan)
    exact = expected_cost_coefficients(policy, local, traj, plan)
    approx = approximate_cost_change(policy)
    base = total_cost(traj, problem.ocp)
    rows = [[0.0, 0.0, 0.0, 0.0]]
    for alpha in np.arange(step, 1.0 + step / 2, step):
        candidate = nonlinear_rollout(traj, policy, plan, problem.ocp, float(alpha))
        rows.append(
            [float(alpha), total_cost(candidate, problem.ocp) - base,
             exact(float(alpha)), approx(float(alpha))]
        )
    return rows


def run_ec_study(problem_name: str = "acrobot", max_iterations: int = 200):
    problem = build_problem(problem_name)
    histories = ec_history_runs(problem, max_iterations)
    rows = ec_alpha_sweep(problem)
    return EcStudyResult(histories=histories, sweep_rows=rows)


def run_penalty_study(
    problem_name: str,
    segment_list=(2, 4, 8, 16, 32),
    penalty_scale: float = 1.0,
    max_iterations: int = 300,
) -> list:
    """Penalized vs unpenalized solves over a list of segment counts.

    Segment counts that do not divide the horizon produce a warning row and
    are skipped.
    """
    problem = build_problem(problem_name)
    N = problem.ocp.horizon
    rows = []
    for segments in segment_list:
        if N % segments != 0:
            rows.append([segments, "", "skipped_not_divisor", 0, "", "", ""])
            continue
        plan = problem.plan(segments)
        start = problem.initial_guess(plan)
        for penalized in (0, 1):
            qd = penalty_scale * problem.penalty_weight if penalized else None
            config = make_config(
                "msilqr-hybrid", max_iterations=max_iterations, penalty=qd
            )
            result = solve(problem.ocp, plan, start.copy(), config)
            alphas = [r.alpha for r in result.history[1:] if r.alpha > 0]
            rows.append(
                [
                    segments,
                    penalized,
                    result.status,
                    result.iterations,
                    result.cost,
                    result.defect_norm,
                    float(np.mean(alphas)) if alphas else 0.0,
                ]
            )
    return rows
