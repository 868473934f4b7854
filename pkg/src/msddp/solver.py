"""Outer solver iteration and local convergence-rate measurement."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .derivatives import FD_STEP, expand
from .errors import NotPositiveDefinite, RolloutDiverged
from .globalization import MeritOptions, line_search, merit, update_mu
from .sweep import (
    SweepOptions,
    approximate_cost_change,
    backward_sweep,
    expected_cost_coefficients,
)
from .trajectory import (
    OcpDefinition,
    ShootingPlan,
    Trajectory,
    measure_defects,
    total_cost,
    total_defect_norm,
)

STATUS_CONVERGED = "converged"
STATUS_STALLED = "stalled"
STATUS_MAX_ITERATIONS = "max_iterations"


@dataclass
class RegularizationSchedule:
    """Levenberg-Marquardt shift management for the backward sweep.

    The shift grows on factorization failure, on a rejected line search, and
    on poor progress (accepted step below alpha_poor); it shrinks after
    comfortable steps (alpha_good or larger) and is left alone in between.
    """

    initial: float = 0.0
    minimum: float = 1e-9
    factor: float = 10.0
    reject_factor: float = 100.0
    line_search_floor: float = 1e-6
    maximum: float = 1e10
    alpha_good: float = 1.0
    alpha_poor: float = 0.5

    def increase(self, lam: float) -> float:
        return max(self.minimum, lam * self.factor)

    def increase_after_reject(self, lam: float) -> float:
        return max(lam * self.reject_factor, self.line_search_floor)

    def after_step(self, lam: float, alpha: float) -> float:
        if alpha >= self.alpha_good:
            lam = lam / self.factor
            return lam if lam >= self.minimum else 0.0
        # a small accepted step means the local model is not trusted yet;
        # damp hard so the next direction is closer to steepest descent
        if alpha <= self.alpha_poor:
            return max(lam * self.reject_factor, self.line_search_floor)
        return lam


@dataclass
class SolverConfig:
    variant: str = "ms-ddp"
    rollout: str = "nonlinear"  # or "hybrid"
    merit: MeritOptions = field(default_factory=MeritOptions)
    penalty: np.ndarray = None  # scalar or (n, n) weight; None disables
    regularization: RegularizationSchedule = field(default_factory=RegularizationSchedule)
    max_iterations: int = 500
    cost_tol: float = 1e-8
    defect_tol: float = 1e-3
    ec_model: str = "exact"  # or "approximate"
    fd_step: float = FD_STEP
    # fraction of the initial defect norm below which the penalty is dropped
    penalty_gate: float = 0.05

    def __post_init__(self):
        if self.cost_tol <= 0 or self.defect_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.rollout not in ("hybrid", "nonlinear"):
            raise ValueError("rollout must be 'hybrid' or 'nonlinear'")
        if self.ec_model not in ("exact", "approximate"):
            raise ValueError("ec_model must be 'exact' or 'approximate'")

    @property
    def order(self) -> int:
        return 2 if self.variant.endswith("ddp") else 1

    def penalty_matrices(self, plan, n: int, dt: float):
        """Per-node penalty weights from the scalar q_d flag.

        The weight at a shooting node scales with the squared duration of
        the segment that ends there (the arrival point is a second-order
        prediction, so its error budget grows with the segment length);
        short segments are then left essentially unpenalized. An explicit
        matrix penalty is used unscaled at every shooting node.
        """
        if self.penalty is None:
            return None
        penalty = np.asarray(self.penalty, dtype=float)
        if penalty.ndim >= 2:
            return penalty
        qd = float(penalty)
        if qd == 0.0:
            return None
        N = plan.horizon
        out = np.zeros((N, n, n))
        eye = np.eye(n)
        shooting = set(plan.shooting_indices)
        for a, b in plan.segments():
            if b in shooting:
                out[b - 1] = qd * ((b - a) * dt) ** 2 * eye
        return out


@dataclass
class IterationRecord:
    """One outer iteration, rejected iterations included (alpha = 0)."""

    iteration: int
    cost: float
    defect_norm: float
    merit: float
    mu: float
    alpha: float
    regularization: float
    ec1: float
    ec2: float
    wall_ms: float


@dataclass
class SolveResult:
    trajectory: Trajectory
    history: list
    status: str

    @property
    def iterations(self) -> int:
        return self.history[-1].iteration if self.history else 0

    @property
    def cost(self) -> float:
        return self.history[-1].cost

    @property
    def defect_norm(self) -> float:
        return self.history[-1].defect_norm


def initial_trajectory(ocp: OcpDefinition, states=None, controls=None) -> Trajectory:
    """Warm-start helper: any (X, U) pair, missing pieces filled with zeros."""
    N = ocp.horizon
    if controls is None:
        controls = np.zeros((N, ocp.m))
    if states is None:
        states = np.zeros((N + 1, ocp.n))
        states[:] = ocp.x0
    return Trajectory(np.asarray(states, dtype=float), np.asarray(controls, dtype=float))


def solve(
    ocp: OcpDefinition,
    plan: ShootingPlan,
    initial: Trajectory,
    config: SolverConfig,
    iterate_hook=None,
) -> SolveResult:
    """Iterate expansion -> backward sweep -> line search until convergence.

    Convergence requires the normalized cost change below cost_tol and the
    defect norm below defect_tol. A rejected line search raises the
    regularization and repeats; the solve stalls when the shift exceeds its
    maximum. Roll-out states of `initial` are overwritten by simulation
    before the first iteration.
    """
    if not np.all(np.isfinite(initial.states)) or not np.all(
        np.isfinite(initial.controls)
    ):
        raise ValueError("initial trajectory contains non-finite values")
    traj = measure_defects(initial, plan, ocp)
    initial_defect = total_defect_norm(traj, config.merit.p)
    if iterate_hook is not None:
        iterate_hook(traj, 0)
    opts = config.merit
    mu = opts.initial_mu()
    lam = config.regularization.initial
    penalty = config.penalty_matrices(plan, ocp.n, ocp.dt)
    cost = total_cost(traj, ocp)
    defect = total_defect_norm(traj, opts.p)
    history = [
        IterationRecord(0, cost, defect, merit(traj, ocp, mu, opts.p), mu, 0.0, lam, 0.0, 0.0, 0.0)
    ]
    status = STATUS_MAX_ITERATIONS
    local = None
    start = time.perf_counter()
    for it in range(1, config.max_iterations + 1):
        if local is None:
            local = expand(traj, ocp, config.order, config.fd_step)
        # the defect penalty shapes the search direction while segments are
        # meaningfully disconnected; once the defects are a small fraction of
        # their initial size it has no cost left to represent and would only
        # perturb the tail convergence
        defect_gate = max(config.merit.kappa_d, config.penalty_gate * initial_defect)
        active_penalty = penalty if defect > defect_gate else None
        policy = None
        while policy is None:
            try:
                _, policy = backward_sweep(
                    local, traj, SweepOptions(config.variant, lam, active_penalty), plan
                )
            except NotPositiveDefinite:
                lam = config.regularization.increase(lam)
                if lam > config.regularization.maximum:
                    break
        if policy is None:
            status = STATUS_STALLED
            break
        ec = expected_cost_coefficients(policy, local, traj, plan)
        if config.ec_model == "approximate":
            ec = approximate_cost_change(policy)
        mu = update_mu(mu, ec(1.0), defect, opts)
        result = line_search(
            traj, policy, ec, local, plan, ocp, opts, config.rollout, mu
        )
        wall_ms = (time.perf_counter() - start) * 1e3
        if result.accepted:
            traj = result.trajectory
            new_cost = total_cost(traj, ocp)
            new_defect = total_defect_norm(traj, opts.p)
            history.append(
                IterationRecord(
                    it, new_cost, new_defect, result.merit_new, mu,
                    result.alpha, lam, ec.ec1, ec.ec2, wall_ms,
                )
            )
            if iterate_hook is not None:
                iterate_hook(traj, it)
            lam = config.regularization.after_step(lam, result.alpha)
            local = None
            converged = (
                abs(cost - new_cost) / max(1.0, abs(cost)) < config.cost_tol
                and new_defect < config.defect_tol
            )
            cost, defect = new_cost, new_defect
            if converged:
                status = STATUS_CONVERGED
                break
        else:
            history.append(
                IterationRecord(
                    it, cost, defect, result.merit_old, mu, 0.0, lam,
                    ec.ec1, ec.ec2, wall_ms,
                )
            )
            # No step possible and no meaningful predicted improvement left:
            # the iterate is a numerical fixpoint.
            if defect < config.defect_tol and abs(ec(1.0)) < config.cost_tol * max(
                1.0, abs(cost)
            ):
                status = STATUS_CONVERGED
                break
            lam = config.regularization.increase_after_reject(lam)
            if lam > config.regularization.maximum:
                status = STATUS_STALLED
                break
    return SolveResult(traj, history, status)


@dataclass
class RateFit:
    """Least-squares fit of log e_{j+1} = log kappa + epsilon log e_j."""

    sample: int
    kappa: float
    epsilon: float
    points: int
    excluded: bool


# Iterate errors below this level approach the double-precision noise ball
# around the attractor and carry no rate information; the sequence is cut at
# the first such value (which may still serve as the last pair's right side).
ERROR_FLOOR = 1e-9
# Deep in the decay (below STALL_LEVEL), a contraction ratio above
# STALL_RATIO means the iterates are wandering the float plateau around the
# attractor rather than converging; the early transient, where the error may
# briefly rise, lives far above this level and is left alone.
STALL_RATIO = 0.9
STALL_LEVEL = 1e-4


def fit_convergence_rate(errors, window=(1e-11, 1e-2), min_pairs: int = 2) -> tuple:
    """Fit (kappa, epsilon) over iterate-error pairs whose left side lies in
    the window.

    Returns (kappa, epsilon, pairs, excluded); a sample with fewer than
    min_pairs pairs (i.e. fewer than three usable iterates) is flagged
    excluded.
    """
    errors = np.asarray(errors, dtype=float)
    lo, hi = window
    xs, ys = [], []
    for ej, enext in zip(errors[:-1], errors[1:]):
        if lo < ej < hi and enext > 0 and np.isfinite(np.log(enext)):
            xs.append(np.log(ej))
            ys.append(np.log(enext))
    if len(xs) < min_pairs:
        return float("nan"), float("nan"), len(xs), True
    coeffs = np.polyfit(np.asarray(xs), np.asarray(ys), 1)
    epsilon = float(coeffs[0])
    kappa = float(np.exp(coeffs[1]))
    return kappa, epsilon, len(xs), False


def truncate_at_floor(
    errors,
    floor: float = ERROR_FLOOR,
    stall_ratio: float = STALL_RATIO,
    stall_level: float = STALL_LEVEL,
) -> list:
    """Trim the uninformative tail of an iterate-error sequence.

    The sequence ends at its first sub-floor value (kept, so it can close
    the last pair) or, once the decay is deep (below stall_level), just
    before the first value that fails to contract by the stall ratio.
    """
    out = []
    for e in errors:
        if out and 0 < out[-1] < stall_level and e >= stall_ratio * out[-1]:
            break
        out.append(e)
        if e < floor:
            break
    return out


def measure_local_rate(
    ocp: OcpDefinition,
    plan: ShootingPlan,
    optimum: Trajectory,
    samples: int,
    radius: float,
    seed: int,
    config: SolverConfig,
    window=(1e-11, 1e-2),
) -> list:
    """Perturb the shooting states around a tight optimum and fit the local
    convergence rate of each re-solve.

    Only shooting states are perturbed (uniformly within `radius` per
    component); controls stay at the optimum. Per-iterate errors stack all
    state and control deviations into one 2-norm.
    """
    fits = []
    ref_states = optimum.states
    ref_controls = optimum.controls
    idx = list(plan.shooting_indices)
    for sample in range(samples):
        rng = np.random.default_rng([seed, sample])
        states = ref_states.copy()
        if idx:
            states[idx] += rng.uniform(-radius, radius, size=(len(idx), ocp.n))
        errors = []

        def track(traj, iteration, _errors=errors):
            dev = np.concatenate(
                [(traj.states - ref_states).ravel(), (traj.controls - ref_controls).ravel()]
            )
            _errors.append(float(np.linalg.norm(dev)))

        solve(ocp, plan, Trajectory(states, ref_controls.copy()), config, iterate_hook=track)
        kappa, epsilon, points, excluded = fit_convergence_rate(
            truncate_at_floor(errors), window
        )
        fits.append(RateFit(sample, kappa, epsilon, points, excluded))
    return fits
