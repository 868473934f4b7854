"""Merit function, adaptive penalty weight, and backtracking line search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RolloutDiverged
from .rollout import hybrid_rollout, nonlinear_rollout
from .trajectory import OcpDefinition, ShootingPlan, Trajectory, total_cost, total_defect_norm

MERIT_MODES = ("adaptive", "constant", "cost")


@dataclass
class MeritOptions:
    """Acceptance-test configuration.

    mode "adaptive" re-estimates the defect weight mu from the expected cost
    change each iteration; "constant" keeps mu fixed; "cost" ignores defects
    entirely in the acceptance test (the merit is the plain cost). gamma=0
    reduces the Armijo condition to simple decrease.
    """

    mode: str = "adaptive"
    p: float = 2
    rho: float = 0.5
    mu0: float = 10.0
    kappa_d: float = 1e-4
    gamma: float = 0.1
    mu_constant: float = 100.0

    def __post_init__(self):
        if self.mode not in MERIT_MODES:
            raise ValueError(f"merit mode must be one of {MERIT_MODES}")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.mu0 <= 0 or self.kappa_d <= 0:
            raise ValueError("mu0 and kappa_d must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")

    def initial_mu(self) -> float:
        if self.mode == "cost":
            return 0.0
        if self.mode == "constant":
            return self.mu_constant
        return self.mu0


def merit(traj: Trajectory, ocp: OcpDefinition, mu: float, p: float = 2) -> float:
    """Cost plus mu times the defect norm."""
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    return total_cost(traj, ocp) + mu * total_defect_norm(traj, p)


def update_mu(mu_prev: float, ec_full: float, defect_norm: float, opts: MeritOptions) -> float:
    """Adaptive defect weight, monotone non-decreasing over a solve.

    When the defects are above the kappa_d threshold, the candidate weight
    ec_full / ((1-rho) * defect_norm) + mu0 is large enough that the
    predicted merit change stays negative even when the cost must rise to
    close the defects; the max with the previous value keeps the weight from
    shrinking once raised.
    """
    if opts.mode == "cost":
        return 0.0
    if opts.mode == "constant":
        return opts.mu_constant
    if defect_norm <= opts.kappa_d:
        return mu_prev
    candidate = ec_full / ((1.0 - opts.rho) * defect_norm) + opts.mu0
    return max(mu_prev, candidate)


def armijo_accept(
    merit_new: float,
    merit_old: float,
    ec_alpha: float,
    alpha: float,
    mu: float,
    defect_norm: float,
    gamma: float,
) -> bool:
    """Sufficient-decrease test scaled by the expected merit change."""
    return merit_new < merit_old + gamma * (ec_alpha - alpha * mu * defect_norm)


def alpha_schedule(min_exponent: int = 10) -> list:
    return [0.5**i for i in range(min_exponent + 1)]


@dataclass
class LineSearchResult:
    trajectory: Trajectory
    alpha: float
    accepted: bool
    merit_old: float
    merit_new: float


def line_search(
    traj: Trajectory,
    policy,
    ec,
    local,
    plan: ShootingPlan,
    ocp: OcpDefinition,
    opts: MeritOptions,
    rollout_kind: str,
    mu: float,
    schedule=None,
) -> LineSearchResult:
    """Backtracking line search over alpha = 1, 1/2, ..., 2^-10.

    Returns the first candidate passing the Armijo test; a diverged roll-out
    rejects that alpha. When nothing is accepted, the nominal trajectory is
    returned with alpha = 0 so the caller can raise regularization.
    """
    if rollout_kind not in ("hybrid", "nonlinear"):
        raise ValueError("rollout_kind must be 'hybrid' or 'nonlinear'")
    if opts.mode == "cost":
        mu = 0.0
    merit_old = merit(traj, ocp, mu, opts.p)
    defect_norm = total_defect_norm(traj, opts.p)
    for alpha in schedule or alpha_schedule():
        try:
            if rollout_kind == "hybrid":
                candidate = hybrid_rollout(traj, policy, local, plan, ocp, alpha)
            else:
                candidate = nonlinear_rollout(traj, policy, plan, ocp, alpha)
            merit_new = merit(candidate, ocp, mu, opts.p)
        except (RolloutDiverged, FloatingPointError):
            continue
        if not np.isfinite(merit_new):
            continue
        if armijo_accept(
            merit_new, merit_old, ec(alpha), alpha, mu, defect_norm, opts.gamma
        ):
            return LineSearchResult(candidate, alpha, True, merit_old, merit_new)
    return LineSearchResult(traj, 0.0, False, merit_old, merit_old)
