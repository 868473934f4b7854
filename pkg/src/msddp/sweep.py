"""Defect-aware backward sweep and expected-cost-change coefficients.

One recursion covers all four solver variants: multiple-shooting variants
keep the defect coupling terms, second-order variants contract the value
gradient with the dynamics tensors, and single-shooting / Gauss-Newton
variants drop them. An optional quadratic penalty on the segment mismatch
shifts the incoming value expansion at shooting nodes, which biases the
search direction toward closing defects from the upstream side too.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backends import active as _backend
from .derivatives import LocalModel
from .errors import NotPositiveDefinite
from .trajectory import ShootingPlan, Trajectory

VARIANTS = ("ss-ilqr", "ms-ilqr", "ss-ddp", "ms-ddp")


@dataclass
class ValueExpansion:
    """Per-node value function expansion: Hessian, gradient, scalar."""

    S: np.ndarray
    s: np.ndarray
    const: np.ndarray


@dataclass
class Policy:
    """Local affine policy du_k = alpha*feedforward_k + gains_k dx_k."""

    feedforward: np.ndarray
    gains: np.ndarray
    # Feedforward-only expected-change sums from the sweep; these form the
    # legacy approximate expected-cost model.
    ff_linear: float = 0.0
    ff_quadratic: float = 0.0

    def max_feedforward(self) -> float:
        return float(np.max(np.abs(self.feedforward))) if self.feedforward.size else 0.0


@dataclass
class SweepOptions:
    variant: str = "ms-ddp"
    regularization: float = 0.0
    penalty: np.ndarray = None  # PSD weight, (n, n) shared or (N, n, n) per node

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.regularization < 0:
            raise ValueError("regularization must be nonnegative")

    @property
    def multiple_shooting(self) -> bool:
        return self.variant.startswith("ms")

    @property
    def second_order(self) -> bool:
        return self.variant.endswith("ddp")


def backward_sweep(
    local: LocalModel, traj: Trajectory, opts: SweepOptions, plan: ShootingPlan = None
) -> tuple[ValueExpansion, Policy]:
    """Run the backward recursion; raises NotPositiveDefinite on failure.

    Single-shooting variants require a dynamically feasible trajectory (all
    defects zero). The shooting plan is only needed when a penalty weight is
    active, to locate the shooting nodes.
    """
    dyn = local.dynamics
    cost = local.cost
    if opts.second_order and not dyn.has_tensors:
        raise ValueError("second-order sweep requires dynamics tensors")
    use_defects = opts.multiple_shooting
    if not use_defects and np.any(traj.defects != 0.0):
        raise ValueError("single-shooting sweep requires zero defects")
    penalty = opts.penalty
    if penalty is not None and not np.any(penalty):
        penalty = None
    if penalty is not None and plan is None:
        raise ValueError("penalty requires the shooting plan")
    N = traj.horizon
    shoot = plan.shoot_mask() if plan is not None else np.zeros(N, dtype=bool)
    fxx, fuu, fux = (
        (dyn.fxx, dyn.fuu, dyn.fux) if opts.second_order else (None, None, None)
    )
    S, s, sc, kff, Kfb, ec1_ff, ec2_ff, fail = _backend.sweep(
        dyn.A,
        dyn.B,
        cost.q,
        cost.r,
        cost.Q,
        cost.R,
        cost.P,
        traj.defects,
        shoot,
        float(opts.regularization),
        use_defects,
        fxx,
        fuu,
        fux,
        penalty,
    )
    if fail >= 0:
        raise NotPositiveDefinite(int(fail))
    return ValueExpansion(S, s, sc), Policy(kff, Kfb, float(ec1_ff), float(ec2_ff))


@dataclass
class ExpectedCostChange:
    """Quadratic-in-alpha model of the cost change along the linearized step."""

    ec1: float
    ec2: float

    def __call__(self, alpha: float) -> float:
        return alpha * self.ec1 + 0.5 * alpha * alpha * self.ec2


def expected_cost_coefficients(
    policy: Policy, local: LocalModel, traj: Trajectory, plan: ShootingPlan = None
) -> ExpectedCostChange:
    """Coefficients of the exact-on-LQ expected cost change.

    Evaluates the cost expansion along the unit-step linear roll-out; the
    perturbations scale linearly with alpha, so EC(alpha) = alpha*EC1 +
    alpha^2/2 * EC2 with the cross term counted twice (the off-diagonal
    block of the joint cost Hessian appears on both sides).
    """
    from .rollout import linear_rollout

    dx, du = linear_rollout(traj, policy, local, 1.0)
    cost = local.cost
    N = traj.horizon
    ec1 = float(np.sum(cost.q * dx) + np.sum(cost.r * du))
    ec2 = float(
        np.einsum("ki,kij,kj->", dx, cost.Q[: N + 1], dx)
        + np.einsum("ki,kij,kj->", du, cost.R, du)
        + 2.0 * np.einsum("ki,kij,kj->", du, cost.P, dx[:N])
    )
    return ExpectedCostChange(ec1, ec2)


def approximate_cost_change(policy: Policy) -> ExpectedCostChange:
    """Feedforward-only expected-change model from the backward pass.

    This replicates the expectation model classically computed during the
    Riccati recursion (sum of kff'Qu and kff'Quu kff); it ignores the cost
    effects of the defect contraction, which is what the exact model above
    fixes.
    """
    return ExpectedCostChange(policy.ff_linear, policy.ff_quadratic)
