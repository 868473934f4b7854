"""Forward roll-outs: candidate trajectories for a given step size.

Three flavors share the control law u' = u + alpha*kff + K (x' - x):

* linear: propagates the linearized dynamics; internal predictor only
  (feeds the expected-cost model and the hybrid roll-out).
* nonlinear: serial simulation that retains exactly (1-alpha) of each
  nominal defect.
* hybrid: shooting states move by the linear prediction, then each segment
  is simulated independently from its updated start.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .errors import RolloutDiverged
from .trajectory import OcpDefinition, ShootingPlan, Trajectory

if TYPE_CHECKING:
    from .derivatives import LocalModel
    from .sweep import Policy


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"step size must lie in (0, 1], got {alpha}")
    return float(alpha)


def linear_rollout(traj: Trajectory, policy: "Policy", local: "LocalModel", alpha: float):
    """Perturbations (dx, du) from simulating the linearized dynamics.

    dx[k+1] = A_k dx_k + B_k du_k + alpha*d_{k+1}; both outputs scale
    linearly with alpha since dx_0 = 0.
    """
    alpha = _check_alpha(alpha)
    A, B = local.dynamics.A, local.dynamics.B
    N = traj.horizon
    dx = np.zeros((N + 1, traj.states.shape[1]))
    du = np.empty_like(traj.controls)
    for k in range(N):
        du[k] = alpha * policy.feedforward[k] + policy.gains[k] @ dx[k]
        dx[k + 1] = A[k] @ dx[k] + B[k] @ du[k] + alpha * traj.defects[k]
    return dx, du


def nonlinear_rollout(
    traj: Trajectory,
    policy: "Policy",
    plan: ShootingPlan,
    ocp: OcpDefinition,
    alpha: float,
    debug_check: bool = False,
) -> Trajectory:
    """Serial nonlinear roll-out; new defects are exactly (1-alpha) d.

    The state update x'_{k+1} = x_{k+1} + [f(x'_k,u'_k) - f(x_k,u_k)]
    + alpha*d_{k+1} is evaluated as f(x'_k,u'_k) - (1-alpha) d_{k+1}, which
    is the same expression with f(x_k,u_k) = x_{k+1} + d_{k+1} substituted;
    the produced defects are stored rather than re-measured.
    """
    alpha = _check_alpha(alpha)
    Xn, Un, fail = ocp.model.closed_loop(
        traj.states, traj.controls, traj.defects, policy.feedforward, policy.gains, alpha
    )
    if fail >= 0:
        raise RolloutDiverged(int(fail))
    out = Trajectory(Xn, Un, (1.0 - alpha) * traj.defects)
    if debug_check:
        sim = np.stack(
            [ocp.model.step(Xn[k], Un[k]) for k in range(traj.horizon)], axis=0
        )
        assert np.max(np.abs(sim - Xn[1:] - out.defects)) <= 1e-12
    return out


def hybrid_rollout(
    traj: Trajectory,
    policy: "Policy",
    local: "LocalModel",
    plan: ShootingPlan,
    ocp: OcpDefinition,
    alpha: float,
) -> Trajectory:
    """Linear prediction for shooting states, nonlinear simulation within
    segments; shooting-node defects are re-measured against the simulated
    segment ends."""
    alpha = _check_alpha(alpha)
    dx, _ = linear_rollout(traj, policy, local, alpha)
    segments = plan.segments()
    starts = np.array([traj.states[a] + dx[a] for a, _ in segments])
    pieces = [
        _hybrid_segment(traj, policy, ocp, alpha, seg, starts[i])
        for i, seg in enumerate(segments)
    ]
    return _assemble_hybrid(traj, plan, dx, pieces)


def _hybrid_segment(traj, policy, ocp, alpha, segment, xstart):
    """Simulate one segment closed-loop; independent of every other segment."""
    a, b = segment
    Xs, Us, fail = ocp.model.segment_rollout(
        xstart,
        traj.states[a:b],
        traj.controls[a:b],
        policy.feedforward[a:b],
        policy.gains[a:b],
        alpha,
    )
    if fail >= 0:
        raise RolloutDiverged(a + int(fail))
    return segment, Xs, Us


def _assemble_hybrid(traj, plan, dx, pieces) -> Trajectory:
    N = traj.horizon
    Xn = np.empty_like(traj.states)
    Un = np.empty_like(traj.controls)
    Dn = np.zeros_like(traj.defects)
    Xn[0] = traj.states[0]
    shooting = set(plan.shooting_indices)
    for (a, b), Xs, Us in pieces:
        Un[a:b] = Us
        Xn[a + 1 : b] = Xs[:-1]
        if b in shooting:
            Xn[b] = traj.states[b] + dx[b]
            Dn[b - 1] = Xs[-1] - Xn[b]
        else:
            Xn[b] = Xs[-1]
    return Trajectory(Xn, Un, Dn)
