"""Local quadratic models along a nominal trajectory.

First-order dynamics sensitivities are exact analytic Jacobians of the
discrete step; second-order tensors are central finite differences of those
Jacobians (step FD_STEP), which keeps the truncation error at O(h^2) without
hand-deriving third-order-free tensor expressions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .trajectory import CostExpansion, DynamicsExpansion, OcpDefinition, Trajectory

FD_STEP = 1e-5


@dataclass
class LocalModel:
    """Cost and dynamics expansions for nodes 0..N-1 plus the terminal node."""

    cost: CostExpansion
    dynamics: DynamicsExpansion
    order: int


def expand(traj: Trajectory, ocp: OcpDefinition, order: int = 1, fd_step: float = FD_STEP) -> LocalModel:
    """Quadratic cost expansion and dynamics sensitivities along `traj`."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    N = traj.horizon
    X, U = traj.states, traj.controls
    q, r, Q, R, P = ocp.cost.expansion_batch(X, U)
    qN, QN = ocp.cost.terminal_expansion(X[N])
    cost = CostExpansion(
        q=np.vstack([q, qN]),
        r=r,
        Q=np.concatenate([Q, QN[None]], axis=0),
        R=R,
        P=P,
        l=ocp.cost.running_batch(X[:N], U),
        phi=ocp.cost.terminal(X[N]),
    )
    A, B = ocp.model.jacobians(X, U)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise FloatingPointError("non-finite dynamics derivative")
    if order == 2:
        fxx, fuu, fux = ocp.model.dynamics_tensors(X, U, fd_step)
        dyn = DynamicsExpansion(A, B, fxx, fuu, fux)
    else:
        dyn = DynamicsExpansion(A, B)
    return LocalModel(cost=cost, dynamics=dyn, order=order)


def fd_jacobians(model, x: np.ndarray, u: np.ndarray, h: float = FD_STEP):
    """Central-difference Jacobians of the discrete step (verification oracle).

    Uses only `model.step` evaluations, independently of the analytic
    Jacobian path, so it works for any object exposing step/n/m.
    """
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n, m = x.shape[0], u.shape[0]
    if n != model.n or m != model.m:
        raise DimensionMismatch("point does not match the model dimensions")
    A = np.empty((n, n))
    B = np.empty((n, m))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        A[:, j] = (model.step(x + e, u) - model.step(x - e, u)) / (2.0 * h)
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        B[:, j] = (model.step(x, u + e) - model.step(x, u - e)) / (2.0 * h)
    return A, B
