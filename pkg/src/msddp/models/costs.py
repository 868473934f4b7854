"""Quadratic cost models."""

from __future__ import annotations

import numpy as np


class QuadraticCost:
    """Per-node cost 0.5 (x-xg)'Wx (x-xg) + 0.5 (u-ur)'Wu (u-ur) + (u-ur)'Wxu (x-xg)
    with terminal cost 0.5 (x-xg)'Wf (x-xg).

    Wx and Wf must be symmetric PSD, Wu symmetric PD. Wxu (the control/state
    cross weight) defaults to zero; u_ref defaults to zero.
    """

    def __init__(self, Wx, Wu, Wf, x_goal, Wxu=None, u_ref=None):
        self.Wx = np.atleast_2d(np.asarray(Wx, dtype=float))
        self.Wu = np.atleast_2d(np.asarray(Wu, dtype=float))
        self.Wf = np.atleast_2d(np.asarray(Wf, dtype=float))
        self.x_goal = np.asarray(x_goal, dtype=float)
        n = self.x_goal.shape[0]
        m = self.Wu.shape[0]
        self.Wxu = (
            np.zeros((m, n)) if Wxu is None else np.atleast_2d(np.asarray(Wxu, dtype=float))
        )
        self.u_ref = np.zeros(m) if u_ref is None else np.asarray(u_ref, dtype=float)
        for W, name in ((self.Wx, "Wx"), (self.Wu, "Wu"), (self.Wf, "Wf")):
            if not np.allclose(W, W.T):
                raise ValueError(f"{name} must be symmetric")

    @classmethod
    def diagonal(cls, wx, wu, wf, x_goal, u_ref=None):
        return cls(np.diag(wx), np.diag(wu), np.diag(wf), x_goal, u_ref=u_ref)

    def running(self, x: np.ndarray, u: np.ndarray) -> float:
        return float(self.running_batch(x[None, :], u[None, :])[0])

    def running_batch(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        dx = X - self.x_goal
        du = U - self.u_ref
        val = 0.5 * np.einsum("ki,ij,kj->k", dx, self.Wx, dx)
        val += 0.5 * np.einsum("ki,ij,kj->k", du, self.Wu, du)
        val += np.einsum("ki,ij,kj->k", du, self.Wxu, dx)
        return val

    def terminal(self, x: np.ndarray) -> float:
        dx = x - self.x_goal
        return float(0.5 * dx @ (self.Wf @ dx))

    def expansion_batch(self, X: np.ndarray, U: np.ndarray):
        """Gradients/Hessians at each node: (q, r, Q, R, P) stacked."""
        K = U.shape[0]
        dx = X[:K] - self.x_goal
        du = U - self.u_ref
        q = dx @ self.Wx.T + du @ self.Wxu
        r = du @ self.Wu.T + dx @ self.Wxu.T
        Q = np.broadcast_to(self.Wx, (K,) + self.Wx.shape).copy()
        R = np.broadcast_to(self.Wu, (K,) + self.Wu.shape).copy()
        P = np.broadcast_to(self.Wxu, (K,) + self.Wxu.shape).copy()
        return q, r, Q, R, P

    def terminal_expansion(self, x: np.ndarray):
        dx = x - self.x_goal
        return self.Wf @ dx, self.Wf.copy()
