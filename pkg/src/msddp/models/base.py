"""Dynamics model wrappers bridging the benchmark models to the backends."""

from __future__ import annotations

import numpy as np

from ..backends import active as _backend
from ..backends import pure as _pure
from ..kinds import state_dims


class ContinuousModel:
    """A mechanical model with state (configuration, velocity).

    Subclasses set `kind` and `params`; evaluation goes through the NumPy
    backend, which is the reference implementation of the model equations.
    """

    kind: int
    params: np.ndarray

    @property
    def n(self) -> int:
        return state_dims(self.kind, self.params)[0]

    @property
    def m(self) -> int:
        return state_dims(self.kind, self.params)[1]

    def dynamics(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Continuous state derivative f_c(x, u)."""
        return _pure.continuous_dynamics(self.kind, self.params, x, u)[0]

    def dynamics_jacobians(self, x: np.ndarray, u: np.ndarray):
        """Analytic Jacobians of f_c with respect to x and u."""
        Jx, Ju = _pure.continuous_jacobians(self.kind, self.params, x, u)
        return Jx[0], Ju[0]

    def acceleration(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Velocity-derivative half of f_c."""
        return _pure.acceleration(self.kind, self.params, x, u)[0]

    def discretize(self, dt: float) -> "DiscreteModel":
        return DiscreteModel(self.kind, self.params, dt, continuous=self)


def semi_implicit_euler_step(
    model: ContinuousModel, x: np.ndarray, u: np.ndarray, dt: float
) -> np.ndarray:
    """One symplectic-Euler step: v' = v + dt a(q, v, u), q' = q + dt q̇(q, v')."""
    out = _pure.step_many(model.kind, model.params, dt, x, u)[0]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite state after integration step")
    return out


class DiscreteModel:
    """Discrete-time dynamics x' = f(x, u), dispatched to the active backend.

    Built either from a continuous model plus a step size (semi-implicit
    Euler) or directly as an exact discrete map (linear test systems).
    Evaluation is deterministic: repeated calls are bit-identical.
    """

    def __init__(self, kind, params, dt, continuous=None):
        self.kind = int(kind)
        self.params = np.ascontiguousarray(params, dtype=float)
        self.dt = float(dt)
        self.continuous = continuous
        self.n, self.m = state_dims(self.kind, self.params)

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return _backend.step(self.kind, self.params, self.dt, x, u)

    def simulate(self, x0: np.ndarray, U: np.ndarray) -> np.ndarray:
        return _backend.simulate(self.kind, self.params, self.dt, x0, U)

    def jacobians(self, X: np.ndarray, U: np.ndarray):
        """Discrete-step Jacobians (A, B) at each node of (X, U)."""
        return _backend.jacobians(self.kind, self.params, self.dt, X, U)

    def dynamics_tensors(self, X: np.ndarray, U: np.ndarray, h: float):
        """Second-order step derivatives via central differences of (A, B)."""
        return _backend.dynamics_tensors(self.kind, self.params, self.dt, X, U, h)

    def closed_loop(self, X, U, D, kff, Kfb, alpha):
        return _backend.closed_loop(
            self.kind, self.params, self.dt, X, U, D, kff, Kfb, alpha
        )

    def segment_rollout(self, xstart, X, U, kff, Kfb, alpha):
        return _backend.segment_rollout(
            self.kind, self.params, self.dt, xstart, X, U, kff, Kfb, alpha
        )
