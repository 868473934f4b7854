"""Discrete optimal control problem containers and defect bookkeeping.

A trajectory pairs N+1 states with N controls and carries one defect vector
per node 1..N. Nodes are either shooting states (free decision variables,
defect possibly nonzero) or roll-out states (always overwritten by forward
simulation, defect identically zero); the split is described by a
ShootingPlan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, RolloutDiverged


@dataclass
class Trajectory:
    """State/control/defect arrays: (N+1, n), (N, m), (N, n).

    defects[k] is the defect at node k+1, i.e. f(x_k, u_k) - x_{k+1}.
    Instances are treated as values: operations return new trajectories.
    """

    states: np.ndarray
    controls: np.ndarray
    defects: np.ndarray = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.controls = np.asarray(self.controls, dtype=float)
        if self.defects is None:
            self.defects = np.zeros_like(self.states[1:])
        else:
            self.defects = np.asarray(self.defects, dtype=float)
        N = self.controls.shape[0]
        if self.states.shape[0] != N + 1 or self.defects.shape != self.states[1:].shape:
            raise DimensionMismatch(
                f"states {self.states.shape}, controls {self.controls.shape}, "
                f"defects {self.defects.shape} are inconsistent"
            )

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]

    def copy(self) -> "Trajectory":
        return Trajectory(self.states.copy(), self.controls.copy(), self.defects.copy())


@dataclass(frozen=True)
class ShootingPlan:
    """Shooting-state index set for a horizon of N steps.

    shooting_indices is a sorted tuple drawn from 1..N-1 for all plans built
    by the constructors below (node 0 is the fixed initial state and node N
    is simulated); hand-built plans may include N for experimentation.
    """

    horizon: int
    shooting_indices: tuple = field(default_factory=tuple)

    def __post_init__(self):
        idx = tuple(sorted(set(int(i) for i in self.shooting_indices)))
        object.__setattr__(self, "shooting_indices", idx)
        if idx and (idx[0] < 1 or idx[-1] > self.horizon):
            raise ValueError("shooting indices must lie in 1..N")

    @classmethod
    def single(cls, horizon: int) -> "ShootingPlan":
        """Single shooting: no intermediate shooting states."""
        return cls(horizon, ())

    @classmethod
    def even(cls, horizon: int, segments: int) -> "ShootingPlan":
        """Evenly split the horizon into `segments` pieces of N/M steps."""
        if segments < 1 or horizon % segments != 0:
            raise ValueError(
                f"segment count {segments} must divide the horizon {horizon}"
            )
        m = horizon // segments
        return cls(horizon, tuple(range(m, horizon, m)))

    @classmethod
    def all_states(cls, horizon: int) -> "ShootingPlan":
        """Every interior state is a shooting state (one segment per step)."""
        return cls(horizon, tuple(range(1, horizon)))

    @property
    def segment_count(self) -> int:
        bounds = self.boundaries()
        return len(bounds) - 1

    def boundaries(self) -> list:
        """Segment boundary nodes: 0, the shooting nodes, and N."""
        bounds = [0] + list(self.shooting_indices)
        if bounds[-1] != self.horizon:
            bounds.append(self.horizon)
        return bounds

    def segments(self) -> list:
        """(start, end) node pairs of each shooting segment."""
        b = self.boundaries()
        return list(zip(b[:-1], b[1:]))

    def shoot_mask(self) -> np.ndarray:
        """Boolean array over nodes 1..N: True where the node is shooting."""
        mask = np.zeros(self.horizon, dtype=bool)
        for i in self.shooting_indices:
            mask[i - 1] = True
        return mask


@dataclass
class OcpDefinition:
    """Discrete OCP: dynamics model, cost model, initial state, horizon."""

    model: object
    cost: object
    x0: np.ndarray
    horizon: int
    dt: float

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.x0.shape != (self.model.n,):
            raise DimensionMismatch(
                f"x0 has shape {self.x0.shape}, model expects ({self.model.n},)"
            )

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def m(self) -> int:
        return self.model.m


@dataclass
class CostExpansion:
    """Stacked quadratic cost expansion along a trajectory.

    q, Q include the terminal node at index N; r, R, P cover nodes 0..N-1.
    l holds the per-node running costs and phi the terminal cost.
    """

    q: np.ndarray
    r: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    l: np.ndarray
    phi: float


@dataclass
class DynamicsExpansion:
    """Stacked dynamics sensitivities; tensors present for second-order sweeps."""

    A: np.ndarray
    B: np.ndarray
    fxx: np.ndarray = None
    fuu: np.ndarray = None
    fux: np.ndarray = None

    @property
    def has_tensors(self) -> bool:
        return self.fxx is not None


def measure_defects(traj: Trajectory, plan: ShootingPlan, ocp: OcpDefinition) -> Trajectory:
    """Normalize a trajectory against a shooting plan.

    Roll-out states are overwritten by simulating each segment from its
    start; shooting states keep their values and get their defect measured.
    Idempotent: a normalized trajectory maps to itself.
    """
    if traj.horizon != ocp.horizon or traj.states.shape[1] != ocp.n:
        raise DimensionMismatch("trajectory does not match the problem dimensions")
    X = traj.states.copy()
    U = traj.controls.copy()
    D = np.zeros_like(traj.defects)
    shooting = set(plan.shooting_indices)
    for a, b in plan.segments():
        seg = ocp.model.simulate(X[a], U[a:b])
        if not np.all(np.isfinite(seg)):
            raise RolloutDiverged(a)
        X[a + 1 : b] = seg[1:-1]
        if b in shooting:
            D[b - 1] = seg[-1] - X[b]
        else:
            X[b] = seg[-1]
    return Trajectory(X, U, D)


def total_defect_norm(traj: Trajectory, p: float = 2) -> float:
    """Norm of the stacked defect vector over all nodes."""
    return float(np.linalg.norm(traj.defects.ravel(), ord=p))


def total_cost(traj: Trajectory, ocp: OcpDefinition) -> float:
    """Cost of the stored states/controls (no re-simulation)."""
    N = traj.horizon
    value = float(
        np.sum(ocp.cost.running_batch(traj.states[:N], traj.controls))
        + ocp.cost.terminal(traj.states[N])
    )
    if not np.isfinite(value):
        raise FloatingPointError("total cost is not finite")
    return value
