"""Benchmark problems assembled from flat key-value config files.

Each problem file carries the physical model parameters, the task (initial
state, goal, horizon, step), and the cost weights; see the shipped files
under problems/data for the schema of each model. Running weights are per
second and get scaled by dt in the discrete cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib.resources import files
from pathlib import Path

import numpy as np

from ..config import get_float, get_int, get_str, get_vector, load_config
from ..errors import ConfigError
from ..models import (
    AcrobotModel,
    PlanarArmModel,
    QuadraticCost,
    QuadrotorModel,
    random_lq_system,
)
from ..trajectory import OcpDefinition, ShootingPlan, Trajectory

PROBLEM_NAMES = ("acrobot", "quadrotor", "arm", "lq")


@dataclass
class Problem:
    name: str
    ocp: OcpDefinition
    nominal_control: np.ndarray
    init_style: str
    penalty_weight: float = 1.0
    seed: int = 0

    def plan(self, segments: int | None = None) -> ShootingPlan:
        """Even shooting plan; segments=None means every state is shooting."""
        if segments is None:
            return ShootingPlan.all_states(self.ocp.horizon)
        return ShootingPlan.even(self.ocp.horizon, segments)

    def initial_guess(self, plan: ShootingPlan = None) -> Trajectory:
        """States by task interpolation (or hold), controls at the nominal."""
        N = self.ocp.horizon
        controls = np.tile(self.nominal_control, (N, 1))
        if self.name == "lq":
            rng = np.random.default_rng([self.seed, 1])
            states = rng.normal(size=(N + 1, self.ocp.n))
            states[0] = self.ocp.x0
            controls = rng.normal(size=(N, self.ocp.m))
        elif self.init_style == "interp":
            states = np.linspace(self.ocp.x0, self.ocp.cost.x_goal, N + 1)
        else:
            states = np.tile(self.ocp.x0, (N + 1, 1))
        return Trajectory(states, controls)


def default_config_path(name: str) -> Path:
    return Path(str(files("msddp.problems").joinpath("data", f"{name}.cfg")))


def build_problem(
    name: str,
    config_path=None,
    seed: int | None = None,
    horizon: int | None = None,
) -> Problem:
    if name not in PROBLEM_NAMES:
        raise ConfigError(f"unknown problem {name!r}; choose from {PROBLEM_NAMES}")
    cfg = load_config(config_path if config_path is not None else default_config_path(name))
    declared = get_str(cfg, "problem", name)
    if declared != name:
        raise ConfigError(f"config declares problem {declared!r}, expected {name!r}", key="problem")
    if name == "lq":
        return _build_lq(cfg, seed, horizon)
    dt = get_float(cfg, "dt")
    N = horizon if horizon is not None else get_int(cfg, "horizon")
    if name == "acrobot":
        model = AcrobotModel(
            m1=get_float(cfg, "m1", 1.0),
            m2=get_float(cfg, "m2", 1.0),
            l1=get_float(cfg, "l1", 1.0),
            l2=get_float(cfg, "l2", 1.0),
            g=get_float(cfg, "gravity", 9.81),
        )
        nominal = np.zeros(1)
    elif name == "quadrotor":
        inertia = get_vector(cfg, "inertia")
        if inertia.shape != (3,):
            raise ConfigError("key 'inertia': expected three diagonal entries", key="inertia")
        model = QuadrotorModel(
            mass=get_float(cfg, "mass", 0.8),
            ixx=inertia[0],
            iyy=inertia[1],
            izz=inertia[2],
            arm=get_float(cfg, "arm_length", 0.2),
            kyaw=get_float(cfg, "k_yaw", 0.02),
            g=get_float(cfg, "gravity", 9.81),
        )
        nominal = model.hover_thrusts()
    else:
        links = get_int(cfg, "links", 3)
        model = PlanarArmModel(
            links=links,
            masses=get_vector(cfg, "masses", np.ones(links)),
            lengths=get_vector(cfg, "lengths", np.ones(links)),
            g=get_float(cfg, "gravity", 9.81),
        )
        nominal = np.zeros(links)
    n, m = model.n, model.m
    x0 = get_vector(cfg, "x0")
    x_goal = get_vector(cfg, "x_goal")
    w_state = get_vector(cfg, "w_state")
    w_control = get_vector(cfg, "w_control")
    w_terminal = get_vector(cfg, "w_terminal")
    for key, vec, dim in (
        ("x0", x0, n),
        ("x_goal", x_goal, n),
        ("w_state", w_state, n),
        ("w_control", w_control, m),
        ("w_terminal", w_terminal, n),
    ):
        if vec.shape != (dim,):
            raise ConfigError(
                f"key {key!r}: expected {dim} entries, got {vec.shape[0]}", key=key
            )
    u_ref = nominal if name == "quadrotor" else None
    cost = QuadraticCost(
        np.diag(w_state) * dt,
        np.diag(w_control) * dt,
        np.diag(w_terminal),
        x_goal,
        u_ref=u_ref,
    )
    ocp = OcpDefinition(model.discretize(dt), cost, x0, N, dt)
    return Problem(
        name,
        ocp,
        nominal,
        get_str(cfg, "init", "interp"),
        penalty_weight=get_float(cfg, "penalty_weight", 1.0),
    )


def _build_lq(cfg: dict, seed: int | None, horizon: int | None) -> Problem:
    n = get_int(cfg, "n", 4)
    m = get_int(cfg, "m", 2)
    N = horizon if horizon is not None else get_int(cfg, "horizon", 20)
    seed = seed if seed is not None else get_int(cfg, "seed", 0)
    ocp = random_lq_system(n, m, N, seed)
    return Problem("lq", ocp, np.zeros(m), "hold", seed=seed)
