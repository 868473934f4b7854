"""Multiple-shooting DDP trajectory optimization.

A configurable solver family (first/second order sweeps, single/multiple
shooting, nonlinear/hybrid roll-outs, merit-function globalization, optional
defect penalty) with analytic benchmark models and an experiment CLI.
"""

from .backends import backend_name
from .derivatives import LocalModel, expand, fd_jacobians
from .globalization import MeritOptions, armijo_accept, line_search, merit, update_mu
from .rollout import hybrid_rollout, linear_rollout, nonlinear_rollout
from .solver import (
    IterationRecord,
    RateFit,
    SolveResult,
    SolverConfig,
    initial_trajectory,
    measure_local_rate,
    solve,
)
from .sweep import (
    ExpectedCostChange,
    Policy,
    SweepOptions,
    ValueExpansion,
    approximate_cost_change,
    backward_sweep,
    expected_cost_coefficients,
)
from .trajectory import (
    CostExpansion,
    DynamicsExpansion,
    OcpDefinition,
    ShootingPlan,
    Trajectory,
    measure_defects,
    total_cost,
    total_defect_norm,
)

__version__ = "0.1.0"

__all__ = [
    "CostExpansion",
    "DynamicsExpansion",
    "ExpectedCostChange",
    "IterationRecord",
    "LocalModel",
    "MeritOptions",
    "OcpDefinition",
    "Policy",
    "RateFit",
    "ShootingPlan",
    "SolveResult",
    "SolverConfig",
    "SweepOptions",
    "Trajectory",
    "ValueExpansion",
    "approximate_cost_change",
    "armijo_accept",
    "backend_name",
    "backward_sweep",
    "expand",
    "expected_cost_coefficients",
    "fd_jacobians",
    "hybrid_rollout",
    "initial_trajectory",
    "line_search",
    "linear_rollout",
    "measure_defects",
    "measure_local_rate",
    "merit",
    "nonlinear_rollout",
    "solve",
    "total_cost",
    "total_defect_norm",
    "update_mu",
]
