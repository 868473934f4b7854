"""Named solver configurations.

The names follow the solver-family nomenclature: ms/ss pick the shooting
mode of the backward sweep, ddp/ilqr pick second/first-order dynamics, the
suffix picks the roll-out. The filqr presets reproduce the baseline that
pairs first-order sweeps and nonlinear roll-outs with a cost-only
acceptance test; filqr uses the approximate (feedforward-only) expected
cost model, filqr-exact the exact one.
"""

from __future__ import annotations

from .globalization import MeritOptions
from .solver import SolverConfig

PRESETS = {
    "msddp": dict(variant="ms-ddp", rollout="nonlinear"),
    "msddp-hybrid": dict(variant="ms-ddp", rollout="hybrid"),
    "msilqr-exact": dict(variant="ms-ilqr", rollout="nonlinear"),
    "msilqr-hybrid": dict(variant="ms-ilqr", rollout="hybrid"),
    "filqr": dict(
        variant="ms-ilqr",
        rollout="nonlinear",
        merit=dict(mode="cost"),
        ec_model="approximate",
    ),
    "filqr-exact": dict(variant="ms-ilqr", rollout="nonlinear", merit=dict(mode="cost")),
    "ssddp": dict(variant="ss-ddp", rollout="nonlinear"),
    "ssilqr": dict(variant="ss-ilqr", rollout="nonlinear"),
}


def make_config(preset: str = "msilqr-exact", **overrides) -> SolverConfig:
    """SolverConfig for a preset name, with keyword overrides on top."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    fields = dict(PRESETS[preset])
    merit_kwargs = fields.pop("merit", {})
    merit_kwargs.update(overrides.pop("merit", {}))
    fields.update(overrides)
    return SolverConfig(merit=MeritOptions(**merit_kwargs), **fields)
