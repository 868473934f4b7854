"""Planar serial manipulator with L fully actuated revolute joints.

Point masses sit at the link tips; joint angles are relative, with the
first measured from the downward vertical. With two links, unit parameters
and torque applied only at the second joint this reduces exactly to the
acrobot, which the tests exploit as a cross-check.
"""

import numpy as np

from ..backends import pure as _pure
from ..kinds import MODEL_ARM, pack_arm
from .base import ContinuousModel


class PlanarArmModel(ContinuousModel):
    kind = MODEL_ARM

    def __init__(self, links=3, masses=None, lengths=None, g=9.81):
        if masses is None:
            masses = np.ones(links)
        if lengths is None:
            lengths = np.ones(links)
        self.links = int(links)
        self.masses = np.asarray(masses, dtype=float)
        self.lengths = np.asarray(lengths, dtype=float)
        self.g = g
        if len(self.masses) != self.links or len(self.lengths) != self.links:
            raise ValueError("masses/lengths must have one entry per link")
        self.params = pack_arm(self.masses, self.lengths, g)

    def gravity_torque(self, q: np.ndarray) -> np.ndarray:
        """Joint torques that exactly cancel gravity at configuration q."""
        return _pure.arm_gravity_torque(self.params, np.asarray(q, dtype=float))


def planar_arm_dynamics(x: np.ndarray, u: np.ndarray, links: int, model: PlanarArmModel = None) -> np.ndarray:
    """Continuous dynamics of an L-link planar arm."""
    if model is None:
        model = PlanarArmModel(links)
    return model.dynamics(x, u)
