"""Two-link underactuated pendulum (torque on the elbow joint only).

State (theta1, theta2, dtheta1, dtheta2); theta1 is measured from the
downward vertical, theta2 relative to the first link. Default parameters
are unit point masses at the ends of unit-length massless links.
"""

import numpy as np

from ..kinds import MODEL_ACROBOT, pack_acrobot
from .base import ContinuousModel


class AcrobotModel(ContinuousModel):
    kind = MODEL_ACROBOT

    def __init__(self, m1=1.0, m2=1.0, l1=1.0, l2=1.0, g=9.81):
        self.m1, self.m2, self.l1, self.l2, self.g = m1, m2, l1, l2, g
        self.params = pack_acrobot(m1, m2, l1, l2, g)

    def energy(self, x: np.ndarray) -> float:
        """Total mechanical energy (kinetic plus gravitational potential)."""
        q1, q2, v1, v2 = x
        c2 = np.cos(q2)
        m11 = (self.m1 + self.m2) * self.l1**2 + self.m2 * self.l2**2
        m11 += 2.0 * self.m2 * self.l1 * self.l2 * c2
        m12 = self.m2 * self.l2**2 + self.m2 * self.l1 * self.l2 * c2
        m22 = self.m2 * self.l2**2
        kinetic = 0.5 * (m11 * v1 * v1 + 2.0 * m12 * v1 * v2 + m22 * v2 * v2)
        potential = -(self.m1 + self.m2) * self.g * self.l1 * np.cos(q1)
        potential -= self.m2 * self.g * self.l2 * np.cos(q1 + q2)
        return float(kinetic + potential)


def acrobot_dynamics(x: np.ndarray, u: np.ndarray, model: AcrobotModel = None) -> np.ndarray:
    """Continuous dynamics of the two-link pendulum."""
    return (model or AcrobotModel()).dynamics(x, u)
