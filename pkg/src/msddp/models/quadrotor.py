"""Rigid-body quadrotor with four thrust inputs in a plus layout.

State (12): position, ZYX Euler angles (roll, pitch, yaw), world-frame
linear velocity, body-frame angular velocity. Controls are the four rotor
thrusts; rotors sit on the +x, +y, -x, -y body axes at distance `arm` from
the center of mass and their drag torques alternate in sign, so the pattern
(F+d, F-d, F+d, F-d) produces pure yaw torque.

The Euler-angle kinematics are singular at pitch = +-pi/2; the benchmark
trajectories stay well clear of it, and a singular state surfaces as a
non-finite derivative.
"""

import numpy as np

from ..kinds import MODEL_QUADROTOR, pack_quadrotor
from .base import ContinuousModel


class QuadrotorModel(ContinuousModel):
    kind = MODEL_QUADROTOR

    def __init__(
        self,
        mass=0.8,
        ixx=0.005,
        iyy=0.005,
        izz=0.009,
        arm=0.2,
        kyaw=0.02,
        g=9.81,
    ):
        self.mass, self.g = mass, g
        self.inertia = np.array([ixx, iyy, izz])
        self.arm, self.kyaw = arm, kyaw
        self.params = pack_quadrotor(mass, ixx, iyy, izz, arm, kyaw, g)

    def hover_thrusts(self) -> np.ndarray:
        """Per-rotor thrust that balances gravity in level attitude."""
        return np.full(4, self.mass * self.g / 4.0)

    def mixer(self) -> np.ndarray:
        """Map from the four thrusts to (total force, body torques)."""
        a, k = self.arm, self.kyaw
        return np.array(
            [
                [1.0, 1.0, 1.0, 1.0],
                [0.0, a, 0.0, -a],
                [-a, 0.0, a, 0.0],
                [k, -k, k, -k],
            ]
        )


def quadrotor_dynamics(x: np.ndarray, u: np.ndarray, model: QuadrotorModel = None) -> np.ndarray:
    """Continuous rigid-body dynamics of the quadrotor."""
    return (model or QuadrotorModel()).dynamics(x, u)
