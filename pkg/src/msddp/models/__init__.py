from .acrobot import AcrobotModel, acrobot_dynamics
from .arm import PlanarArmModel, planar_arm_dynamics
from .base import ContinuousModel, DiscreteModel, semi_implicit_euler_step
from .costs import QuadraticCost
from .lq import linear_discrete_model, random_lq_system
from .quadrotor import QuadrotorModel, quadrotor_dynamics

__all__ = [
    "AcrobotModel",
    "ContinuousModel",
    "DiscreteModel",
    "PlanarArmModel",
    "QuadraticCost",
    "QuadrotorModel",
    "acrobot_dynamics",
    "linear_discrete_model",
    "planar_arm_dynamics",
    "quadrotor_dynamics",
    "random_lq_system",
    "semi_implicit_euler_step",
]
