import numpy as np
import pytest

from msddp.models import AcrobotModel, QuadraticCost
from msddp.trajectory import OcpDefinition


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture
def acrobot_ocp():
    """Small acrobot swing problem used across modules (N=40, dt=0.02)."""
    model = AcrobotModel()
    cost = QuadraticCost.diagonal(
        [0.1, 0.1, 0.1, 0.1], [0.01], [10.0, 10.0, 1.0, 1.0], np.array([np.pi, 0.0, 0.0, 0.0])
    )
    return OcpDefinition(model.discretize(0.02), cost, np.zeros(4), 40, 0.02)
