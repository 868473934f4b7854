import numpy as np
import numpy.testing as npt
import pytest

from msddp.errors import DimensionMismatch
from msddp.models import QuadraticCost, linear_discrete_model
from msddp.trajectory import (
    OcpDefinition,
    ShootingPlan,
    Trajectory,
    measure_defects,
    total_cost,
    total_defect_norm,
)


def scalar_double_ocp(N=2):
    """x' = 2x + u with a placeholder cost."""
    model = linear_discrete_model([[2.0]], [[1.0]])
    cost = QuadraticCost.diagonal([0.0], [1.0], [0.0], [0.0])
    return OcpDefinition(model, cost, np.array([1.0]), N, 1.0)


class TestShootingPlan:
    def test_even_partition(self):
        plan = ShootingPlan.even(12, 4)
        assert plan.shooting_indices == (3, 6, 9)
        assert plan.segment_count == 4
        assert plan.segments() == [(0, 3), (3, 6), (6, 9), (9, 12)]

    def test_single_shooting_is_one_segment(self):
        plan = ShootingPlan.single(10)
        assert plan.shooting_indices == ()
        assert plan.segment_count == 1
        assert plan.segments() == [(0, 10)]

    def test_all_states_shooting(self):
        plan = ShootingPlan.all_states(5)
        assert plan.shooting_indices == (1, 2, 3, 4)
        assert plan.segment_count == 5

    def test_uneven_segment_count_rejected(self):
        with pytest.raises(ValueError):
            ShootingPlan.even(10, 3)

    def test_node_zero_rejected(self):
        with pytest.raises(ValueError):
            ShootingPlan(5, (0, 2))

    def test_shoot_mask(self):
        plan = ShootingPlan(6, (2, 4))
        npt.assert_array_equal(plan.shoot_mask(), [False, True, False, True, False, False])


class TestMeasureDefects:
    def test_hand_case_scalar_doubling(self):
        # x' = 2x + u, states (1, 5, 9), controls (1, 1), both nodes shooting
        ocp = scalar_double_ocp()
        plan = ShootingPlan(2, (1, 2))
        traj = Trajectory(np.array([[1.0], [5.0], [9.0]]), np.array([[1.0], [1.0]]))
        out = measure_defects(traj, plan, ocp)
        npt.assert_allclose(out.defects, [[-2.0], [2.0]])
        npt.assert_array_equal(out.states, traj.states)

    def test_single_shooting_overwrites_everything(self, rng):
        ocp = scalar_double_ocp(4)
        plan = ShootingPlan.single(4)
        traj = Trajectory(rng.normal(size=(5, 1)), rng.normal(size=(4, 1)))
        traj.states[0] = ocp.x0
        out = measure_defects(traj, plan, ocp)
        npt.assert_array_equal(out.defects, np.zeros((4, 1)))
        x = ocp.x0.copy()
        for k in range(4):
            x = 2.0 * x + traj.controls[k]
            npt.assert_allclose(out.states[k + 1], x)

    def test_feasible_input_has_zero_defects(self, acrobot_ocp, rng):
        U = rng.normal(scale=0.2, size=(acrobot_ocp.horizon, 1))
        X = acrobot_ocp.model.simulate(acrobot_ocp.x0, U)
        plan = ShootingPlan.even(acrobot_ocp.horizon, 8)
        out = measure_defects(Trajectory(X, U), plan, acrobot_ocp)
        npt.assert_array_equal(out.defects, np.zeros_like(out.defects))
        npt.assert_array_equal(out.states, X)

    def test_idempotent(self, acrobot_ocp, rng):
        plan = ShootingPlan.even(acrobot_ocp.horizon, 4)
        traj = Trajectory(
            rng.normal(size=(41, 4)), rng.normal(size=(40, 1))
        )
        once = measure_defects(traj, plan, acrobot_ocp)
        twice = measure_defects(once, plan, acrobot_ocp)
        npt.assert_array_equal(once.states, twice.states)
        npt.assert_array_equal(once.defects, twice.defects)

    def test_dimension_mismatch(self, acrobot_ocp):
        traj = Trajectory(np.zeros((11, 4)), np.zeros((10, 1)))
        with pytest.raises(DimensionMismatch):
            measure_defects(traj, ShootingPlan.single(10), acrobot_ocp)


class TestNorms:
    def test_zero_defects(self):
        traj = Trajectory(np.zeros((3, 1)), np.zeros((2, 1)))
        assert total_defect_norm(traj) == 0.0

    def test_hand_norms(self):
        traj = Trajectory(
            np.zeros((3, 1)), np.zeros((2, 1)), np.array([[-2.0], [2.0]])
        )
        npt.assert_allclose(total_defect_norm(traj, 2), 2.0 * np.sqrt(2.0))
        npt.assert_allclose(total_defect_norm(traj, 1), 4.0)


class TestTotalCost:
    def test_zero_weights(self):
        ocp = scalar_double_ocp()
        traj = Trajectory(np.ones((3, 1)), np.zeros((2, 1)))
        assert total_cost(traj, ocp) == 0.0

    def test_pure_terminal(self):
        # phi(x) = |x|^2 realized as 0.5 x' (2 I) x
        cost = QuadraticCost(np.zeros((2, 2)), np.eye(1), 2.0 * np.eye(2), np.zeros(2))
        model = linear_discrete_model(np.eye(2), np.ones((2, 1)))
        ocp = OcpDefinition(model, cost, np.zeros(2), 2, 1.0)
        X = np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 4.0]])
        assert total_cost(Trajectory(X, np.zeros((2, 1))), ocp) == pytest.approx(25.0)

    def test_invariant_under_measure_defects_when_feasible(self, acrobot_ocp, rng):
        U = rng.normal(scale=0.2, size=(40, 1))
        X = acrobot_ocp.model.simulate(acrobot_ocp.x0, U)
        traj = Trajectory(X, U)
        plan = ShootingPlan.even(40, 5)
        assert total_cost(traj, acrobot_ocp) == total_cost(
            measure_defects(traj, plan, acrobot_ocp), acrobot_ocp
        )
