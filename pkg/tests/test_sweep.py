import numpy as np
import numpy.testing as npt
import pytest
from oracles import kkt_solve, perturbation_qp_value, riccati_fixpoint_gain

from msddp.derivatives import LocalModel, expand
from msddp.errors import NotPositiveDefinite
from msddp.models import QuadraticCost, linear_discrete_model, random_lq_system
from msddp.rollout import linear_rollout
from msddp.sweep import (
    Policy,
    SweepOptions,
    backward_sweep,
    expected_cost_coefficients,
)
from msddp.trajectory import (
    CostExpansion,
    DynamicsExpansion,
    OcpDefinition,
    ShootingPlan,
    Trajectory,
    measure_defects,
    total_cost,
)


def scalar_local_model(A, B, q, r, Q, R, P, qN, QN):
    """One-step scalar model with explicit terminal terms."""
    cost = CostExpansion(
        q=np.array([[q], [qN]]),
        r=np.array([[r]]),
        Q=np.array([[[Q]], [[QN]]]),
        R=np.array([[[R]]]),
        P=np.array([[[P]]]),
        l=np.zeros(1),
        phi=0.0,
    )
    dyn = DynamicsExpansion(np.array([[[A]]]), np.array([[[B]]]))
    return LocalModel(cost, dyn, 1)


def lq_trajectory(ocp, plan, rng):
    X = rng.normal(size=(ocp.horizon + 1, ocp.n))
    X[0] = ocp.x0
    U = rng.normal(size=(ocp.horizon, ocp.m))
    return measure_defects(Trajectory(X, U), plan, ocp)


class TestHandInstance:
    def test_one_step_ms_quantities(self):
        # A=B=1, S1=s1=1 (terminal boundary), defect 0.5, R=1, rest zero
        local = scalar_local_model(1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0)
        traj = Trajectory(np.zeros((2, 1)), np.zeros((1, 1)), np.array([[0.5]]))
        plan = ShootingPlan(1, (1,))
        value, policy = backward_sweep(local, traj, SweepOptions("ms-ilqr"), plan)
        npt.assert_allclose(policy.feedforward[0, 0], -0.75)
        npt.assert_allclose(policy.gains[0, 0, 0], -0.5)
        npt.assert_allclose(value.S[0, 0, 0], 0.5)
        npt.assert_allclose(value.s[0, 0], 0.75)
        npt.assert_allclose(value.const[0], 0.0625)

    def test_scalar_recursion_matches_dense_elimination(self, rng):
        # two-step LQ instance with a nonzero defect: the zero-order value
        # term must equal the optimum of the dense perturbation QP
        ocp = random_lq_system(2, 1, 2, seed=3)
        plan = ShootingPlan(2, (1,))
        traj = lq_trajectory(ocp, plan, rng)
        local = expand(traj, ocp)
        value, _ = backward_sweep(local, traj, SweepOptions("ms-ilqr"), plan)
        oracle = perturbation_qp_value(local, traj.defects)
        npt.assert_allclose(value.const[0], oracle, rtol=1e-10)


class TestVariantCollapse:
    @pytest.mark.parametrize("pair", [("ms-ilqr", "ss-ilqr"), ("ms-ddp", "ss-ddp")])
    def test_zero_defects_collapse(self, pair, acrobot_ocp, rng):
        ms, ss = pair
        plan = ShootingPlan.even(acrobot_ocp.horizon, 8)
        U = rng.normal(scale=0.2, size=(acrobot_ocp.horizon, 1))
        X = acrobot_ocp.model.simulate(acrobot_ocp.x0, U)
        traj = measure_defects(Trajectory(X, U), plan, acrobot_ocp)
        order = 2 if ms.endswith("ddp") else 1
        local = expand(traj, acrobot_ocp, order)
        v_ms, p_ms = backward_sweep(local, traj, SweepOptions(ms), plan)
        v_ss, p_ss = backward_sweep(local, traj, SweepOptions(ss), plan)
        npt.assert_allclose(p_ms.feedforward, p_ss.feedforward, atol=1e-12)
        npt.assert_allclose(p_ms.gains, p_ss.gains, atol=1e-12)
        npt.assert_allclose(v_ms.S, v_ss.S, atol=1e-12)
        npt.assert_allclose(v_ms.s, v_ss.s, atol=1e-12)
        npt.assert_allclose(v_ms.const, v_ss.const, atol=1e-12)

    def test_ss_variant_rejects_nonzero_defects(self, acrobot_ocp, rng):
        plan = ShootingPlan.even(acrobot_ocp.horizon, 4)
        traj = lq_trajectory(acrobot_ocp, plan, rng)
        local = expand(traj, acrobot_ocp)
        with pytest.raises(ValueError):
            backward_sweep(local, traj, SweepOptions("ss-ilqr"), plan)


class TestRiccatiFixpoint:
    def test_long_horizon_gain_matches_infinite_horizon(self, rng):
        n, m, N = 3, 2, 400
        A = rng.normal(size=(n, n))
        A *= 0.95 / np.max(np.abs(np.linalg.eigvals(A)))
        B = rng.normal(size=(n, m))
        Q = np.eye(n)
        R = np.eye(m)
        cost = QuadraticCost(Q, R, Q, np.zeros(n))
        ocp = OcpDefinition(linear_discrete_model(A, B), cost, np.zeros(n), N, 1.0)
        plan = ShootingPlan.single(N)
        traj = measure_defects(
            Trajectory(np.zeros((N + 1, n)), np.zeros((N, m))), plan, ocp
        )
        local = expand(traj, ocp)
        _, policy = backward_sweep(local, traj, SweepOptions("ss-ilqr"), plan)
        K_inf, _ = riccati_fixpoint_gain(A, B, Q, R)
        npt.assert_allclose(policy.gains[0], K_inf, atol=1e-8)


class TestPenalty:
    def test_zero_weight_is_bitwise_neutral(self, acrobot_ocp, rng):
        plan = ShootingPlan.even(acrobot_ocp.horizon, 4)
        traj = lq_trajectory(acrobot_ocp, plan, rng)
        local = expand(traj, acrobot_ocp)
        base_v, base_p = backward_sweep(local, traj, SweepOptions("ms-ilqr"), plan)
        pen_v, pen_p = backward_sweep(
            local, traj, SweepOptions("ms-ilqr", penalty=np.zeros((4, 4))), plan
        )
        npt.assert_array_equal(base_p.feedforward, pen_p.feedforward)
        npt.assert_array_equal(base_p.gains, pen_p.gains)
        npt.assert_array_equal(base_v.S, pen_v.S)
        npt.assert_array_equal(base_v.s, pen_v.s)
        npt.assert_array_equal(base_v.const, pen_v.const)

    def test_nonzero_weight_changes_the_direction(self, acrobot_ocp, rng):
        plan = ShootingPlan.even(acrobot_ocp.horizon, 4)
        traj = lq_trajectory(acrobot_ocp, plan, rng)
        local = expand(traj, acrobot_ocp)
        _, base = backward_sweep(local, traj, SweepOptions("ms-ilqr"), plan)
        _, pen = backward_sweep(
            local, traj, SweepOptions("ms-ilqr", penalty=np.eye(4)), plan
        )
        assert np.max(np.abs(base.feedforward - pen.feedforward)) > 0


class TestValueExpansionProperties:
    def test_symmetric_psd_on_lq(self, rng):
        ocp = random_lq_system(4, 2, 15, seed=9)
        plan = ShootingPlan.even(15, 5)
        traj = lq_trajectory(ocp, plan, rng)
        local = expand(traj, ocp)
        value, _ = backward_sweep(local, traj, SweepOptions("ms-ilqr"), plan)
        for S in value.S:
            npt.assert_allclose(S, S.T, atol=1e-10)
            assert np.min(np.linalg.eigvalsh(S)) >= -1e-10

    def test_descent_direction_on_feasible_trajectory(self, acrobot_ocp, rng):
        plan = ShootingPlan.even(acrobot_ocp.horizon, 4)
        U = rng.normal(scale=0.2, size=(acrobot_ocp.horizon, 1))
        X = acrobot_ocp.model.simulate(acrobot_ocp.x0, U)
        traj = measure_defects(Trajectory(X, U), plan, acrobot_ocp)
        local = expand(traj, acrobot_ocp)
        _, policy = backward_sweep(
            local, traj, SweepOptions("ms-ilqr", regularization=1e-6), plan
        )
        assert policy.max_feedforward() > 0
        ec = expected_cost_coefficients(policy, local, traj, plan)
        assert ec.ec1 < 0

    def test_not_positive_definite_raises_with_node(self):
        local = scalar_local_model(1.0, 1.0, 0.0, 0.0, 0.0, -5.0, 0.0, 1.0, 1.0)
        traj = Trajectory(np.zeros((2, 1)), np.zeros((1, 1)))
        with pytest.raises(NotPositiveDefinite) as err:
            backward_sweep(local, traj, SweepOptions("ss-ilqr"), ShootingPlan.single(1))
        assert err.value.node == 0


class TestExpectedCostChange:
    def test_zero_policy_zero_defects(self, acrobot_ocp, rng):
        plan = ShootingPlan.even(acrobot_ocp.horizon, 4)
        U = rng.normal(scale=0.2, size=(acrobot_ocp.horizon, 1))
        X = acrobot_ocp.model.simulate(acrobot_ocp.x0, U)
        traj = measure_defects(Trajectory(X, U), plan, acrobot_ocp)
        local = expand(traj, acrobot_ocp)
        policy = Policy(np.zeros((40, 1)), np.zeros((40, 1, 4)))
        ec = expected_cost_coefficients(policy, local, traj, plan)
        assert ec.ec1 == 0.0 and ec.ec2 == 0.0

    def test_ec_of_zero_is_zero(self, rng):
        ocp = random_lq_system(3, 2, 10, seed=1)
        plan = ShootingPlan.even(10, 2)
        traj = lq_trajectory(ocp, plan, rng)
        local = expand(traj, ocp)
        _, policy = backward_sweep(local, traj, SweepOptions("ms-ilqr"), plan)
        ec = expected_cost_coefficients(policy, local, traj, plan)
        assert ec(0.0) == 0.0

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_exact_on_lq_multiple_shooting(self, seed, rng):
        ocp = random_lq_system(4, 2, 16, seed=seed)
        plan = ShootingPlan.even(16, 4)
        traj = lq_trajectory(ocp, plan, rng)
        local = expand(traj, ocp)
        _, policy = backward_sweep(local, traj, SweepOptions("ms-ilqr"), plan)
        ec = expected_cost_coefficients(policy, local, traj, plan)
        base = total_cost(traj, ocp)
        for alpha in (1.0, 0.5, 0.25):
            dx, du = linear_rollout(traj, policy, local, alpha)
            moved = Trajectory(
                traj.states + dx, traj.controls + du, (1 - alpha) * traj.defects
            )
            realized = total_cost(moved, ocp) - base
            npt.assert_allclose(ec(alpha), realized, rtol=1e-10)


class TestKktOracle:
    def test_kkt_solution_is_dynamically_feasible(self, rng):
        ocp = random_lq_system(3, 2, 10, seed=4)
        X, U = kkt_solve(ocp)
        sim = ocp.model.simulate(ocp.x0, U)
        npt.assert_allclose(X, sim, atol=1e-9)
