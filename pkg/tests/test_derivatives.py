import numpy as np
import numpy.testing as npt
import pytest

from msddp.derivatives import expand, fd_jacobians
from msddp.kinds import MODEL_LQ, pack_lq, unpack_lq
from msddp.models import (
    AcrobotModel,
    DiscreteModel,
    PlanarArmModel,
    QuadraticCost,
    QuadrotorModel,
    random_lq_system,
)
from msddp.trajectory import OcpDefinition, ShootingPlan, Trajectory, measure_defects


def random_feasible(ocp, rng, scale=0.2):
    U = rng.normal(scale=scale, size=(ocp.horizon, ocp.m))
    X = ocp.model.simulate(ocp.x0, U)
    return Trajectory(X, U)


class TestFdJacobians:
    def test_exact_on_linear_map(self, rng):
        A = rng.normal(size=(3, 3))
        B = rng.normal(size=(3, 2))
        model = DiscreteModel(MODEL_LQ, pack_lq(A, B), 1.0)
        Af, Bf = fd_jacobians(model, rng.normal(size=3), rng.normal(size=2), h=1e-5)
        npt.assert_allclose(Af, A, atol=1e-9)
        npt.assert_allclose(Bf, B, atol=1e-9)

    def test_scalar_square_map(self):
        class Square:
            n, m = 1, 1

            def step(self, x, u):
                return x * x

        A, _ = fd_jacobians(Square(), np.array([3.0]), np.array([0.0]), h=1e-5)
        assert abs(A[0, 0] - 6.0) < 1e-8

    def test_error_shrinks_fourfold_when_h_halves(self):
        # cubic map through the acrobot dynamics: O(h^2) truncation
        model = AcrobotModel().discretize(0.05)
        x = np.array([0.3, -0.2, 0.4, 0.1])
        u = np.array([0.5])
        A_exact, _ = model.jacobians(x[None], u[None])
        errs = []
        for h in (2e-3, 1e-3):
            Af, _ = fd_jacobians(model, x, u, h=h)
            errs.append(np.max(np.abs(Af - A_exact[0])))
        ratio = errs[0] / errs[1]
        assert 3.0 < ratio < 5.0

    def test_rejects_nonpositive_step(self):
        model = AcrobotModel().discretize(0.02)
        with pytest.raises(ValueError):
            fd_jacobians(model, np.zeros(4), np.zeros(1), h=0.0)


class TestExpand:
    def test_lq_expansion_is_exact(self, rng):
        ocp = random_lq_system(3, 2, 8, seed=5)
        A, B = unpack_lq(ocp.model.params)
        traj = random_feasible(ocp, rng)
        local = expand(traj, ocp, order=2)
        for k in range(8):
            npt.assert_array_equal(local.dynamics.A[k], A)
            npt.assert_array_equal(local.dynamics.B[k], B)
        npt.assert_array_equal(local.dynamics.fxx, np.zeros_like(local.dynamics.fxx))
        npt.assert_array_equal(local.dynamics.fuu, np.zeros_like(local.dynamics.fuu))

    def test_quadratic_cost_gradients(self, rng):
        # cost |x - xg|^2_W has gradient 2 W (x - xg) and Hessian 2 W
        W = np.diag([1.0, 2.0])
        goal = np.array([0.5, -0.5])
        cost = QuadraticCost(2.0 * W, np.eye(1), 2.0 * W, goal)
        model = AcrobotModel()  # placeholder dims unused here
        X = rng.normal(size=(4, 2))
        U = rng.normal(size=(3, 1))
        q, r, Q, R, P = cost.expansion_batch(X, U)
        for k in range(3):
            npt.assert_allclose(q[k], 2.0 * W @ (X[k] - goal))
            npt.assert_allclose(Q[k], 2.0 * W)

    @pytest.mark.parametrize(
        "model", [AcrobotModel(), QuadrotorModel(), PlanarArmModel(3)], ids=type
    )
    def test_analytic_jacobians_match_fd(self, model, rng):
        discrete = model.discretize(0.02)
        cost = QuadraticCost.diagonal(
            np.ones(model.n), np.ones(model.m), np.ones(model.n), np.zeros(model.n)
        )
        ocp = OcpDefinition(discrete, cost, np.zeros(model.n), 6, 0.02)
        traj = random_feasible(ocp, rng)
        local = expand(traj, ocp, order=1)
        for k in range(6):
            Af, Bf = fd_jacobians(discrete, traj.states[k], traj.controls[k])
            scale = max(1.0, np.max(np.abs(local.dynamics.A[k])))
            npt.assert_allclose(local.dynamics.A[k], Af, atol=1e-5 * scale)
            npt.assert_allclose(local.dynamics.B[k], Bf, atol=1e-5 * scale)


class TestSecondOrderTensors:
    def test_tensor_symmetry(self, rng):
        model = AcrobotModel().discretize(0.02)
        X = rng.normal(scale=0.4, size=(5, 4))
        U = rng.normal(size=(5, 1))
        fxx, fuu, _ = model.dynamics_tensors(X, U, 1e-5)
        npt.assert_allclose(fxx, fxx.transpose(0, 1, 3, 2), atol=1e-6)
        npt.assert_allclose(fuu, fuu.transpose(0, 1, 3, 2), atol=1e-6)

    def test_directional_consistency(self, rng):
        # residual of the quadratic prediction is third order in the step
        model = AcrobotModel().discretize(0.02)
        x = np.array([0.3, -0.1, 0.2, -0.4])
        u = np.array([0.7])
        A, B = model.jacobians(x[None], u[None])
        fxx, fuu, fux = model.dynamics_tensors(x[None], u[None], 1e-5)
        base = model.step(x, u)
        for _ in range(5):
            dx = rng.normal(size=4)
            dx *= 1e-3 / np.linalg.norm(dx)
            du = rng.normal(size=1)
            du *= 1e-3 / np.linalg.norm(du)
            pred = base + A[0] @ dx + B[0] @ du
            pred = pred + 0.5 * (
                np.einsum("ijk,j,k->i", fxx[0], dx, dx)
                + 2.0 * np.einsum("ijk,j,k->i", fux[0], du, dx)
                + np.einsum("ijk,j,k->i", fuu[0], du, du)
            )
            residual = np.max(np.abs(model.step(x + dx, u + du) - pred))
            assert residual < 1e-7
