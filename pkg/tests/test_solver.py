import numpy as np
import numpy.testing as npt
import pytest
from oracles import kkt_solve

from msddp.models import random_lq_system
from msddp.solver import (
    STATUS_CONVERGED,
    SolverConfig,
    fit_convergence_rate,
    initial_trajectory,
    measure_local_rate,
    solve,
)
from msddp.trajectory import ShootingPlan, Trajectory, measure_defects, total_cost, total_defect_norm


def lq_problem(seed, rng, n=4, m=2, N=20, segments=5):
    ocp = random_lq_system(n, m, N, seed=seed)
    plan = ShootingPlan.even(N, segments)
    X = rng.normal(size=(N + 1, n))
    X[0] = ocp.x0
    U = rng.normal(size=(N, m))
    return ocp, plan, Trajectory(X, U)


class TestLqSolve:
    def test_two_iterations_to_kkt_optimum(self, rng):
        ocp, plan, start = lq_problem(7, rng)
        result = solve(ocp, plan, start, SolverConfig(variant="ms-ilqr"))
        assert result.status == STATUS_CONVERGED
        assert result.iterations <= 2
        assert total_defect_norm(result.trajectory) <= 1e-12
        Xk, Uk = kkt_solve(ocp)
        err = np.linalg.norm(
            np.concatenate(
                [
                    (result.trajectory.states - Xk).ravel(),
                    (result.trajectory.controls - Uk).ravel(),
                ]
            )
        )
        assert err < 1e-8

    def test_fixpoint_converges_immediately(self, rng):
        ocp, plan, start = lq_problem(7, rng)
        first = solve(ocp, plan, start, SolverConfig(variant="ms-ilqr"))
        again = solve(ocp, plan, first.trajectory, SolverConfig(variant="ms-ilqr"))
        assert again.status == STATUS_CONVERGED
        assert again.iterations <= 1

    def test_recorded_cost_matches_reevaluation(self, rng):
        ocp, plan, start = lq_problem(3, rng)
        result = solve(ocp, plan, start, SolverConfig(variant="ms-ilqr"))
        traj = result.trajectory
        c = ocp.cost
        direct = 0.0
        for k in range(ocp.horizon):
            dx = traj.states[k] - c.x_goal
            du = traj.controls[k]
            direct += 0.5 * dx @ c.Wx @ dx + 0.5 * du @ c.Wu @ du + du @ c.Wxu @ dx
        dxN = traj.states[-1] - c.x_goal
        direct += 0.5 * dxN @ c.Wf @ dxN
        npt.assert_allclose(result.cost, direct, rtol=1e-12)
        npt.assert_allclose(result.cost, total_cost(traj, ocp), rtol=1e-12)


class TestSolverInvariants:
    def test_single_shooting_stays_feasible(self, acrobot_ocp):
        plan = ShootingPlan.single(acrobot_ocp.horizon)
        start = initial_trajectory(acrobot_ocp)
        config = SolverConfig(variant="ss-ilqr", max_iterations=30)
        result = solve(acrobot_ocp, plan, start, config)
        for record in result.history:
            assert record.defect_norm == 0.0

    def test_deterministic_history(self, rng):
        ocp, plan, start = lq_problem(11, rng)
        config = SolverConfig(variant="ms-ddp")
        a = solve(ocp, plan, start.copy(), config)
        b = solve(ocp, plan, start.copy(), config)
        assert len(a.history) == len(b.history)
        for ra, rb in zip(a.history, b.history):
            # wall time is the only field allowed to differ
            assert (
                ra.iteration, ra.cost, ra.defect_norm, ra.merit, ra.mu,
                ra.alpha, ra.regularization, ra.ec1, ra.ec2,
            ) == (
                rb.iteration, rb.cost, rb.defect_norm, rb.merit, rb.mu,
                rb.alpha, rb.regularization, rb.ec1, rb.ec2,
            )
        npt.assert_array_equal(a.trajectory.states, b.trajectory.states)

    def test_merit_strictly_decreases_on_accepted_iterations(self, acrobot_ocp, rng):
        plan = ShootingPlan.even(acrobot_ocp.horizon, 8)
        X = np.linspace(acrobot_ocp.x0, acrobot_ocp.cost.x_goal, acrobot_ocp.horizon + 1)
        start = Trajectory(X, np.zeros((acrobot_ocp.horizon, 1)))
        result = solve(acrobot_ocp, plan, start, SolverConfig(variant="ms-ilqr", max_iterations=60))
        assert result.status == STATUS_CONVERGED
        accepted = [r for r in result.history[1:] if r.alpha > 0]
        for prev, cur in zip(accepted[:-1], accepted[1:]):
            assert cur.merit < prev.merit or cur.mu != prev.mu

    def test_variant_collapse_from_feasible_start(self, acrobot_ocp, rng):
        # empty shooting set + feasible start: MS and SS iterate identically
        U = rng.normal(scale=0.1, size=(acrobot_ocp.horizon, 1))
        X = acrobot_ocp.model.simulate(acrobot_ocp.x0, U)
        plan = ShootingPlan.single(acrobot_ocp.horizon)
        config_ms = SolverConfig(variant="ms-ilqr", max_iterations=12)
        config_ss = SolverConfig(variant="ss-ilqr", max_iterations=12)
        res_ms = solve(acrobot_ocp, plan, Trajectory(X.copy(), U.copy()), config_ms)
        res_ss = solve(acrobot_ocp, plan, Trajectory(X.copy(), U.copy()), config_ss)
        assert [r.cost for r in res_ms.history] == [r.cost for r in res_ss.history]
        npt.assert_array_equal(res_ms.trajectory.states, res_ss.trajectory.states)

    def test_history_records_every_iteration(self, rng):
        ocp, plan, start = lq_problem(5, rng)
        result = solve(ocp, plan, start, SolverConfig(variant="ms-ilqr"))
        indices = [r.iteration for r in result.history]
        assert indices == list(range(len(indices)))

    def test_rejects_nonfinite_initial(self, rng):
        ocp, plan, start = lq_problem(5, rng)
        start.states[3, 0] = np.nan
        with pytest.raises(ValueError):
            solve(ocp, plan, start, SolverConfig())


class TestRateFit:
    def test_pure_linear_sequence(self):
        errors = [10.0 ** (-3 - k) for k in range(8)]
        kappa, epsilon, points, excluded = fit_convergence_rate(errors)
        assert not excluded
        npt.assert_allclose(epsilon, 1.0, atol=1e-9)
        npt.assert_allclose(kappa, 0.1, rtol=1e-9)

    def test_pure_quadratic_sequence(self):
        errors = [1e-3]
        for _ in range(4):
            errors.append(100.0 * errors[-1] ** 2)
        kappa, epsilon, points, excluded = fit_convergence_rate(errors)
        assert not excluded
        npt.assert_allclose(epsilon, 2.0, atol=1e-9)
        npt.assert_allclose(kappa, 100.0, rtol=1e-6)

    def test_too_few_points_excluded(self):
        kappa, epsilon, points, excluded = fit_convergence_rate([1e-3, 1e-6])
        assert excluded and points < 3

    def test_zero_perturbation_sample_is_excluded(self, rng):
        ocp, plan, start = lq_problem(13, rng)
        tight = SolverConfig(variant="ms-ilqr", cost_tol=1e-12)
        optimum = solve(ocp, plan, start, tight).trajectory
        fits = measure_local_rate(ocp, plan, optimum, samples=1, radius=0.0, seed=0, config=tight)
        assert fits[0].excluded
