"""Parity between the compiled kernels and the NumPy reference backend."""

import numpy as np
import numpy.testing as npt
import pytest

from msddp.backends import pure
from msddp.models import AcrobotModel, PlanarArmModel, QuadrotorModel

try:
    from msddp import _kernels
except ImportError:
    _kernels = None

pytestmark = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")

MODELS = {
    "acrobot": AcrobotModel(),
    "quadrotor": QuadrotorModel(),
    "arm3": PlanarArmModel(3),
    "arm5": PlanarArmModel(5, masses=[2, 1.5, 1, 0.7, 0.4], lengths=[1.2, 1, 0.8, 0.6, 0.5]),
}
DT = 0.02


def random_point(model, rng, scale=0.4):
    return rng.normal(scale=scale, size=model.n), rng.normal(size=model.m)


@pytest.mark.parametrize("name", sorted(MODELS))
class TestModelKernels:
    def test_step(self, name, rng):
        model = MODELS[name]
        for _ in range(20):
            x, u = random_point(model, rng)
            got = _kernels.step(model.kind, model.params, DT, x, u)
            ref = pure.step(model.kind, model.params, DT, x, u)
            npt.assert_allclose(got, ref, rtol=1e-13, atol=1e-13)

    def test_simulate(self, name, rng):
        model = MODELS[name]
        x0 = rng.normal(scale=0.2, size=model.n)
        U = rng.normal(scale=0.3, size=(40, model.m))
        got = _kernels.simulate(model.kind, model.params, DT, x0, U)
        ref = pure.simulate(model.kind, model.params, DT, x0, U)
        npt.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)

    def test_jacobians(self, name, rng):
        model = MODELS[name]
        X = rng.normal(scale=0.4, size=(15, model.n))
        U = rng.normal(size=(15, model.m))
        Ac, Bc = _kernels.jacobians(model.kind, model.params, DT, X, U)
        Ap, Bp = pure.jacobians(model.kind, model.params, DT, X, U)
        npt.assert_allclose(Ac, Ap, rtol=1e-12, atol=1e-13)
        npt.assert_allclose(Bc, Bp, rtol=1e-12, atol=1e-13)

    def test_dynamics_tensors(self, name, rng):
        model = MODELS[name]
        X = rng.normal(scale=0.4, size=(4, model.n))
        U = rng.normal(size=(4, model.m))
        got = _kernels.dynamics_tensors(model.kind, model.params, DT, X, U, 1e-5)
        ref = pure.dynamics_tensors(model.kind, model.params, DT, X, U, 1e-5)
        for g, r in zip(got, ref):
            npt.assert_allclose(g, r, rtol=1e-7, atol=1e-9)

    def test_closed_loop(self, name, rng):
        model = MODELS[name]
        N = 25
        U = rng.normal(scale=0.2, size=(N, model.m))
        X = pure.simulate(model.kind, model.params, DT, rng.normal(scale=0.2, size=model.n), U)
        D = rng.normal(scale=0.01, size=(N, model.n))
        kff = rng.normal(scale=0.05, size=(N, model.m))
        Kfb = rng.normal(scale=0.05, size=(N, model.m, model.n))
        got = _kernels.closed_loop(model.kind, model.params, DT, X, U, D, kff, Kfb, 0.7)
        ref = pure.closed_loop(model.kind, model.params, DT, X, U, D, kff, Kfb, 0.7)
        assert got[2] == ref[2]
        npt.assert_allclose(got[0], ref[0], rtol=1e-11, atol=1e-11)
        npt.assert_allclose(got[1], ref[1], rtol=1e-11, atol=1e-11)

    def test_segment_rollout(self, name, rng):
        model = MODELS[name]
        s = 12
        U = rng.normal(scale=0.2, size=(s, model.m))
        X = pure.simulate(model.kind, model.params, DT, rng.normal(scale=0.2, size=model.n), U)[:-1]
        kff = rng.normal(scale=0.05, size=(s, model.m))
        Kfb = rng.normal(scale=0.05, size=(s, model.m, model.n))
        xstart = X[0] + rng.normal(scale=0.01, size=model.n)
        got = _kernels.segment_rollout(model.kind, model.params, DT, xstart, X, U, kff, Kfb, 0.5)
        ref = pure.segment_rollout(model.kind, model.params, DT, xstart, X, U, kff, Kfb, 0.5)
        assert got[2] == ref[2]
        npt.assert_allclose(got[0], ref[0], rtol=1e-11, atol=1e-11)
        npt.assert_allclose(got[1], ref[1], rtol=1e-11, atol=1e-11)


class TestSweepParity:
    def _random_sweep_inputs(self, rng, N=20, n=5, m=2, second_order=False):
        A = rng.normal(scale=0.5, size=(N, n, n))
        B = rng.normal(size=(N, n, m))
        q = rng.normal(size=(N + 1, n))
        r = rng.normal(size=(N, m))
        Q = np.empty((N + 1, n, n))
        for k in range(N + 1):
            G = rng.normal(size=(n, n))
            Q[k] = G.T @ G / n + 0.1 * np.eye(n)
        R = np.empty((N, m, m))
        for k in range(N):
            G = rng.normal(size=(m, m))
            R[k] = G.T @ G / m + 0.5 * np.eye(m)
        P = rng.normal(scale=0.1, size=(N, m, n))
        d = rng.normal(scale=0.1, size=(N, n))
        shoot = rng.random(N) < 0.4
        tensors = (None, None, None)
        if second_order:
            fxx = rng.normal(scale=0.05, size=(N, n, n, n))
            fxx = 0.5 * (fxx + fxx.transpose(0, 1, 3, 2))
            fuu = rng.normal(scale=0.05, size=(N, n, m, m))
            fuu = 0.5 * (fuu + fuu.transpose(0, 1, 3, 2))
            fux = rng.normal(scale=0.05, size=(N, n, m, n))
            tensors = (fxx, fuu, fux)
        return (A, B, q, r, Q, R, P, d, shoot) + tensors

    @pytest.mark.parametrize("use_defects", [False, True])
    @pytest.mark.parametrize("second_order", [False, True])
    def test_matches_reference(self, rng, use_defects, second_order):
        A, B, q, r, Q, R, P, d, shoot, fxx, fuu, fux = self._random_sweep_inputs(
            rng, second_order=second_order
        )
        if not use_defects:
            d = np.zeros_like(d)
        args = (A, B, q, r, Q, R, P, d, shoot, 1e-6, use_defects, fxx, fuu, fux, None)
        got = _kernels.sweep(*args)
        ref = pure.sweep(*args)
        for g, r_, name in zip(got, ref, "S s sc kff Kfb ec1 ec2 fail".split()):
            npt.assert_allclose(g, r_, rtol=1e-9, atol=1e-10, err_msg=name)

    @pytest.mark.parametrize("per_node", [False, True])
    def test_penalty_parity(self, rng, per_node):
        A, B, q, r, Q, R, P, d, shoot, *_ = self._random_sweep_inputs(rng)
        n = A.shape[1]
        N = A.shape[0]
        if per_node:
            Qd = np.zeros((N, n, n))
            for k in np.flatnonzero(shoot):
                Qd[k] = (0.1 + 0.2 * rng.random()) * np.eye(n)
        else:
            Qd = 0.3 * np.eye(n)
        args = (A, B, q, r, Q, R, P, d, shoot, 0.0, True, None, None, None, Qd)
        got = _kernels.sweep(*args)
        ref = pure.sweep(*args)
        for g, r_, name in zip(got, ref, "S s sc kff Kfb ec1 ec2 fail".split()):
            npt.assert_allclose(g, r_, rtol=1e-9, atol=1e-10, err_msg=name)

    def test_failure_node_matches(self, rng):
        A, B, q, r, Q, R, P, d, shoot, *_ = self._random_sweep_inputs(rng)
        R[7] = -1e6 * np.eye(2)  # unambiguously indefinite mid-horizon
        args = (A, B, q, r, Q, R, P, d, shoot, 0.0, True, None, None, None, None)
        assert _kernels.sweep(*args)[-1] == pure.sweep(*args)[-1] == 7
