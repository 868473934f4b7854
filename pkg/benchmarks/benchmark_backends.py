#!/usr/bin/env python3
"""Timing comparison between the compiled kernels and the NumPy backend.

Runs each kernel entry point on representative problem sizes and prints a
table of per-call times plus a trajectory-level end-to-end solve. Usage:

    python benchmarks/benchmark_backends.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from msddp.backends import pure
from msddp.models import QuadrotorModel
from msddp.presets import make_config
from msddp.problems import build_problem
from msddp.solver import solve

try:
    from msddp import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    model = QuadrotorModel()
    kind, params, dt = model.kind, model.params, 0.02
    N, n, m = 200, 12, 4
    U = rng.normal(scale=0.1, size=(N, m)) + model.hover_thrusts()
    X = pure.simulate(kind, params, dt, np.zeros(n), U)
    D = rng.normal(scale=0.01, size=(N, n))
    kff = rng.normal(scale=0.01, size=(N, m))
    Kfb = rng.normal(scale=0.01, size=(N, m, n))
    A, B = pure.jacobians(kind, params, dt, X, U)
    q = rng.normal(size=(N + 1, n))
    r = rng.normal(size=(N, m))
    Q = np.tile(np.eye(n), (N + 1, 1, 1))
    R = np.tile(np.eye(m), (N, 1, 1))
    P = np.zeros((N, m, n))
    shoot = np.ones(N, dtype=bool)
    fxx, fuu, fux = pure.dynamics_tensors(kind, params, dt, X, U, 1e-5)
    return {
        "simulate (N=200)": lambda b: b.simulate(kind, params, dt, X[0], U),
        "jacobians (N=200)": lambda b: b.jacobians(kind, params, dt, X, U),
        "tensors (N=200)": lambda b: b.dynamics_tensors(kind, params, dt, X, U, 1e-5),
        "closed_loop (N=200)": lambda b: b.closed_loop(kind, params, dt, X, U, D, kff, Kfb, 0.5),
        "sweep GN (N=200)": lambda b: b.sweep(
            A, B, q, r, Q, R, P, D, shoot, 1e-6, True, None, None, None, None
        ),
        "sweep full (N=200)": lambda b: b.sweep(
            A, B, q, r, Q, R, P, D, shoot, 1e-6, True, fxx, fuu, fux, None
        ),
    }


def solve_case(backend_env):
    import os
    import subprocess
    import sys

    code = (
        "import time, numpy as np\n"
        "from msddp.problems import build_problem\n"
        "from msddp.presets import make_config\n"
        "from msddp.solver import solve\n"
        "prob = build_problem('quadrotor')\n"
        "plan = prob.plan()\n"
        "start = prob.initial_guess(plan)\n"
        "t0 = time.perf_counter()\n"
        "res = solve(prob.ocp, plan, start, make_config('msddp', max_iterations=100))\n"
        "print(time.perf_counter() - t0)\n"
    )
    env = dict(os.environ, MSDDP_BACKEND=backend_env)
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    return float(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    if _kernels is None:
        raise SystemExit("compiled kernels are not built; run pip install -e .")
    rng = np.random.default_rng(0)
    cases = kernel_cases(rng)
    print(f"{'kernel':24s} {'python':>12s} {'compiled':>12s} {'speedup':>9s}")
    for name, fn in cases.items():
        t_py = best_of(lambda: fn(pure), args.repeats)
        t_cy = best_of(lambda: fn(_kernels), args.repeats)
        print(f"{name:24s} {t_py * 1e3:10.2f}ms {t_cy * 1e3:10.2f}ms {t_py / t_cy:8.1f}x")
    t_py = solve_case("python")
    t_cy = solve_case("compiled")
    print(f"{'full quadrotor solve':24s} {t_py * 1e3:10.0f}ms {t_cy * 1e3:10.0f}ms {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
