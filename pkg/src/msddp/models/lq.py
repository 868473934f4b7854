"""Random linear-quadratic test systems.

These exist to exercise the solver where every quantity has a closed form:
the local model is exact, so a dense equality-constrained QP factorization
gives the true optimum and the expected-cost-change model must match the
realized change to rounding error.
"""

import numpy as np

from ..kinds import pack_lq
from ..trajectory import OcpDefinition
from .base import DiscreteModel
from .costs import QuadraticCost


def linear_discrete_model(A, B, dt: float = 1.0) -> DiscreteModel:
    """Exact discrete map x' = A x + B u."""
    from ..kinds import MODEL_LQ

    return DiscreteModel(MODEL_LQ, pack_lq(A, B), dt)


def random_lq_system(n: int, m: int, N: int, seed: int) -> OcpDefinition:
    """Deterministic-in-seed random LQ problem with a nonzero cost cross term.

    The state matrix is rescaled to a spectral radius below 1.2 so roll-outs
    stay tame over the horizon; the joint cost Hessian is made symmetric
    positive definite.
    """
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    radius = np.max(np.abs(np.linalg.eigvals(A)))
    if radius > 0:
        A *= rng.uniform(0.3, 1.15) / radius
    B = rng.normal(size=(n, m))

    G = rng.normal(size=(n + m, n + m))
    G = G.T @ G + 0.5 * np.eye(n + m)
    Wx, Wxu, Wu = G[:n, :n], G[n:, :n], G[n:, n:]
    Gf = rng.normal(size=(n, n))
    Wf = Gf.T @ Gf + 0.5 * np.eye(n)

    x_goal = rng.normal(size=n)
    x0 = rng.normal(size=n)
    cost = QuadraticCost(Wx, Wu, Wf, x_goal, Wxu=Wxu)
    return OcpDefinition(linear_discrete_model(A, B), cost, x0, N, dt=1.0)
