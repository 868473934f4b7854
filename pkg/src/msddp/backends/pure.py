"""NumPy reference implementations of the solver kernels.

This module is the fallback backend and the ground truth the compiled
extension is checked against. All entry points are pure functions over
ndarrays. Point-wise evaluations (Jacobians, accelerations) are vectorized
over nodes; the inherently serial loops (simulation, closed-loop roll-outs,
the backward sweep) are plain Python loops and are the reason the compiled
backend exists.

Array conventions:
    X:  (N+1, n) states, U: (N, m) controls, D: (N, n) defects where D[k]
    is the defect at node k+1. Jacobian batches are (K, n, n) / (K, n, m).
"""

import numpy as np

from ..kinds import (
    MODEL_ACROBOT,
    MODEL_ARM,
    MODEL_LQ,
    MODEL_QUADROTOR,
    state_dims,
    unpack_lq,
)

NAME = "python"
COMPILED = False

# Any state component beyond this magnitude aborts a roll-out as diverged.
DIVERGENCE_LIMIT = 1e8


# ---------------------------------------------------------------------------
# Acrobot: two-link pendulum, point masses at the link tips, torque on the
# second joint only. Angles are measured from the downward vertical; the
# second angle is relative to the first link.
# ---------------------------------------------------------------------------


def _acrobot_terms(params, q, v):
    m1, m2, l1, l2, g = params
    c2 = np.cos(q[:, 1])
    s2 = np.sin(q[:, 1])
    M = np.empty(q.shape[:1] + (2, 2))
    M[:, 0, 0] = (m1 + m2) * l1 * l1 + m2 * l2 * l2 + 2.0 * m2 * l1 * l2 * c2
    M[:, 0, 1] = m2 * l2 * l2 + m2 * l1 * l2 * c2
    M[:, 1, 0] = M[:, 0, 1]
    M[:, 1, 1] = m2 * l2 * l2
    c = m2 * l1 * l2 * s2
    h = np.empty_like(q)
    h[:, 0] = -c * (2.0 * v[:, 0] * v[:, 1] + v[:, 1] ** 2)
    h[:, 1] = c * v[:, 0] ** 2
    s1 = np.sin(q[:, 0])
    s12 = np.sin(q[:, 0] + q[:, 1])
    grav = np.empty_like(q)
    grav[:, 0] = (m1 + m2) * g * l1 * s1 + m2 * g * l2 * s12
    grav[:, 1] = m2 * g * l2 * s12
    return M, h, grav


def _acrobot_acc(params, q, v, u):
    M, h, grav = _acrobot_terms(params, q, v)
    tau = np.zeros_like(q)
    tau[:, 1] = u[:, 0]
    return np.linalg.solve(M, (tau - h - grav)[..., None])[..., 0]


def _acrobot_acc_partials(params, q, v, u):
    m1, m2, l1, l2, g = params
    K = q.shape[0]
    M, h, grav = _acrobot_terms(params, q, v)
    tau = np.zeros_like(q)
    tau[:, 1] = u[:, 0]
    a = np.linalg.solve(M, (tau - h - grav)[..., None])[..., 0]

    c2 = np.cos(q[:, 1])
    s2 = np.sin(q[:, 1])
    c1 = np.cos(q[:, 0])
    c12 = np.cos(q[:, 0] + q[:, 1])
    k12 = m2 * l1 * l2

    # rhs = tau - h - grav; d(rhs)/dq minus (dM/dq) a, all solved through M
    dM2 = np.zeros((K, 2, 2))
    dM2[:, 0, 0] = -2.0 * k12 * s2
    dM2[:, 0, 1] = -k12 * s2
    dM2[:, 1, 0] = -k12 * s2

    dh_q2 = np.empty((K, 2))
    dh_q2[:, 0] = -k12 * c2 * (2.0 * v[:, 0] * v[:, 1] + v[:, 1] ** 2)
    dh_q2[:, 1] = k12 * c2 * v[:, 0] ** 2

    dg = np.empty((K, 2, 2))
    dg[:, 0, 0] = (m1 + m2) * g * l1 * c1 + m2 * g * l2 * c12
    dg[:, 0, 1] = m2 * g * l2 * c12
    dg[:, 1, 0] = m2 * g * l2 * c12
    dg[:, 1, 1] = m2 * g * l2 * c12

    rhs_q = np.zeros((K, 2, 2))
    rhs_q[:, :, 1] -= dh_q2
    rhs_q -= dg
    rhs_q[:, :, 1] -= np.einsum("kij,kj->ki", dM2, a)

    dh_v = np.empty((K, 2, 2))
    dh_v[:, 0, 0] = -2.0 * k12 * s2 * v[:, 1]
    dh_v[:, 0, 1] = -2.0 * k12 * s2 * (v[:, 0] + v[:, 1])
    dh_v[:, 1, 0] = 2.0 * k12 * s2 * v[:, 0]
    dh_v[:, 1, 1] = 0.0

    rhs_u = np.zeros((K, 2, 1))
    rhs_u[:, 1, 0] = 1.0

    a_q = np.linalg.solve(M, rhs_q)
    a_v = np.linalg.solve(M, -dh_v)
    a_u = np.linalg.solve(M, rhs_u)
    return a, a_q, a_v, a_u


# ---------------------------------------------------------------------------
# Planar serial arm with point masses at the link tips, every joint actuated.
# Dynamics are formed in absolute link angles (where the mass matrix and the
# centrifugal vector have closed forms) and mapped back to relative joint
# coordinates.
# ---------------------------------------------------------------------------


def _arm_unpack(params):
    links = int(params[0])
    g = params[1]
    masses = params[2 : 2 + links]
    lengths = params[2 + links : 2 + 2 * links]
    return links, g, masses, lengths


def _arm_terms(params, q, v):
    links, g, masses, lengths = _arm_unpack(params)
    nu = np.cumsum(masses[::-1])[::-1]  # nu[j] = sum of masses j..L-1
    idx = np.arange(links)
    mu = nu[np.maximum(idx[:, None], idx[None, :])]
    ll = np.outer(lengths, lengths)
    phi = np.cumsum(q, axis=1)
    phid = np.cumsum(v, axis=1)
    diff = phi[:, :, None] - phi[:, None, :]
    Mt = mu * ll * np.cos(diff)
    St = mu * ll * np.sin(diff)
    cent = np.einsum("kjl,kl->kj", St, phid**2)
    gravt = g * nu * lengths * np.sin(phi)
    return nu, ll, mu, phi, phid, Mt, St, cent, gravt


def _arm_generalized_force(u):
    # (E^T u)_j = u_j - u_{j+1}: joint torques mapped to absolute coordinates
    f = u.copy()
    f[:, :-1] -= u[:, 1:]
    return f


def _arm_acc(params, q, v, u):
    _, _, _, _, _, Mt, _, cent, gravt = _arm_terms(params, q, v)
    add = np.linalg.solve(Mt, (_arm_generalized_force(u) - cent - gravt)[..., None])[..., 0]
    return np.diff(add, axis=1, prepend=0.0)


def _arm_acc_partials(params, q, v, u):
    links, g, _, lengths = _arm_unpack(params)
    K = q.shape[0]
    nu, ll, mu, phi, phid, Mt, St, cent, gravt = _arm_terms(params, q, v)
    add = np.linalg.solve(Mt, (_arm_generalized_force(u) - cent - gravt)[..., None])[..., 0]

    Ct = mu * ll * np.cos(phi[:, :, None] - phi[:, None, :])

    # d(M~ a)/dphi_a and dC~/dphi_a assembled column-wise (see module tests)
    Sa = np.einsum("kjl,kl->kj", St, add)
    T1 = St * add[:, None, :]
    T1[:, np.arange(links), np.arange(links)] -= Sa
    Cp2 = np.einsum("kjl,kl->kj", Ct, phid**2)
    T2 = -Ct * (phid**2)[:, None, :]
    T2[:, np.arange(links), np.arange(links)] += Cp2
    dG = np.zeros((K, links, links))
    dG[:, np.arange(links), np.arange(links)] = g * nu * lengths * np.cos(phi)
    T3 = 2.0 * St * phid[:, None, :]

    dadd_phi = np.linalg.solve(Mt, -(T1 + T2 + dG))
    dadd_phid = np.linalg.solve(Mt, -T3)
    ET = np.eye(links) - np.diag(np.ones(links - 1), 1) if links > 1 else np.eye(1)
    dadd_u = np.linalg.solve(Mt, np.broadcast_to(ET, (K, links, links)).copy())

    # back to relative coordinates: a = E add(L q, L v, u)
    lower = np.tril(np.ones((links, links)))
    a = np.diff(add, axis=1, prepend=0.0)

    def rel_rows(J):
        out = np.diff(J, axis=1, prepend=0.0)
        return out

    a_q = rel_rows(dadd_phi @ lower)
    a_v = rel_rows(dadd_phid @ lower)
    a_u = rel_rows(dadd_u)
    return a, a_q, a_v, a_u


def arm_gravity_torque(params: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Joint torques that hold the arm static at configuration q."""
    q = np.atleast_2d(q)
    links, g, masses, lengths = _arm_unpack(params)
    nu = np.cumsum(masses[::-1])[::-1]
    phi = np.cumsum(q, axis=1)
    gravt = g * nu * lengths * np.sin(phi)
    # tau = L^T G~ with L the lower-triangular ones matrix
    tau = np.cumsum(gravt[:, ::-1], axis=1)[:, ::-1]
    return tau[0] if tau.shape[0] == 1 else tau


# ---------------------------------------------------------------------------
# Quadrotor: rigid body, ZYX Euler angles, four thrusts in a plus layout
# (rotors on the +x, +y, -x, -y body axes; yaw drag alternates in sign).
# State: (position, euler, world linear velocity, body angular velocity).
# ---------------------------------------------------------------------------


def _quad_R_e3(th):
    sph, cph = np.sin(th[:, 0]), np.cos(th[:, 0])
    sth, cth = np.sin(th[:, 1]), np.cos(th[:, 1])
    sps, cps = np.sin(th[:, 2]), np.cos(th[:, 2])
    out = np.empty(th.shape[:1] + (3,))
    out[:, 0] = cps * sth * cph + sps * sph
    out[:, 1] = sps * sth * cph - cps * sph
    out[:, 2] = cth * cph
    return out


def _quad_W(th):
    sph, cph = np.sin(th[:, 0]), np.cos(th[:, 0])
    cth = np.cos(th[:, 1])
    tth = np.tan(th[:, 1])
    W = np.zeros(th.shape[:1] + (3, 3))
    W[:, 0, 0] = 1.0
    W[:, 0, 1] = sph * tth
    W[:, 0, 2] = cph * tth
    W[:, 1, 1] = cph
    W[:, 1, 2] = -sph
    W[:, 2, 1] = sph / cth
    W[:, 2, 2] = cph / cth
    return W


def _quad_torque(params, u):
    _, _, _, _, arm, kyaw, _ = params
    tau = np.empty(u.shape[:1] + (3,))
    tau[:, 0] = arm * (u[:, 1] - u[:, 3])
    tau[:, 1] = arm * (u[:, 2] - u[:, 0])
    tau[:, 2] = kyaw * (u[:, 0] - u[:, 1] + u[:, 2] - u[:, 3])
    return tau


def _quad_acc(params, q, v, u):
    mass, ixx, iyy, izz, _, _, g = params
    th = q[:, 3:6]
    w = v[:, 3:6]
    F = u.sum(axis=1)
    vdot = (F / mass)[:, None] * _quad_R_e3(th)
    vdot[:, 2] -= g
    inert = np.array([ixx, iyy, izz])
    gyro = np.cross(w, w * inert)
    wdot = (_quad_torque(params, u) - gyro) / inert
    return np.concatenate([vdot, wdot], axis=1)


def _quad_kin(params, q, v):
    th = q[:, 3:6]
    thd = np.einsum("kij,kj->ki", _quad_W(th), v[:, 3:6])
    return np.concatenate([v[:, 0:3], thd], axis=1)


def _quad_acc_partials(params, q, v, u):
    mass, ixx, iyy, izz, arm, kyaw, g = params
    K = q.shape[0]
    th = q[:, 3:6]
    w = v[:, 3:6]
    sph, cph = np.sin(th[:, 0]), np.cos(th[:, 0])
    sth, cth = np.sin(th[:, 1]), np.cos(th[:, 1])
    sps, cps = np.sin(th[:, 2]), np.cos(th[:, 2])

    a = _quad_acc(params, q, v, u)
    F = u.sum(axis=1)

    dRe3 = np.zeros((K, 3, 3))  # columns: d/dphi, d/dtheta, d/dpsi
    dRe3[:, 0, 0] = -cps * sth * sph + sps * cph
    dRe3[:, 1, 0] = -sps * sth * sph - cps * cph
    dRe3[:, 2, 0] = -cth * sph
    dRe3[:, 0, 1] = cps * cth * cph
    dRe3[:, 1, 1] = sps * cth * cph
    dRe3[:, 2, 1] = -sth * cph
    dRe3[:, 0, 2] = -sps * sth * cph + cps * sph
    dRe3[:, 1, 2] = cps * sth * cph + sps * sph

    a_q = np.zeros((K, 6, 6))
    a_q[:, 0:3, 3:6] = (F / mass)[:, None, None] * dRe3

    inert = np.array([ixx, iyy, izz])
    dgyro = np.zeros((K, 3, 3))
    dgyro[:, 0, 1] = (izz - iyy) * w[:, 2]
    dgyro[:, 0, 2] = (izz - iyy) * w[:, 1]
    dgyro[:, 1, 0] = (ixx - izz) * w[:, 2]
    dgyro[:, 1, 2] = (ixx - izz) * w[:, 0]
    dgyro[:, 2, 0] = (iyy - ixx) * w[:, 1]
    dgyro[:, 2, 1] = (iyy - ixx) * w[:, 0]

    a_v = np.zeros((K, 6, 6))
    a_v[:, 3:6, 3:6] = -dgyro / inert[None, :, None]

    mixer = np.array(
        [
            [0.0, arm, 0.0, -arm],
            [-arm, 0.0, arm, 0.0],
            [kyaw, -kyaw, kyaw, -kyaw],
        ]
    )
    a_u = np.zeros((K, 6, 4))
    a_u[:, 0:3, :] = (_quad_R_e3(th) / mass)[:, :, None]
    a_u[:, 3:6, :] = mixer / inert[:, None]
    return a, a_q, a_v, a_u


def _quad_kin_partials(params, q, v):
    """Partials of the configuration derivative at (q, v)."""
    K = q.shape[0]
    th = q[:, 3:6]
    w = v[:, 3:6]
    sph, cph = np.sin(th[:, 0]), np.cos(th[:, 0])
    cth = np.cos(th[:, 1])
    tth = np.tan(th[:, 1])
    sec = 1.0 / cth
    sec2 = sec * sec

    dW_phi = np.zeros((K, 3, 3))
    dW_phi[:, 0, 1] = cph * tth
    dW_phi[:, 0, 2] = -sph * tth
    dW_phi[:, 1, 1] = -sph
    dW_phi[:, 1, 2] = -cph
    dW_phi[:, 2, 1] = cph * sec
    dW_phi[:, 2, 2] = -sph * sec
    dW_th = np.zeros((K, 3, 3))
    dW_th[:, 0, 1] = sph * sec2
    dW_th[:, 0, 2] = cph * sec2
    dW_th[:, 2, 1] = sph * sec * tth
    dW_th[:, 2, 2] = cph * sec * tth

    k_q = np.zeros((K, 6, 6))
    k_q[:, 3:6, 3] = np.einsum("kij,kj->ki", dW_phi, w)
    k_q[:, 3:6, 4] = np.einsum("kij,kj->ki", dW_th, w)

    k_v = np.zeros((K, 6, 6))
    k_v[:, 0, 0] = 1.0
    k_v[:, 1, 1] = 1.0
    k_v[:, 2, 2] = 1.0
    k_v[:, 3:6, 3:6] = _quad_W(th)
    return k_q, k_v


# ---------------------------------------------------------------------------
# Generic semi-implicit Euler stepping and Jacobians
# ---------------------------------------------------------------------------

_ACC = {MODEL_ACROBOT: _acrobot_acc, MODEL_ARM: _arm_acc, MODEL_QUADROTOR: _quad_acc}
_ACC_PARTIALS = {
    MODEL_ACROBOT: _acrobot_acc_partials,
    MODEL_ARM: _arm_acc_partials,
    MODEL_QUADROTOR: _quad_acc_partials,
}


def acceleration(kind, params, X, U):
    """Velocity-derivative half of the continuous dynamics, batched."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    n, _ = state_dims(kind, params)
    h = n // 2
    return _ACC[kind](params, X[:, :h], X[:, h:], U)


def continuous_dynamics(kind, params, X, U):
    """Full state derivative of the continuous benchmark models, batched."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    n, _ = state_dims(kind, params)
    h = n // 2
    q, v = X[:, :h], X[:, h:]
    acc = _ACC[kind](params, q, v, U)
    if kind == MODEL_QUADROTOR:
        qdot = _quad_kin(params, q, v)
    else:
        qdot = v
    return np.concatenate([qdot, acc], axis=1)


def acceleration_partials(kind, params, X, U):
    """Analytic partials of the acceleration w.r.t. (q, v, u), batched."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    n, _ = state_dims(kind, params)
    h = n // 2
    return _ACC_PARTIALS[kind](params, X[:, :h], X[:, h:], U)


def continuous_jacobians(kind, params, X, U):
    """Analytic Jacobians of the continuous dynamics, batched."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    K = U.shape[0]
    n, m = state_dims(kind, params)
    h = n // 2
    q, v = X[:, :h], X[:, h:]
    _, a_q, a_v, a_u = _ACC_PARTIALS[kind](params, q, v, U)
    Jx = np.zeros((K, n, n))
    Ju = np.zeros((K, n, m))
    if kind == MODEL_QUADROTOR:
        k_q, k_v = _quad_kin_partials(params, q, v)
        Jx[:, :h, :h] = k_q
        Jx[:, :h, h:] = k_v
    else:
        Jx[:, :h, h:] = np.eye(h)
    Jx[:, h:, :h] = a_q
    Jx[:, h:, h:] = a_v
    Ju[:, h:, :] = a_u
    return Jx, Ju


def step_many(kind, params, dt, X, U):
    """One discrete step for a batch of (state, control) pairs."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if kind == MODEL_LQ:
        A, B = unpack_lq(params)
        return X @ A.T + U @ B.T
    n, _ = state_dims(kind, params)
    h = n // 2
    q, v = X[:, :h], X[:, h:]
    vn = v + dt * _ACC[kind](params, q, v, U)
    if kind == MODEL_QUADROTOR:
        qn = q + dt * _quad_kin(params, q, vn)
    else:
        qn = q + dt * vn
    return np.concatenate([qn, vn], axis=1)


def step(kind, params, dt, x, u):
    """One discrete step for a single (state, control) pair."""
    return step_many(kind, params, dt, x, u)[0]


def simulate(kind, params, dt, x0, U):
    """Serially simulate len(U) steps from x0; returns len(U)+1 states."""
    U = np.asarray(U, dtype=float)
    N = U.shape[0]
    X = np.empty((N + 1, len(x0)))
    X[0] = x0
    for k in range(N):
        X[k + 1] = step_many(kind, params, dt, X[k : k + 1], U[k : k + 1])[0]
    return X


def jacobians(kind, params, dt, X, U):
    """Analytic Jacobians of the discrete step at each (X[k], U[k])."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    K = U.shape[0]
    X = X[:K]
    if kind == MODEL_LQ:
        A, B = unpack_lq(params)
        return (
            np.broadcast_to(A, (K,) + A.shape).copy(),
            np.broadcast_to(B, (K,) + B.shape).copy(),
        )
    n, m = state_dims(kind, params)
    h = n // 2
    q, v = X[:, :h], X[:, h:]
    acc, a_q, a_v, a_u = _ACC_PARTIALS[kind](params, q, v, U)
    eye = np.eye(h)
    if kind == MODEL_QUADROTOR:
        vn = v + dt * acc
        k_q, k_v = _quad_kin_partials(params, q, vn)
    else:
        k_q = np.zeros((K, h, h))
        k_v = np.broadcast_to(eye, (K, h, h))
    dvn_q = dt * a_q
    dvn_v = eye + dt * a_v
    A = np.empty((K, n, n))
    A[:, :h, :h] = eye + dt * k_q + dt * k_v @ dvn_q
    A[:, :h, h:] = dt * k_v @ dvn_v
    A[:, h:, :h] = dvn_q
    A[:, h:, h:] = dvn_v
    B = np.empty((K, n, m))
    B[:, h:, :] = dt * a_u
    B[:, :h, :] = dt * k_v @ (dt * a_u)
    return A, B


def dynamics_tensors(kind, params, dt, X, U, h):
    """Second-order step derivatives by central differences of the Jacobians.

    Returns (fxx, fuu, fux) with shapes (K, n, n, n), (K, n, m, m),
    (K, n, m, n); fxx[k, i] is the Hessian of state component i w.r.t. x.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    K = U.shape[0]
    X = X[:K]
    n, m = state_dims(kind, params)
    fxx = np.zeros((K, n, n, n))
    fuu = np.zeros((K, n, m, m))
    fux = np.zeros((K, n, m, n))
    if kind == MODEL_LQ:
        return fxx, fuu, fux
    for j in range(n):
        dX = np.zeros_like(X)
        dX[:, j] = h
        Ap, Bp = jacobians(kind, params, dt, X + dX, U)
        Am, Bm = jacobians(kind, params, dt, X - dX, U)
        fxx[:, :, :, j] = (Ap - Am) / (2.0 * h)
        fux[:, :, :, j] = (Bp - Bm) / (2.0 * h)
    for j in range(m):
        dU = np.zeros_like(U)
        dU[:, j] = h
        _, Bp = jacobians(kind, params, dt, X, U + dU)
        _, Bm = jacobians(kind, params, dt, X, U - dU)
        fuu[:, :, :, j] = (Bp - Bm) / (2.0 * h)
    return fxx, fuu, fux


# ---------------------------------------------------------------------------
# Roll-out kernels
# ---------------------------------------------------------------------------


def _bad(x):
    return not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT


def closed_loop(kind, params, dt, X, U, D, kff, Kfb, alpha):
    """Full-horizon closed-loop roll-out with defect contraction.

    Applies u' = u + alpha*kff + Kfb (x' - x) and steps through
    x'_{k+1} = f(x'_k, u'_k) - (1-alpha) d_{k+1}, which leaves exactly
    (1-alpha) of each nominal defect in place.

    Returns (X', U', fail) where fail is -1 on success or the node index at
    which the state diverged.
    """
    N = U.shape[0]
    Xn = np.empty_like(X)
    Un = np.empty_like(U)
    Xn[0] = X[0]
    shrink = 1.0 - alpha
    for k in range(N):
        Un[k] = U[k] + alpha * kff[k] + Kfb[k] @ (Xn[k] - X[k])
        nxt = step_many(kind, params, dt, Xn[k : k + 1], Un[k : k + 1])[0]
        nxt -= shrink * D[k]
        if _bad(nxt):
            return Xn, Un, k
        Xn[k + 1] = nxt
    return Xn, Un, -1


def segment_rollout(kind, params, dt, xstart, X, U, kff, Kfb, alpha):
    """Closed-loop simulation of one shooting segment from xstart.

    X, U, kff, Kfb are the nominal quantities for the segment's steps.
    Returns (states after each step, controls, fail).
    """
    s = U.shape[0]
    Xs = np.empty((s, X.shape[1]))
    Us = np.empty_like(U)
    x = np.asarray(xstart, dtype=float)
    for k in range(s):
        Us[k] = U[k] + alpha * kff[k] + Kfb[k] @ (x - X[k])
        x = step_many(kind, params, dt, x[None, :], Us[k : k + 1])[0]
        if _bad(x):
            return Xs, Us, k
        Xs[k] = x
    return Xs, Us, -1


# ---------------------------------------------------------------------------
# Backward sweep
# ---------------------------------------------------------------------------


def sweep(A, B, q, r, Q, R, P, d, shoot, lam, use_defects, fxx, fuu, fux, Qd):
    """Defect-aware Riccati-like backward recursion.

    Args:
        A, B: (N,n,n), (N,n,m) discrete dynamics Jacobians.
        q, Q: (N+1,n), (N+1,n,n) cost gradients/Hessians (index N terminal).
        r, R, P: (N,m), (N,m,m), (N,m,n) control cost terms.
        d: (N,n) defects, d[k] at node k+1.
        shoot: (N,) bool, True where node k+1 is a shooting state.
        lam: Levenberg-Marquardt shift added to Quu before factorization.
        use_defects: include the defect coupling terms (multiple shooting).
        fxx, fuu, fux: second-order dynamics tensors or None (Gauss-Newton).
        Qd: penalty weight applied at shooting nodes, (n,n) shared or
            (N,n,n) per node, or None.

    Returns (S, s, sc, kff, Kfb, ec1_ff, ec2_ff, fail) where fail is -1 or
    the node at which the regularized Quu factorization failed. ec1_ff and
    ec2_ff are the feedforward-only expected-change sums sum(kff' Qu) and
    sum(kff' Quu_reg kff).
    """
    N, n, m = B.shape
    S = np.empty((N + 1, n, n))
    s = np.empty((N + 1, n))
    sc = np.empty(N + 1)
    kff = np.zeros((N, m))
    Kfb = np.zeros((N, m, n))
    S[N] = Q[N]
    s[N] = q[N]
    sc[N] = 0.0
    eye_m = np.eye(m)
    ec1_ff = 0.0
    ec2_ff = 0.0
    second_order = fxx is not None
    for k in range(N - 1, -1, -1):
        S1 = S[k + 1]
        s1 = s[k + 1]
        if Qd is not None and shoot[k]:
            Qdk = Qd[k] if Qd.ndim == 3 else Qd
            S1 = S1 + Qdk
            s1 = s1 - Qdk @ d[k]
        if use_defects:
            sSd = s1 + S1 @ d[k]
        else:
            sSd = s1
        Qx = q[k] + A[k].T @ sSd
        Qu = r[k] + B[k].T @ sSd
        SA = S1 @ A[k]
        Qxx = Q[k] + A[k].T @ SA
        Quu = R[k] + B[k].T @ (S1 @ B[k])
        Qux = P[k] + B[k].T @ SA
        if second_order:
            Qxx = Qxx + np.einsum("i,ijk->jk", s1, fxx[k])
            Quu = Quu + np.einsum("i,ijk->jk", s1, fuu[k])
            Qux = Qux + np.einsum("i,ijk->jk", s1, fux[k])
        Quu_reg = Quu + lam * eye_m
        try:
            np.linalg.cholesky(Quu_reg)
        except np.linalg.LinAlgError:
            return S, s, sc, kff, Kfb, ec1_ff, ec2_ff, k
        sol = np.linalg.solve(Quu_reg, np.column_stack([Qu, Qux]))
        kff[k] = -sol[:, 0]
        Kfb[k] = -sol[:, 1:]
        Sk = Qxx + Qux.T @ Kfb[k]
        S[k] = 0.5 * (Sk + Sk.T)
        s[k] = Qx + Qux.T @ kff[k]
        sck = sc[k + 1] + 0.5 * kff[k] @ Qu
        if use_defects:
            sck += s1 @ d[k] + 0.5 * d[k] @ (S1 @ d[k])
        sc[k] = sck
        ec1_ff += kff[k] @ Qu
        ec2_ff += kff[k] @ (Quu_reg @ kff[k])
    return S, s, sc, kff, Kfb, ec1_ff, ec2_ff, -1
