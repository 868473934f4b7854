# cython: language_level=3
"""Compiled kernels: serial roll-outs, Jacobian stacks, and the backward
sweep, mirroring msddp.backends.pure function for function.

The NumPy backend is the reference implementation; this module exists
because the hot loops (closed-loop simulation, per-node Jacobians inside
the finite-difference tensor evaluation, and the Riccati-like recursion)
are inherently serial and dominate solve time.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, isfinite, sin, sqrt, tan

cnp.import_array()

NAME = "compiled"
COMPILED = True

DIVERGENCE_LIMIT = 1e8

cdef double _LIMIT = 1e8

cdef int KIND_LQ = 0
cdef int KIND_ACROBOT = 1
cdef int KIND_QUADROTOR = 2
cdef int KIND_ARM = 3


# ---------------------------------------------------------------------------
# small dense helpers
# ---------------------------------------------------------------------------


cdef int _cholesky(double[:, ::1] a, int n) noexcept nogil:
    """In-place lower Cholesky factor; returns -1 on success, else row."""
    cdef int i, j, k
    cdef double acc
    for j in range(n):
        acc = a[j, j]
        for k in range(j):
            acc -= a[j, k] * a[j, k]
        if acc <= 0.0 or not isfinite(acc):
            return j
        a[j, j] = sqrt(acc)
        for i in range(j + 1, n):
            acc = a[i, j]
            for k in range(j):
                acc -= a[i, k] * a[j, k]
            a[i, j] = acc / a[j, j]
    return -1


cdef void _chol_solve(double[:, ::1] chol, double[::1] b, int n) noexcept nogil:
    """Solve (L L^T) x = b in place given the lower factor."""
    cdef int i, k
    cdef double acc
    for i in range(n):
        acc = b[i]
        for k in range(i):
            acc -= chol[i, k] * b[k]
        b[i] = acc / chol[i, i]
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for k in range(i + 1, n):
            acc -= chol[k, i] * b[k]
        b[i] = acc / chol[i, i]


# ---------------------------------------------------------------------------
# acrobot
# ---------------------------------------------------------------------------


cdef void _acrobot_terms(double[::1] p, double q1, double q2, double v1,
                         double v2, double* M, double* h, double* g) noexcept nogil:
    cdef double m1 = p[0], m2 = p[1], l1 = p[2], l2 = p[3], grav = p[4]
    cdef double c2 = cos(q2), s2 = sin(q2)
    M[0] = (m1 + m2) * l1 * l1 + m2 * l2 * l2 + 2.0 * m2 * l1 * l2 * c2
    M[1] = m2 * l2 * l2 + m2 * l1 * l2 * c2
    M[2] = m2 * l2 * l2
    cdef double c = m2 * l1 * l2 * s2
    h[0] = -c * (2.0 * v1 * v2 + v2 * v2)
    h[1] = c * v1 * v1
    cdef double s1 = sin(q1), s12 = sin(q1 + q2)
    g[0] = (m1 + m2) * grav * l1 * s1 + m2 * grav * l2 * s12
    g[1] = m2 * grav * l2 * s12


cdef void _solve2(double* M, double b0, double b1, double* out) noexcept nogil:
    cdef double det = M[0] * M[2] - M[1] * M[1]
    out[0] = (M[2] * b0 - M[1] * b1) / det
    out[1] = (M[0] * b1 - M[1] * b0) / det


cdef void _acrobot_acc(double[::1] p, double[::1] x, double[::1] u,
                       double* a) noexcept nogil:
    cdef double M[3]
    cdef double h[2]
    cdef double g[2]
    _acrobot_terms(p, x[0], x[1], x[2], x[3], M, h, g)
    _solve2(M, -h[0] - g[0], u[0] - h[1] - g[1], a)


cdef void _acrobot_partials(double[::1] p, double[::1] x, double[::1] u,
                            double* a, double[:, ::1] a_q, double[:, ::1] a_v,
                            double[:, ::1] a_u) noexcept nogil:
    cdef double m1 = p[0], m2 = p[1], l1 = p[2], l2 = p[3], grav = p[4]
    cdef double q1 = x[0], q2 = x[1], v1 = x[2], v2 = x[3]
    cdef double M[3]
    cdef double h[2]
    cdef double g[2]
    _acrobot_terms(p, q1, q2, v1, v2, M, h, g)
    _solve2(M, -h[0] - g[0], u[0] - h[1] - g[1], a)

    cdef double c2 = cos(q2), s2 = sin(q2)
    cdef double c1 = cos(q1), c12 = cos(q1 + q2)
    cdef double k12 = m2 * l1 * l2

    # d(rhs)/dq - (dM/dq) a, column by column
    cdef double rhs0[2]
    cdef double rhs1[2]
    cdef double dg00 = (m1 + m2) * grav * l1 * c1 + m2 * grav * l2 * c12
    cdef double dg01 = m2 * grav * l2 * c12
    rhs0[0] = -dg00
    rhs0[1] = -dg01
    cdef double dh0 = -k12 * c2 * (2.0 * v1 * v2 + v2 * v2)
    cdef double dh1 = k12 * c2 * v1 * v1
    cdef double dM00 = -2.0 * k12 * s2
    cdef double dM01 = -k12 * s2
    rhs1[0] = -dh0 - dg01 - (dM00 * a[0] + dM01 * a[1])
    rhs1[1] = -dh1 - dg01 - (dM01 * a[0])
    cdef double col[2]
    _solve2(M, rhs0[0], rhs0[1], col)
    a_q[0, 0] = col[0]; a_q[1, 0] = col[1]
    _solve2(M, rhs1[0], rhs1[1], col)
    a_q[0, 1] = col[0]; a_q[1, 1] = col[1]

    cdef double dhv00 = -2.0 * k12 * s2 * v2
    cdef double dhv01 = -2.0 * k12 * s2 * (v1 + v2)
    cdef double dhv10 = 2.0 * k12 * s2 * v1
    _solve2(M, -dhv00, -dhv10, col)
    a_v[0, 0] = col[0]; a_v[1, 0] = col[1]
    _solve2(M, -dhv01, 0.0, col)
    a_v[0, 1] = col[0]; a_v[1, 1] = col[1]

    _solve2(M, 0.0, 1.0, col)
    a_u[0, 0] = col[0]; a_u[1, 0] = col[1]


# ---------------------------------------------------------------------------
# planar arm (absolute-angle formulation, relative-coordinate interface)
# ---------------------------------------------------------------------------


cdef int _arm_core(double[::1] p, double[::1] x, double[::1] u,
                   double[::1] a, bint want_partials,
                   double[:, ::1] a_q, double[:, ::1] a_v, double[:, ::1] a_u,
                   double[:, ::1] Mt, double[:, ::1] St, double[:, ::1] Ct,
                   double[:, ::1] work, double[::1] vec, double[::1] nu,
                   double[::1] phi, double[::1] phid, double[::1] add) noexcept nogil:
    cdef int L = <int> p[0]
    cdef double grav = p[1]
    cdef int i, j, k
    cdef double acc, diff

    for j in range(L):
        nu[j] = 0.0
    for j in range(L - 1, -1, -1):
        nu[j] = p[2 + j] + (nu[j + 1] if j + 1 < L else 0.0)

    acc = 0.0
    for j in range(L):
        acc += x[j]
        phi[j] = acc
    acc = 0.0
    for j in range(L):
        acc += x[L + j]
        phid[j] = acc

    # Mt, St: mass and sine couplings in absolute angles
    cdef double lj, lk, mu
    for j in range(L):
        lj = p[2 + L + j]
        for k in range(L):
            lk = p[2 + L + k]
            mu = nu[j] if j >= k else nu[k]
            diff = phi[j] - phi[k]
            Mt[j, k] = mu * lj * lk * cos(diff)
            St[j, k] = mu * lj * lk * sin(diff)
            if want_partials:
                Ct[j, k] = mu * lj * lk * cos(diff)

    # rhs = E^T u - cent - grav terms
    for j in range(L):
        acc = u[j] - (u[j + 1] if j + 1 < L else 0.0)
        for k in range(L):
            acc -= St[j, k] * phid[k] * phid[k]
        acc -= grav * nu[j] * p[2 + L + j] * sin(phi[j])
        vec[j] = acc

    for j in range(L):
        for k in range(L):
            work[j, k] = Mt[j, k]
    if _cholesky(work, L) >= 0:
        return 1
    _chol_solve(work, vec, L)
    for j in range(L):
        add[j] = vec[j]
    for j in range(L):
        a[j] = add[j] - (add[j - 1] if j > 0 else 0.0)
    if not want_partials:
        return 0

    # columns of d(add)/dphi: -(T1 + T2 + dG) solved through Mt, where
    # T1[j,c] = St[j,c] add[c] - delta_jc * (St add)_j
    # T2[j,c] = delta_jc * (Ct phid^2)_j - Ct[j,c] phid[c]^2
    cdef double sa_j, cp_j
    for k in range(L):  # column index c = k
        for j in range(L):
            acc = St[j, k] * add[k] - Ct[j, k] * phid[k] * phid[k]
            if j == k:
                sa_j = 0.0
                cp_j = 0.0
                for i in range(L):
                    sa_j += St[j, i] * add[i]
                    cp_j += Ct[j, i] * phid[i] * phid[i]
                acc += -sa_j + cp_j
                acc += grav * nu[j] * p[2 + L + j] * cos(phi[j])
            vec[j] = -acc
        _chol_solve(work, vec, L)
        for j in range(L):
            a_q[j, k] = vec[j]  # temporarily d(add)/dphi
    # d(add)/dphid: -2 St[j,c] phid[c]
    for k in range(L):
        for j in range(L):
            vec[j] = -2.0 * St[j, k] * phid[k]
        _chol_solve(work, vec, L)
        for j in range(L):
            a_v[j, k] = vec[j]
    # d(add)/du: columns of E^T (E^T[:, c] has 1 at c, -1 at c-1)
    for k in range(L):
        for j in range(L):
            vec[j] = 0.0
        vec[k] = 1.0
        if k > 0:
            vec[k - 1] = -1.0
        _chol_solve(work, vec, L)
        for j in range(L):
            a_u[j, k] = vec[j]

    # chain to relative coordinates: right-multiply the phi-partials by the
    # lower-triangular ones matrix (cumulative sums), then difference rows
    for j in range(L):
        for k in range(L - 2, -1, -1):
            a_q[j, k] += a_q[j, k + 1]
            a_v[j, k] += a_v[j, k + 1]
    for j in range(L - 1, 0, -1):
        for k in range(L):
            a_q[j, k] -= a_q[j - 1, k]
            a_v[j, k] -= a_v[j - 1, k]
            a_u[j, k] -= a_u[j - 1, k]
    return 0


# ---------------------------------------------------------------------------
# quadrotor
# ---------------------------------------------------------------------------


cdef void _quad_acc(double[::1] p, double[::1] x, double[::1] u,
                    double* a) noexcept nogil:
    cdef double mass = p[0], ixx = p[1], iyy = p[2], izz = p[3]
    cdef double arm = p[4], kyaw = p[5], grav = p[6]
    cdef double sph = sin(x[3]), cph = cos(x[3])
    cdef double sth = sin(x[4]), cth = cos(x[4])
    cdef double sps = sin(x[5]), cps = cos(x[5])
    cdef double F = u[0] + u[1] + u[2] + u[3]
    a[0] = (F / mass) * (cps * sth * cph + sps * sph)
    a[1] = (F / mass) * (sps * sth * cph - cps * sph)
    a[2] = (F / mass) * (cth * cph) - grav
    cdef double wx = x[9], wy = x[10], wz = x[11]
    cdef double tx = arm * (u[1] - u[3])
    cdef double ty = arm * (u[2] - u[0])
    cdef double tz = kyaw * (u[0] - u[1] + u[2] - u[3])
    a[3] = (tx - (izz - iyy) * wy * wz) / ixx
    a[4] = (ty - (ixx - izz) * wz * wx) / iyy
    a[5] = (tz - (iyy - ixx) * wx * wy) / izz


cdef void _quad_kin(double[::1] p, double* q3, double* w3, double* out) noexcept nogil:
    """Euler-angle rates from body rates; q3 = (phi, theta, psi)."""
    cdef double sph = sin(q3[0]), cph = cos(q3[0])
    cdef double cth = cos(q3[1]), tth = tan(q3[1])
    out[0] = w3[0] + sph * tth * w3[1] + cph * tth * w3[2]
    out[1] = cph * w3[1] - sph * w3[2]
    out[2] = (sph * w3[1] + cph * w3[2]) / cth


cdef void _quad_partials(double[::1] p, double[::1] x, double[::1] u,
                         double* a, double[:, ::1] a_q, double[:, ::1] a_v,
                         double[:, ::1] a_u) noexcept nogil:
    cdef double mass = p[0], ixx = p[1], iyy = p[2], izz = p[3]
    cdef double arm = p[4], kyaw = p[5]
    cdef int i, j
    for i in range(6):
        for j in range(6):
            a_q[i, j] = 0.0
            a_v[i, j] = 0.0
        for j in range(4):
            a_u[i, j] = 0.0
    _quad_acc(p, x, u, a)
    cdef double sph = sin(x[3]), cph = cos(x[3])
    cdef double sth = sin(x[4]), cth = cos(x[4])
    cdef double sps = sin(x[5]), cps = cos(x[5])
    cdef double F = u[0] + u[1] + u[2] + u[3]
    cdef double s = F / mass
    # d(linear acc)/d(euler)
    a_q[0, 3] = s * (-cps * sth * sph + sps * cph)
    a_q[1, 3] = s * (-sps * sth * sph - cps * cph)
    a_q[2, 3] = s * (-cth * sph)
    a_q[0, 4] = s * (cps * cth * cph)
    a_q[1, 4] = s * (sps * cth * cph)
    a_q[2, 4] = s * (-sth * cph)
    a_q[0, 5] = s * (-sps * sth * cph + cps * sph)
    a_q[1, 5] = s * (cps * sth * cph + sps * sph)
    # gyroscopic coupling
    cdef double wx = x[9], wy = x[10], wz = x[11]
    a_v[3, 4] = -(izz - iyy) * wz / ixx
    a_v[3, 5] = -(izz - iyy) * wy / ixx
    a_v[4, 3] = -(ixx - izz) * wz / iyy
    a_v[4, 5] = -(ixx - izz) * wx / iyy
    a_v[5, 3] = -(iyy - ixx) * wy / izz
    a_v[5, 4] = -(iyy - ixx) * wx / izz
    # thrust map
    cdef double re0 = cps * sth * cph + sps * sph
    cdef double re1 = sps * sth * cph - cps * sph
    cdef double re2 = cth * cph
    for j in range(4):
        a_u[0, j] = re0 / mass
        a_u[1, j] = re1 / mass
        a_u[2, j] = re2 / mass
    a_u[3, 1] = arm / ixx
    a_u[3, 3] = -arm / ixx
    a_u[4, 0] = -arm / iyy
    a_u[4, 2] = arm / iyy
    a_u[5, 0] = kyaw / izz
    a_u[5, 1] = -kyaw / izz
    a_u[5, 2] = kyaw / izz
    a_u[5, 3] = -kyaw / izz


cdef void _quad_kin_partials(double[::1] p, double* q3, double* w3,
                             double[:, ::1] k_q, double[:, ::1] k_v) noexcept nogil:
    """Partials of (v, W(theta) w) w.r.t. configuration and velocity."""
    cdef int i, j
    for i in range(6):
        for j in range(6):
            k_q[i, j] = 0.0
            k_v[i, j] = 0.0
    cdef double sph = sin(q3[0]), cph = cos(q3[0])
    cdef double cth = cos(q3[1]), tth = tan(q3[1])
    cdef double sec = 1.0 / cth
    cdef double sec2 = sec * sec
    # d(W w)/dphi and d(W w)/dtheta
    k_q[3, 3] = cph * tth * w3[1] - sph * tth * w3[2]
    k_q[4, 3] = -sph * w3[1] - cph * w3[2]
    k_q[5, 3] = cph * sec * w3[1] - sph * sec * w3[2]
    k_q[3, 4] = sph * sec2 * w3[1] + cph * sec2 * w3[2]
    k_q[5, 4] = sph * sec * tth * w3[1] + cph * sec * tth * w3[2]
    k_v[0, 0] = 1.0
    k_v[1, 1] = 1.0
    k_v[2, 2] = 1.0
    k_v[3, 3] = 1.0
    k_v[3, 4] = sph * tth
    k_v[3, 5] = cph * tth
    k_v[4, 4] = cph
    k_v[4, 5] = -sph
    k_v[5, 4] = sph * sec
    k_v[5, 5] = cph * sec


# ---------------------------------------------------------------------------
# generic stepping
# ---------------------------------------------------------------------------


cdef int _acc_dispatch(int kind, double[::1] p, double[::1] x, double[::1] u,
                       double[::1] acc, _ArmScratch arm) noexcept nogil:
    cdef int h = acc.shape[0]
    cdef int i
    if kind == KIND_ACROBOT:
        _acrobot_acc(p, x, u, &acc[0])
        return 0
    if kind == KIND_QUADROTOR:
        _quad_acc(p, x, u, &acc[0])
        return 0
    if kind == KIND_ARM:
        return _arm_core(p, x, u, acc, False, arm.a_q, arm.a_v, arm.a_u,
                         arm.Mt, arm.St, arm.Ct, arm.work, arm.vec, arm.nu,
                         arm.phi, arm.phid, arm.add)
    return 1


cdef class _ArmScratch:
    cdef double[:, ::1] a_q
    cdef double[:, ::1] a_v
    cdef double[:, ::1] a_u
    cdef double[:, ::1] Mt
    cdef double[:, ::1] St
    cdef double[:, ::1] Ct
    cdef double[:, ::1] work
    cdef double[::1] vec
    cdef double[::1] nu
    cdef double[::1] phi
    cdef double[::1] phid
    cdef double[::1] add

    def __cinit__(self, int L):
        self.a_q = np.zeros((L, L))
        self.a_v = np.zeros((L, L))
        self.a_u = np.zeros((L, L))
        self.Mt = np.zeros((L, L))
        self.St = np.zeros((L, L))
        self.Ct = np.zeros((L, L))
        self.work = np.zeros((L, L))
        self.vec = np.zeros(L)
        self.nu = np.zeros(L)
        self.phi = np.zeros(L)
        self.phid = np.zeros(L)
        self.add = np.zeros(L)


cdef int _step_into(int kind, double[::1] p, double dt, double[::1] x,
                    double[::1] u, double[::1] out, double[::1] acc,
                    _ArmScratch arm) noexcept nogil:
    """One step into out; returns nonzero on numerical failure."""
    cdef int n = x.shape[0]
    cdef int h = n // 2
    cdef int i
    cdef double q3[3]
    cdef double w3[3]
    cdef double thd[3]
    if kind == KIND_LQ:
        return 2  # handled in Python wrappers
    if _acc_dispatch(kind, p, x, u, acc, arm):
        return 1
    for i in range(h):
        out[h + i] = x[h + i] + dt * acc[i]
    if kind == KIND_QUADROTOR:
        out[0] = x[0] + dt * out[6]
        out[1] = x[1] + dt * out[7]
        out[2] = x[2] + dt * out[8]
        q3[0] = x[3]; q3[1] = x[4]; q3[2] = x[5]
        w3[0] = out[9]; w3[1] = out[10]; w3[2] = out[11]
        _quad_kin(p, q3, w3, thd)
        out[3] = x[3] + dt * thd[0]
        out[4] = x[4] + dt * thd[1]
        out[5] = x[5] + dt * thd[2]
    else:
        for i in range(h):
            out[i] = x[i] + dt * out[h + i]
    return 0


cdef bint _bad_state(double[::1] x) noexcept nogil:
    cdef int i
    for i in range(x.shape[0]):
        if not isfinite(x[i]) or fabs(x[i]) > _LIMIT:
            return True
    return False


cdef _ArmScratch _make_scratch(int kind, double[::1] p):
    if kind == KIND_ARM:
        return _ArmScratch(<int> p[0])
    return _ArmScratch(1)


def _as_c(arr):
    return np.ascontiguousarray(arr, dtype=np.float64)


def step(kind, params, dt, x, u):
    """One discrete step for a single (state, control) pair."""
    from .backends import pure

    params = _as_c(params)
    x = _as_c(x)
    u = _as_c(u)
    if kind == KIND_LQ:
        return pure.step(kind, params, dt, x, u)
    out = np.empty_like(x)
    acc = np.empty(x.shape[0] // 2)
    scratch = _make_scratch(kind, params)
    if _step_into(kind, params, dt, x, u, out, acc, scratch):
        raise FloatingPointError("integration step failed")
    return out


def simulate(kind, params, dt, x0, U):
    """Serially simulate len(U) steps from x0; returns len(U)+1 states."""
    from .backends import pure

    params = _as_c(params)
    U = _as_c(np.atleast_2d(U))
    x0 = _as_c(x0)
    if kind == KIND_LQ:
        return pure.simulate(kind, params, dt, x0, U)
    cdef double[:, ::1] Um = U
    cdef int N = U.shape[0]
    cdef int n = x0.shape[0]
    X = np.empty((N + 1, n))
    cdef double[:, ::1] Xm = X
    cdef double[::1] x0m = x0
    acc = np.empty(n // 2)
    cdef double[::1] accm = acc
    scratch = _make_scratch(<int> kind, params)
    cdef double[::1] pm = params
    cdef int k, i
    cdef int ikind = kind
    cdef double cdt = dt
    for i in range(n):
        Xm[0, i] = x0m[i]
    for k in range(N):
        if _step_into(ikind, pm, cdt, Xm[k], Um[k], Xm[k + 1], accm, scratch):
            raise FloatingPointError("integration step failed")
    return X


cdef int _jacobian_node(int kind, double[::1] p, double dt, double[::1] x,
                        double[::1] u, double[:, ::1] A, double[:, ::1] B,
                        double[::1] acc, double[:, ::1] a_q, double[:, ::1] a_v,
                        double[:, ::1] a_u, double[:, ::1] k_q, double[:, ::1] k_v,
                        _ArmScratch arm) noexcept nogil:
    """Analytic Jacobians of the semi-implicit step at one point."""
    cdef int n = x.shape[0]
    cdef int h = n // 2
    cdef int m = u.shape[0]
    cdef int i, j, k
    cdef double q3[3]
    cdef double w3[3]
    cdef double acc_el
    if kind == KIND_ACROBOT:
        _acrobot_partials(p, x, u, &acc[0], a_q, a_v, a_u)
    elif kind == KIND_QUADROTOR:
        _quad_partials(p, x, u, &acc[0], a_q, a_v, a_u)
    elif kind == KIND_ARM:
        if _arm_core(p, x, u, acc, True, a_q, a_v, a_u, arm.Mt, arm.St,
                     arm.Ct, arm.work, arm.vec, arm.nu, arm.phi, arm.phid,
                     arm.add):
            return 1
    else:
        return 1

    # velocity block: v' = v + dt a
    for i in range(h):
        for j in range(h):
            A[h + i, j] = dt * a_q[i, j]
            A[h + i, h + j] = dt * a_v[i, j]
        A[h + i, h + i] += 1.0
        for j in range(m):
            B[h + i, j] = dt * a_u[i, j]

    if kind == KIND_QUADROTOR:
        q3[0] = x[3]; q3[1] = x[4]; q3[2] = x[5]
        w3[0] = x[9] + dt * acc[3]
        w3[1] = x[10] + dt * acc[4]
        w3[2] = x[11] + dt * acc[5]
        _quad_kin_partials(p, q3, w3, k_q, k_v)
        # q' = q + dt k(q, v'): chain through the updated velocity
        for i in range(h):
            for j in range(h):
                acc_el = k_q[i, j]
                for k in range(h):
                    acc_el += k_v[i, k] * dt * a_q[k, j]
                A[i, j] = dt * acc_el
                acc_el = 0.0
                for k in range(h):
                    acc_el += k_v[i, k] * A[h + k, h + j]
                A[i, h + j] = dt * acc_el
            A[i, i] += 1.0
            for j in range(m):
                acc_el = 0.0
                for k in range(h):
                    acc_el += k_v[i, k] * dt * a_u[k, j]
                B[i, j] = dt * acc_el
    else:
        for i in range(h):
            for j in range(h):
                A[i, j] = dt * A[h + i, j]
                A[i, h + j] = dt * A[h + i, h + j]
            A[i, i] += 1.0
            for j in range(m):
                B[i, j] = dt * B[h + i, j]
    return 0


def jacobians(kind, params, dt, X, U):
    """Analytic Jacobians of the discrete step at each (X[k], U[k])."""
    from .backends import pure

    if kind == KIND_LQ:
        return pure.jacobians(kind, params, dt, X, U)
    params = _as_c(params)
    X = _as_c(np.atleast_2d(X))
    U = _as_c(np.atleast_2d(U))
    cdef int K = U.shape[0]
    cdef int n = X.shape[1]
    cdef int m = U.shape[1]
    cdef int h = n // 2
    A = np.zeros((K, n, n))
    B = np.zeros((K, n, m))
    cdef double[:, :, ::1] Am = A
    cdef double[:, :, ::1] Bm = B
    cdef double[:, ::1] Xm = X
    cdef double[:, ::1] Um = U
    cdef double[::1] pm = params
    acc = np.empty(h)
    a_q = np.zeros((h, h)); a_v = np.zeros((h, h)); a_u = np.zeros((h, m))
    k_q = np.zeros((h, h)); k_v = np.zeros((h, h))
    cdef double[::1] accm = acc
    cdef double[:, ::1] aqm = a_q
    cdef double[:, ::1] avm = a_v
    cdef double[:, ::1] aum = a_u
    cdef double[:, ::1] kqm = k_q
    cdef double[:, ::1] kvm = k_v
    scratch = _make_scratch(<int> kind, params)
    cdef int k
    cdef int ikind = kind
    cdef double cdt = dt
    for k in range(K):
        if _jacobian_node(ikind, pm, cdt, Xm[k], Um[k], Am[k], Bm[k], accm,
                          aqm, avm, aum, kqm, kvm, scratch):
            raise FloatingPointError("jacobian evaluation failed")
    return A, B


def dynamics_tensors(kind, params, dt, X, U, h):
    """Second-order step derivatives by central differences of the Jacobians."""
    from .backends import pure

    if kind == KIND_LQ:
        return pure.dynamics_tensors(kind, params, dt, X, U, h)
    params = _as_c(params)
    X = _as_c(np.atleast_2d(X))
    U = _as_c(np.atleast_2d(U))
    cdef int K = U.shape[0]
    cdef int n = X.shape[1]
    cdef int m = U.shape[1]
    cdef int half = n // 2
    fxx = np.zeros((K, n, n, n))
    fuu = np.zeros((K, n, m, m))
    fux = np.zeros((K, n, m, n))
    cdef double[:, :, :, ::1] fxxm = fxx
    cdef double[:, :, :, ::1] fuum = fuu
    cdef double[:, :, :, ::1] fuxm = fux
    cdef double[:, ::1] Xm = X
    cdef double[:, ::1] Um = U
    cdef double[::1] pm = params
    xp = np.empty(n); up = np.empty(m)
    Ap = np.zeros((n, n)); Bp = np.zeros((n, m))
    Amn = np.zeros((n, n)); Bmn = np.zeros((n, m))
    acc = np.empty(half)
    a_q = np.zeros((half, half)); a_v = np.zeros((half, half)); a_u = np.zeros((half, m))
    k_q = np.zeros((half, half)); k_v = np.zeros((half, half))
    cdef double[::1] xpm = xp
    cdef double[::1] upm = up
    cdef double[:, ::1] Apm = Ap
    cdef double[:, ::1] Bpm = Bp
    cdef double[:, ::1] Amm = Amn
    cdef double[:, ::1] Bmm = Bmn
    cdef double[::1] accm = acc
    cdef double[:, ::1] aqm = a_q
    cdef double[:, ::1] avm = a_v
    cdef double[:, ::1] aum = a_u
    cdef double[:, ::1] kqm = k_q
    cdef double[:, ::1] kvm = k_v
    scratch = _make_scratch(<int> kind, params)
    cdef int k, j, i, a
    cdef int ikind = kind
    cdef double cdt = dt
    cdef double ch = h
    cdef double inv2h = 1.0 / (2.0 * ch)
    cdef int fail = 0
    for k in range(K):
        for i in range(n):
            xpm[i] = Xm[k, i]
        for i in range(m):
            upm[i] = Um[k, i]
        for j in range(n):
            xpm[j] = Xm[k, j] + ch
            fail |= _jacobian_node(ikind, pm, cdt, xpm, upm, Apm, Bpm, accm,
                                   aqm, avm, aum, kqm, kvm, scratch)
            xpm[j] = Xm[k, j] - ch
            fail |= _jacobian_node(ikind, pm, cdt, xpm, upm, Amm, Bmm, accm,
                                   aqm, avm, aum, kqm, kvm, scratch)
            xpm[j] = Xm[k, j]
            for i in range(n):
                for a in range(n):
                    fxxm[k, i, a, j] = (Apm[i, a] - Amm[i, a]) * inv2h
                for a in range(m):
                    fuxm[k, i, a, j] = (Bpm[i, a] - Bmm[i, a]) * inv2h
        for j in range(m):
            upm[j] = Um[k, j] + ch
            fail |= _jacobian_node(ikind, pm, cdt, xpm, upm, Apm, Bpm, accm,
                                   aqm, avm, aum, kqm, kvm, scratch)
            upm[j] = Um[k, j] - ch
            fail |= _jacobian_node(ikind, pm, cdt, xpm, upm, Amm, Bmm, accm,
                                   aqm, avm, aum, kqm, kvm, scratch)
            upm[j] = Um[k, j]
            for i in range(n):
                for a in range(m):
                    fuum[k, i, a, j] = (Bpm[i, a] - Bmm[i, a]) * inv2h
        if fail:
            raise FloatingPointError("jacobian evaluation failed")
    return fxx, fuu, fux


def closed_loop(kind, params, dt, X, U, D, kff, Kfb, alpha):
    """Full-horizon closed-loop roll-out with defect contraction."""
    from .backends import pure

    if kind == KIND_LQ:
        return pure.closed_loop(kind, params, dt, X, U, D, kff, Kfb, alpha)
    params = _as_c(params)
    X = _as_c(X); U = _as_c(U); D = _as_c(D)
    kff = _as_c(kff); Kfb = _as_c(Kfb)
    cdef int N = U.shape[0]
    cdef int n = X.shape[1]
    cdef int m = U.shape[1]
    Xn = np.empty_like(X)
    Un = np.empty_like(U)
    cdef double[:, ::1] Xm = X
    cdef double[:, ::1] Um = U
    cdef double[:, ::1] Dm = D
    cdef double[:, ::1] km = kff
    cdef double[:, :, ::1] Km = Kfb
    cdef double[:, ::1] Xnm = Xn
    cdef double[:, ::1] Unm = Un
    cdef double[::1] pm = params
    acc = np.empty(n // 2)
    cdef double[::1] accm = acc
    scratch = _make_scratch(<int> kind, params)
    cdef int k, i, j
    cdef double cdt = dt
    cdef double al = alpha
    cdef double shrink = 1.0 - al
    cdef double du
    cdef int ikind = kind
    for i in range(n):
        Xnm[0, i] = Xm[0, i]
    for k in range(N):
        for i in range(m):
            du = al * km[k, i]
            for j in range(n):
                du += Km[k, i, j] * (Xnm[k, j] - Xm[k, j])
            Unm[k, i] = Um[k, i] + du
        if _step_into(ikind, pm, cdt, Xnm[k], Unm[k], Xnm[k + 1], accm, scratch):
            return Xn, Un, k
        for i in range(n):
            Xnm[k + 1, i] -= shrink * Dm[k, i]
        if _bad_state(Xnm[k + 1]):
            return Xn, Un, k
    return Xn, Un, -1


def segment_rollout(kind, params, dt, xstart, X, U, kff, Kfb, alpha):
    """Closed-loop simulation of one shooting segment from xstart."""
    from .backends import pure

    if kind == KIND_LQ:
        return pure.segment_rollout(kind, params, dt, xstart, X, U, kff, Kfb, alpha)
    params = _as_c(params)
    xstart = _as_c(xstart)
    X = _as_c(X); U = _as_c(U); kff = _as_c(kff); Kfb = _as_c(Kfb)
    cdef int s = U.shape[0]
    cdef int n = X.shape[1]
    cdef int m = U.shape[1]
    Xs = np.empty((s, n))
    Us = np.empty_like(U)
    x = xstart.copy()
    cdef double[:, ::1] Xm = X
    cdef double[:, ::1] Um = U
    cdef double[:, ::1] km = kff
    cdef double[:, :, ::1] Km = Kfb
    cdef double[:, ::1] Xsm = Xs
    cdef double[:, ::1] Usm = Us
    cdef double[::1] xm = x
    cdef double[::1] pm = params
    acc = np.empty(n // 2)
    cdef double[::1] accm = acc
    scratch = _make_scratch(<int> kind, params)
    cdef int k, i, j
    cdef double cdt = dt
    cdef double al = alpha
    cdef double du
    cdef int ikind = kind
    for k in range(s):
        for i in range(m):
            du = al * km[k, i]
            for j in range(n):
                du += Km[k, i, j] * (xm[j] - Xm[k, j])
            Usm[k, i] = Um[k, i] + du
        if _step_into(ikind, pm, cdt, xm, Usm[k], Xsm[k], accm, scratch):
            return Xs, Us, k
        if _bad_state(Xsm[k]):
            return Xs, Us, k
        for i in range(n):
            xm[i] = Xsm[k, i]
    return Xs, Us, -1


def sweep(A, B, q, r, Q, R, P, d, shoot, lam, use_defects, fxx, fuu, fux, Qd):
    """Defect-aware backward recursion; see the NumPy backend docstring."""
    A = _as_c(A); B = _as_c(B); q = _as_c(q); r = _as_c(r)
    Q = _as_c(Q); R = _as_c(R); P = _as_c(P); d = _as_c(d)
    shoot_u8 = np.ascontiguousarray(shoot, dtype=np.uint8)
    cdef int N = B.shape[0]
    cdef int n = B.shape[1]
    cdef int m = B.shape[2]
    S = np.empty((N + 1, n, n))
    s_out = np.empty((N + 1, n))
    sc = np.empty(N + 1)
    kff = np.zeros((N, m))
    Kfb = np.zeros((N, m, n))
    cdef double[:, :, ::1] Am = A
    cdef double[:, :, ::1] Bm = B
    cdef double[:, ::1] qm = q
    cdef double[:, ::1] rm = r
    cdef double[:, :, ::1] Qm = Q
    cdef double[:, :, ::1] Rm = R
    cdef double[:, :, ::1] Pm = P
    cdef double[:, ::1] dm = d
    cdef unsigned char[::1] shootm = shoot_u8
    cdef double[:, :, ::1] Sm = S
    cdef double[:, ::1] sm = s_out
    cdef double[::1] scm = sc
    cdef double[:, ::1] kffm = kff
    cdef double[:, :, ::1] Kfbm = Kfb

    cdef bint second = fxx is not None
    cdef double[:, :, :, ::1] fxxm = None
    cdef double[:, :, :, ::1] fuum = None
    cdef double[:, :, :, ::1] fuxm = None
    if second:
        fxxm = _as_c(fxx)
        fuum = _as_c(fuu)
        fuxm = _as_c(fux)

    cdef int pen_mode = 0  # 0: none, 1: shared matrix, 2: per node
    cdef double[:, ::1] Qd2 = None
    cdef double[:, :, ::1] Qd3 = None
    if Qd is not None:
        Qd_arr = _as_c(Qd)
        if Qd_arr.ndim == 3:
            pen_mode = 2
            Qd3 = Qd_arr
        else:
            pen_mode = 1
            Qd2 = Qd_arr

    S1 = np.empty((n, n)); s1 = np.empty(n)
    sSd = np.empty(n)
    Qx = np.empty(n); Qu = np.empty(m)
    Qxx = np.empty((n, n)); Quu = np.empty((m, m)); Qux = np.empty((m, n))
    SA = np.empty((n, n)); SB = np.empty((n, m))
    chol = np.empty((m, m)); rhs = np.empty(m)
    cdef double[:, ::1] S1m = S1
    cdef double[::1] s1m = s1
    cdef double[::1] sSdm = sSd
    cdef double[::1] Qxm = Qx
    cdef double[::1] Qum = Qu
    cdef double[:, ::1] Qxxm = Qxx
    cdef double[:, ::1] Quum = Quu
    cdef double[:, ::1] Quxm = Qux
    cdef double[:, ::1] SAm = SA
    cdef double[:, ::1] SBm = SB
    cdef double[:, ::1] cholm = chol
    cdef double[::1] rhsm = rhs

    cdef int i, j, k, node
    cdef double acc, lam_c = lam, ec1 = 0.0, ec2 = 0.0, sck
    cdef bint defects = use_defects

    for i in range(n):
        sm[N, i] = qm[N, i]
        for j in range(n):
            Sm[N, i, j] = Qm[N, i, j]
    scm[N] = 0.0

    for node in range(N - 1, -1, -1):
        for i in range(n):
            s1m[i] = sm[node + 1, i]
            for j in range(n):
                S1m[i, j] = Sm[node + 1, i, j]
        if pen_mode and shootm[node]:
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    if pen_mode == 2:
                        S1m[i, j] += Qd3[node, i, j]
                        acc += Qd3[node, i, j] * dm[node, j]
                    else:
                        S1m[i, j] += Qd2[i, j]
                        acc += Qd2[i, j] * dm[node, j]
                s1m[i] -= acc
        for i in range(n):
            acc = s1m[i]
            if defects:
                for j in range(n):
                    acc += S1m[i, j] * dm[node, j]
            sSdm[i] = acc
        for i in range(n):
            acc = qm[node, i]
            for j in range(n):
                acc += Am[node, j, i] * sSdm[j]
            Qxm[i] = acc
        for i in range(m):
            acc = rm[node, i]
            for j in range(n):
                acc += Bm[node, j, i] * sSdm[j]
            Qum[i] = acc
        # SA = S1 A, SB = S1 B
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for k in range(n):
                    acc += S1m[i, k] * Am[node, k, j]
                SAm[i, j] = acc
            for j in range(m):
                acc = 0.0
                for k in range(n):
                    acc += S1m[i, k] * Bm[node, k, j]
                SBm[i, j] = acc
        for i in range(n):
            for j in range(n):
                acc = Qm[node, i, j]
                for k in range(n):
                    acc += Am[node, k, i] * SAm[k, j]
                Qxxm[i, j] = acc
        for i in range(m):
            for j in range(m):
                acc = Rm[node, i, j]
                for k in range(n):
                    acc += Bm[node, k, i] * SBm[k, j]
                Quum[i, j] = acc
            for j in range(n):
                acc = Pm[node, i, j]
                for k in range(n):
                    acc += Bm[node, k, i] * SAm[k, j]
                Quxm[i, j] = acc
        if second:
            for k in range(n):
                for i in range(n):
                    for j in range(n):
                        Qxxm[i, j] += s1m[k] * fxxm[node, k, i, j]
                for i in range(m):
                    for j in range(m):
                        Quum[i, j] += s1m[k] * fuum[node, k, i, j]
                    for j in range(n):
                        Quxm[i, j] += s1m[k] * fuxm[node, k, i, j]
        for i in range(m):
            for j in range(m):
                cholm[i, j] = Quum[i, j]
            cholm[i, i] += lam_c
        if _cholesky(cholm, m) >= 0:
            return S, s_out, sc, kff, Kfb, ec1, ec2, node
        for i in range(m):
            rhsm[i] = Qum[i]
        _chol_solve(cholm, rhsm, m)
        for i in range(m):
            kffm[node, i] = -rhsm[i]
        for j in range(n):
            for i in range(m):
                rhsm[i] = Quxm[i, j]
            _chol_solve(cholm, rhsm, m)
            for i in range(m):
                Kfbm[node, i, j] = -rhsm[i]
        # value recursion: S = Qxx + Qux^T K (symmetrized), s = Qx + Qux^T kff
        for i in range(n):
            for j in range(n):
                acc = Qxxm[i, j]
                for k in range(m):
                    acc += Quxm[k, i] * Kfbm[node, k, j]
                Sm[node, i, j] = acc
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.5 * (Sm[node, i, j] + Sm[node, j, i])
                Sm[node, i, j] = acc
                Sm[node, j, i] = acc
            acc = Qxm[i]
            for k in range(m):
                acc += Quxm[k, i] * kffm[node, k]
            sm[node, i] = acc
        sck = scm[node + 1]
        acc = 0.0
        for i in range(m):
            acc += kffm[node, i] * Qum[i]
        sck += 0.5 * acc
        ec1 += acc
        acc = 0.0
        for i in range(m):
            for j in range(m):
                acc += kffm[node, i] * Quum[i, j] * kffm[node, j]
            acc += lam_c * kffm[node, i] * kffm[node, i]
        ec2 += acc
        if defects:
            for i in range(n):
                acc = s1m[i]
                for j in range(n):
                    acc += 0.5 * S1m[i, j] * dm[node, j]
                sck += acc * dm[node, i]
        scm[node] = sck
    return S, s_out, sc, kff, Kfb, ec1, ec2, -1
