"""Model kind identifiers and parameter-vector packing.

Every dynamics model is described to the compute backends by an integer kind
plus a flat float64 parameter vector, so the same kernel entry points serve
all models in both the NumPy and the compiled backend.
"""

import numpy as np

MODEL_LQ = 0
MODEL_ACROBOT = 1
MODEL_QUADROTOR = 2
MODEL_ARM = 3


def pack_lq(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pack a discrete linear map x' = A x + B u."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, m = B.shape
    if A.shape != (n, n):
        raise ValueError("A must be square and match B's row count")
    return np.concatenate(([float(n), float(m)], A.ravel(), B.ravel()))


def unpack_lq(params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = int(params[0])
    m = int(params[1])
    A = params[2 : 2 + n * n].reshape(n, n)
    B = params[2 + n * n : 2 + n * n + n * m].reshape(n, m)
    return A, B


def pack_acrobot(m1: float, m2: float, l1: float, l2: float, g: float) -> np.ndarray:
    return np.array([m1, m2, l1, l2, g], dtype=float)


def pack_quadrotor(
    mass: float, ixx: float, iyy: float, izz: float, arm: float, kyaw: float, g: float
) -> np.ndarray:
    return np.array([mass, ixx, iyy, izz, arm, kyaw, g], dtype=float)


def pack_arm(masses, lengths, g: float) -> np.ndarray:
    masses = np.asarray(masses, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    if masses.shape != lengths.shape or masses.ndim != 1:
        raise ValueError("masses and lengths must be 1-D and equally long")
    return np.concatenate(([float(len(masses)), g], masses, lengths))


def state_dims(kind: int, params: np.ndarray) -> tuple[int, int]:
    """Return (state dimension, control dimension) for a packed model."""
    if kind == MODEL_LQ:
        return int(params[0]), int(params[1])
    if kind == MODEL_ACROBOT:
        return 4, 1
    if kind == MODEL_QUADROTOR:
        return 12, 4
    if kind == MODEL_ARM:
        links = int(params[0])
        return 2 * links, links
    raise ValueError(f"unknown model kind {kind}")
