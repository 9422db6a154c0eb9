"""Small closed-form linear algebra on 2x2 matrices and planar vectors.

Matrices are plain ``numpy`` arrays of shape ``(2, 2)``; vectors have shape
``(2,)``.  All norms are Frobenius norms.
"""
from __future__ import annotations

import math

import numpy as np

# 90 degree counterclockwise rotation; J @ v is the ccw normal of v.
J = np.array([[0.0, -1.0], [1.0, 0.0]])
IDENTITY = np.eye(2)

DET_TOL = 1e-12
SYM_TOL = 1e-12


def as_mat2(M) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def as_vec2(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (2,):
        raise ValueError(f"expected a planar vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector entries must be finite")
    return a


def as_unit(v) -> np.ndarray:
    a = as_vec2(v)
    n = math.hypot(a[0], a[1])
    if n == 0.0:
        raise ValueError("zero vector has no direction")
    return a / n


def as_sym(M) -> np.ndarray:
    """Validate that ``M`` is symmetric and return it with exact symmetry."""
    A = as_mat2(M)
    if abs(A[0, 1] - A[1, 0]) > SYM_TOL * max(1.0, np.linalg.norm(A)):
        raise ValueError("matrix is not symmetric")
    return sym(A)


def is_symmetric(M, tol: float = SYM_TOL) -> bool:
    A = np.asarray(M, dtype=float)
    return abs(A[0, 1] - A[1, 0]) <= tol * max(1.0, float(np.linalg.norm(A)))


def unit(angle: float) -> np.ndarray:
    """Unit vector at ``angle`` radians."""
    return np.array([math.cos(angle), math.sin(angle)])


def perp(v) -> np.ndarray:
    """Counterclockwise quarter turn of ``v``."""
    return np.array([-v[1], v[0]])


def sym(M) -> np.ndarray:
    A = as_mat2(M)
    return 0.5 * (A + A.T)


def skew_part(M) -> float:
    """Coefficient w with ``M - M.T == 2 w J``."""
    A = np.asarray(M, dtype=float)
    return 0.5 * (A[1, 0] - A[0, 1])


def rotation(phi: float) -> np.ndarray:
    if not math.isfinite(phi):
        raise ValueError("rotation angle must be finite")
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]])


def rotation_angle(Q) -> float:
    return math.atan2(Q[1, 0], Q[0, 0])


def outer(a, b) -> np.ndarray:
    return np.outer(a, b)


def sym_outer(a, n) -> np.ndarray:
    """Symmetrized tensor product ``(a n^T + n a^T) / 2``."""
    return 0.5 * (np.outer(a, n) + np.outer(n, a))


def fro(M) -> float:
    return float(np.linalg.norm(M))


def _canonical_direction(n: np.ndarray) -> np.ndarray:
    if n[0] < 0 or (n[0] == 0 and n[1] < 0):
        return -n
    return n


def sym_rank_one_decompose(E):
    """Write a symmetric ``E`` as ``a (.) n``; return ``(a, n)`` or ``None``.

    A symmetric 2x2 matrix is a symmetrized rank-one product exactly when
    ``det E <= 0``.  Null directions ``t`` of the quadratic form (``t.E t = 0``)
    are the interface tangents; the normal is ``n = perp(t)``.  Of the two
    admissible normals the one with the smaller angle in ``[0, pi)`` is
    returned, oriented with nonnegative first component.
    """
    E = as_sym(E)
    scale = max(1.0, fro(E) ** 2)
    if np.linalg.det(E) > DET_TOL * scale:
        return None
    if fro(E) == 0.0:
        return np.zeros(2), np.array([1.0, 0.0])
    normals = _null_normals(E)
    n = min(normals, key=lambda v: math.atan2(v[1], v[0]) % math.pi)
    n = _canonical_direction(n)
    # E n = (a + (a.n) n) / 2 and n.E n = a.n
    an = float(n @ E @ n)
    a = 2.0 * (E @ n) - an * n
    return a, n


def _null_normals(E: np.ndarray) -> list[np.ndarray]:
    """Normals ``perp(t)`` for unit ``t`` with ``t.E t = 0`` (det E <= 0)."""
    p = 0.5 * (E[0, 0] + E[1, 1])
    q = 0.5 * (E[0, 0] - E[1, 1])
    r = E[0, 1]
    rad = math.hypot(q, r)
    # t(theta).E t(theta) = p + rad cos(2 theta - psi)
    if rad == 0.0:
        return [np.array([1.0, 0.0])]
    psi = math.atan2(r, q)
    ratio = max(-1.0, min(1.0, -p / rad))
    delta = math.acos(ratio)
    out = []
    for sgn in (1.0, -1.0):
        theta = 0.5 * (psi + sgn * delta)
        out.append(_canonical_direction(perp(unit(theta))))
    if abs(delta) < 1e-15 or abs(delta - math.pi) < 1e-15:
        out = out[:1]
    return out


def optimal_rotation(F, U) -> np.ndarray:
    """Rotation ``Q`` minimising ``|F - Q U|``."""
    M = np.asarray(F) @ np.asarray(U).T
    phi = math.atan2(M[1, 0] - M[0, 1], M[0, 0] + M[1, 1])
    return rotation(phi)


def dist_to_rotated_well(F, U) -> float:
    """Frobenius distance from ``F`` to the orbit ``SO(2) U``."""
    F = as_mat2(F)
    U = as_mat2(U)
    return fro(F - optimal_rotation(F, U) @ U)


def dist_to_rotated_well_batch(F: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Vectorised :func:`dist_to_rotated_well` over a stack ``F[..., 2, 2]``."""
    M = F @ U.T
    phi = np.arctan2(M[..., 1, 0] - M[..., 0, 1], M[..., 0, 0] + M[..., 1, 1])
    c, s = np.cos(phi), np.sin(phi)
    QU = np.empty_like(F)
    QU[..., 0, 0] = c * U[0, 0] - s * U[1, 0]
    QU[..., 0, 1] = c * U[0, 1] - s * U[1, 1]
    QU[..., 1, 0] = s * U[0, 0] + c * U[1, 0]
    QU[..., 1, 1] = s * U[0, 1] + c * U[1, 1]
    D = F - QU
    return np.sqrt(np.sum(D * D, axis=(-2, -1)))


def dist_to_well_set(G, W) -> float:
    """Distance of ``G`` to the wells of ``W`` (see :class:`WellSet`)."""
    G = as_mat2(G)
    if W.mode == "linear":
        if not is_symmetric(G):
            raise ValueError("mode mismatch")
        return min(fro(G - e) for e in W.linear)
    return min(dist_to_rotated_well(G, U) for U in W.wells())


def dist2_to_well_set_batch(G: np.ndarray, W, symmetrize: bool = True) -> np.ndarray:
    """Squared well distance for a stack of matrices ``G[..., 2, 2]``.

    In linear mode the symmetric part of ``G`` is used when ``symmetrize`` is
    set; this is the usual path for displacement gradients.
    """
    G = np.asarray(G, dtype=float)
    if W.mode == "linear":
        S = 0.5 * (G + np.swapaxes(G, -1, -2)) if symmetrize else G
        best = None
        for e in W.linear:
            D = S - e
            d2 = np.sum(D * D, axis=(-2, -1))
            best = d2 if best is None else np.minimum(best, d2)
        return best
    best = None
    for U in W.wells():
        d = dist_to_rotated_well_batch(G, U)
        best = d * d if best is None else np.minimum(best, d * d)
    return best
