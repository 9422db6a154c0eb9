"""Self-similar star block: an exactly stress-free nucleus in a triangle.

Each ring between an admissible equilateral triangle and a concentric copy
scaled by ``rho`` consists of nine cells: a flat isosceles triangle along
every outer edge (15 degree base angles), a quadrilateral at every corner and
a triangle on every inner edge.  The strains are fixed variants; skew parts and
translations come from a linear continuity solve.  The inner trace of a ring
is an infinitesimal rotation about the centre, so rings nest exactly and the
core carries a strain-free rotation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsqr

from ..algebra2d import J, rotation, unit
from ..wells import WellSet, hex_rhombic_wells
from .complex import CellComplex, PAField, check_continuity

SOLVE_TOL = 1e-9
REFLECT = np.diag([1.0, -1.0])


def _ray_intersection(p, a_deg, q, b_deg):
    M = np.column_stack([unit(math.radians(a_deg)), -unit(math.radians(b_deg))])
    s, _ = np.linalg.solve(M, np.asarray(q) - np.asarray(p))
    return np.asarray(p) + s * unit(math.radians(a_deg))


@dataclass(frozen=True)
class RingGeometry:
    """Canonical ring of the unit triangle ``0, d(15), d(75)``."""

    V: np.ndarray  # outer corners
    P: np.ndarray  # P[k] sits over edge V[k] V[k+1]
    Z: np.ndarray  # inner corners, Z[k] = c + rho (V[k] - c)
    center: np.ndarray
    rho: float
    cells: tuple  # local vertex indices into concat(V, P, Z)
    labels: tuple


@lru_cache(maxsize=1)
def canonical_ring() -> RingGeometry:
    V = np.array([[0.0, 0.0], unit(math.radians(15)), unit(math.radians(75))])
    c = V.mean(axis=0)
    Q = rotation(2 * math.pi / 3)
    P0 = _ray_intersection(V[0], 30.0, V[1], 180.0)
    P = np.array([c + np.linalg.matrix_power(Q, k) @ (P0 - c) for k in range(3)])
    Z0 = _ray_intersection(P[0], 120.0, P[2], 330.0)
    rho = float(np.linalg.norm(Z0 - c) / np.linalg.norm(V[0] - c))
    Z = c + rho * (V - c)
    if np.linalg.norm(Z[0] - Z0) > 1e-12:
        raise RuntimeError("inner corner is off the bisector")
    # indices: V -> 0..2, P -> 3..5, Z -> 6..8
    cells, labels = [], []
    for k in range(3):
        k1, km = (k + 1) % 3, (k - 1) % 3
        cells.append((k, k1, 3 + k))  # flat edge triangle
        labels.append(1 + k)
        cells.append((k, 3 + k, 6 + k, 3 + km))  # corner quadrilateral
        labels.append(1 + (k + 1) % 3)
        cells.append((3 + k, 6 + k1, 6 + k))  # inner triangle
        labels.append(1 + k)
    return RingGeometry(V, P, Z, c, rho, tuple(cells), tuple(labels))


def scale_ratio() -> float:
    """Self-similar scale ratio ``rho`` of the canonical ring."""
    return canonical_ring().rho


# symmetries mapping the canonical triangle to the four admissible placements
_PLACEMENTS = {
    "upright": np.eye(2),
    "inverted": -np.eye(2),
    "mirrored": REFLECT,
    "mirrored_inverted": -REFLECT,
}


def _classify_triangle(T: np.ndarray, tol: float = 1e-8):
    """Return ``(placement, side, start_index)`` for a ccw triangle."""
    T = np.asarray(T, dtype=float)
    d = np.roll(T, -1, axis=0) - T
    L = np.linalg.norm(d, axis=1)
    if np.any(L < 1e-14) or np.max(np.abs(L - L.mean())) > 1e-8 * L.mean():
        raise ValueError("incompatible orientation: triangle is not equilateral")
    cr = d[0, 0] * d[1, 1] - d[0, 1] * d[1, 0]
    if cr <= 0:
        raise ValueError("triangle vertices must be counterclockwise")
    ang = np.degrees(np.arctan2(d[:, 1], d[:, 0])) % 360.0
    for name, G in _PLACEMENTS.items():
        canon = np.array([15.0, 135.0, 255.0])
        if np.linalg.det(G) < 0:
            # reflections reverse orientation: walk the canonical edges backwards
            dirs = [(-v) for v in (unit(math.radians(a)) for a in canon[::-1])]
        else:
            dirs = [unit(math.radians(a)) for a in canon]
        target = [G @ v for v in dirs]
        tang = np.degrees([math.atan2(v[1], v[0]) for v in target]) % 360.0
        for s in range(3):
            diff = np.abs(((ang - np.roll(tang, -s)) + 180.0) % 360.0 - 180.0)
            if np.all(diff < math.degrees(tol) + 1e-9):
                return name, float(L.mean()), s
    raise ValueError("incompatible orientation")


def orientation_search(side: float = 1.0):
    """Try equilateral triangles with first edge at 0, 15, 30, 45 degrees
    (mod 60) and record which admit the ring construction."""
    out = {}
    for base in (0.0, 15.0, 30.0, 45.0):
        a = math.radians(base)
        T = np.array([[0.0, 0.0], side * unit(a), side * unit(a + math.pi / 3)])
        try:
            star_block(T, depth=1)
            out[base] = True
        except ValueError:
            out[base] = False
    return out


def _label_map(G) -> dict:
    """Well index after conjugating strains by the placement symmetry."""
    W = hex_rhombic_wells()
    out = {0: 0}
    for j, e in enumerate(W.linear, start=1):
        g = G @ e @ G.T
        out[j] = 1 + int(np.argmin([np.linalg.norm(g - f) for f in W.linear]))
    return out


def nested_complex(depth: int):
    """Vertices (relative to the triangle centre), cells and labels of
    ``depth`` canonical rings plus the core."""
    R = canonical_ring()
    base = np.concatenate([R.V, R.P, R.Z]) - R.center
    verts, cells, labels = [], [], []
    # ring k shares its outer corners with the inner corners of ring k - 1
    for k in range(depth):
        local = R.rho ** k * base
        if k == 0:
            idx = list(range(9))
            verts.extend(local)
        else:
            prev_inner = list(range(len(verts) - 3, len(verts)))
            new = list(range(len(verts), len(verts) + 6))
            verts.extend(local[3:])
            idx = prev_inner + new
        for cell, lab in zip(R.cells, R.labels):
            cells.append(tuple(idx[i] for i in cell))
            labels.append(lab)
    n = len(verts)
    cells.append((n - 3, n - 2, n - 1))  # core
    labels.append(0)
    return np.array(verts), cells, labels


def solve_skew_translation(cx: CellComplex, labels, W: WellSet, boundary_zero=True):
    """Least-squares continuity solve for ``A_c = e_label + w_c J`` and ``b_c``.

    Label 0 is the zero strain.  Every edge contributes trace agreement at both
    endpoints; rows are divided by the edge length so that tiny inner rings
    stay well conditioned.  Returns ``(A, b, residual)`` for ``u = A x + b`` with the residual in
    displacement units.
    """
    E = [np.zeros((2, 2))] + [np.asarray(e) for e in W.linear]
    V = cx.vertices
    # each cell map is written about its centroid, u = A (x - x_c) + t_c, so
    # the skew and translation columns stay independent for tiny cells
    xc = cx.centroids()
    # translations are scaled by the cell diameter so all columns are O(1)
    sc = np.array([np.max(np.linalg.norm(V[c] - xc[k], axis=1)) for k, c in enumerate(cx.cells)])
    rows, cols, vals, rhs, lens = [], [], [], [], []

    def add(terms, i, j):
        L = float(np.linalg.norm(V[j] - V[i]))
        for v in (i, j):
            r = len(rhs)
            known = np.zeros(2)
            for ci, sign in terms:
                p = V[v] - xc[ci]
                Jp = J @ p
                for comp in (0, 1):
                    rows.extend([r + comp, r + comp])
                    cols.extend([3 * ci, 3 * ci + 1 + comp])
                    vals.extend([sign * Jp[comp] / L, sign * sc[ci] / L])
                known += sign * (E[labels[ci]] @ p)
            rhs.extend(-known / L)
            lens.extend([L, L])

    ij, ca, cb = cx.interior_edges()
    for (i, j), a, b in zip(ij, ca, cb):
        add([(a, 1.0), (b, -1.0)], i, j)
    if boundary_zero:
        bij, bc = cx.boundary_edges()
        for (i, j), a in zip(bij, bc):
            add([(a, 1.0)], i, j)
    nr = len(rhs)
    M = sp.csr_matrix((vals, (rows, cols)), shape=(nr, 3 * cx.n_cells))
    rhs = np.array(rhs)
    if 3 * cx.n_cells <= 3000:
        # dense least squares (SVD based) avoids squaring the condition number
        x = np.linalg.lstsq(M.toarray(), rhs, rcond=None)[0]
    else:
        x = lsqr(M, rhs, atol=1e-15, btol=1e-15, iter_lim=50000)[0]
    res = float(np.max(np.abs(M @ x - rhs) * np.array(lens))) if nr else 0.0
    w = x[0::3]
    A = np.array([E[l] for l in labels]) + w[:, None, None] * J
    b = sc[:, None] * np.stack([x[1::3], x[2::3]], axis=1) - np.einsum("nij,nj->ni", A, xc)
    return A, b, res


def star_block(T, depth: int = 1, W: WellSet | None = None, solve: bool = True) -> PAField:
    """Star microstructure with ``depth`` rings in the triangle ``T``.

    ``T`` is a counterclockwise equilateral triangle whose edges are
    austenite-compatible (edge directions 15/75/135 or 45/105/165 degrees).
    The displacement vanishes on the boundary of ``T``.
    """
    if W is None:
        W = hex_rhombic_wells()
    if W.mode != "linear":
        raise ValueError("mode mismatch")
    if int(depth) != depth or depth < 1:
        raise ValueError("depth must be an integer >= 1")
    depth = int(depth)
    R = canonical_ring()
    if R.rho ** depth < 1e-12:
        raise ValueError("depth too large for double precision geometry")
    T = np.asarray(T, dtype=float).reshape(3, 2)
    placement, side, _ = _classify_triangle(T)
    G = _PLACEMENTS[placement]
    verts, cells, labels = nested_complex(depth)
    # solve in coordinates centred at the middle of T: the nested rings then
    # keep full relative precision and the gradients come out exact
    cT = T.mean(axis=0)
    X = side * verts @ G.T
    if np.linalg.det(G) < 0:
        cells = [tuple(reversed(c)) for c in cells]
    lm = _label_map(G)
    labels = [lm[l] for l in labels]
    A, b, res = solve_skew_translation(CellComplex(X, cells), labels, W)
    if res > SOLVE_TOL * max(1.0, side):
        raise ValueError(f"singular compatibility system: residual {res:.3e}")
    cx = CellComplex(cT + X, cells)
    b = b - A @ cT
    f = PAField(cx, A, b, "displacement",
                {"depth": depth, "rho": R.rho, "placement": placement, "side": side,
                 "labels": labels, "solve_residual": res})
    return f


def star_reference_energies(max_depth: int = 12):
    """Elastic and surface energies of the unit-side block for depths
    ``1..max_depth`` (elastic = twice the core area)."""
    from .complex import exact_energy

    W = hex_rhombic_wells()
    T = np.array([[0.0, 0.0], unit(math.radians(15)), unit(math.radians(75))])
    out = []
    for N in range(1, max_depth + 1):
        out.append(exact_energy(star_block(T, N, W), W))
    return out


def edge_gradient(tangent_deg: float, W: WellSet | None = None) -> np.ndarray:
    """Gradient ``e_j + w J`` of the unique variant cell with zero trace
    along an austenite-compatible tangent."""
    if W is None:
        W = hex_rhombic_wells()
    t = unit(math.radians(tangent_deg))
    for e in W.linear:
        if abs(t @ e @ t) < 1e-12:
            w = -float((J @ t) @ (e @ t))
            return e + w * J
    raise ValueError("incompatible orientation")


__all__ = [
    "RingGeometry", "canonical_ring", "scale_ratio", "orientation_search",
    "nested_complex", "solve_skew_translation", "star_block", "star_reference_energies",
    "edge_gradient", "check_continuity",
]
