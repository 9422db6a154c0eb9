"""Cell complexes, piecewise-affine fields and their exact energies."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..algebra2d import dist2_to_well_set_batch
from ..wells import WellSet

CONTINUITY_TOL = 1e-10


@dataclass
class CellComplex:
    """Conforming polygonal complex: cells are counterclockwise index lists.

    Edges are derived from the cells; an edge shared by two cells is interior,
    an edge used once lies on the boundary.
    """

    vertices: np.ndarray
    cells: list
    _edges: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        self.cells = [np.asarray(c, dtype=int) for c in self.cells]

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def edge_map(self) -> dict:
        """``{(i, j) with i < j: [(cell, local_orientation_sign), ...]}``."""
        if self._edges is None:
            emap: dict = {}
            for ci, cell in enumerate(self.cells):
                k = len(cell)
                for m in range(k):
                    a, b = int(cell[m]), int(cell[(m + 1) % k])
                    key = (a, b) if a < b else (b, a)
                    emap.setdefault(key, []).append(ci)
            bad = [k for k, v in emap.items() if len(v) > 2]
            if bad:
                raise ValueError(f"edge {bad[0]} borders more than two cells")
            self._edges = emap
        return self._edges

    def interior_edges(self):
        """Arrays ``(i, j, cell_a, cell_b)`` for edges shared by two cells."""
        items = [(k, v) for k, v in self.edge_map().items() if len(v) == 2]
        if not items:
            e = np.zeros((0, 2), dtype=int)
            return e, np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        ij = np.array([k for k, _ in items], dtype=int)
        ca = np.array([v[0] for _, v in items], dtype=int)
        cb = np.array([v[1] for _, v in items], dtype=int)
        return ij, ca, cb

    def boundary_edges(self):
        items = [(k, v[0]) for k, v in self.edge_map().items() if len(v) == 1]
        if not items:
            return np.zeros((0, 2), dtype=int), np.zeros(0, dtype=int)
        return np.array([k for k, _ in items], dtype=int), np.array([c for _, c in items], dtype=int)

    def edge_normals(self, ij) -> np.ndarray:
        d = self.vertices[ij[:, 1]] - self.vertices[ij[:, 0]]
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return np.stack([d[:, 1], -d[:, 0]], axis=1)

    def cell_areas(self) -> np.ndarray:
        out = np.empty(self.n_cells)
        for ci, cell in enumerate(self.cells):
            p = self.vertices[cell]
            p = p - p[0]
            x, y = p[:, 0], p[:, 1]
            out[ci] = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        return out

    def validate(self, tol: float = 1e-12) -> None:
        """Counterclockwise convex cells, conforming edges."""
        for ci, cell in enumerate(self.cells):
            p = self.vertices[cell]
            d = np.roll(p, -1, axis=0) - p
            cr = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
            scale = max(tol, float(np.max(np.abs(d))) ** 2)
            if np.any(cr < -1e-9 * scale):
                raise ValueError(f"cell {ci} is not convex and counterclockwise")
        self.edge_map()

    def centroids(self) -> np.ndarray:
        return np.array([self.vertices[c].mean(axis=0) for c in self.cells])

    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


@dataclass(frozen=True)
class EnergyBreakdown:
    elastic: float
    surface: float

    def total(self, eps: float) -> float:
        return self.elastic + eps * self.surface

    def to_dict(self, eps: float | None = None) -> dict:
        d = {"elastic": self.elastic, "surface": self.surface}
        if eps is not None:
            d["eps"] = eps
            d["total"] = self.total(eps)
        return d


@dataclass
class PAField:
    """Continuous piecewise-affine map ``x -> A_c x + b_c`` on each cell."""

    complex: CellComplex
    A: np.ndarray
    b: np.ndarray
    mode: str = "displacement"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float).reshape(-1, 2, 2)
        self.b = np.asarray(self.b, dtype=float).reshape(-1, 2)
        if len(self.A) != self.complex.n_cells or len(self.b) != self.complex.n_cells:
            raise ValueError("one affine map per cell is required")
        if self.mode not in ("displacement", "deformation"):
            raise ValueError("mode must be 'displacement' or 'deformation'")

    def eval_cell(self, ci, x) -> np.ndarray:
        return np.asarray(x) @ self.A[ci].T + self.b[ci]

    def vertex_values(self) -> np.ndarray:
        """Nodal values (continuity makes them cell independent)."""
        out = np.zeros_like(self.complex.vertices)
        for ci, cell in enumerate(self.complex.cells):
            out[cell] = self.eval_cell(ci, self.complex.vertices[cell])
        return out

    def locate(self, pts, tol: float = 1e-12):
        """Cell index per point (``-1`` outside); vectorised over cells."""
        P = np.asarray(pts, dtype=float).reshape(-1, 2)
        idx = np.full(len(P), -1, dtype=int)
        V = self.complex.vertices
        for ci, cell in enumerate(self.complex.cells):
            p = V[cell]
            lo, hi = p.min(axis=0) - tol, p.max(axis=0) + tol
            cand = np.flatnonzero((idx < 0) & np.all((P >= lo) & (P <= hi), axis=1))
            if len(cand) == 0:
                continue
            Q = P[cand]
            inside = np.ones(len(cand), dtype=bool)
            for m in range(len(cell)):
                a, b = p[m], p[(m + 1) % len(cell)]
                e = b - a
                cr = e[0] * (Q[:, 1] - a[1]) - e[1] * (Q[:, 0] - a[0])
                inside &= cr >= -tol * max(1.0, float(np.hypot(*e)))
            idx[cand[inside]] = ci
        return idx

    def __call__(self, pts) -> np.ndarray:
        P = np.asarray(pts, dtype=float).reshape(-1, 2)
        idx = self.locate(P)
        if np.any(idx < 0):
            raise ValueError("point outside the complex")
        return np.einsum("nij,nj->ni", self.A[idx], P) + self.b[idx]

    def rescaled(self, lam: float, center=(0.0, 0.0)) -> "PAField":
        """Spatial dilation by ``lam`` about ``center``; gradients are kept."""
        c = np.asarray(center, dtype=float)
        V = c + lam * (self.complex.vertices - c)
        cx = CellComplex(V, [cell.copy() for cell in self.complex.cells])
        # new map: u'(x) = lam u(c + (x - c)/lam)
        b = lam * (self.b + self.A @ c) - self.A @ c
        return PAField(cx, self.A.copy(), b, self.mode, dict(self.meta))

    def gradients_for_energy(self) -> np.ndarray:
        return self.A

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "vertices": self.complex.vertices.tolist(),
            "cells": [c.tolist() for c in self.complex.cells],
            "A": self.A.reshape(-1, 4).tolist(),
            "b": self.b.tolist(),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict) -> "PAField":
        cx = CellComplex(np.array(doc["vertices"], dtype=float), doc["cells"])
        return cls(cx, np.array(doc["A"], dtype=float).reshape(-1, 2, 2),
                   np.array(doc["b"], dtype=float), doc.get("mode", "displacement"))

    @classmethod
    def from_json(cls, text: str) -> "PAField":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ContinuityReport:
    passed: bool
    max_trace_residual: float
    max_rank_residual: float
    n_interior_edges: int
    worst_edge: tuple | None = None


def check_continuity(f: PAField, tol: float = CONTINUITY_TOL) -> ContinuityReport:
    """Trace agreement at both endpoints of every interior edge and the
    rank-one residual (second singular value) of every gradient jump."""
    cx = f.complex
    ij, ca, cb = cx.interior_edges()
    if len(ij) == 0:
        return ContinuityReport(True, 0.0, 0.0, 0)
    D = f.A[ca] - f.A[cb]
    db = f.b[ca] - f.b[cb]
    tr = np.zeros(len(ij))
    for end in (0, 1):
        p = cx.vertices[ij[:, end]]
        r = np.einsum("nij,nj->ni", D, p) + db
        tr = np.maximum(tr, np.linalg.norm(r, axis=1))
    sv = np.linalg.svd(D, compute_uv=False)[:, 1]
    worst = int(np.argmax(np.maximum(tr, sv)))
    mt, ms = float(tr.max()), float(sv.max())
    return ContinuityReport(
        mt <= tol and ms <= tol, mt, ms, len(ij),
        (int(ij[worst, 0]), int(ij[worst, 1]), int(ca[worst]), int(cb[worst])),
    )


def _check_mode(f: PAField, W: WellSet):
    if (W.mode == "linear") != (f.mode == "displacement"):
        raise ValueError("mode mismatch")


def elastic_per_cell(f: PAField, W: WellSet) -> np.ndarray:
    _check_mode(f, W)
    return f.complex.cell_areas() * dist2_to_well_set_batch(f.A, W, symmetrize=True)


def surface_energy(f: PAField) -> float:
    cx = f.complex
    ij, ca, cb = cx.interior_edges()
    if len(ij) == 0:
        return 0.0
    L = np.linalg.norm(cx.vertices[ij[:, 1]] - cx.vertices[ij[:, 0]], axis=1)
    J = np.linalg.norm(f.A[ca] - f.A[cb], axis=(1, 2))
    return float(np.sum(L * J))


def exact_energy(f: PAField, W: WellSet, eps: float | None = None, check: bool = True,
                 tol: float = CONTINUITY_TOL) -> EnergyBreakdown:
    """Elastic energy (area times squared well distance) and interface
    measure (edge length times Frobenius gradient jump)."""
    _check_mode(f, W)
    if eps is not None and not eps > 0:
        raise ValueError("eps must be positive")
    if check and not check_continuity(f, tol).passed:
        raise ValueError("not an admissible field")
    el = float(np.sum(elastic_per_cell(f, W)))
    return EnergyBreakdown(el, surface_energy(f))


def merge_fields(fields, tol: float = 1e-12) -> PAField:
    """Union of fields on complexes with matching boundary vertices."""
    verts, cells, A, b = [], [], [], []
    for f in fields:
        verts.append(f.complex.vertices)
        A.append(f.A)
        b.append(f.b)
    V = np.concatenate(verts)
    key = np.round(V / tol).astype(np.int64) if tol > 0 else V
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inv = inv.ravel()
    off = 0
    for f in fields:
        for c in f.complex.cells:
            cells.append(inv[c + off])
        off += len(f.complex.vertices)
    # keep vertex order stable by first occurrence
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(len(order))
    cells = [remap[c] for c in cells]
    newV = V[first[order]]
    mode = fields[0].mode
    return PAField(CellComplex(newV, cells), np.concatenate(A), np.concatenate(b), mode)


def energies_to_csv(rows) -> str:
    """``rows``: iterable of ``(eps, EnergyBreakdown)``."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["eps", "elastic", "surface", "total"])
    for eps, e in rows:
        w.writerow([repr(float(eps)), repr(e.elastic), repr(e.surface), repr(e.total(eps))])
    return buf.getvalue()


def energies_from_csv(text: str):
    rd = csv.DictReader(io.StringIO(text))
    return [(float(r["eps"]), EnergyBreakdown(float(r["elastic"]), float(r["surface"]))) for r in rd]


def polygon_area(p) -> float:
    p = np.asarray(p)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


__all__ = [
    "CellComplex", "EnergyBreakdown", "PAField", "ContinuityReport", "check_continuity",
    "elastic_per_cell", "surface_energy", "exact_energy", "merge_fields",
    "energies_to_csv", "energies_from_csv", "polygon_area",
]
