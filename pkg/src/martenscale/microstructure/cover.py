"""Greedy dyadic covering of a domain by admissible star triangles.

Lattice triangles of side ``2^-l`` (edges along 15, 75 and 135 degrees) are
placed level by level; whatever is left after level ``m`` is filled with zero
displacement.  All star blocks have zero trace, and the flat edge cells of two
touching triangles carry the same gradient, so the only interfaces beyond the
blocks' own are those between covered triangles and the zero filling.  The
energy is therefore assembled exactly from per-level counts, a reference
block, and the exposed interface length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..algebra2d import unit
from ..geometry import Polygon
from ..wells import WellSet, hex_rhombic_wells
from .complex import CellComplex, EnergyBreakdown, PAField, merge_fields
from .star import canonical_ring, edge_gradient, star_block

A_DIR = unit(math.radians(15.0))
B_DIR = unit(math.radians(75.0))
BASIS = np.column_stack([A_DIR, B_DIR])
BASIS_INV = np.linalg.inv(BASIS)
TRI_AREA = math.sqrt(3.0) / 4.0
OFF = 1 << 29  # lattice indices live in 30-bit fields
MAX_STAR_DEPTH = 12


def c_f(lip: float) -> float:
    """Covering constant ``10 Lip + 10``."""
    return 10.0 * lip + 10.0


def count_bound(level: int, lip: float) -> float:
    return (20.0 * c_f(lip) + 20.0) * 2.0 ** level


def _encode(kind, i, j):
    i = np.asarray(i, dtype=np.int64) + OFF
    j = np.asarray(j, dtype=np.int64) + OFF
    return ((i << 30) | j) << 1 | np.asarray(kind, dtype=np.int64)


def _decode(key):
    kind = (key & 1).astype(np.int64)
    rest = key >> 1
    j = (rest & ((1 << 30) - 1)) - OFF
    i = (rest >> 30) - OFF
    return kind, i, j


def triangle_vertices(kind, i, j, s) -> np.ndarray:
    """Vertices ``(n, 3, 2)``: upright ``(i,j),(i+1,j),(i,j+1)``; inverted
    ``(i+1,j),(i+1,j+1),(i,j+1)``."""
    kind = np.asarray(kind)
    I = np.stack([np.where(kind == 0, i, i + 1), i + 1, i], axis=1).astype(float)
    Jm = np.stack([j, np.where(kind == 0, j, j + 1), j + 1], axis=1).astype(float)
    return s * (I[..., None] * A_DIR + Jm[..., None] * B_DIR)


def _children(kind, i, j):
    up = kind == 0
    ck, ci, cj = [], [], []
    # upright parent
    for k, di, dj in ((0, 0, 0), (0, 1, 0), (0, 0, 1), (1, 0, 0)):
        ck.append(np.full(int(up.sum()), k)); ci.append(2 * i[up] + di); cj.append(2 * j[up] + dj)
    dn = ~up
    for k, di, dj in ((1, 1, 0), (1, 0, 1), (1, 1, 1), (0, 1, 1)):
        ck.append(np.full(int(dn.sum()), k)); ci.append(2 * i[dn] + di); cj.append(2 * j[dn] + dj)
    return np.concatenate(ck), np.concatenate(ci), np.concatenate(cj)


def _neighbors(kind, i, j):
    """Three edge neighbours (same level) with the shared edge endpoints' order."""
    up = kind == 0
    nk = np.where(up, 1, 0)
    out = []
    for e in range(3):
        if e == 0:
            ni, nj = np.where(up, i, i + 1), np.where(up, j - 1, j)
        elif e == 1:
            ni, nj = i, np.where(up, j, j + 1)
        else:
            ni, nj = np.where(up, i - 1, i), j
        out.append((nk, ni, nj))
    return out


def _in_closed(poly: Polygon, pts, scale: float) -> np.ndarray:
    inside = poly.contains(pts)
    near = poly.distance_to_boundary(pts) <= 1e-12 * scale
    return inside | near


@dataclass
class CoverPlan:
    """Greedy placement up to ``max_level`` (independent of the final depth)."""

    domain: Polygon
    max_level: int
    shrink: float
    lip: float
    placed: list = field(default_factory=list)  # keys per level
    frontier: list = field(default_factory=list)  # uncovered keys per level
    interface_edges: list = field(default_factory=list)  # count per level

    @property
    def counts(self) -> list[int]:
        return [len(p) for p in self.placed]

    def covered_area(self, m: int) -> float:
        return sum(len(self.placed[l]) * TRI_AREA * 4.0 ** -l for l in range(m + 1))

    def interface_length(self, m: int) -> float:
        return self.interface_edges[m] * 2.0 ** -m

    def count_bound_ok(self, m: int | None = None) -> bool:
        m = self.max_level if m is None else m
        return all(self.counts[l] <= count_bound(l, self.lip) for l in range(m + 1))


def plan_cover(domain: Polygon, max_level: int, shrink: float = 0.0, lip: float | None = None) -> CoverPlan:
    """Greedy dyadic placement.

    At level ``l`` every lattice triangle of side ``2^-l`` inside
    ``(1 - shrink 2^-l) domain`` that is not yet covered is placed.  With
    ``shrink = 0`` the triangles fill the domain itself (the maximal greedy
    cover); ``shrink = c_f(lip)`` reproduces the shrunken domains of the
    covering argument.
    """
    if not domain.is_star_shaped_about((0.0, 0.0)):
        raise ValueError("domain must be star-shaped about the origin")
    if lip is None:
        lip = domain.radial_lipschitz()
    scale = float(np.max(np.abs(domain.vertices)))
    plan = CoverPlan(domain, int(max_level), float(shrink), float(lip))
    # level-0 candidates cover the bounding box
    lo, hi = domain.vertices.min(axis=0), domain.vertices.max(axis=0)
    corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]])
    ij = corners @ BASIS_INV.T
    i0, j0 = np.floor(ij.min(axis=0)).astype(int) - 2
    i1, j1 = np.ceil(ij.max(axis=0)).astype(int) + 2
    I, Jg = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    I, Jg = I.ravel(), Jg.ravel()
    kind = np.concatenate([np.zeros(len(I), int), np.ones(len(I), int)])
    ci, cj = np.concatenate([I, I]), np.concatenate([Jg, Jg])
    for level in range(plan.max_level + 1):
        s = 2.0 ** -level
        if level > 0:
            kind, ci, cj = _children(kind, ci, cj)
        tv = triangle_vertices(kind, ci, cj, s)
        cen = tv.mean(axis=1)
        # drop candidates whose closure misses the domain
        keep = domain.contains(cen) | (domain.distance_to_boundary(cen) < s / math.sqrt(3.0) * (1 + 1e-9))
        kind, ci, cj, tv = kind[keep], ci[keep], cj[keep], tv[keep]
        fac = 1.0 - shrink * s
        if fac > 0:
            ok = _in_closed(domain, tv.reshape(-1, 2) / fac, scale).reshape(-1, 3).all(axis=1)
            if ok.any() and not _is_convex(domain):
                ok &= ~_polygon_vertex_inside(domain.vertices * fac, tv)
        else:
            ok = np.zeros(len(kind), dtype=bool)
        plan.placed.append(np.sort(_encode(kind[ok], ci[ok], cj[ok])))
        kind, ci, cj = kind[~ok], ci[~ok], cj[~ok]
        fr = np.sort(_encode(kind, ci, cj))
        plan.frontier.append(fr)
        plan.interface_edges.append(_count_interface(domain, kind, ci, cj, fr, s, scale))
    return plan


def _is_convex(poly: Polygon) -> bool:
    V = poly.vertices
    d = np.roll(V, -1, axis=0) - V
    cr = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
    return bool(np.all(cr >= -1e-14))


def _polygon_vertex_inside(V, tv) -> np.ndarray:
    """Does any polygon vertex lie strictly inside each triangle?"""
    hit = np.zeros(len(tv), dtype=bool)
    for p in V:
        inside = np.ones(len(tv), dtype=bool)
        for m in range(3):
            a, b = tv[:, m], tv[:, (m + 1) % 3]
            cr = (b[:, 0] - a[:, 0]) * (p[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (p[0] - a[:, 0])
            inside &= cr > 1e-14
        hit |= inside
    return hit


def _count_interface(domain, kind, ci, cj, frontier_sorted, s, scale) -> int:
    """Edges between uncovered triangles and covered ones, inside the domain."""
    if len(kind) == 0:
        return 0
    total = 0
    tv = triangle_vertices(kind, ci, cj, s)
    for e, (nk, ni, nj) in enumerate(_neighbors(kind, ci, cj)):
        key = _encode(nk, ni, nj)
        pos = np.searchsorted(frontier_sorted, key)
        pos = np.minimum(pos, len(frontier_sorted) - 1)
        in_front = frontier_sorted[pos] == key
        # edge e of an upright joins vertices (e, e+1); same for inverted
        mid = 0.5 * (tv[:, e] + tv[:, (e + 1) % 3])
        inside = domain.contains(mid) & (domain.distance_to_boundary(mid) > 1e-12 * scale)
        total += int(np.sum(~in_front & inside))
    return total


_STAR_TABLES: dict = {}


def star_energy_table(W: WellSet | None = None) -> np.ndarray:
    """Unit-side star energies ``[elastic, surface]`` for depths ``1..MAX``.

    Depths 1 and 2 are evaluated exactly; deeper surfaces follow the exact
    geometric law of the rings (checked against depth 3), elastic energies are
    twice the core area.
    """
    from .complex import exact_energy

    W = W or hex_rhombic_wells()
    key = tuple(np.round(np.concatenate([e.ravel() for e in W.linear]), 14))
    if key not in _STAR_TABLES:
        T = np.array([[0.0, 0.0], A_DIR, B_DIR])
        S = [exact_energy(star_block(T, N, W), W).surface for N in (1, 2, 3)]
        rho = canonical_ring().rho
        d1 = S[1] - S[0]
        if abs((S[2] - S[1]) - rho * d1) > 1e-9:
            raise RuntimeError("star surfaces are not geometric")
        tab = []
        for N in range(1, MAX_STAR_DEPTH + 1):
            surf = S[0] + d1 * (1.0 - rho ** (N - 1)) / (1.0 - rho)
            tab.append((2.0 * rho ** (2 * N) * TRI_AREA, surf))
        _STAR_TABLES[key] = np.array(tab)
    return _STAR_TABLES[key]


def internal_depth(eps: float, side: float) -> int:
    """Smallest star depth whose core elastic energy is at most ``eps * side``."""
    rho = canonical_ring().rho
    for N in range(1, MAX_STAR_DEPTH + 1):
        if 2.0 * rho ** (2 * N) * TRI_AREA * side * side <= eps * side:
            return N
    return MAX_STAR_DEPTH


def edge_jump_norm(W: WellSet | None = None) -> float:
    """Frobenius norm of a boundary cell gradient (the same for every edge)."""
    return float(np.linalg.norm(edge_gradient(15.0, W)))


def cover_energy(plan: CoverPlan, m: int, eps: float, W: WellSet | None = None) -> EnergyBreakdown:
    """Exact energy of the cover truncated at level ``m``."""
    if m > plan.max_level or m < 0:
        raise ValueError("level outside the plan")
    tab = star_energy_table(W)
    el = sur = 0.0
    for l in range(m + 1):
        n = len(plan.placed[l])
        if n == 0:
            continue
        s = 2.0 ** -l
        N = internal_depth(eps, s)
        el += n * tab[N - 1, 0] * s * s
        sur += n * tab[N - 1, 1] * s
    el += 2.0 * max(0.0, plan.domain.area - plan.covered_area(m))
    sur += edge_jump_norm(W) * plan.interface_length(m)
    return EnergyBreakdown(el, sur)


def depth_candidates(eps: float) -> range:
    return range(0, math.ceil(math.log2(1.0 / eps)) + 3)


def optimal_depth(eps: float, plan: CoverPlan | None = None, W: WellSet | None = None) -> int:
    """Depth ``m`` minimising the measured total over ``0..ceil(log2 1/eps)+2``;
    ties go to ``ceil(log2 1/eps)``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    cand = depth_candidates(eps)
    if plan is None:
        from ..geometry import unit_square
        plan = plan_cover(unit_square(), cand[-1], lip=1.0)
    if plan.max_level < cand[-1]:
        raise ValueError("plan is too shallow for this eps")
    tot = np.array([cover_energy(plan, m, eps, W).total(eps) for m in cand])
    best = np.flatnonzero(tot <= tot.min() * (1 + 1e-12))
    default = math.ceil(math.log2(1.0 / eps))
    return default if default in best else int(best[0])


def _clip_convex(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon by a convex ccw polygon."""
    out = subject
    for k in range(len(clipper)):
        a, b = clipper[k], clipper[(k + 1) % len(clipper)]
        if len(out) == 0:
            break
        inp, out = out, []
        e = b - a

        def side(p):
            return e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0])

        for idx in range(len(inp)):
            p, q = inp[idx], inp[(idx + 1) % len(inp)]
            sp_, sq = side(p), side(q)
            if sp_ >= 0:
                out.append(p)
            if (sp_ >= 0) != (sq >= 0):
                t = sp_ / (sp_ - sq)
                out.append(p + t * (q - p))
        out = np.array(out) if out else np.zeros((0, 2))
    return np.asarray(out)


def _dedupe_polygon(P: np.ndarray, tol: float) -> np.ndarray:
    keep = []
    for p in P:
        if not keep or np.linalg.norm(p - keep[-1]) > tol:
            keep.append(p)
    if len(keep) > 1 and np.linalg.norm(keep[0] - keep[-1]) <= tol:
        keep.pop()
    return np.array(keep)


def materialize_cover(plan: CoverPlan, m: int, eps: float, W: WellSet | None = None) -> PAField:
    """Explicit field (stars plus zero filling); intended for small ``m``."""
    if not _is_convex(plan.domain):
        raise NotImplementedError("explicit covers are built for convex domains")
    W = W or hex_rhombic_wells()
    parts = []
    ref = {}
    for l in range(m + 1):
        s = 2.0 ** -l
        N = internal_depth(eps, s)
        kind, i, j = _decode(plan.placed[l])
        tv = triangle_vertices(kind, i, j, s)
        for k in (0, 1):
            if (k, l) not in ref:
                T0 = triangle_vertices(np.array([k]), np.array([0]), np.array([0]), s)[0]
                ref[(k, l)] = (T0, star_block(T0, N, W))
        for t, k in zip(tv, kind):
            T0, f0 = ref[(int(k), l)]
            shift = t[0] - T0[0]
            cx = CellComplex(f0.complex.vertices + shift, [c.copy() for c in f0.complex.cells])
            parts.append(PAField(cx, f0.A.copy(), f0.b - f0.A @ shift, "displacement"))
    s = 2.0 ** -m
    kind, i, j = _decode(plan.frontier[m])
    tol = 1e-12 * max(1.0, float(np.max(np.abs(plan.domain.vertices))))
    for t in triangle_vertices(kind, i, j, s):
        P = _dedupe_polygon(_clip_convex(t, plan.domain.vertices), tol)
        if len(P) >= 3 and abs(_area(P)) > tol * s:
            cx = CellComplex(P, [np.arange(len(P))])
            parts.append(PAField(cx, np.zeros((1, 2, 2)), np.zeros((1, 2)), "displacement"))
    f = merge_fields(parts, tol=1e-11)
    return conform(f)


def cover_values(plan: CoverPlan, m: int, eps: float, pts, W: WellSet | None = None) -> np.ndarray:
    """Values of the covering field at ``pts`` without building the complex.

    Each point is located in the lattice triangle of every level; if that
    triangle is placed, the translated reference star block is evaluated.
    Points in no placed triangle (filling or outside) get zero.
    """
    W = W or hex_rhombic_wells()
    P = np.asarray(pts, dtype=float).reshape(-1, 2)
    out = np.zeros_like(P)
    done = np.zeros(len(P), dtype=bool)
    for l in range(min(m, plan.max_level) + 1):
        keys = plan.placed[l]
        if len(keys) == 0:
            continue
        s = 2.0 ** -l
        c = P @ BASIS_INV.T / s
        i = np.floor(c[:, 0]).astype(np.int64)
        j = np.floor(c[:, 1]).astype(np.int64)
        kind = ((c[:, 0] - i) + (c[:, 1] - j) >= 1.0).astype(np.int64)
        k = _encode(kind, i, j)
        pos = np.clip(np.searchsorted(keys, k), 0, len(keys) - 1)
        hit = (keys[pos] == k) & ~done
        if not hit.any():
            continue
        N = internal_depth(eps, s)
        for kk in (0, 1):
            sel = np.flatnonzero(hit & (kind == kk))
            if len(sel) == 0:
                continue
            T0 = triangle_vertices(np.array([kk]), np.array([0]), np.array([0]), s)[0]
            f0 = star_block(T0, N, W)
            # translate every point into the reference triangle
            tv = triangle_vertices(kind[sel], i[sel], j[sel], s)
            Q = P[sel] - (tv[:, 0] - T0[0])
            idx = f0.locate(Q, tol=1e-9 * s)
            ok = idx >= 0
            out[sel[ok]] = np.einsum("nij,nj->ni", f0.A[idx[ok]], Q[ok]) + f0.b[idx[ok]]
            done[sel[ok]] = True
    return out


def _area(P) -> float:
    x, y = P[:, 0], P[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def conform(f: PAField, tol: float = 1e-11) -> PAField:
    """Insert hanging vertices into the cell edges that contain them."""
    V = f.complex.vertices
    order = np.argsort(V[:, 0])
    xs = V[order, 0]
    cells = []
    for cell in f.complex.cells:
        new = []
        k = len(cell)
        for m in range(k):
            a, b = int(cell[m]), int(cell[(m + 1) % k])
            new.append(a)
            pa, pb = V[a], V[b]
            lo, hi = min(pa[0], pb[0]) - tol, max(pa[0], pb[0]) + tol
            cand = order[np.searchsorted(xs, lo):np.searchsorted(xs, hi, side="right")]
            if len(cand) == 0:
                continue
            d = pb - pa
            L2 = float(d @ d)
            q = V[cand] - pa
            t = (q @ d) / L2
            dist = np.abs(q[:, 0] * d[1] - q[:, 1] * d[0]) / math.sqrt(L2)
            sel = (t > 1e-12) & (t < 1 - 1e-12) & (dist <= tol)
            sel &= (cand != a) & (cand != b)
            if np.any(sel):
                hit = cand[sel]
                new.extend(hit[np.argsort(t[sel])].tolist())
        cells.append(np.array(new, dtype=int))
    return PAField(CellComplex(V, cells), f.A, f.b, f.mode, dict(f.meta))


@dataclass
class CoverResult:
    field: PAField | None
    energy: EnergyBreakdown
    counts: list
    plan: CoverPlan
    level: int


def greedy_cover(domain: Polygon, levels: int, W: WellSet | None = None, eps: float = 1e-2,
                 shrink: float = 0.0, lip: float | None = None, materialize: bool | None = None,
                 plan: CoverPlan | None = None) -> CoverResult:
    """Cover ``domain`` with stars of side ``2^-l``, ``l = 0..levels``, and fill
    the rest with zero displacement."""
    if levels < 0:
        raise ValueError("levels must be nonnegative")
    W = W or hex_rhombic_wells()
    if plan is None or plan.max_level < levels:
        plan = plan_cover(domain, levels, shrink, lip)
    energy = cover_energy(plan, levels, eps, W)
    if materialize is None:
        materialize = levels <= 3
    f = materialize_cover(plan, levels, eps, W) if materialize else None
    return CoverResult(f, energy, plan.counts[: levels + 1], plan, levels)


__all__ = [
    "c_f", "count_bound", "CoverPlan", "plan_cover", "star_energy_table", "internal_depth",
    "edge_jump_norm", "cover_energy", "optimal_depth", "materialize_cover", "conform",
    "CoverResult", "greedy_cover", "triangle_vertices", "cover_values",
]
