"""Grid discretisation and numerical relaxation of the singularly perturbed energies.

Nodal bilinear fields on a uniform grid; gradients live at cell centres.  The
interface term is a Huber-smoothed total variation of the cell gradients.
Linear mode is minimised by majorise-minimise steps (nearest-well assignment
plus a reweighted quadratic solved by warm-started conjugate gradients), which
never increases the energy.  Nonlinear mode uses projected gradient descent
with Armijo backtracking.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .algebra2d import dist2_to_well_set_batch
from .geometry import Polygon
from .microstructure.complex import EnergyBreakdown, PAField
from .microstructure.cover import _clip_convex
from .wells import WellSet

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- grid

@dataclass
class Grid:
    """``nx * ny`` square cells of side ``h`` starting at ``origin``.

    ``weight`` is the covered fraction of each cell (1 inside, 0 outside);
    ``mask`` marks the active cells.
    """

    nx: int
    ny: int
    h: float
    origin: np.ndarray = field(default_factory=lambda: np.zeros(2))
    weight: np.ndarray | None = None

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError("grid needs at least 8 cells per direction")
        if not self.h > 0:
            raise ValueError("h must be positive")
        self.origin = np.asarray(self.origin, dtype=float)
        if self.weight is None:
            self.weight = np.ones((self.nx, self.ny))
        self.weight = np.asarray(self.weight, dtype=float)
        if self.weight.shape != (self.nx, self.ny):
            raise ValueError("mask/grid inconsistency")

    @property
    def mask(self) -> np.ndarray:
        return self.weight > 0

    @property
    def node_shape(self):
        return (self.nx + 1, self.ny + 1)

    def nodes(self) -> np.ndarray:
        x = self.origin[0] + self.h * np.arange(self.nx + 1)
        y = self.origin[1] + self.h * np.arange(self.ny + 1)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def centers(self) -> np.ndarray:
        x = self.origin[0] + self.h * (np.arange(self.nx) + 0.5)
        y = self.origin[1] + self.h * (np.arange(self.ny) + 0.5)
        X, Y = np.meshgrid(x, y, indexing="ij")
        return np.stack([X, Y], axis=-1)

    @classmethod
    def box(cls, x0, y0, x1, y1, n: int = 64) -> "Grid":
        w, hgt = x1 - x0, y1 - y0
        h = max(w, hgt) / n
        return cls(max(8, int(round(w / h))), max(8, int(round(hgt / h))), h, np.array([x0, y0]))

    @classmethod
    def for_domain(cls, domain: Polygon, n: int = 64) -> "Grid":
        """Grid over the bounding box with exact covered fractions."""
        lo, hi = domain.vertices.min(axis=0), domain.vertices.max(axis=0)
        h = float(max(hi - lo)) / n
        nx = max(8, int(math.ceil((hi[0] - lo[0]) / h - 1e-9)))
        ny = max(8, int(math.ceil((hi[1] - lo[1]) / h - 1e-9)))
        g = cls(nx, ny, h, lo.copy())
        C = g.centers().reshape(-1, 2)
        inside = domain.contains(C)
        far = domain.distance_to_boundary(C) > h * 0.7072
        w = np.where(inside, 1.0, 0.0)
        for k in np.flatnonzero(~far):
            c = C[k]
            sq = np.array([c + [-h / 2, -h / 2], c + [h / 2, -h / 2], c + [h / 2, h / 2], c + [-h / 2, h / 2]])
            P = _clip_convex(domain.vertices, sq)
            if len(P) >= 3:
                x, y = P[:, 0], P[:, 1]
                w[k] = abs(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)) / (h * h)
            else:
                w[k] = 0.0
        g.weight = np.clip(w.reshape(nx, ny), 0.0, 1.0)
        g.weight[g.weight < 1e-12] = 0.0
        return g


# ---------------------------------------------------------------- operators

class _Ops:
    """Sparse operators of a grid (cached per grid object)."""

    def __init__(self, g: Grid):
        self.g = g
        nx, ny, h = g.nx, g.ny, g.h
        nn = (nx + 1) * (ny + 1)
        self.nn = nn
        act = np.flatnonzero(g.mask.ravel())
        self.active = act
        ci, cj = np.unravel_index(act, (nx, ny))
        n00 = ci * (ny + 1) + cj
        n10 = (ci + 1) * (ny + 1) + cj
        n01 = ci * (ny + 1) + cj + 1
        n11 = (ci + 1) * (ny + 1) + cj + 1
        na = len(act)
        r = np.arange(na)
        # d/dx and d/dy at the cell centre of one scalar component
        dx = sp.csr_matrix(
            (np.concatenate([-np.ones(na), -np.ones(na), np.ones(na), np.ones(na)]) / (2 * h),
             (np.tile(r, 4), np.concatenate([n00, n01, n10, n11]))), shape=(na, nn))
        dy = sp.csr_matrix(
            (np.concatenate([-np.ones(na), -np.ones(na), np.ones(na), np.ones(na)]) / (2 * h),
             (np.tile(r, 4), np.concatenate([n00, n10, n01, n11]))), shape=(na, nn))
        Z = sp.csr_matrix((na, nn))
        # gradient rows ordered (g11, g12, g21, g22) blockwise; u = [u1; u2]
        self.D = sp.vstack([sp.hstack([dx, Z]), sp.hstack([dy, Z]),
                            sp.hstack([Z, dx]), sp.hstack([Z, dy])]).tocsr()
        self.w = g.weight.ravel()[act]
        # 2x2 blocks of active cells carry the isotropic variation term:
        # averaged x and y differences of the four cell gradients.  Only
        # blocks of fully covered cells count; cut cells would otherwise
        # charge the jump against the exterior, which is not part of the domain
        pos = -np.ones(nx * ny, dtype=int)
        pos[act] = np.arange(na)
        P = pos.reshape(nx, ny)
        c00, c10, c01, c11 = P[:-1, :-1], P[1:, :-1], P[:-1, 1:], P[1:, 1:]
        ok = (c00 >= 0) & (c10 >= 0) & (c01 >= 0) & (c11 >= 0)
        c00, c10, c01, c11 = c00[ok], c10[ok], c01[ok], c11[ok]
        nb = len(c00)
        self.nblock = nb
        wb = self.w
        bmin = np.minimum(np.minimum(wb[c00], wb[c10]), np.minimum(wb[c01], wb[c11]))
        self.bw = np.where(bmin >= 1.0 - 1e-12, 1.0, 0.0)
        rb = np.tile(np.arange(nb), 4)
        half = 0.5 * np.ones(nb)
        Bx = sp.csr_matrix((np.concatenate([-half, half, -half, half]),
                            (rb, np.concatenate([c00, c10, c01, c11]))), shape=(nb, na))
        By = sp.csr_matrix((np.concatenate([-half, -half, half, half]),
                            (rb, np.concatenate([c00, c10, c01, c11]))), shape=(nb, na))
        # stacked (dx of 4 entries; dy of 4 entries) acting on the flat gradient vector
        self.B = sp.vstack([sp.kron(sp.identity(4), Bx), sp.kron(sp.identity(4), By)]).tocsr()
        # symmetric part with the Frobenius weight: (s11, sqrt2 s12, s22)
        I = sp.identity(na, format="csr")
        s2 = math.sqrt(2.0) / 2.0
        self.S = sp.vstack([
            sp.hstack([I, sp.csr_matrix((na, na)), sp.csr_matrix((na, na)), sp.csr_matrix((na, na))]),
            sp.hstack([sp.csr_matrix((na, na)), s2 * I, s2 * I, sp.csr_matrix((na, na))]),
            sp.hstack([sp.csr_matrix((na, na)), sp.csr_matrix((na, na)), sp.csr_matrix((na, na)), I]),
        ]).tocsr()
        self.SD = (self.S @ self.D).tocsr()

    def block_norms(self, gflat: np.ndarray) -> np.ndarray:
        """Isotropic variation magnitude per block from the flat gradient vector."""
        v = (self.B @ gflat).reshape(8, self.nblock)
        return np.sqrt(np.sum(v * v, axis=0))

    def grads(self, u: np.ndarray) -> np.ndarray:
        """Cell gradients ``(na, 2, 2)`` from stacked nodal values."""
        g = self.D @ u
        na = len(self.active)
        return g.reshape(4, na).T.reshape(na, 2, 2)


_OPS_CACHE: dict = {}


def _ops(g: Grid) -> _Ops:
    key = (g.nx, g.ny, g.h, tuple(g.origin), g.weight.tobytes())
    op = _OPS_CACHE.get(key)
    if op is None:
        if len(_OPS_CACHE) > 8:
            _OPS_CACHE.clear()
        op = _Ops(g)
        _OPS_CACHE[key] = op
    return op


# ---------------------------------------------------------------- fields

@dataclass
class DiscreteField:
    """Nodal values ``(nx+1, ny+1, 2)`` with Dirichlet nodes."""

    grid: Grid
    values: np.ndarray
    fixed: np.ndarray
    mode: str = "displacement"
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.node_shape + (2,))
        self.fixed = np.asarray(self.fixed, dtype=bool).reshape(self.grid.node_shape)

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.values[..., 0].ravel(), self.values[..., 1].ravel()])

    def with_stacked(self, u: np.ndarray) -> "DiscreteField":
        nn = self.values.shape[0] * self.values.shape[1]
        v = np.stack([u[:nn], u[nn:]], axis=-1).reshape(self.values.shape)
        return DiscreteField(self.grid, v, self.fixed, self.mode, dict(self.flags))

    def copy(self) -> "DiscreteField":
        return DiscreteField(self.grid, self.values.copy(), self.fixed.copy(), self.mode, dict(self.flags))

    def cell_gradients(self) -> np.ndarray:
        return _ops(self.grid).grads(self.stacked())


def dirichlet_nodes(grid: Grid, domain: Polygon | None = None) -> np.ndarray:
    """Nodes not strictly inside the domain (or on the grid boundary)."""
    X = grid.nodes()
    fixed = np.zeros(grid.node_shape, dtype=bool)
    fixed[0, :] = fixed[-1, :] = fixed[:, 0] = fixed[:, -1] = True
    if domain is not None:
        P = X.reshape(-1, 2)
        inside = domain.contains(P) & (domain.distance_to_boundary(P) > 1e-12 * grid.h)
        fixed |= ~inside.reshape(grid.node_shape)
    # nodes touching no active cell are fixed too
    touched = np.zeros(grid.node_shape, dtype=bool)
    m = grid.mask
    touched[:-1, :-1] |= m
    touched[1:, :-1] |= m
    touched[:-1, 1:] |= m
    touched[1:, 1:] |= m
    return fixed | ~touched


def zero_field(grid: Grid, fixed=None, mode: str = "displacement") -> DiscreteField:
    if fixed is None:
        fixed = dirichlet_nodes(grid)
    v = np.zeros(grid.node_shape + (2,))
    if mode == "deformation":
        v = grid.nodes().copy()
    return DiscreteField(grid, v, fixed, mode)


@dataclass
class RelaxConfig:
    huber_delta: float | None = None
    max_iters: int = 200
    tol: float = 1e-8
    restarts: int = 8
    seed: int = 0
    cg_iters: int = 60
    patience: int = 10
    perturbation: float = 0.05

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


def default_delta(W: WellSet) -> float:
    scale = max(float(np.linalg.norm(M)) for M in W.wells())
    return 1e-3 * max(scale, 1e-12)


def _huber(r, d):
    return np.where(r <= d, 0.5 * r * r / d, r - 0.5 * d)


def _check_mode(f: DiscreteField, W: WellSet):
    if (W.mode == "linear") != (f.mode == "displacement"):
        raise ValueError("mode mismatch")


def discrete_energy(f: DiscreteField, W: WellSet, eps: float | None = None,
                    cfg: RelaxConfig | None = None) -> EnergyBreakdown:
    """Cell-centred elastic energy plus Huber total variation of the gradients."""
    _check_mode(f, W)
    cfg = cfg or RelaxConfig()
    d = cfg.huber_delta or default_delta(W)
    op = _ops(f.grid)
    u = f.stacked()
    G = op.grads(u)
    h2 = f.grid.h ** 2
    el = float(np.sum(op.w * h2 * dist2_to_well_set_batch(G, W)))
    su = 0.0
    if op.nblock:
        r = op.block_norms(op.D @ u)
        su = float(np.sum(op.bw * f.grid.h * _huber(r, d)))
    return EnergyBreakdown(el, su)


# ---------------------------------------------------------------- minimisation

@dataclass
class RelaxResult:
    field: DiscreteField
    energy: EnergyBreakdown
    total: float
    trace: list
    converged: bool
    restart_totals: list
    warm_totals: list

    @property
    def flag(self) -> str:
        return "converged" if self.converged else "unconverged"


def _nearest_linear(G, W):
    S = 0.5 * (G + np.swapaxes(G, 1, 2))
    d = np.stack([np.sum((S - e) ** 2, axis=(1, 2)) for e in W.linear], axis=1)
    return np.argmin(d, axis=1)


def _mm_linear(f0: DiscreteField, W: WellSet, eps: float, cfg: RelaxConfig, delta: float):
    op = _ops(f0.grid)
    h = f0.grid.h
    u = f0.stacked().copy()
    fixed = np.concatenate([f0.fixed.ravel(), f0.fixed.ravel()])
    free = np.flatnonzero(~fixed)
    cst = np.flatnonzero(fixed)
    E = np.array([np.asarray(e) for e in W.linear])
    evec = np.stack([E[:, 0, 0], math.sqrt(2.0) * E[:, 0, 1], E[:, 1, 1]], axis=1)
    na = len(op.active)
    wel = np.tile(op.w, 3) * h * h
    Hel = (op.SD.T @ sp.diags(wel) @ op.SD).tocsr()
    DD = (op.B @ op.D).tocsr()

    def energy(uv):
        fe = f0.with_stacked(uv)
        e = discrete_energy(fe, W, eps, replace(cfg, huber_delta=delta))
        return e, e.total(eps)

    cur_e, cur = energy(u)
    trace = [cur]
    small = 0
    converged = False
    for it in range(cfg.max_iters):
        G = op.grads(u)
        lab = _nearest_linear(G, W)
        target = evec[lab].T.ravel()  # (3 * na,)
        if op.nblock:
            r = op.block_norms(op.D @ u)
            wt = eps * h * op.bw / np.maximum(r, delta)
            Htv = (DD.T @ sp.diags(np.tile(wt, 8)) @ DD)
        else:
            Htv = sp.csr_matrix(Hel.shape)
        H = (2.0 * Hel + Htv).tocsr()
        rhs = 2.0 * (op.SD.T @ (wel * target))
        Hff = H[free][:, free]
        b = rhs[free] - H[free][:, cst] @ u[cst]
        diag = Hff.diagonal()
        diag[diag <= 0] = 1.0
        M = sp.diags(1.0 / diag)
        x, _ = cg(Hff, b, x0=u[free], maxiter=cfg.cg_iters, M=M, rtol=1e-10)
        trial = u.copy()
        trial[free] = x
        new_e, new = energy(trial)
        if new > cur + 1e-12 * max(1.0, abs(cur)):
            # majoriser step failed numerically: keep the current iterate
            log.debug("rejected step at iteration %d (%.3e > %.3e)", it, new, cur)
            break
        rel = (cur - new) / max(abs(cur), 1e-300)
        u, cur, cur_e = trial, new, new_e
        trace.append(cur)
        small = small + 1 if rel < cfg.tol else 0
        if small >= cfg.patience:
            converged = True
            break
    return f0.with_stacked(u), cur_e, cur, trace, converged


def _grad_nonlinear(f0: DiscreteField, u, W, eps, delta):
    op = _ops(f0.grid)
    h = f0.grid.h
    G = op.grads(u)
    na = len(G)
    wells = W.wells()
    best = np.full(na, np.inf)
    gG = np.zeros_like(G)
    for U in wells:
        M = G @ U.T
        phi = np.arctan2(M[:, 1, 0] - M[:, 0, 1], M[:, 0, 0] + M[:, 1, 1])
        c, s = np.cos(phi), np.sin(phi)
        Q = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], 1)
        QU = Q @ U
        d2 = np.sum((G - QU) ** 2, axis=(1, 2))
        sel = d2 < best
        best = np.where(sel, d2, best)
        gG[sel] = 2.0 * (G[sel] - QU[sel])
    gG *= (op.w * h * h)[:, None, None]
    el = float(np.sum(op.w * h * h * best))
    gflat = gG.reshape(na, 4).T.ravel()
    su = 0.0
    if op.nblock:
        v = op.B @ (op.D @ u)
        r = np.sqrt(np.sum(v.reshape(8, op.nblock) ** 2, axis=0))
        su = float(np.sum(op.bw * h * _huber(r, delta)))
        coef = np.tile(eps * op.bw * h / np.maximum(r, delta), 8)
        gflat = gflat + op.B.T @ (coef * v)
    grad = op.D.T @ gflat
    return el + eps * su, grad, EnergyBreakdown(el, su)


def _pg_nonlinear(f0: DiscreteField, W, eps, cfg, delta):
    u = f0.stacked().copy()
    fixed = np.concatenate([f0.fixed.ravel(), f0.fixed.ravel()])
    cur, g, cur_e = _grad_nonlinear(f0, u, W, eps, delta)
    g[fixed] = 0.0
    step = 0.1
    trace = [cur]
    small = 0
    converged = False
    for _ in range(cfg.max_iters):
        gn = float(g @ g)
        if gn == 0.0:
            converged = True
            break
        accepted = False
        for _ in range(40):
            trial = u - step * g
            val, g2, e2 = _grad_nonlinear(f0, trial, W, eps, delta)
            if val <= cur - 1e-4 * step * gn:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        rel = (cur - val) / max(abs(cur), 1e-300)
        u, cur, cur_e, g = trial, val, e2, g2
        g[fixed] = 0.0
        trace.append(cur)
        step *= 2.0
        small = small + 1 if rel < cfg.tol else 0
        if small >= cfg.patience:
            converged = True
            break
    return f0.with_stacked(u), cur_e, cur, trace, converged


def minimize(domain, bc: DiscreteField, W: WellSet, eps: float, cfg: RelaxConfig | None = None,
             warm_starts=(), threads: int = 1) -> RelaxResult:
    """Best energy found over seeded restarts and the supplied warm starts.

    ``bc`` carries the grid, the Dirichlet mask and the prescribed values.
    Restart 0 starts from ``bc`` itself (zero field inside for austenite
    data), then every warm start is run unperturbed, and the remaining restarts
    perturb these bases with seeded noise.  Each run is monotone, so the result
    never exceeds any warm start's energy.
    """
    cfg = cfg or RelaxConfig()
    _check_mode(bc, W)
    if not eps > 0:
        raise ValueError("eps must be positive")
    delta = cfg.huber_delta or default_delta(W)
    run = _mm_linear if W.mode == "linear" else _pg_nonlinear
    bases = [bc]
    for ws in warm_starts:
        if ws.values.shape != bc.values.shape:
            raise ValueError("warm start grid differs from the boundary data grid")
        s = ws.copy()
        s.fixed = bc.fixed.copy()
        s.values[bc.fixed] = bc.values[bc.fixed]
        bases.append(s)
    rng = np.random.default_rng(cfg.seed)
    starts = []
    for k in range(max(cfg.restarts, len(bases))):
        base = bases[k % len(bases)]
        if k < len(bases):
            starts.append((k, base.copy()))
            continue
        s = base.copy()
        noise = rng.standard_normal(s.values.shape) * cfg.perturbation * bc.grid.h
        noise[s.fixed] = 0.0
        s.values = s.values + noise
        starts.append((k, s))

    def one(item):
        k, s = item
        f, e, tot, trace, conv = run(s, W, eps, cfg, delta)
        log.info("restart %d: total %.6e (%d iterations)", k, tot, len(trace) - 1)
        return (tot, k, f, e, trace, conv)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, starts))
    else:
        results = [one(it) for it in starts]
    results.sort(key=lambda r: (r[0], r[1]))
    tot, k, f, e, trace, conv = results[0]
    warm_totals = [discrete_energy(b, W, eps, replace(cfg, huber_delta=delta)).total(eps) for b in bases[1:]]
    f.flags["restart"] = k
    return RelaxResult(f, e, tot, trace, conv, [r[0] for r in sorted(results, key=lambda r: r[1])], warm_totals)


# ---------------------------------------------------------------- diagnostics

def interpolate(f: PAField, g: Grid, outside: str = "nearest", fixed=None) -> DiscreteField:
    """Nodal sampling of a piecewise-affine field.

    Nodes outside every cell use the nearest cell's affine map
    (``outside="nearest"``, flagged) or zero (``outside="zero"``).
    """
    X = g.nodes().reshape(-1, 2)
    idx = f.locate(X, tol=1e-9 * max(1.0, g.h))
    vals = np.zeros_like(X)
    ok = idx >= 0
    vals[ok] = np.einsum("nij,nj->ni", f.A[idx[ok]], X[ok]) + f.b[idx[ok]]
    miss = ~ok
    flags = {"outside_nodes": int(miss.sum())}
    if miss.any():
        if outside == "nearest":
            C = f.complex.centroids()
            near = np.argmin(((X[miss, None, :] - C[None, :, :]) ** 2).sum(-1), axis=1)
            vals[miss] = np.einsum("nij,nj->ni", f.A[near], X[miss]) + f.b[near]
            flags["extended"] = True
        elif outside == "zero":
            vals[miss] = X[miss] if f.mode == "deformation" else 0.0
        else:
            raise ValueError("outside must be 'nearest' or 'zero'")
    if fixed is None:
        fixed = dirichlet_nodes(g)
    mode = f.mode
    return DiscreteField(g, vals.reshape(g.node_shape + (2,)), fixed, mode, flags)


def slice_energy(f, x: float, interval, W: WellSet) -> float:
    """Elastic energy plus gradient variation along the segment ``{x} x I``."""
    y0, y1 = map(float, interval)
    if isinstance(f, PAField):
        pieces = []
        V = f.complex.vertices
        for ci, cell in enumerate(f.complex.cells):
            p = V[cell]
            q = np.roll(p, -1, axis=0)
            ys = []
            for a, b in zip(p, q):
                if (a[0] - x) * (b[0] - x) <= 0 and a[0] != b[0]:
                    t = (x - a[0]) / (b[0] - a[0])
                    ys.append(a[1] + t * (b[1] - a[1]))
                elif a[0] == x:
                    ys.append(a[1])
            if len(ys) >= 2:
                lo, hi = max(min(ys), y0), min(max(ys), y1)
                if hi - lo > 1e-14:
                    pieces.append((lo, hi, ci))
        if not pieces:
            raise ValueError("slice outside domain")
        pieces.sort()
        covered = sum(hi - lo for lo, hi, _ in pieces)
        if covered < (y1 - y0) * (1 - 1e-9):
            raise ValueError("slice outside domain")
        el = sum((hi - lo) * float(dist2_to_well_set_batch(f.A[ci][None], W)[0]) for lo, hi, ci in pieces)
        tv = sum(float(np.linalg.norm(f.A[b[2]] - f.A[a[2]])) for a, b in zip(pieces, pieces[1:]))
        return el + tv
    g = f.grid
    i = int(math.floor((x - g.origin[0]) / g.h))
    if not 0 <= i < g.nx:
        raise ValueError("slice outside domain")
    yb = g.origin[1] + g.h * np.arange(g.ny)
    overlap = np.clip(np.minimum(yb + g.h, y1) - np.maximum(yb, y0), 0.0, None)
    js = np.flatnonzero(overlap > 1e-14 * g.h)
    if len(js) == 0 or not g.mask[i, js].all():
        raise ValueError("slice outside domain")
    op = _ops(g)
    G = op.grads(f.stacked())
    pos = -np.ones(g.nx * g.ny, dtype=int)
    pos[op.active] = np.arange(len(op.active))
    cells = pos[i * g.ny + js]
    Gc = G[cells]
    el = float(np.sum(overlap[js] * dist2_to_well_set_batch(Gc, W)))
    tv = float(np.sum(np.linalg.norm(np.diff(Gc, axis=0), axis=(1, 2))))
    return el + tv


def rotate_field(f: DiscreteField, R: np.ndarray) -> DiscreteField:
    """Apply a fixed rotation to the values (frame change of a deformation)."""
    out = f.copy()
    out.values = f.values @ np.asarray(R).T
    return out


__all__ = [
    "Grid", "DiscreteField", "RelaxConfig", "RelaxResult", "discrete_energy", "minimize",
    "interpolate", "slice_energy", "dirichlet_nodes", "zero_field", "default_delta",
    "rotate_field",
]
