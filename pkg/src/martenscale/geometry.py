"""Polygons, boundary graph patches and boundary normal coordinates."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .algebra2d import as_mat2, as_vec2, rotation

EDGE_TOL = 1e-12


# ---------------------------------------------------------------- polygons

def _segments_cross(p, q, r, s) -> bool:
    """Proper or touching intersection of closed segments pq and rs."""
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return False


@dataclass(frozen=True)
class Polygon:
    """Simple polygon with counterclockwise vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
            raise ValueError("polygon needs at least 3 planar vertices")
        if not np.all(np.isfinite(V)):
            raise ValueError("polygon vertices must be finite")
        object.__setattr__(self, "vertices", V)
        if self.signed_area() <= 0:
            raise ValueError("polygon vertices must be counterclockwise with positive area")
        k = len(V)
        for i in range(k):
            for j in range(i + 2, k):
                if i == 0 and j == k - 1:
                    continue
                if _segments_cross(V[i], V[(i + 1) % k], V[j], V[(j + 1) % k]):
                    raise ValueError("polygon is self-intersecting")

    def signed_area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def area(self) -> float:
        return abs(self.signed_area())

    def edges(self):
        V = self.vertices
        return list(zip(V, np.roll(V, -1, axis=0)))

    @property
    def perimeter(self) -> float:
        return float(np.sum(np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1)))

    def contains(self, pts, tol: float = 0.0) -> np.ndarray:
        """Points strictly inside, shrunk by ``tol`` from every edge line (convex
        parts) combined with an even-odd test."""
        P = np.asarray(pts, dtype=float).reshape(-1, 2)
        V = self.vertices
        inside = np.zeros(len(P), dtype=bool)
        x, y = P[:, 0], P[:, 1]
        for a, b in self.edges():
            cond = (a[1] > y) != (b[1] > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            inside ^= cond & (x < xi)
        if tol > 0:
            inside &= self.distance_to_boundary(P) > tol
        return inside

    def distance_to_boundary(self, pts) -> np.ndarray:
        P = np.asarray(pts, dtype=float).reshape(-1, 2)
        best = np.full(len(P), np.inf)
        for a, b in self.edges():
            d = b - a
            t = np.clip(((P - a) @ d) / (d @ d), 0.0, 1.0)
            q = a + t[:, None] * d
            best = np.minimum(best, np.linalg.norm(P - q, axis=1))
        return best

    def is_star_shaped_about(self, p=(0.0, 0.0), strict: bool = True) -> bool:
        """``p`` lies in the kernel: on the inner side of every edge line."""
        p = np.asarray(p, dtype=float)
        for a, b in self.edges():
            cr = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
            if cr < 0 or (strict and cr <= 0):
                return False
        return True

    def radial_function(self, theta) -> np.ndarray:
        """Distance from the origin to the boundary along angle ``theta``
        (requires star-shapedness about the origin)."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        d = np.stack([np.cos(th), np.sin(th)], axis=-1)
        best = np.full(len(th), np.inf)
        for a, b in self.edges():
            e = b - a
            # solve s d = a + t e
            den = d[:, 0] * (-e[1]) - d[:, 1] * (-e[0])
            with np.errstate(divide="ignore", invalid="ignore"):
                s = (a[0] * (-e[1]) - a[1] * (-e[0])) / den
                t = (d[:, 0] * a[1] - d[:, 1] * a[0]) / den
            ok = (np.abs(den) > 1e-15) & (t >= -1e-12) & (t <= 1 + 1e-12) & (s > 0)
            best = np.where(ok, np.minimum(best, s), best)
        return best

    def radial_lipschitz(self, samples: int = 20000) -> float:
        """Measured Lipschitz constant of the radial boundary function."""
        th = np.linspace(0.0, 2 * math.pi, samples + 1)
        f = self.radial_function(th)
        return float(np.max(np.abs(np.diff(f)) / np.diff(th)))

    def to_dict(self) -> dict:
        return {"type": "polygon", "vertices": self.vertices.tolist()}


def polygon_boundary_normals(P: Polygon) -> np.ndarray:
    """Outward unit normal of each edge, in edge order."""
    out = []
    for a, b in P.edges():
        d = b - a
        L = math.hypot(d[0], d[1])
        if L < EDGE_TOL:
            raise ValueError("degenerate edge")
        out.append(np.array([d[1], -d[0]]) / L)
    return np.array(out)


def classify_edges(P: Polygon, normals, tol: float = 1e-8) -> list[bool]:
    """Per edge: is the outward normal in the normal set (mod sign)?"""
    return [normals.contains(n, tol) for n in polygon_boundary_normals(P)]


def classify_domain(P: Polygon, normals, edges=None, tol: float = 1e-8) -> str:
    """``generic`` if no selected edge normal lies in the set, ``compatible`` if
    all of them do, ``mixed`` otherwise."""
    flags = classify_edges(P, normals, tol)
    if edges is not None:
        flags = [flags[i] for i in edges]
    if not any(flags):
        return "generic"
    if all(flags):
        return "compatible"
    return "mixed"


def unit_square() -> Polygon:
    return Polygon(np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]))


def admissible_triangle(side: float = 1.0, base_angle_deg: float = 15.0, origin=(0.0, 0.0)) -> Polygon:
    """Equilateral triangle with edges along ``base_angle``, ``+60`` and ``+120``
    degrees (for 15 degrees: edge normals 105, 165 and 45 degrees)."""
    o = np.asarray(origin, dtype=float)
    a = math.radians(base_angle_deg)
    v1 = o + side * np.array([math.cos(a), math.sin(a)])
    v2 = o + side * np.array([math.cos(a + math.pi / 3), math.sin(a + math.pi / 3)])
    return Polygon(np.array([o, v1, v2]))


# ---------------------------------------------------------------- graph patches

@dataclass
class GraphPatch:
    """Boundary arc ``x = h(y)`` in a frame where the domain is ``{x > h(y)}``.

    ``h``, ``dh`` and ``ddh`` are vectorised callables.  The physical boundary
    is recovered as ``p0 + R^T (h(y), y)``.
    """

    h: Callable
    dh: Callable
    ddh: Callable
    rho: float
    p0: np.ndarray = field(default_factory=lambda: np.zeros(2))
    R: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        self.p0 = as_vec2(self.p0)
        self.R = as_mat2(self.R)
        if abs(float(self.h(0.0))) > 1e-12 or abs(float(self.dh(0.0))) > 1e-12:
            raise ValueError("patch requires h(0) = h'(0) = 0")

    @classmethod
    def poly(cls, coeffs, rho, **kw) -> "GraphPatch":
        """``h(y) = sum_k coeffs[k] y^k``."""
        p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        return cls(p, p.deriv(1), p.deriv(2), rho, **kw)

    @classmethod
    def spline(cls, knots, values, rho, **kw) -> "GraphPatch":
        s = CubicSpline(np.asarray(knots, dtype=float), np.asarray(values, dtype=float))
        return cls(s, s.derivative(1), s.derivative(2), rho, **kw)

    @classmethod
    def flat(cls, rho=1.0, **kw) -> "GraphPatch":
        return cls.poly([0.0], rho, **kw)

    @classmethod
    def circle(cls, radius=1.0, rho=0.5, **kw) -> "GraphPatch":
        """Disk of given radius seen from its boundary: ``h(y) = r - sqrt(r^2 - y^2)``."""
        r = float(radius)
        if not 2 * rho < r:
            raise ValueError("rho too large for the circle")
        return cls(
            lambda y: r - np.sqrt(r * r - np.asarray(y) ** 2),
            lambda y: np.asarray(y) / np.sqrt(r * r - np.asarray(y) ** 2),
            lambda y: r * r / (r * r - np.asarray(y) ** 2) ** 1.5,
            rho, **kw,
        )

    def _check(self, y, limit):
        if np.any(np.abs(np.asarray(y)) >= limit):
            raise ValueError("point outside the patch")

    # tangent-field interface used by the compatibility module
    @property
    def param_range(self):
        return (-self.rho, self.rho)

    def point(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        loc = np.stack([self.h(y), y], axis=-1)
        return self.p0 + loc @ self.R  # R^T applied to row vectors

    def tangent(self, y) -> np.ndarray:
        """Physical counterclockwise unit tangent ``R^T tau(y)``."""
        _, tau, _ = frame_fields(self, y)
        return tau @ self.R

    def normal(self, y) -> np.ndarray:
        nu, _, _ = frame_fields(self, y)
        return nu @ self.R


def frame_fields(patch: GraphPatch, y):
    """Outer normal, counterclockwise tangent and curvature at ``(h(y), y)``."""
    y = np.asarray(y, dtype=float)
    patch._check(y, 2 * patch.rho)
    hp = np.asarray(patch.dh(y), dtype=float)
    hpp = np.asarray(patch.ddh(y), dtype=float)
    s = np.sqrt(1.0 + hp * hp)
    nu = np.stack([-1.0 / s, hp / s], axis=-1)
    tau = np.stack([-hp / s, -1.0 / s], axis=-1)
    kappa = hpp / (1.0 + hp * hp)
    return nu, tau, kappa


def boundary_normal_map(patch: GraphPatch, x, y) -> np.ndarray:
    """``Phi(x, y) = (h(y), y) - x nu(y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    patch._check(x, patch.rho)
    patch._check(y, patch.rho)
    nu, _, _ = frame_fields(patch, y)
    base = np.stack([np.asarray(patch.h(y), dtype=float) * np.ones_like(y), y], axis=-1)
    return base - x[..., None] * nu


def grad_boundary_normal_map(patch: GraphPatch, x, y) -> np.ndarray:
    """Closed-form Jacobian of :func:`boundary_normal_map`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    patch._check(x, patch.rho)
    patch._check(y, patch.rho)
    nu, tau, kappa = frame_fields(patch, y)
    hp = np.asarray(patch.dh(y), dtype=float)
    g = x * kappa - np.sqrt(1.0 + hp * hp)
    out = np.empty(np.broadcast(x, y).shape + (2, 2))
    out[..., 0, 0] = -nu[..., 0]
    out[..., 1, 0] = -nu[..., 1]
    out[..., 0, 1] = tau[..., 0] * g
    out[..., 1, 1] = tau[..., 1] * g
    return out


def tangential_factor(patch: GraphPatch, x, y):
    """``c~(x, y) = sqrt(1 + h'(y)^2) - x kappa(y)``."""
    _, _, kappa = frame_fields(patch, y)
    hp = np.asarray(patch.dh(y), dtype=float)
    return np.sqrt(1.0 + hp * hp) - np.asarray(x) * kappa


def _square_samples(r: float, n: int):
    s = np.linspace(-r, r, n)
    X, Y = np.meshgrid(s, s, indexing="ij")
    return X.ravel(), Y.ravel()


def invertibility_radius(patch: GraphPatch, tol: float = 0.5, n: int = 41) -> float:
    """Largest ``r <= rho`` (bisection) with ``|grad Phi - Id|_op <= tol`` on
    the closed square of half-width ``r``."""
    def ok(r):
        X, Y = _square_samples(r, n)
        G = grad_boundary_normal_map(patch, X, Y) - np.eye(2)
        return float(np.max(np.linalg.norm(G, ord=2, axis=(-2, -1)))) <= tol

    hi = patch.rho * (1 - 1e-9)
    if ok(hi):
        return hi
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class Diffeo:
    """Flattening map ``F(z) = Phi^{-1}(R (z - p0))`` onto ``Q_r``."""

    patch: GraphPatch
    r: float
    r0: float
    bounds: dict

    @property
    def p0(self):
        return self.patch.p0

    @property
    def R(self):
        return self.patch.R

    def inverse(self, q) -> np.ndarray:
        """``F^{-1}(x, y) = p0 + R^T Phi(x, y)``."""
        q = np.asarray(q, dtype=float)
        P = boundary_normal_map(self.patch, q[..., 0], q[..., 1])
        return self.patch.p0 + P @ self.patch.R

    def forward(self, z, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
        """Damped Newton solve of ``Phi(q) = R (z - p0)``."""
        z = np.asarray(z, dtype=float)
        shape = z.shape
        Z = z.reshape(-1, 2)
        target = (Z - self.patch.p0) @ self.patch.R.T
        q = target.copy()
        lim = self.patch.rho * (1 - 1e-12)
        for _ in range(max_iter):
            res = boundary_normal_map(self.patch, q[:, 0], q[:, 1]) - target
            err = np.linalg.norm(res, axis=1)
            if np.max(err) <= tol:
                break
            G = grad_boundary_normal_map(self.patch, q[:, 0], q[:, 1])
            step = np.linalg.solve(G, res[..., None])[..., 0]
            lam = np.ones(len(q))
            for _ in range(30):
                trial = np.clip(q - lam[:, None] * step, -lim, lim)
                r2 = np.linalg.norm(
                    boundary_normal_map(self.patch, trial[:, 0], trial[:, 1]) - target, axis=1
                )
                bad = r2 > err * (1 - 1e-4 * lam) + 1e-300
                bad &= err > tol
                if not np.any(bad):
                    break
                lam = np.where(bad, 0.5 * lam, lam)
            q = trial
        return q.reshape(shape)

    __call__ = forward

    def jacobian(self, z) -> np.ndarray:
        """``grad F(z) = (R^T grad Phi(F(z)))^{-1} = grad Phi^{-1} R``."""
        q = self.forward(z)
        G = grad_boundary_normal_map(self.patch, q[..., 0], q[..., 1])
        return np.linalg.inv(G) @ self.patch.R

    def c(self, z):
        q = self.forward(z)
        return tangential_factor(self.patch, q[..., 0], q[..., 1])


def flatten_patch(patch: GraphPatch, r: float, samples: int = 81) -> Diffeo:
    """Build ``F`` on ``Q_r`` and measure its bounds on a sample grid."""
    r0 = invertibility_radius(patch)
    if not 0 < r < r0:
        raise ValueError("patch radius exceeds r0")
    X, Y = _square_samples(r, samples)
    G = grad_boundary_normal_map(patch, X, Y)
    # grad F at F^{-1}(x, y) equals (grad Phi)^{-1} R
    GF = np.linalg.inv(G) @ patch.R
    dev = float(np.max(np.linalg.norm(GF - patch.R, ord=2, axis=(-2, -1))))
    dev_fro = float(np.max(np.linalg.norm(GF - patch.R, axis=(-2, -1))))
    detdev = float(np.max(np.abs(np.linalg.det(GF) - 1.0)))
    cdev = float(np.max(np.abs(tangential_factor(patch, X, Y) - 1.0)))
    _, _, k0 = frame_fields(patch, 0.0)
    bounds = {
        "sup_gradF_minus_R": dev_fro,
        "sup_gradF_minus_R_op": dev,
        "sup_det_minus_1": detdev,
        "sup_c_minus_1": cdev,
        "kappa_p0": float(k0),
        "C_grad": dev_fro / r,
        "C_det": detdev / r,
        "C_tangent": max(0.0, (cdev / r - abs(float(k0))) / r),
    }
    return Diffeo(patch, float(r), float(r0), bounds)


def unit_circle_patch(rho: float = 0.4) -> GraphPatch:
    """Unit disk near ``p0 = (1, 0)``; ``R = -Id`` maps the outer normal to ``-e1``."""
    return GraphPatch.circle(1.0, rho, p0=np.array([1.0, 0.0]), R=-np.eye(2))


# ---------------------------------------------------------------- flat segments

@dataclass(frozen=True)
class Segment:
    """Straight boundary piece with constant tangent; parameter is arclength."""

    a: np.ndarray
    b: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.asarray(self.b) - np.asarray(self.a)))

    @property
    def param_range(self):
        return (0.0, self.length)

    def point(self, s):
        s = np.asarray(s, dtype=float)
        t = (np.asarray(self.b) - np.asarray(self.a)) / self.length
        return np.asarray(self.a) + s[..., None] * t

    def tangent(self, s):
        s = np.asarray(s, dtype=float)
        t = (np.asarray(self.b) - np.asarray(self.a)) / self.length
        return np.broadcast_to(t, s.shape + (2,)).copy()


def segment_at_angle(angle: float, length: float = 1.0) -> Segment:
    return Segment(np.zeros(2), length * np.array([math.cos(angle), math.sin(angle)]))


# ---------------------------------------------------------------- scenario IO

def domain_from_dict(doc: dict):
    kind = doc.get("type")
    if kind == "polygon":
        return Polygon(np.array(doc["vertices"], dtype=float))
    if kind == "graph_patch":
        hd = doc["h"]
        rho = float(doc.get("rho", 0.25))
        extra = {}
        if "p0" in doc:
            extra["p0"] = np.array(doc["p0"], dtype=float)
        if "R" in doc:
            extra["R"] = np.array(doc["R"], dtype=float).reshape(2, 2)
        if hd.get("kind") == "poly":
            return GraphPatch.poly(hd["coeffs"], rho, **extra)
        if hd.get("kind") == "spline":
            return GraphPatch.spline(hd["knots"], hd["values"], rho, **extra)
        raise ValueError(f"unknown h kind {hd.get('kind')!r}")
    if kind == "preset":
        name = doc.get("name")
        if name == "unit_square":
            return unit_square()
        if name == "compatible_triangle":
            return admissible_triangle()
        raise ValueError(f"unknown preset {name!r}")
    raise ValueError(f"unknown domain type {kind!r}")


def domain_from_json(text: str):
    return domain_from_dict(json.loads(text))


__all__ = [
    "Polygon", "polygon_boundary_normals", "classify_edges", "classify_domain",
    "unit_square", "admissible_triangle", "GraphPatch", "frame_fields",
    "boundary_normal_map", "grad_boundary_normal_map", "tangential_factor",
    "invertibility_radius", "Diffeo", "flatten_patch", "unit_circle_patch",
    "Segment", "segment_at_angle", "domain_from_dict", "domain_from_json", "rotation",
]
