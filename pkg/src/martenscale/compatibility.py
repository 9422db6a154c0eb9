"""Jump conditions, austenite normals, incompatibility constants and envelopes."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import ConvexHull, QhullError

from .algebra2d import _null_normals, as_mat2, as_sym, fro, rotation
from .wells import WellSet

ANGLE_TOL = 1e-8
MIN_SAMPLES = 2048


def _mod_pi(v) -> float:
    return math.atan2(v[1], v[0]) % math.pi


def _angle_close(a: float, b: float, tol: float) -> bool:
    d = abs(a - b) % math.pi
    return min(d, math.pi - d) <= tol


@dataclass(frozen=True)
class NormalSet:
    """Directions modulo sign, stored by their angle in ``[0, pi)``."""

    angles: tuple
    provenance: str = "custom"
    all_directions: bool = False

    @classmethod
    def from_vectors(cls, vecs, provenance="custom", tol=ANGLE_TOL):
        out = []
        for v in vecs:
            th = _mod_pi(v)
            if not any(_angle_close(th, t, tol) for t in out):
                out.append(th)
        # pull values that wrapped to ~pi back to 0 before sorting
        out = [0.0 if math.pi - t <= tol else t for t in out]
        return cls(tuple(sorted(out)), provenance)

    @property
    def directions(self) -> np.ndarray:
        a = np.asarray(self.angles, dtype=float)
        return np.stack([np.cos(a), np.sin(a)], axis=-1).reshape(-1, 2)

    def degrees(self) -> np.ndarray:
        return np.degrees(np.asarray(self.angles, dtype=float))

    def __len__(self) -> int:
        return len(self.angles)

    def contains(self, v, tol: float = ANGLE_TOL) -> bool:
        if self.all_directions:
            return True
        th = _mod_pi(np.asarray(v, dtype=float))
        return any(_angle_close(th, t, tol) for t in self.angles)

    def same_as(self, other: "NormalSet", tol: float = ANGLE_TOL) -> bool:
        if self.all_directions or other.all_directions:
            return self.all_directions == other.all_directions
        return len(self) == len(other) and all(other.contains(d, tol) for d in self.directions)

    def union(self, other: "NormalSet", provenance=None) -> "NormalSet":
        if self.all_directions or other.all_directions:
            return NormalSet((), provenance or self.provenance, True)
        return NormalSet.from_vectors(
            list(self.directions) + list(other.directions), provenance or self.provenance
        )

    def to_dict(self) -> dict:
        return {
            "directions": self.directions.tolist(),
            "angles_deg": self.degrees().tolist(),
            "provenance": self.provenance,
            "all_directions": self.all_directions,
        }


def austenite_normals_linear(E) -> NormalSet:
    """Normals of flat interfaces between zero strain and strain ``E``.

    Tangents solve ``t.E t = 0``; the normals are their quarter turns.
    """
    E = as_sym(E)
    if fro(E) == 0.0:
        return NormalSet((), "custom", all_directions=True)
    if np.linalg.det(E) > 1e-12 * max(1.0, fro(E) ** 2):
        return NormalSet((), "custom")
    return NormalSet.from_vectors(_null_normals(E))


def hex_rhombic_normal_set() -> NormalSet:
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    vecs = []
    for j in range(3):
        Q = rotation(2 * math.pi * j / 3)
        vecs += [Q @ (e1 + e2), Q @ (e1 - e2)]
    return NormalSet.from_vectors(vecs, "linear_hex")


class TwinningSolutions(list):
    """List of ``(Q, a, n)`` triples; ``degenerate`` is set when ``U`` is a rotation."""

    degenerate = False

    @property
    def solutions(self):
        return list(self)


def twinning_with_identity(U) -> TwinningSolutions:
    """All solutions of ``Q U = Id + a (x) n`` with ``Q`` a rotation.

    A solution has an invariant unit tangent ``t`` (``Q U t = t``), so
    ``|U t| = 1``; ``Q`` turns ``U t`` onto ``t`` and ``n = perp(t)``.
    Solutions differing by ``(a, n) -> (-a, -n)`` are identified.
    """
    U = as_mat2(U)
    if np.linalg.det(U) <= 0:
        raise ValueError("orientation-reversing well")
    C = U.T @ U
    D = C - np.eye(2)
    scale = max(1.0, fro(U))
    out = TwinningSolutions()
    if fro(D) <= 1e-14 * scale ** 2:
        out.degenerate = True
        out.append((U.T.copy(), np.zeros(2), np.array([1.0, 0.0])))
        return out
    if np.linalg.det(D) > 1e-12 * max(1.0, fro(D) ** 2):
        return out
    for n in _null_normals(D):
        # _null_normals returns perp(t); recover the tangent t
        t = np.array([n[1], -n[0]])
        Ut = U @ t
        Q = rotation(math.atan2(t[1], t[0]) - math.atan2(Ut[1], Ut[0]))
        a = (Q @ U - np.eye(2)) @ n
        out.append((Q, a, n))
    return out


def twinning_residual(Q, U, a, n) -> float:
    return fro(Q @ U - np.eye(2) - np.outer(a, n))


def nonlinear_normal_set(W: WellSet) -> NormalSet:
    """Austenite interface normals of all variants of a nonlinear well set."""
    if W.mode != "nonlinear":
        raise ValueError("mode mismatch")
    if W.degenerate:
        raise ValueError("degenerate well set has no transformation")
    vecs = []
    for U in W.variants:
        vecs += [n for _, _, n in twinning_with_identity(U)]
    prov = {3: "nonlinear_n3", 4: "nonlinear_n4"}.get(W.ngon, "custom")
    return NormalSet.from_vectors(vecs, prov)


@dataclass(frozen=True)
class IncompatibilityResult:
    d: float
    argmin_point: float
    argmin_well_index: int
    mode: str

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "argmin": {"point": self.argmin_point, "well_index": self.argmin_well_index},
            "mode": self.mode,
        }


def _defect_fn(W: WellSet, j: int):
    """Pointwise incompatibility of well ``j`` for a stack of tangents."""
    if W.mode == "linear":
        E = W.linear[j]

        def f(t):
            return np.abs(np.einsum("...i,ij,...j->...", t, E, t))
    else:
        U = W.wells()[j]

        def f(t):
            return np.abs(np.linalg.norm(t @ U.T, axis=-1) - 1.0)
    return f


def incompatibility_constant(patch, W: WellSet, samples: int = MIN_SAMPLES) -> IncompatibilityResult:
    """Minimum over the patch and the wells of the jump-condition defect.

    ``patch`` needs ``param_range`` and a vectorised ``tangent(s)``.  In the
    nonlinear case the inner minimum over rotations is exact:
    ``min_Q |Q U t - t| = ||U t| - 1|``.
    """
    s0, s1 = patch.param_range
    if not s1 > s0:
        raise ValueError("empty patch")
    ns = max(int(samples), MIN_SAMPLES)
    s = np.linspace(s0, s1, ns)
    T = patch.tangent(s)
    best = (math.inf, s0, 0)
    for j in range(len(W)):
        f = _defect_fn(W, j)
        g = f(T)
        # candidate local minima on the sample grid, refined inside their bracket
        interior = np.flatnonzero((g[1:-1] < g[:-2]) & (g[1:-1] <= g[2:])) + 1
        cand = set(interior.tolist()) | {0, ns - 1, int(np.argmin(g))}
        if len(cand) > 64:
            cand = set(np.argsort(g)[:64].tolist()) | {0, ns - 1}
        for i in sorted(cand):
            val, arg = float(g[i]), float(s[i])
            lo, hi = s[max(i - 1, 0)], s[min(i + 1, ns - 1)]
            if hi > lo and val > 0.0:
                res = minimize_scalar(
                    lambda x: float(f(patch.tangent(np.array([x])))[0]),
                    bounds=(lo, hi), method="bounded", options={"xatol": 1e-14},
                )
                if res.fun < val:
                    val, arg = float(res.fun), float(res.x)
            if val < best[0]:
                best = (val, arg, j)
    return IncompatibilityResult(best[0], best[1], best[2], W.mode)


def defect_at(patch, W: WellSet, s: float, j: int) -> float:
    return float(_defect_fn(W, j)(patch.tangent(np.array([s])))[0])


def full_form_defect(tau, U) -> float:
    """``min_Q |Q U tau - tau|`` by direct rotation alignment (no reduction)."""
    tau = np.asarray(tau, dtype=float)
    v = U @ tau
    Q = rotation(math.atan2(tau[1], tau[0]) - math.atan2(v[1], v[0]))
    return float(np.linalg.norm(Q @ v - tau))


@dataclass(frozen=True)
class OscillationThresholds:
    nonlinear_general: float
    linear_general: float
    square_nonlinear: float
    square_linear: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def oscillation_thresholds(d: float, length: float) -> OscillationThresholds:
    if d < 0 or length < 0:
        raise ValueError("d and length must be nonnegative")
    x = d * length
    return OscillationThresholds(
        nonlinear_general=x / 208.0,
        linear_general=x / (64.0 * 17.0 * 9.0 * math.sqrt(2.0)),
        square_nonlinear=x / 104.0,
        square_linear=x / 104.0,
    )


def trace_oscillation(values, points=None, subtract_identity: bool = False) -> float:
    """Largest pairwise distance between sampled trace values.

    With ``subtract_identity`` the samples ``v(x) - x`` are used (``points``
    required).  The maximum is taken over the convex hull, which is exact for
    the finite sample set.
    """
    V = np.asarray(values, dtype=float).reshape(-1, 2)
    if len(V) < 2:
        raise ValueError("need at least 2 samples")
    if subtract_identity:
        if points is None:
            raise ValueError("points are required to subtract the identity")
        V = V - np.asarray(points, dtype=float).reshape(-1, 2)
    if len(V) > 64:
        try:
            V = V[ConvexHull(V).vertices]
        except QhullError:
            # collinear or repeated samples: the extremes along the main axis
            c = V - V.mean(axis=0)
            _, _, vt = np.linalg.svd(c, full_matrices=False)
            p = c @ vt[0]
            V = V[[int(np.argmin(p)), int(np.argmax(p))]]
    diff = V[:, None, :] - V[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


def lower_envelope(eps: float, kind: str = "log") -> float:
    """``min{1, eps (|log eps| + 1)}`` or ``min{eps, 1}``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if kind == "log":
        return min(1.0, eps * (abs(math.log(eps)) + 1.0))
    if kind == "linear":
        return min(eps, 1.0)
    raise ValueError(f"unknown envelope kind {kind!r}")


def lower_envelope_array(eps, kind: str = "log") -> np.ndarray:
    e = np.asarray(eps, dtype=float)
    if np.any(e <= 0):
        raise ValueError("eps must be positive")
    if kind == "log":
        return np.minimum(1.0, e * (np.abs(np.log(e)) + 1.0))
    if kind == "linear":
        return np.minimum(e, 1.0)
    raise ValueError(f"unknown envelope kind {kind!r}")


__all__ = [
    "NormalSet", "austenite_normals_linear", "hex_rhombic_normal_set",
    "TwinningSolutions", "twinning_with_identity", "twinning_residual",
    "nonlinear_normal_set", "IncompatibilityResult", "incompatibility_constant",
    "defect_at", "full_form_defect", "OscillationThresholds", "oscillation_thresholds",
    "trace_oscillation", "lower_envelope", "lower_envelope_array",
]
