"""Austenite/variant laminates in the linear theory."""
from __future__ import annotations


import numpy as np

from ..algebra2d import J, as_unit
from ..compatibility import austenite_normals_linear
from ..wells import WellSet, hex_rhombic_wells
from .complex import CellComplex, PAField
from .cover import _clip_convex, _dedupe_polygon


def laminate_gradient(e: np.ndarray, normal) -> np.ndarray:
    """``e + w J`` with zero action on the interface tangent."""
    n = as_unit(normal)
    t = np.array([-n[1], n[0]])
    w = -float((J @ t) @ (e @ t))
    return e + w * J


def laminate(variant_index: int, normal, period: float, theta: float,
             strip=(0.0, 0.0, 1.0, 1.0), W: WellSet | None = None) -> PAField:
    """Alternating austenite and variant bands with the given normal.

    ``variant_index`` is 1-based, ``theta`` the variant volume fraction and
    ``strip = (x0, y0, x1, y1)`` the rectangle.  Austenite bands carry zero
    gradient; the variant bands carry ``e_j + w J`` and the translations make
    the field continuous (the first band touching the lowest level set of
    ``x . n`` is austenite with zero displacement).
    """
    W = W or hex_rhombic_wells()
    if W.mode != "linear":
        raise ValueError("mode mismatch")
    if not period > 0 or not 0 < theta < 1:
        raise ValueError("need period > 0 and 0 < theta < 1")
    e = W.linear[variant_index - 1]
    n = as_unit(normal)
    if not austenite_normals_linear(e).contains(n):
        raise ValueError("normal is not compatible with this variant")
    Av = laminate_gradient(e, n)
    x0, y0, x1, y1 = map(float, strip)
    rect = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    proj = rect @ n
    smin, smax = float(proj.min()), float(proj.max())
    # band boundaries: austenite [kP, kP + (1-theta)P], variant up to (k+1)P
    cuts = []
    k = 0
    while smin + k * period < smax:
        cuts.append((smin + k * period, smin + (k + (1 - theta)) * period, 0))
        cuts.append((smin + (k + (1 - theta)) * period, smin + (k + 1) * period, 1))
        k += 1
    tol = 1e-11 * max(1.0, float(np.max(np.abs(rect))))
    verts, cells, A, b = [], [], [], []
    offset = 0.0  # accumulated displacement along a (u = a * g(x.n))
    a = Av @ n  # Av = a (x) n
    tvec = np.array([-n[1], n[0]])
    mid = float(rect.mean(axis=0) @ tvec)
    ext = 2.0 * float(np.max(np.linalg.norm(rect - rect.mean(axis=0), axis=1)))
    for lo, hi, phase in cuts:
        lo_c, hi_c = max(lo, smin), min(hi, smax)
        if hi_c - lo_c <= tol:
            continue
        band = np.array([
            lo_c * n + (mid - ext) * tvec,
            hi_c * n + (mid - ext) * tvec,
            hi_c * n + (mid + ext) * tvec,
            lo_c * n + (mid + ext) * tvec,
        ])
        P = _dedupe_polygon(_clip_convex(rect, band), tol)
        if len(P) < 3:
            continue
        idx = []
        for p in P:
            hit = [i for i, q in enumerate(verts) if np.linalg.norm(q - p) <= tol]
            if hit:
                idx.append(hit[0])
            else:
                verts.append(p)
                idx.append(len(verts) - 1)
        cells.append(idx)
        if phase == 0:
            A.append(np.zeros((2, 2)))
            b.append(offset * a)
        else:
            # u = a (x.n - lo) + offset a
            A.append(Av.copy())
            b.append(a * (offset - lo_c))
            offset += hi_c - lo_c
    cx = CellComplex(np.array(verts), cells)
    f = PAField(cx, np.array(A), np.array(b), "displacement",
                {"variant": variant_index, "normal": n.tolist(), "period": period, "theta": theta})
    return _conform_small(f)


def _conform_small(f: PAField) -> PAField:
    from .cover import conform
    return conform(f)


__all__ = ["laminate", "laminate_gradient"]
