"""Well sets of the hexagonal-to-rhombic and n-gon-to-oblique transformations."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra2d import rotation

S3 = math.sqrt(3.0)


@dataclass(frozen=True)
class WellSet:
    """Stress-free states.

    ``mode == "linear"``: ``linear`` holds the symmetric strains ``e^(j)``.
    ``mode == "nonlinear"``: the wells are the orbits ``SO(2) U_j``; ``U1`` is the
    base variant, ``variants`` the conjugates ``P U1 P^T`` and
    ``rotation_branch`` the rotation making ``rotation_branch @ U1`` rank-one
    connected to the identity.
    """

    mode: str
    linear: tuple = ()
    U1: np.ndarray | None = None
    variants: tuple = ()
    rotation_branch: np.ndarray | None = None
    a: float | None = None
    ngon: int | None = None
    point_group: tuple = ()
    degenerate: bool = False
    name: str = ""
    branch: str | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def wells(self) -> list[np.ndarray]:
        """Representative matrices: strains, or ``rotation_branch @ U_j``."""
        if self.mode == "linear":
            return list(self.linear)
        Q = self.rotation_branch if self.rotation_branch is not None else np.eye(2)
        return [Q @ U for U in self.variants]

    def __len__(self) -> int:
        return len(self.linear) if self.mode == "linear" else len(self.variants)

    def to_dict(self) -> dict:
        doc = {"mode": self.mode, "name": self.name}
        if self.mode == "linear":
            doc["matrices"] = [np.asarray(e).ravel().tolist() for e in self.linear]
        else:
            doc.update(
                ngon=self.ngon,
                a=self.a,
                branch=self.branch,
                degenerate=self.degenerate,
                U1=np.asarray(self.U1).ravel().tolist(),
                rotation_branch=np.asarray(self.rotation_branch).ravel().tolist(),
                matrices=[np.asarray(U).ravel().tolist() for U in self.variants],
            )
        return doc

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def hex_rhombic_wells() -> WellSet:
    e1 = 0.5 * np.array([[1.0, -S3], [-S3, -1.0]])
    e2 = np.array([[-1.0, 0.0], [0.0, 1.0]])
    e3 = 0.5 * np.array([[1.0, S3], [S3, -1.0]])
    return WellSet(mode="linear", linear=(e1, e2, e3), name="hex_rhombic")


def with_austenite(W: WellSet) -> WellSet:
    """Linear well set with the zero strain added (austenite as a well)."""
    if W.mode != "linear":
        raise ValueError("mode mismatch")
    return WellSet(mode="linear", linear=tuple(W.linear) + (np.zeros((2, 2)),),
                   name=(W.name or "custom") + "+austenite")


_SQUARE = (
    np.eye(2),
    np.array([[-1.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, -1.0], [1.0, 0.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
)

_HEXAGONAL = (
    np.eye(2),
    np.array([[-1.0, 0.0], [0.0, 1.0]]),
    0.5 * np.array([[1.0, S3], [-S3, 1.0]]),
    0.5 * np.array([[-1.0, S3], [S3, 1.0]]),
    0.5 * np.array([[1.0, -S3], [S3, 1.0]]),
    0.5 * np.array([[1.0, S3], [S3, -1.0]]),
)


def point_group(kind: str) -> list[np.ndarray]:
    """The printed point-group representatives (``square`` or ``hexagonal``)."""
    if kind == "square":
        return [P.copy() for P in _SQUARE]
    if kind == "hexagonal":
        return [P.copy() for P in _HEXAGONAL]
    raise ValueError(f"unknown point group {kind!r}")


def dihedral_group(n: int) -> list[np.ndarray]:
    """Rotations by ``2 pi k / n`` and reflections of the regular n-gon."""
    out = [rotation(2 * math.pi * k / n) for k in range(n)]
    refl = np.array([[1.0, 0.0], [0.0, -1.0]])
    out += [rotation(2 * math.pi * k / n) @ refl for k in range(n)]
    return out


def oblique_U1(ngon: int, a: float) -> np.ndarray:
    phi = (ngon - 2) * math.pi / (2 * ngon)
    if ngon == 4:
        shear = 1.0 / a - a
    elif ngon == 3:
        shear = S3 * (1.0 / a - a)
    else:
        shear = (1.0 / a - a) / math.tan(phi)
    return np.array([[a, shear], [0.0, 1.0 / a]])


def _dedupe(mats, tol=1e-10):
    out = []
    for M in mats:
        if all(np.linalg.norm(M - N) > tol for N in out):
            out.append(M)
    return out


def oblique_wells(ngon: int, a: float, branch: str | None = None) -> WellSet:
    """Square-to-oblique (``ngon=4``), hexagonal-to-oblique (``ngon=3``) and
    general n-gon families.

    ``branch`` selects which of the two rotations ``Q(a)`` is stored:
    ``"plus"`` the larger signed angle, ``"minus"`` the smaller, ``None`` the
    one with the smaller absolute angle.
    """
    # local import: compatibility depends on this module
    from .compatibility import twinning_with_identity

    if int(ngon) != ngon or ngon < 3:
        raise ValueError("ngon must be an integer >= 3")
    if not a > 0:
        raise ValueError("a must be positive")
    ngon = int(ngon)
    a = float(a)
    U1 = oblique_U1(ngon, a)
    if ngon == 4:
        group = point_group("square")
    elif ngon == 3:
        group = point_group("hexagonal")
    else:
        group = dihedral_group(ngon)
    name = {3: "hexagonal_oblique", 4: "square_oblique"}.get(ngon, f"ngon{ngon}_oblique")

    if abs(a - 1.0) < 1e-14:
        return WellSet(
            mode="nonlinear", U1=U1, variants=(U1,), rotation_branch=np.eye(2),
            a=a, ngon=ngon, point_group=tuple(group), degenerate=True, name=name,
            branch=branch,
        )

    variants = _dedupe([P @ U1 @ P.T for P in group])
    sols = twinning_with_identity(U1)
    if not sols:
        raise ValueError("base variant is not rank-one connected to the identity")
    angles = [math.atan2(Q[1, 0], Q[0, 0]) for Q, _, _ in sols]
    order = sorted(range(len(angles)), key=lambda i: angles[i])
    if branch is None:
        pick = min(order, key=lambda i: (abs(angles[i]), angles[i]))
    elif branch == "plus":
        pick = order[-1]
    elif branch == "minus":
        pick = order[0]
    else:
        raise ValueError("branch must be 'plus', 'minus' or None")
    Q = sols[pick][0]
    return WellSet(
        mode="nonlinear", U1=U1, variants=tuple(variants), rotation_branch=Q,
        a=a, ngon=ngon, point_group=tuple(group), name=name, branch=branch,
    )


def well_set_from_dict(doc: dict) -> WellSet:
    """Inverse of :meth:`WellSet.to_dict`; also accepts short scenario specs."""
    kind = doc.get("name") or doc.get("kind")
    if doc.get("mode") == "linear" or kind == "hex_rhombic":
        if "matrices" in doc:
            mats = tuple(np.array(m, dtype=float).reshape(2, 2) for m in doc["matrices"])
            return WellSet(mode="linear", linear=mats, name=kind or "custom")
        return hex_rhombic_wells()
    ngon = int(doc.get("ngon", doc.get("n", 4)))
    return oblique_wells(ngon, float(doc["a"]), doc.get("branch"))
