"""Scenario documents: one JSON file describing domain, wells, boundary data and experiment."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .geometry import GraphPatch, Polygon, domain_from_dict, unit_circle_patch
from .wells import WellSet, hex_rhombic_wells, oblique_wells

EXPERIMENTS = ("sweep", "relax", "construct", "normals", "dcheck", "flatten")


class ScenarioError(ValueError):
    """Malformed scenario; ``line``/``column`` locate JSON syntax errors."""

    def __init__(self, msg, line=None, column=None):
        super().__init__(msg)
        self.line = line
        self.column = column


@dataclass
class Scenario:
    name: str
    domain: object
    wells: WellSet
    preset: str | None = None
    boundary: object = "all"
    experiment: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.experiment.get("type", "sweep")

    def boundary_edges(self) -> list[int]:
        if not isinstance(self.domain, Polygon):
            return []
        n = len(self.domain.vertices)
        if self.boundary in ("all", None):
            return list(range(n))
        edges = [int(e) for e in self.boundary]
        if any(e < 0 or e >= n for e in edges):
            raise ScenarioError("boundary edge index out of range")
        return edges


def parse_wells(spec) -> WellSet:
    """``"hex_rhombic"``, ``"oblique:n=4,a=1.1,branch=plus"`` or a dict."""
    if isinstance(spec, WellSet):
        return spec
    if isinstance(spec, str):
        if spec == "hex_rhombic":
            return hex_rhombic_wells()
        if spec.startswith("oblique"):
            kv = {}
            rest = spec.partition(":")[2]
            for part in filter(None, rest.split(",")):
                k, _, v = part.partition("=")
                kv[k.strip()] = v.strip()
            if "a" not in kv:
                raise ScenarioError("oblique wells need a=...")
            return oblique_wells(int(kv.get("n", 4)), float(kv["a"]), kv.get("branch") or None)
        raise ScenarioError(f"unknown wells {spec!r}")
    if isinstance(spec, dict):
        kind = spec.get("kind", spec.get("name"))
        if kind == "hex_rhombic":
            return hex_rhombic_wells()
        if kind == "oblique":
            return oblique_wells(int(spec.get("n", 4)), float(spec["a"]), spec.get("branch"))
        raise ScenarioError(f"unknown wells kind {kind!r}")
    raise ScenarioError("wells spec must be a string or an object")


def _domain(doc):
    if isinstance(doc, str):
        doc = {"type": "preset", "name": doc}
    if "preset" in doc:
        doc = dict(doc, type="preset", name=doc["preset"])
    preset = doc.get("name") if doc.get("type") == "preset" else None
    if preset == "compatible_triangle":
        # centred copy, as used by the sweeps
        from .scaling import compatible_triangle
        return compatible_triangle(), preset
    if preset == "unit_circle":
        return unit_circle_patch(float(doc.get("rho", 0.4))), preset
    try:
        return domain_from_dict(doc), preset
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"bad domain spec: {exc}") from exc


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    if "domain" not in doc:
        raise ScenarioError("scenario needs a domain")
    try:
        dom, preset = _domain(doc["domain"])
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    try:
        W = parse_wells(doc.get("wells", "hex_rhombic"))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    exp = dict(doc.get("experiment", {}))
    if exp.get("type", "sweep") not in EXPERIMENTS:
        raise ScenarioError(f"unknown experiment {exp.get('type')!r}")
    if exp.get("type") in ("sweep", "relax", "construct") and W.mode != "linear" and preset is not None:
        raise ScenarioError("well mode inconsistent with the experiment")
    if exp.get("type") == "flatten" and not isinstance(dom, GraphPatch):
        raise ScenarioError("flatten needs a graph_patch domain")
    return Scenario(doc.get("name", preset or "scenario"), dom, W, preset, doc.get("boundary", "all"), exp)


def parse_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario parse error: {exc.msg}", exc.lineno, exc.colno) from exc
    return scenario_from_dict(doc)


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def preset_scenario(name: str) -> dict:
    """Scenario documents shipped with the package."""
    if name == "unit_square":
        return {"name": "unit_square", "domain": {"preset": "unit_square"}, "wells": "hex_rhombic",
                "boundary": "all", "experiment": {"type": "sweep", "sources": ["construction"]}}
    if name == "compatible_triangle":
        return {"name": "compatible_triangle", "domain": {"preset": "compatible_triangle"},
                "wells": "hex_rhombic", "boundary": "all",
                "experiment": {"type": "sweep", "sources": ["construction"]}}
    if name == "unit_circle":
        return {"name": "unit_circle", "wells": "hex_rhombic",
                "domain": {"preset": "unit_circle"},
                "experiment": {"type": "flatten", "radii": [0.2, 0.1, 0.05, 0.025]}}
    raise ValueError(f"unknown preset scenario {name!r}")


def domain_label(dom) -> str:
    if isinstance(dom, Polygon):
        return f"polygon[{len(dom.vertices)}]"
    return type(dom).__name__


__all__ = ["Scenario", "ScenarioError", "parse_wells", "scenario_from_dict", "parse_scenario",
           "load_scenario", "preset_scenario", "domain_label", "EXPERIMENTS"]
