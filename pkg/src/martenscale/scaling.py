"""Epsilon sweeps, envelope fits and report emission."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .compatibility import lower_envelope_array
from .geometry import Polygon, admissible_triangle, unit_square
from .microstructure.complex import PAField, exact_energy
from .microstructure.cover import cover_energy, cover_values, depth_candidates, optimal_depth, plan_cover
from .microstructure.star import star_block
from .relaxer import DiscreteField, Grid, RelaxConfig, dirichlet_nodes, discrete_energy, interpolate, minimize
from .wells import WellSet, hex_rhombic_wells

log = logging.getLogger(__name__)

SCENARIOS = ("compatible_triangle", "unit_square")
VERDICTS = ("linear", "logarithmic", "inconclusive")
CSV_COLUMNS = ["eps", "elastic_construction", "surface_construction", "total_construction",
               "total_relaxed", "verdict_running"]


def default_eps(count: int = 11, eps_max: float = 2.0 ** -4, eps_min: float = 2.0 ** -14) -> list[float]:
    """Log-spaced, strictly decreasing grid from ``eps_max`` down to ``eps_min``."""
    if count < 1:
        raise ValueError("eps count must be positive")
    if count == 1:
        return [float(eps_max)]
    # powers of two stay exact
    return [float(x) for x in 2.0 ** np.linspace(math.log2(eps_max), math.log2(eps_min), count)]


def compatible_triangle() -> Polygon:
    """Unit equilateral triangle with austenite-compatible edges, centred at 0."""
    T = admissible_triangle(1.0, 15.0)
    return Polygon(T.vertices - T.vertices.mean(axis=0))


def scenario_domain(name: str) -> Polygon:
    if name == "compatible_triangle":
        return compatible_triangle()
    if name == "unit_square":
        return unit_square()
    raise ValueError(f"unknown scenario {name!r}")


@dataclass
class SweepSpec:
    scenario: str
    eps: tuple
    sources: tuple = ("construction",)
    out: dict = field(default_factory=dict)
    grid_n: int = 128
    relax: RelaxConfig = field(default_factory=RelaxConfig)
    threads: int = 1

    def __post_init__(self):
        self.eps = tuple(float(e) for e in self.eps)
        if not self.eps:
            raise ValueError("empty eps list")
        if any(not (e > 0 and math.isfinite(e)) for e in self.eps):
            raise ValueError("eps values must be positive and finite")
        if any(b >= a for a, b in zip(self.eps, self.eps[1:])):
            raise ValueError("eps must be strictly decreasing")
        bad = set(self.sources) - {"construction", "relaxed"}
        if bad or not self.sources:
            raise ValueError(f"unknown sources {sorted(bad)}")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")


@dataclass
class FitResult:
    c_lin: float
    c_log: float
    rms_lin: float
    rms_log: float
    verdict: str
    n: int = 0
    source: str = "construction"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class SweepReport:
    scenario: str
    rows: list
    meta: dict = field(default_factory=dict)

    def column(self, key: str) -> np.ndarray:
        return np.array([r.get(key, np.nan) for r in self.rows], dtype=float)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "meta": self.meta, "rows": self.rows}


def _hash(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------- constructions

def star_depth_for(eps: float, T: Polygon, W: WellSet, max_depth: int = 12) -> tuple:
    """Smallest star depth whose elastic energy is at most ``eps``."""
    for N in range(1, max_depth + 1):
        f = star_block(T.vertices, N, W)
        e = exact_energy(f, W)
        if e.elastic <= eps:
            return N, f, e
    raise ValueError(f"no star depth up to {max_depth} reaches eps={eps:g}")


class _Scenario:
    """Construction builder for one scenario (caches plans and star blocks)."""

    def __init__(self, name: str, W: WellSet | None = None, eps_min: float = 2.0 ** -14):
        self.name = name
        self.W = W or hex_rhombic_wells()
        self.domain = scenario_domain(name)
        self.plan = None
        if name == "unit_square":
            self.plan = plan_cover(self.domain, depth_candidates(min(eps_min, 0.5))[-1], lip=1.0)

    def construct(self, eps: float) -> dict:
        if self.name == "compatible_triangle":
            N, f, e = star_depth_for(eps, self.domain, self.W)
            return {"depth": N, "energy": e, "field": f}
        m = optimal_depth(eps, self.plan, self.W)
        return {"depth": m, "energy": cover_energy(self.plan, m, eps, self.W), "field": None}

    def warm_start(self, eps: float, built: dict, g: Grid, fixed) -> DiscreteField:
        if built["field"] is not None:
            d = interpolate(built["field"], g, outside="zero", fixed=fixed)
        else:
            v = cover_values(self.plan, built["depth"], eps, g.nodes().reshape(-1, 2), self.W)
            d = DiscreteField(g, v.reshape(g.node_shape + (2,)), fixed)
        d.values[fixed] = 0.0
        return d


def run_sweep(spec: SweepSpec, W: WellSet | None = None) -> SweepReport:
    """Construction (and optionally relaxed) energies over the eps grid."""
    sc = _Scenario(spec.scenario, W, min(spec.eps))
    W = sc.W
    g = fixed = None
    if "relaxed" in spec.sources:
        g = Grid.for_domain(sc.domain, spec.grid_n)
        fixed = dirichlet_nodes(g, sc.domain)

    def work(eps):
        try:
            built = sc.construct(eps)
        except Exception as exc:  # record the offending eps, then abort
            raise RuntimeError(f"construction failed at eps={eps:g}: {exc}") from exc
        e = built["energy"]
        row = {
            "eps": eps,
            "depth": int(built["depth"]),
            "elastic_construction": float(e.elastic),
            "surface_construction": float(e.surface),
            "total_construction": float(e.total(eps)),
            "total_relaxed": float("nan"),
            "flags": "",
        }
        if "relaxed" in spec.sources:
            bc = DiscreteField(g, np.zeros(g.node_shape + (2,)), fixed)
            ws = sc.warm_start(eps, built, g, fixed)
            res = minimize(sc.domain, bc, W, eps, spec.relax, warm_starts=[ws])
            row["total_warm_discrete"] = res.warm_totals[0]
            row["total_relaxed"] = res.total
            row["elastic_relaxed"] = res.energy.elastic
            row["surface_relaxed"] = res.energy.surface
            row["flags"] = res.flag
            log.info("eps=%.3e relaxed %.5e (warm start %.5e)", eps, res.total, res.warm_totals[0])
        return row

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            rows = list(pool.map(work, spec.eps))
    else:
        rows = [work(e) for e in spec.eps]
    # running verdict over the rows seen so far (in eps order)
    for k in range(len(rows)):
        try:
            rows[k]["verdict_running"] = fit_rows(rows[: k + 1], "construction").verdict
        except ValueError:
            rows[k]["verdict_running"] = ""
    meta = {
        "domain_hash": _hash(sc.domain.to_dict()),
        "wells_hash": _hash(W.to_dict()),
        "version": f"martenscale-{__version__}",
        "sources": list(spec.sources),
        "grid_n": spec.grid_n if "relaxed" in spec.sources else None,
        "seed": spec.relax.seed,
    }
    report = SweepReport(spec.scenario, rows, meta)
    for fmt, path in spec.out.items():
        fit = fit_dichotomy(report) if len(rows) >= 5 else None
        emit_report(report, fit, fmt, path)
    return report


# ---------------------------------------------------------------- fitting

def _fit(E, f):
    c = float(np.dot(E, f) / np.dot(f, f))
    rel = (E - c * f) / E
    return c, float(np.sqrt(np.mean(rel * rel)))


def fit_arrays(eps, E, source: str = "construction") -> FitResult:
    """Closed-form fits of ``E`` against ``c min{eps,1}`` and ``c min{1, eps(|log eps|+1)}``."""
    eps = np.asarray(eps, dtype=float)
    E = np.asarray(E, dtype=float)
    keep = (eps <= 2.0 ** -4 * (1 + 1e-12)) & np.isfinite(E)
    if keep.sum() < 5:
        raise ValueError("need at least 5 rows with eps <= 2^-4")
    eps, E = eps[keep], E[keep]
    if np.any(E <= 0):
        raise ValueError("energies must be positive for relative residuals")
    c_lin, r_lin = _fit(E, lower_envelope_array(eps, "linear"))
    c_log, r_log = _fit(E, lower_envelope_array(eps, "log"))
    if r_lin <= 0.5 * r_log:
        verdict = "linear"
    elif r_log <= 0.5 * r_lin:
        verdict = "logarithmic"
    else:
        verdict = "inconclusive"
    return FitResult(c_lin, c_log, r_lin, r_log, verdict, int(keep.sum()), source)


def fit_rows(rows, source: str = "construction") -> FitResult:
    key = {"construction": "total_construction", "relaxed": "total_relaxed"}.get(source)
    if key is None:
        raise ValueError("source must be 'construction' or 'relaxed'")
    return fit_arrays([r["eps"] for r in rows], [r[key] for r in rows], source)


def fit_dichotomy(report: SweepReport, source: str = "construction") -> FitResult:
    return fit_rows(report.rows, source)


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return repr(float(v))


def report_to_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(r.get(k, "")) for k in CSV_COLUMNS])
    return buf.getvalue()


def report_from_csv(text: str, scenario: str = "") -> SweepReport:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        row = {k: float(rec[k]) for k in CSV_COLUMNS[:-1]}
        row["verdict_running"] = rec["verdict_running"]
        rows.append(row)
    return SweepReport(scenario, rows)


def report_to_json(report: SweepReport, fit: FitResult | None = None) -> str:
    doc = report.to_dict()
    doc["rows"] = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()}
                   for r in report.rows]
    if fit is not None:
        doc["fit"] = fit.to_dict()
        doc["verdict"] = fit.verdict
    return json.dumps(doc, indent=2)


def report_to_svg(report: SweepReport, fit: FitResult | None = None) -> str:
    """800x600 log2-log2 chart: both envelopes plus one polyline per source."""
    eps = report.column("eps")
    series = [("construction", report.column("total_construction"))]
    relaxed = report.column("total_relaxed")
    if np.any(np.isfinite(relaxed)):
        series.append(("relaxed", relaxed))
    c_lin = fit.c_lin if fit else 1.0
    c_log = fit.c_log if fit else 1.0
    env = [("c min{eps,1}", c_lin * lower_envelope_array(eps, "linear")),
           ("c min{1,eps(|log eps|+1)}", c_log * lower_envelope_array(eps, "log"))]
    allv = np.concatenate([s[np.isfinite(s) & (s > 0)] for _, s in series + env])
    lx = np.log2(eps)
    ylo, yhi = math.floor(np.log2(allv.min())), math.ceil(np.log2(allv.max()))
    if yhi == ylo:
        yhi += 1
    xlo, xhi = float(lx.min()), float(lx.max())
    if xhi == xlo:
        xhi += 1
    L, R, T, B = 90, 760, 40, 540

    def px(x):
        return L + (x - xlo) / (xhi - xlo) * (R - L)

    def py(y):
        return B - (y - ylo) / (yhi - ylo) * (B - T)

    out = ['<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 600" width="800" height="600">',
           '<rect x="0" y="0" width="800" height="600" fill="white"/>',
           f'<line x1="{L}" y1="{B}" x2="{R}" y2="{B}" stroke="black"/>',
           f'<line x1="{L}" y1="{B}" x2="{L}" y2="{T}" stroke="black"/>',
           f'<text x="{(L + R) / 2}" y="585" text-anchor="middle" font-size="14">log2 eps</text>',
           f'<text x="20" y="{(T + B) / 2}" text-anchor="middle" font-size="14" '
           f'transform="rotate(-90 20 {(T + B) / 2})">log2 energy</text>',
           f'<text x="{(L + R) / 2}" y="25" text-anchor="middle" font-size="15">{report.scenario}</text>']
    for k in range(int(math.ceil(xlo)), int(math.floor(xhi)) + 1):
        out.append(f'<text x="{px(k):.1f}" y="{B + 18}" text-anchor="middle" font-size="11">{k}</text>')
    for k in range(ylo, yhi + 1):
        out.append(f'<text x="{L - 8}" y="{py(k) + 4:.1f}" text-anchor="end" font-size="11">{k}</text>')
    colors = {"construction": "#1f4e9c", "relaxed": "#c0392b"}
    styles = ["#888888", "#2e8b57"]
    for idx, (name, v) in enumerate(env):
        pts = " ".join(f"{px(x):.2f},{py(math.log2(y)):.2f}" for x, y in zip(lx, v))
        out.append(f'<polyline class="envelope" data-name="{name}" points="{pts}" fill="none" '
                   f'stroke="{styles[idx]}" stroke-dasharray="6,4"/>')
    for name, v in series:
        ok = np.isfinite(v) & (v > 0)
        pts = " ".join(f"{px(x):.2f},{py(math.log2(y)):.2f}" for x, y in zip(lx[ok], v[ok]))
        out.append(f'<polyline class="data" data-name="{name}" points="{pts}" fill="none" '
                   f'stroke="{colors[name]}" stroke-width="2"/>')
    y = T + 10
    for name, col in [(n, styles[i]) for i, (n, _) in enumerate(env)] + [(n, colors[n]) for n, _ in series]:
        out.append(f'<text x="{R - 230}" y="{y}" font-size="12" fill="{col}">{name}</text>')
        y += 16
    if fit is not None:
        out.append(f'<text x="{R - 230}" y="{y}" font-size="12">verdict: {fit.verdict}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(report: SweepReport, fit: FitResult | None, fmt: str, path: str | None = None) -> str:
    """Render the report as ``csv``, ``json`` or ``svg``; write it when ``path`` is given."""
    if not report.rows:
        raise ValueError("empty report")
    if fmt == "csv":
        text = report_to_csv(report)
    elif fmt == "json":
        text = report_to_json(report, fit)
    elif fmt == "svg":
        text = report_to_svg(report, fit)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        d = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(d) or not os.access(d, os.W_OK):
            raise OSError(f"unwritable path {path!r}")
        with open(path, "w") as fh:
            fh.write(text)
    return text


__all__ = [
    "SweepSpec", "SweepReport", "FitResult", "run_sweep", "fit_dichotomy", "fit_arrays",
    "fit_rows", "emit_report", "report_to_csv", "report_from_csv", "report_to_json",
    "report_to_svg", "default_eps", "compatible_triangle", "scenario_domain", "star_depth_for",
]
