"""Command-line entry point: ``martenscale <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from .compatibility import hex_rhombic_normal_set, incompatibility_constant, nonlinear_normal_set
from .geometry import GraphPatch, Polygon, Segment, flatten_patch
from .scenarios import Scenario, ScenarioError, load_scenario, parse_wells, preset_scenario, scenario_from_dict

log = logging.getLogger("martenscale")

SUBCOMMANDS = ("wells", "normals", "dcheck", "construct", "relax", "sweep", "fit", "flatten", "selftest")


class UsageError(Exception):
    pass


def _setup_logging():
    level = os.environ.get("MARTENSCALE_LOG", "error").lower()
    if level not in ("error", "info", "debug"):
        level = "error"
    logging.basicConfig(level=getattr(logging, level.upper()), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--scenario", metavar="PATH", help="scenario JSON file or preset name")
    p.add_argument("--wells", help="hex_rhombic or oblique:n=4,a=1.1[,branch=plus|minus]")
    p.add_argument("--eps-min", type=float)
    p.add_argument("--eps-max", type=float)
    p.add_argument("--eps-count", type=int)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("csv", "json", "svg"))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="martenscale",
                                     description="Energy scaling experiments for planar martensitic wells.")
    sub = parser.add_subparsers(dest="cmd", metavar="{" + ",".join(SUBCOMMANDS) + "}")
    common = _common()
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "fit":
            sp.add_argument("--input", metavar="CSV", help="sweep CSV to fit")
            sp.add_argument("--source", choices=("construction", "relaxed"), default="construction")
        if name == "flatten":
            sp.add_argument("--radius", type=float, action="append")
        if name in ("relax", "sweep"):
            sp.add_argument("--grid", type=int, help="grid cells per side")
            sp.add_argument("--restarts", type=int)
            sp.add_argument("--max-iters", type=int)
        if name in ("construct", "relax"):
            sp.add_argument("--dump", metavar="PATH", help="write fields as JSON")
    return parser


def _scenario(args, default: str | None = None) -> Scenario:
    ref = args.scenario or default
    if ref is None:
        raise UsageError("--scenario is required")
    if os.path.exists(ref):
        sc = load_scenario(ref)
    else:
        name = os.path.splitext(os.path.basename(ref))[0]
        try:
            doc = preset_scenario(name)
        except ValueError:
            raise UsageError(f"scenario file not found: {ref}") from None
        sc = scenario_from_dict(doc)
    if args.wells:
        sc.wells = parse_wells(args.wells)
    return sc


def _eps_list(args, sc: Scenario) -> list[float]:
    from .scaling import default_eps

    exp = sc.experiment
    if args.eps_min is None and args.eps_max is None and args.eps_count is None and "eps" in exp:
        return sorted((float(e) for e in exp["eps"]), reverse=True)
    lo = args.eps_min if args.eps_min is not None else exp.get("eps_min", 2.0 ** -14)
    hi = args.eps_max if args.eps_max is not None else exp.get("eps_max", 2.0 ** -4)
    n = args.eps_count if args.eps_count is not None else exp.get("eps_count", 11)
    if not (0 < lo <= hi):
        raise UsageError("need 0 < eps-min <= eps-max")
    return default_eps(int(n), float(hi), float(lo))


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _json(doc) -> str:
    def conv(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        raise TypeError(type(o))
    return json.dumps(doc, indent=2, default=conv)


# ---------------------------------------------------------------- subcommands

def cmd_wells(args):
    W = parse_wells(args.wells) if args.wells else _scenario(args, "unit_square").wells
    _emit(args, _json({"seed": args.seed, "wells": W.to_dict()}))


def cmd_normals(args):
    W = parse_wells(args.wells) if args.wells else _scenario(args, "unit_square").wells
    ns = hex_rhombic_normal_set() if W.name == "hex_rhombic" else nonlinear_normal_set(W) \
        if W.mode == "nonlinear" else None
    if ns is None:
        from .compatibility import austenite_normals_linear
        ns = austenite_normals_linear(W.linear[0])
        for e in W.linear[1:]:
            ns = ns.union(austenite_normals_linear(e))
    doc = ns.to_dict()
    doc.update(count=len(ns), wells=W.name, seed=args.seed)
    _emit(args, _json(doc))


def cmd_dcheck(args):
    sc = _scenario(args)
    out = {"scenario": sc.name, "wells": sc.wells.name, "seed": args.seed, "edges": []}
    if isinstance(sc.domain, Polygon):
        V = sc.domain.vertices
        for k in sc.boundary_edges():
            seg = Segment(V[k], V[(k + 1) % len(V)])
            r = incompatibility_constant(seg, sc.wells)
            out["edges"].append({"edge": k, "a": V[k].tolist(), "b": V[(k + 1) % len(V)].tolist(),
                                 "d": r.d, "argmin_well": r.argmin_well_index})
        out["d"] = min(e["d"] for e in out["edges"]) if out["edges"] else None
    else:
        r = incompatibility_constant(sc.domain, sc.wells)
        out.update(r.to_dict())
    _emit(args, _json(out))


def _relax_cfg(args, sc):
    from .relaxer import RelaxConfig

    cfg = dict(sc.experiment.get("config", {}))
    if getattr(args, "restarts", None):
        cfg["restarts"] = args.restarts
    if getattr(args, "max_iters", None):
        cfg["max_iters"] = args.max_iters
    cfg["seed"] = args.seed
    return RelaxConfig(**cfg)


def _sweep(args, sc: Scenario, sources):
    from .scaling import SweepSpec, run_sweep

    if sc.preset not in ("unit_square", "compatible_triangle"):
        raise UsageError("sweeps need the unit_square or compatible_triangle preset domain")
    grid = getattr(args, "grid", None) or sc.experiment.get("grid_n", 128)
    spec = SweepSpec(sc.preset, _eps_list(args, sc), tuple(sources), grid_n=int(grid),
                     relax=_relax_cfg(args, sc), threads=max(1, args.threads))
    return run_sweep(spec, sc.wells)


def _report_out(args, report, default_fmt="csv"):
    from .scaling import emit_report, fit_dichotomy

    fmt = args.format or default_fmt
    try:
        fit = fit_dichotomy(report)
    except ValueError:
        fit = None
    text = emit_report(report, fit, fmt, None)
    _emit(args, text)
    if fit is not None:
        print(f"verdict: {fit.verdict} (c_lin={fit.c_lin:.4g}, rms_lin={fit.rms_lin:.3g}, "
              f"c_log={fit.c_log:.4g}, rms_log={fit.rms_log:.3g}) seed={args.seed}", file=sys.stderr)
    return fit


def cmd_construct(args):
    sc = _scenario(args)
    report = _sweep(args, sc, ["construction"])
    if args.dump and sc.preset == "compatible_triangle":
        from .scaling import star_depth_for
        fields = {repr(r["eps"]): star_depth_for(r["eps"], sc.domain, sc.wells)[1].to_dict() for r in report.rows}
        with open(args.dump, "w") as fh:
            json.dump(fields, fh)
    _report_out(args, report)


def cmd_relax(args):
    sc = _scenario(args)
    report = _sweep(args, sc, ["construction", "relaxed"])
    _report_out(args, report)


def cmd_sweep(args):
    sc = _scenario(args)
    sources = sc.experiment.get("sources", ["construction"])
    report = _sweep(args, sc, sources)
    fit = _report_out(args, report)
    if fit is not None and not args.out:
        print(f"verdict: {fit.verdict}")


def cmd_fit(args):
    from .scaling import fit_dichotomy, report_from_csv

    if not args.input:
        raise UsageError("fit needs --input CSV")
    with open(args.input) as fh:
        report = report_from_csv(fh.read())
    fit = fit_dichotomy(report, args.source)
    _emit(args, _json(dict(fit.to_dict(), seed=args.seed)))


def cmd_flatten(args):
    sc = _scenario(args, "unit_circle")
    if not isinstance(sc.domain, GraphPatch):
        raise UsageError("flatten needs a graph_patch domain")
    radii = args.radius or sc.experiment.get("radii", [0.2, 0.1, 0.05, 0.025])
    rows = []
    for r in radii:
        D = flatten_patch(sc.domain, float(r))
        rows.append(dict(r=float(r), r0=D.r0, **D.bounds))
    _emit(args, _json({"scenario": sc.name, "rows": rows, "seed": args.seed}))


def cmd_selftest(args):
    from .selftest import run_selftest

    return 0 if run_selftest() else 1


HANDLERS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cmd is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        rc = HANDLERS[args.cmd](args)
        return int(rc or 0)
    except ScenarioError as exc:
        where = f" at line {exc.line}, column {exc.column}" if exc.line is not None else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return 3
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
