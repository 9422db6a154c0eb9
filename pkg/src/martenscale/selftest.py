"""Quick invariant suite behind ``martenscale selftest``."""
from __future__ import annotations

import math
import time

import numpy as np

from . import algebra2d as la
from .compatibility import (austenite_normals_linear, hex_rhombic_normal_set, incompatibility_constant,
                            nonlinear_normal_set, oscillation_thresholds, twinning_residual,
                            twinning_with_identity)
from .geometry import Segment, flatten_patch, segment_at_angle, unit_circle_patch, unit_square
from .microstructure import check_continuity, exact_energy, laminate, plan_cover, star_block
from .microstructure.cover import count_bound
from .relaxer import Grid, discrete_energy, dirichlet_nodes, interpolate, slice_energy, zero_field
from .scaling import compatible_triangle, fit_arrays
from .wells import hex_rhombic_wells, oblique_wells


def _rot_dist_oracle(F, U, n=4096):
    th = np.linspace(0, 2 * math.pi, n, endpoint=False)
    c, s = np.cos(th), np.sin(th)
    Q = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], 1)
    d = np.linalg.norm(F[None] - Q @ U, axis=(1, 2))
    k = int(np.argmin(d))
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda t: la.fro(F - la.rotation(t) @ U), bounds=(th[k] - 0.01, th[k] + 0.01),
                          method="bounded", options={"xatol": 1e-13})
    return min(float(d[k]), float(res.fun))


def check_rotation_distance():
    rng = np.random.default_rng(0)
    err = 0.0
    for _ in range(50):
        F, U = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
        err = max(err, abs(la.dist_to_rotated_well(F, U) - _rot_dist_oracle(F, U)))
    return err <= 1e-8, f"max err {err:.1e}"


def check_normals():
    W = hex_rhombic_wells()
    ns = hex_rhombic_normal_set()
    u = austenite_normals_linear(W.linear[0])
    for e in W.linear[1:]:
        u = u.union(austenite_normals_linear(e))
    want = np.radians(15 + 30 * np.arange(6))
    ok = len(ns) == 6 and ns.same_as(u, 1e-10) and np.allclose(np.sort(ns.angles), want, atol=1e-10)
    return ok, f"{len(ns)} directions"


def check_pairwise():
    W = hex_rhombic_wells()
    err = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            D = W.linear[i] - W.linear[j]
            a, n = la.sym_rank_one_decompose(D)
            err = max(err, la.fro(la.sym_outer(a, n) - D))
    return err <= 1e-10, f"max err {err:.1e}"


def check_twinning():
    worst, sizes = 0.0, []
    for ng, lim in ((4, 8), (3, 12)):
        for a in (0.8, 0.9, 1.1, 1.25):
            W = oblique_wells(ng, a)
            ns = nonlinear_normal_set(W)
            sizes.append(len(ns) <= lim)
            for U in W.variants:
                for Q, av, n in twinning_with_identity(U):
                    worst = max(worst, twinning_residual(Q, U, av, n))
    return all(sizes) and worst <= 1e-10, f"max residual {worst:.1e}"


def check_dcheck():
    W = hex_rhombic_wells()
    d0 = incompatibility_constant(segment_at_angle(0.0), W).d
    d15 = incompatibility_constant(segment_at_angle(math.radians(15.0)), W).d
    th = oscillation_thresholds(0.5, 1.0)
    return abs(d0 - 0.5) < 1e-12 and d15 < 1e-12 and th.square_linear == 0.5 / 104, f"d(0)={d0:.3g}"


def check_star():
    T = compatible_triangle().vertices
    W = hex_rhombic_wells()
    S = []
    for N in (1, 2, 3):
        f = star_block(T, N, W)
        rep = check_continuity(f)
        if not rep.passed:
            return False, f"continuity failed at depth {N}"
        S.append(exact_energy(f, W).surface)
    ratio = (S[2] - S[1]) / (S[1] - S[0])
    rho = (2 - math.sqrt(3)) ** 2
    return abs(ratio - rho) < 1e-6, f"ratio {ratio:.8f}"


def check_laminate():
    W = hex_rhombic_wells()
    n = np.array([math.cos(math.radians(45)), math.sin(math.radians(45))])
    f = laminate(2, n, 0.125, 0.5, (0, 0, 1, 1), W)
    E = exact_energy(f, W)
    d = interpolate(f, Grid.box(0, 0, 1, 1, 64))
    De = discrete_energy(d, W)
    return abs(De.surface / E.surface - 1) < 0.1, f"surface ratio {De.surface / E.surface:.3f}"


def check_zero_field():
    W = hex_rhombic_wells()
    dom = unit_square()
    g = Grid.for_domain(dom, 32)
    z = zero_field(g, dirichlet_nodes(g, dom))
    e = discrete_energy(z, W)
    s = slice_energy(z, 0.1, (-0.4, 0.4), W)
    return abs(e.elastic - 2) < 1e-12 and abs(s - 1.6) < 1e-9, f"elastic {e.elastic:.12f}"


def check_cover_counts():
    plan = plan_cover(unit_square(), 8, lip=1.0)
    ok = all(c <= count_bound(l, 1.0) for l, c in enumerate(plan.counts))
    return ok, f"counts {plan.counts}"


def check_fit():
    eps = 2.0 ** -np.arange(4, 15)
    f1 = fit_arrays(eps, 3 * np.minimum(eps, 1))
    f2 = fit_arrays(eps, 0.2 * np.minimum(1, eps * (np.abs(np.log(eps)) + 1)))
    ok = (f1.verdict == "linear" and abs(f1.c_lin - 3) < 1e-10
          and f2.verdict == "logarithmic" and abs(f2.c_log - 0.2) < 1e-10)
    return ok, f"{f1.verdict}/{f2.verdict}"


def check_flatten():
    p = unit_circle_patch()
    C = [flatten_patch(p, r).bounds["C_grad"] for r in (0.2, 0.1, 0.05, 0.025)]
    return max(C) / min(C) <= 4.0, f"C_grad {min(C):.2f}..{max(C):.2f}"


def check_continuity_examples():
    from .microstructure import CellComplex, PAField
    V = np.array([[0, 0], [1, 0], [2, 0], [2, 1], [1, 1], [0, 1]], float)
    cx = CellComplex(V, [[0, 1, 4, 5], [1, 2, 3, 4]])
    A1 = np.array([[0.1, 0.2], [0.3, 0.4]])
    a = np.array([0.3, -0.7])
    good = PAField(cx, [A1, A1 + np.outer(a, [1.0, 0.0])], [np.zeros(2), -a])
    D = np.array([[1.0, 0.4], [-0.2, 0.8]])
    bad = PAField(cx, [np.zeros((2, 2)), -D], [np.zeros(2), np.zeros(2)])
    rb = check_continuity(bad)
    sv = np.linalg.svd(D, compute_uv=False)[1]
    ok = check_continuity(good).passed and not rb.passed and abs(rb.max_rank_residual - sv) < 1e-14
    return ok, f"rank residual {rb.max_rank_residual:.6f}"


def check_exact_energy_examples():
    from .microstructure import CellComplex, PAField
    W = hex_rhombic_wells()
    sq = CellComplex(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float), [[0, 1, 2, 3]])
    e0 = exact_energy(PAField(sq, [np.zeros((2, 2))], [np.zeros(2)]), W)
    e1 = exact_energy(PAField(sq, [W.linear[0]], [np.zeros(2)]), W)
    ok = abs(e0.elastic - 2) < 1e-14 and e0.surface == 0 and e1.elastic < 1e-28
    return ok, f"zero field {e0.elastic:.3f}"


def check_laminate_examples():
    from .compatibility import austenite_normals_linear
    from .wells import with_austenite
    W = hex_rhombic_wells()
    n = austenite_normals_linear(W.linear[1]).directions[0]
    f = laminate(2, n, 0.1, 0.5, (0, 0, 1, 1), W)
    jump = float(np.linalg.norm(f.A, axis=(1, 2)).max())
    E = exact_energy(f, W)
    ok = (check_continuity(f).passed and exact_energy(f, with_austenite(W)).elastic < 1e-24
          and abs(E.surface / (2 * jump / 0.1) - 1) < 0.05)
    return ok, f"surface density ratio {E.surface / (2 * jump / 0.1):.3f}"


def check_relax_bound():
    from .relaxer import RelaxConfig, minimize
    W = hex_rhombic_wells()
    dom = unit_square()
    g = Grid.for_domain(dom, 16)
    bc = zero_field(g, dirichlet_nodes(g, dom))
    res = minimize(dom, bc, W, 1.0, RelaxConfig(restarts=1, max_iters=5))
    mono = all(b <= a * (1 + 1e-12) for a, b in zip(res.trace, res.trace[1:]))
    exact_bc = np.array_equal(res.field.values[bc.fixed], bc.values[bc.fixed])
    return res.total <= 2.0 and mono and exact_bc, f"total {res.total:.4f}"


def check_optimal_depth():
    from .microstructure import optimal_depth
    plan = plan_cover(unit_square(), 12, lip=1.0)
    m = [optimal_depth(2.0 ** -k, plan) for k in range(1, 11)]
    return m[0] in (0, 1, 2) and all(b >= a for a, b in zip(m, m[1:])), f"depths {m}"


def check_reports():
    import json
    import re
    from .scaling import SweepSpec, emit_report, fit_dichotomy, report_from_csv, report_to_csv, run_sweep
    rep = run_sweep(SweepSpec("compatible_triangle", [2.0 ** -k for k in range(4, 11)]))
    fit = fit_dichotomy(rep)
    svg = emit_report(rep, fit, "svg")
    back = report_from_csv(report_to_csv(rep))
    ok = (len(re.findall('class="envelope"', svg)) == 2 and len(re.findall('class="data"', svg)) == 1
          and json.loads(emit_report(rep, fit, "json"))["verdict"] == fit.verdict
          and all(a["total_construction"] == b["total_construction"] for a, b in zip(rep.rows, back.rows))
          and all(r["elastic_construction"] <= r["eps"] for r in rep.rows))
    return ok, f"verdict {fit.verdict}"


def check_segment():
    s = Segment(np.zeros(2), np.array([1.0, 0.0]))
    return np.allclose(s.tangent(np.array([0.3])), [[1.0, 0.0]]), "tangent"


CHECKS = [
    ("rotation distance vs angle grid", check_rotation_distance),
    ("hex-rhombic normal set", check_normals),
    ("pairwise compatibility", check_pairwise),
    ("twinning counts and residuals", check_twinning),
    ("incompatibility constants", check_dcheck),
    ("star continuity and geometric surfaces", check_star),
    ("laminate discrete surface", check_laminate),
    ("zero field energy and slice", check_zero_field),
    ("cover count bound", check_cover_counts),
    ("envelope fit recovery", check_fit),
    ("flattening bound", check_flatten),
    ("segment tangent", check_segment),
    ("continuity examples", check_continuity_examples),
    ("exact energy examples", check_exact_energy_examples),
    ("laminate energies", check_laminate_examples),
    ("relaxer bound, monotonicity, Dirichlet", check_relax_bound),
    ("optimal depth examples", check_optimal_depth),
    ("sweep reports", check_reports),
]


def run_selftest(out=print) -> bool:
    ok_all = True
    out(f"{'check':<42} {'result':<6} {'time':>7}  detail")
    for name, fn in CHECKS:
        t = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # report and keep going
            ok, detail = False, f"error: {exc}"
        dt = time.perf_counter() - t
        ok_all &= bool(ok)
        out(f"{name:<42} {'pass' if ok else 'FAIL':<6} {dt:7.2f}s  {detail}")
    return ok_all
