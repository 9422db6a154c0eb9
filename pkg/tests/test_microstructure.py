"""Piecewise-affine fields, exact energies, laminates, star blocks and covers."""
import math

import numpy as np
import pytest

from martenscale.algebra2d import J, unit
from martenscale.compatibility import austenite_normals_linear
from martenscale.geometry import unit_square
from martenscale.microstructure import (
    CellComplex, PAField, check_continuity, count_bound, cover_energy, cover_values,
    elastic_per_cell, energies_from_csv, energies_to_csv, exact_energy, greedy_cover, laminate,
    materialize_cover, optimal_depth, orientation_search, plan_cover, scale_ratio, star_block,
)
from martenscale.microstructure.cover import TRI_AREA, depth_candidates
from martenscale.scaling import compatible_triangle
from martenscale.wells import hex_rhombic_wells, with_austenite

W = hex_rhombic_wells()
RHO = 7.0 - 4.0 * math.sqrt(3.0)
T_UNIT = np.array([[0.0, 0.0], unit(math.radians(15)), unit(math.radians(75))])


def square_field(A, b=(0.0, 0.0)):
    cx = CellComplex(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float), [[0, 1, 2, 3]])
    return PAField(cx, [A], [b])


def two_cells(A1, A2, b2=None):
    """Cells [0,1]x[0,1] and [1,2]x[0,1]; interface x = 1, normal e1."""
    V = np.array([[0, 0], [1, 0], [2, 0], [2, 1], [1, 1], [0, 1]], float)
    cx = CellComplex(V, [[0, 1, 4, 5], [1, 2, 3, 4]])
    A1, A2 = np.asarray(A1, float), np.asarray(A2, float)
    if b2 is None:
        # match traces on x = 1: A1 p = A2 p + b2 for p = (1, y)
        b2 = (A1 - A2) @ np.array([1.0, 0.0])
    return PAField(cx, [A1, A2], [np.zeros(2), b2])


# ---------------------------------------------------------------- continuity

def test_affine_field_is_continuous():
    rep = check_continuity(square_field(np.array([[1.0, 2.0], [3.0, 4.0]])))
    assert rep.passed and rep.max_trace_residual == 0.0 and rep.max_rank_residual == 0.0


def test_compatible_two_cells_pass():
    a = np.array([0.3, -0.7])
    A1 = np.array([[0.1, 0.2], [0.3, 0.4]])
    rep = check_continuity(two_cells(A1, A1 + np.outer(a, [1.0, 0.0])))
    assert rep.passed and rep.max_trace_residual < 1e-14 and rep.max_rank_residual < 1e-14


def test_full_rank_jump_reports_second_singular_value():
    D = np.array([[1.0, 0.4], [-0.2, 0.8]])
    f = two_cells(np.zeros((2, 2)), -D, b2=np.zeros(2))
    rep = check_continuity(f)
    sv = np.linalg.svd(D, compute_uv=False)
    assert not rep.passed
    assert rep.max_rank_residual == pytest.approx(sv[1], abs=1e-14)


# ---------------------------------------------------------------- exact energy

def test_zero_field_elastic_two():
    dom = np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])
    cx = CellComplex(dom, [[0, 1, 2, 3]])
    E = exact_energy(PAField(cx, [np.zeros((2, 2))], [np.zeros(2)]), W)
    # oracle: |e_j|_F^2 = 2 for every well, unit area
    assert all(abs(np.sum(e * e) - 2.0) < 1e-14 for e in W.linear)
    assert E.elastic == pytest.approx(2.0, abs=1e-14) and E.surface == 0.0


def test_single_cell_in_well():
    A = W.linear[0] + 0.37 * J
    E = exact_energy(square_field(A), W)
    assert E.elastic < 1e-28 and E.surface == 0.0


def test_two_cell_surface_is_jump_norm_times_length():
    a, n = np.array([0.5, -1.5]), np.array([1.0, 0.0])
    A1 = W.linear[1]
    f = two_cells(A1, A1 + np.outer(a, n))
    E = exact_energy(f, W)
    assert E.surface == pytest.approx(np.linalg.norm(a) * np.linalg.norm(n) * 1.0, rel=1e-14)


def test_mode_mismatch_and_discontinuous():
    from martenscale.wells import oblique_wells
    with pytest.raises(ValueError, match="mode mismatch"):
        exact_energy(square_field(np.eye(2)), oblique_wells(4, 1.1))
    bad = two_cells(np.zeros((2, 2)), np.eye(2), b2=np.zeros(2))
    with pytest.raises(ValueError, match="not an admissible field"):
        exact_energy(bad, W)


def test_total_is_monotone_in_eps():
    f = two_cells(np.zeros((2, 2)), np.outer([1.0, 2.0], [1.0, 0.0]))
    E = exact_energy(f, W)
    assert E.total(0.0) == E.elastic
    t = [E.total(e) for e in np.linspace(0, 3, 20)]
    assert np.all(np.diff(t) >= 0)


def test_energy_csv_and_json_round_trip():
    f = star_block(T_UNIT, 2, W)
    E = exact_energy(f, W)
    rows = energies_from_csv(energies_to_csv([(0.25, E), (2.0 ** -10, E)]))
    assert rows[0][0] == 0.25 and rows[1][1] == E
    g = PAField.from_json(f.to_json())
    assert np.array_equal(g.A, f.A) and np.array_equal(g.complex.vertices, f.complex.vertices)


# ---------------------------------------------------------------- laminates

def _chord_length(n, c, rect):
    """Length of {x . n = c} inside the rectangle, by interval intersection."""
    x0, y0, x1, y1 = rect
    t = np.array([-n[1], n[0]])
    p = c * n
    lo, hi = -np.inf, np.inf
    for k, (a, b) in enumerate(((x0, x1), (y0, y1))):
        if abs(t[k]) < 1e-15:
            if not a <= p[k] <= b:
                return 0.0
            continue
        s1, s2 = sorted(((a - p[k]) / t[k], (b - p[k]) / t[k]))
        lo, hi = max(lo, s1), min(hi, s2)
    return max(0.0, hi - lo)


def _laminate_oracle(n, period, theta, rect, jump):
    corners = np.array([[rect[0], rect[1]], [rect[2], rect[1]], [rect[2], rect[3]], [rect[0], rect[3]]])
    s = corners @ n
    smin, smax = s.min(), s.max()
    levels = []
    k = 0
    while smin + k * period < smax:
        levels += [smin + (k + 1 - theta) * period, smin + (k + 1) * period]
        k += 1
    levels = [c for c in levels if smin + 1e-12 < c < smax - 1e-12]
    surface = jump * sum(_chord_length(n, c, rect) for c in levels)
    # austenite area by midpoint quadrature on a fine grid
    m = 2000
    x = rect[0] + (np.arange(m) + 0.5) / m * (rect[2] - rect[0])
    y = rect[1] + (np.arange(m) + 0.5) / m * (rect[3] - rect[1])
    X, Y = np.meshgrid(x, y)
    ph = np.mod(X * n[0] + Y * n[1] - smin, period)
    aus = np.mean(ph < (1 - theta) * period) * (rect[2] - rect[0]) * (rect[3] - rect[1])
    return surface, aus


@pytest.mark.parametrize("j,k,period,theta", [(1, 0, 0.25, 0.5), (1, 1, 0.2, 0.3),
                                              (2, 0, 0.3, 0.6), (3, 1, 0.125, 0.75)])
def test_laminate_energies_match_interface_oracle(j, k, period, theta):
    n = austenite_normals_linear(W.linear[j - 1]).directions[k]
    rect = (0.0, 0.0, 1.0, 0.7)
    f = laminate(j, n, period, theta, rect, W)
    assert check_continuity(f).passed
    jump = float(np.linalg.norm(f.A[np.argmax(np.linalg.norm(f.A, axis=(1, 2)))]))
    S, aus = _laminate_oracle(n, period, theta, rect, jump)
    E = exact_energy(f, W)
    assert E.surface == pytest.approx(S, rel=1e-10)
    assert E.elastic == pytest.approx(2.0 * aus, abs=5e-3)
    assert exact_energy(f, with_austenite(W)).elastic < 1e-24


def test_laminate_surface_density():
    n = unit(math.radians(45.0))
    if not austenite_normals_linear(W.linear[1]).contains(n):
        n = unit(math.radians(135.0))
    P = 0.1
    f = laminate(2, n, P, 0.5, (0, 0, 1, 1), W)
    jump = np.linalg.norm(f.A, axis=(1, 2)).max()
    dens = exact_energy(f, W).surface
    # two interfaces per period; the unit square has chord-averaged density 1
    assert dens == pytest.approx(2 * jump / P, rel=0.05)


def test_laminate_incompatible_normal():
    with pytest.raises(ValueError, match="not compatible"):
        laminate(1, (1.0, 0.0), 0.2, 0.5)


def test_laminate_theta_near_one_vanishing_surface():
    n = austenite_normals_linear(W.linear[0]).directions[0]
    S = [exact_energy(laminate(1, n, 10.0, th, (0, 0, 1, 1), W), W).surface for th in (0.9, 0.99)]
    assert S[1] <= S[0]


# ---------------------------------------------------------------- star blocks

@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 6])
def test_star_block_stress_free_rings(N):
    f = star_block(T_UNIT, N, W)
    rep = check_continuity(f, 1e-10)
    assert rep.passed
    el = elastic_per_cell(f, W)
    core = np.argmax(el)
    ring = np.delete(el, core)
    assert ring.max() <= 1e-12
    area = TRI_AREA
    assert el.sum() == pytest.approx(2.0 * RHO ** (2 * N) * area, rel=1e-9)
    # zero trace on the boundary of T
    s = np.linspace(0, 1, 101)
    pts = np.concatenate([T_UNIT[k] + np.outer(s, T_UNIT[(k + 1) % 3] - T_UNIT[k]) for k in range(3)])
    assert np.abs(f(pts)).max() <= 1e-10


def test_star_scale_ratio_and_geometric_surface():
    assert scale_ratio() == pytest.approx(RHO, abs=1e-14)
    S = [exact_energy(star_block(T_UNIT, N, W), W).surface for N in range(1, 7)]
    d = np.diff(S)
    assert np.allclose(d[1:] / d[:-1], RHO, atol=1e-9)
    limit = S[0] + d[0] / (1 - RHO)
    assert max(S) <= limit + 1e-12


def test_star_core_is_a_rotation():
    f = star_block(T_UNIT, 2, W)
    core = int(np.argmax(elastic_per_cell(f, W)))
    A = f.A[core]
    assert np.allclose(A + A.T, 0.0, atol=1e-12)


def test_star_placements_and_orientation():
    res = orientation_search()
    assert res == {0.0: False, 15.0: True, 30.0: False, 45.0: True}
    T0 = np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    with pytest.raises(ValueError, match="incompatible orientation"):
        star_block(T0, 1, W)
    for T in (-T_UNIT, T_UNIT * 0.5 + 3.0, compatible_triangle().vertices):
        f = star_block(T, 2, W)
        assert check_continuity(f).passed


# ---------------------------------------------------------------- invariants

@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_rescaling(lam):
    f = star_block(T_UNIT, 3, W)
    E = exact_energy(f, W)
    g = f.rescaled(lam, center=(0.2, -0.1))
    Eg = exact_energy(g, W)
    assert Eg.elastic == pytest.approx(lam ** 2 * E.elastic, rel=1e-12)
    assert Eg.surface == pytest.approx(lam * E.surface, rel=1e-12)


def test_additivity_over_partition():
    f = star_block(T_UNIT, 2, W)
    cx = f.complex
    E = exact_energy(f, W)
    cen = np.array([cx.vertices[c].mean(axis=0) for c in cx.cells])
    part = cen[:, 0] < np.median(cen[:, 0])
    subs = []
    for mask in (part, ~part):
        idx = np.flatnonzero(mask)
        sub = PAField(CellComplex(cx.vertices, [cx.cells[i] for i in idx]), f.A[idx], f.b[idx])
        subs.append(exact_energy(sub, W, check=False))
    # shared edges: pairs of cells from different parts with two common vertices
    shared = 0.0
    for i in np.flatnonzero(part):
        for k in np.flatnonzero(~part):
            common = set(cx.cells[i].tolist()) & set(cx.cells[k].tolist())
            if len(common) == 2:
                p, q = (cx.vertices[v] for v in common)
                shared += np.linalg.norm(p - q) * np.linalg.norm(f.A[i] - f.A[k])
    assert subs[0].elastic + subs[1].elastic == pytest.approx(E.elastic, rel=1e-12)
    assert subs[0].surface + subs[1].surface + shared == pytest.approx(E.surface, rel=1e-12)


# ---------------------------------------------------------------- cover

@pytest.fixture(scope="module")
def plan():
    return plan_cover(unit_square(), 12, lip=1.0)


def test_cover_count_bound(plan):
    assert all(c <= count_bound(l, 1.0) for l, c in enumerate(plan.counts))
    assert plan.count_bound_ok()


def test_cover_level_zero_is_boundary_dominated(plan):
    E = cover_energy(plan, 0, 0.5)
    assert plan.counts[0] == 0 and E.elastic == pytest.approx(2.0)


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_cover_energy_equals_materialized(plan, m):
    eps = 2.0 ** -6
    f = materialize_cover(plan, m, eps, W)
    assert check_continuity(f).passed
    E, Ec = exact_energy(f, W), cover_energy(plan, m, eps, W)
    assert Ec.elastic == pytest.approx(E.elastic, rel=1e-10, abs=1e-14)
    assert Ec.surface == pytest.approx(E.surface, rel=1e-10, abs=1e-14)


def test_cover_values_match_materialized(plan, rng):
    eps = 2.0 ** -6
    f = materialize_cover(plan, 3, eps, W)
    pts = rng.uniform(-0.5, 0.5, size=(400, 2))
    assert np.abs(cover_values(plan, 3, eps, pts, W) - f(pts)).max() < 1e-12


def test_greedy_cover_requires_star_shaped():
    from martenscale.geometry import Polygon
    off = Polygon(np.array([[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]]))
    with pytest.raises(ValueError, match="star-shaped"):
        greedy_cover(off, 1)


def test_greedy_cover_upper_bound(plan):
    # total at m = ceil(log2 1/eps) stays below C eps (|log eps| + 1) with one C
    ratios = []
    for k in range(4, 12):
        eps = 2.0 ** -k
        E = cover_energy(plan, k, eps).total(eps)
        ratios.append(E / (eps * (abs(math.log(eps)) + 1)))
    assert max(ratios) / min(ratios) < 4.0


def test_optimal_depth_small_for_coarse_eps():
    assert optimal_depth(0.5) in (0, 1, 2)
    with pytest.raises(ValueError):
        optimal_depth(1.5)


def test_optimal_depth_monotone(plan):
    eps = 2.0 ** -np.arange(1, 11)
    m = [optimal_depth(e, plan) for e in eps]
    assert all(b >= a for a, b in zip(m, m[1:]))


def test_optimal_depth_matches_measured_profile(plan):
    """Model A 2^-m + C eps m with A, C measured from the plan."""
    m = np.arange(1, 10)
    unc = np.array([2.0 * (1.0 - plan.covered_area(k)) for k in m])
    A = float(np.exp(np.mean(np.log(unc * 2.0 ** m))))
    sur = np.array([cover_energy(plan, k, 2.0 ** -10).surface for k in m])
    C = float(np.mean(np.diff(sur)))
    eps = 2.0 ** -10
    cand = np.array(depth_candidates(eps))
    model = A * 2.0 ** -cand + C * eps * cand
    m_model = int(cand[np.argmin(model)])
    assert abs(optimal_depth(eps, plan) - m_model) <= 2
