import math

import numpy as np
import pytest

from martenscale.algebra2d import rotation
from martenscale.compatibility import (NormalSet, austenite_normals_linear, defect_at, full_form_defect,
                                       hex_rhombic_normal_set, incompatibility_constant, lower_envelope,
                                       lower_envelope_array, nonlinear_normal_set, oscillation_thresholds,
                                       trace_oscillation, twinning_residual, twinning_with_identity)
from martenscale.geometry import GraphPatch, Segment, segment_at_angle
from martenscale.wells import hex_rhombic_wells, oblique_wells


def _angle_grid_twin_rotations(U, n=200_000):
    """Oracle: angles where det(Q(t) U - I) changes sign."""
    t = np.linspace(-math.pi, math.pi, n, endpoint=False)
    c, s = np.cos(t), np.sin(t)
    # det(QU - I) = det U - tr(QU) + 1
    tr = c * (U[0, 0] + U[1, 1]) + s * (U[0, 1] - U[1, 0])
    f = np.linalg.det(U) - tr + 1.0
    roots = t[np.flatnonzero(np.sign(f) != np.sign(np.roll(f, -1)))]
    near_zero = t[np.abs(f) < 1e-9]
    return np.concatenate([roots, near_zero])


def test_austenite_normals_examples():
    ns = austenite_normals_linear(np.diag([-1.0, 1.0]))
    assert len(ns) == 2
    assert ns.contains(np.array([1.0, -1.0])) and ns.contains(np.array([1.0, 1.0]))
    assert len(austenite_normals_linear(np.eye(2))) == 0
    assert len(austenite_normals_linear(np.diag([1.0, 0.0]))) == 1
    assert austenite_normals_linear(np.zeros((2, 2))).all_directions


def test_hex_normal_set_printed_form():
    # Q_j (e1 + e2), Q_j (e1 - e2), Q_j the rotations by 2 pi j / 3
    vecs = []
    for j in range(3):
        Q = rotation(2 * math.pi * j / 3)
        vecs += [Q @ np.array([1.0, 1.0]), Q @ np.array([1.0, -1.0])]
    ref = NormalSet.from_vectors(vecs)
    ns = hex_rhombic_normal_set()
    assert ns.same_as(ref, 1e-10) and len(ns) == 6
    np.testing.assert_allclose(np.sort(ns.degrees()), 15 + 30 * np.arange(6), atol=1e-9)


def test_hex_normal_set_is_union_of_well_normals():
    W = hex_rhombic_wells()
    u = austenite_normals_linear(W.linear[0])
    for e in W.linear[1:]:
        u = u.union(austenite_normals_linear(e))
    assert hex_rhombic_normal_set().same_as(u, 1e-10)


def test_twinning_identity_degenerate():
    sols = twinning_with_identity(np.eye(2))
    assert sols.degenerate
    Q, a, n = sols[0]
    np.testing.assert_allclose(Q, np.eye(2))
    np.testing.assert_allclose(a, 0.0)


def test_twinning_two_solutions_against_angle_grid():
    U = np.diag([2.0, 0.5])
    sols = twinning_with_identity(U)
    assert len(sols) == 2
    oracle = _angle_grid_twin_rotations(U)
    for Q, a, n in sols:
        assert twinning_residual(Q, U, a, n) <= 1e-10
        t = math.atan2(Q[1, 0], Q[0, 0])
        d = np.abs((oracle - t + math.pi) % (2 * math.pi) - math.pi)
        assert d.min() < 1e-4


def test_twinning_det_two():
    # U - I = diag(1, 0) is already rank one, so Q = I solves the equation
    U = np.diag([2.0, 1.0])
    sols = twinning_with_identity(U)
    oracle = _angle_grid_twin_rotations(U)
    assert len(sols) == 1
    Q, a, n = sols[0]
    assert twinning_residual(Q, U, a, n) <= 1e-12
    assert abs(a @ n - 1.0) < 1e-12  # det(QU) = 1 + a.n = 2
    assert np.abs(oracle).min() < 1e-4


def test_twinning_orientation_reversing():
    with pytest.raises(ValueError, match="orientation-reversing"):
        twinning_with_identity(np.diag([1.0, -1.0]))


@pytest.mark.parametrize("a", [0.8, 0.9, 1.1, 1.25])
def test_nonlinear_normal_set_counts(a):
    for n, bound in ((4, 8), (3, 12)):
        W = oblique_wells(n, a)
        ns = nonlinear_normal_set(W)
        assert len(ns) <= bound
        for U in W.variants:
            for Q, av, nv in twinning_with_identity(U):
                assert twinning_residual(Q, U, av, nv) <= 1e-10
                assert ns.contains(nv)


def test_nonlinear_normal_set_degenerate_error():
    with pytest.raises(ValueError):
        nonlinear_normal_set(oblique_wells(4, 1.0))


def test_incompatibility_flat_examples():
    W = hex_rhombic_wells()
    assert incompatibility_constant(segment_at_angle(math.pi / 4), W).d < 1e-14
    r = incompatibility_constant(segment_at_angle(0.0), W)
    # (1,1) entries of the strains are 1/2, -1, 1/2
    assert abs(r.d - 0.5) < 1e-14


def test_incompatibility_nonlinear_formulas_agree():
    W = oblique_wells(4, 1.2)
    seg = Segment(np.zeros(2), np.array([0.0, 1.0]))
    r = incompatibility_constant(seg, W)
    U = W.wells()[r.argmin_well_index]
    assert abs(r.d - full_form_defect(np.array([0.0, 1.0]), U)) < 1e-10


def test_incompatibility_sweep_matches_normal_set():
    W = hex_rhombic_wells()
    ns = hex_rhombic_normal_set()
    for k in range(360):
        th = math.radians(k)
        d = incompatibility_constant(segment_at_angle(th), W).d
        tangent = np.array([math.cos(th), math.sin(th)])
        assert (d < 1e-12) == ns.contains(tangent, 1e-8)


def test_incompatibility_reparametrization_invariant():
    W = hex_rhombic_wells()
    p1 = GraphPatch.poly([0.0, 0.0, 0.7, 0.3], 0.2)
    # two unrelated sample grids of the same curve
    d1 = incompatibility_constant(p1, W, samples=2048).d
    d2 = incompatibility_constant(p1, W, samples=6007).d
    assert abs(d1 - d2) < 1e-8


class _Empty:
    param_range = (0.0, 0.0)

    def tangent(self, s):
        return np.zeros(np.shape(s) + (2,))


def test_incompatibility_empty_patch():
    with pytest.raises(ValueError):
        incompatibility_constant(_Empty(), hex_rhombic_wells())


def test_full_form_matches_reduced_random(rng):
    for _ in range(1000):
        a = rng.uniform(0.7, 1.4)
        W = oblique_wells(4, a)
        th = rng.uniform(0, 2 * math.pi)
        tau = np.array([math.cos(th), math.sin(th)])
        for U in W.wells():
            assert abs(abs(np.linalg.norm(U @ tau) - 1) - full_form_defect(tau, U)) <= 1e-10


def test_defect_at_matches_constant():
    W = hex_rhombic_wells()
    seg = segment_at_angle(0.0)
    r = incompatibility_constant(seg, W)
    assert abs(defect_at(seg, W, r.argmin_point, r.argmin_well_index) - r.d) < 1e-15


def test_oscillation_thresholds():
    assert abs(oscillation_thresholds(208, 1).nonlinear_general - 1) < 1e-15
    t0 = oscillation_thresholds(0, 3)
    assert all(v == 0 for v in t0.to_dict().values())
    assert abs(oscillation_thresholds(104, 2).square_nonlinear - 2) < 1e-15
    with pytest.raises(ValueError):
        oscillation_thresholds(-1, 1)


def test_trace_oscillation(rng):
    assert trace_oscillation(np.ones((10, 2))) == 0.0
    pts = np.stack([np.linspace(0, 1, 100), np.zeros(100)], 1)
    assert trace_oscillation(pts, pts, subtract_identity=True) == 0.0
    M = rng.normal(size=(2, 2))
    L = 1.7
    pts = np.stack([np.linspace(0, L, 500), np.zeros(500)], 1)
    ref = np.linalg.norm(M @ (pts[-1] - pts[0]))
    assert abs(trace_oscillation(pts @ M.T) - ref) < 1e-12
    with pytest.raises(ValueError):
        trace_oscillation(np.zeros((1, 2)))
    with pytest.raises(ValueError):
        trace_oscillation(pts, subtract_identity=True)


def test_lower_envelopes():
    assert lower_envelope(1.0, "log") == 1.0
    assert lower_envelope(2.0, "linear") == 1.0
    assert abs(lower_envelope(math.exp(-1), "log") - 2 * math.exp(-1)) < 1e-15
    e = np.geomspace(1e-8, 1, 500)
    assert np.all(lower_envelope_array(e, "log") >= lower_envelope_array(e, "linear"))
    with pytest.raises(ValueError):
        lower_envelope(0.0)
    with pytest.raises(ValueError):
        lower_envelope(0.1, "cubic")
