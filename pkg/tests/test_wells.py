import math

import numpy as np
import pytest

from martenscale.algebra2d import rotation, sym_rank_one_decompose, sym_outer
from martenscale.wells import (dihedral_group, hex_rhombic_wells, oblique_U1, oblique_wells, point_group,
                               well_set_from_dict, with_austenite)

S3 = math.sqrt(3.0)


def test_hex_rhombic_matrices_as_printed():
    W = hex_rhombic_wells()
    np.testing.assert_array_equal(W.linear[0], 0.5 * np.array([[1, -S3], [-S3, -1]]))
    np.testing.assert_array_equal(W.linear[1], np.diag([-1.0, 1.0]))
    np.testing.assert_array_equal(W.linear[2], 0.5 * np.array([[1, S3], [S3, -1]]))


def test_hex_rhombic_wells_are_rotated_copies():
    # e^(j) = Q_j e^(1) Q_j^T with Q_j the rotation by 2 pi (j-1)/3
    W = hex_rhombic_wells()
    images = [rotation(2 * math.pi * j / 3) @ W.linear[0] @ rotation(2 * math.pi * j / 3).T for j in range(3)]
    for e in W.linear:
        assert min(np.linalg.norm(e - M) for M in images) < 1e-14


def test_pairwise_symmetrized_rank_one():
    W = hex_rhombic_wells()
    for i in range(3):
        for j in range(i + 1, 3):
            D = W.linear[i] - W.linear[j]
            assert np.linalg.det(D) <= 0
            a, n = sym_rank_one_decompose(D)
            assert np.linalg.norm(sym_outer(a, n) - D) <= 1e-10


def test_point_groups_as_printed():
    sq = point_group("square")
    assert len(sq) == 4
    np.testing.assert_array_equal(sq[2], [[0, -1], [1, 0]])
    np.testing.assert_array_equal(sq[3], [[0, 1], [1, 0]])
    hx = point_group("hexagonal")
    assert len(hx) == 6
    np.testing.assert_allclose(hx[2], 0.5 * np.array([[1, S3], [-S3, 1]]))
    np.testing.assert_allclose(hx[5], 0.5 * np.array([[1, S3], [S3, -1]]))
    for P in sq + hx:
        np.testing.assert_allclose(P @ P.T, np.eye(2), atol=1e-15)
    with pytest.raises(ValueError):
        point_group("cubic")


def test_base_variants_as_printed():
    a = 1.3
    np.testing.assert_allclose(oblique_U1(4, a), [[a, 1 / a - a], [0, 1 / a]])
    np.testing.assert_allclose(oblique_U1(3, a), [[a, S3 * (1 / a - a)], [0, 1 / a]])
    # general n-gon: shear (1/a - a) / tan(phi), phi = (n-2) pi / (2n)
    phi = 3 * math.pi / 10
    np.testing.assert_allclose(oblique_U1(5, a), [[a, (1 / a - a) / math.tan(phi)], [0, 1 / a]])
    # the general formula reproduces the two special cases
    for n in (3, 4):
        phi = (n - 2) * math.pi / (2 * n)
        assert abs(oblique_U1(n, a)[0, 1] - (1 / a - a) / math.tan(phi)) < 1e-14


@pytest.mark.parametrize("n,count", [(4, 4), (3, 6)])
@pytest.mark.parametrize("a", [0.8, 0.9, 1.1, 1.25])
def test_oblique_variants_distinct_and_closed(n, count, a):
    W = oblique_wells(n, a)
    assert len(W.variants) == count
    for i in range(count):
        for j in range(i + 1, count):
            assert np.linalg.norm(W.variants[i] - W.variants[j]) > 1e-10
    for P in W.point_group:
        for U in W.variants:
            V = P @ U @ P.T
            assert min(np.linalg.norm(V - X) for X in W.variants) < 1e-10


def test_rotation_branch_makes_base_variant_compatible():
    for n in (3, 4):
        for br in (None, "plus", "minus"):
            W = oblique_wells(n, 1.1, br)
            M = W.rotation_branch @ W.U1 - np.eye(2)
            assert abs(np.linalg.det(M)) < 1e-12
            assert np.linalg.matrix_rank(M, tol=1e-10) == 1


def test_default_branch_smaller_angle():
    W0, Wp, Wm = (oblique_wells(4, 1.1, b) for b in (None, "plus", "minus"))
    ang = lambda Q: math.atan2(Q[1, 0], Q[0, 0])
    assert ang(Wp.rotation_branch) > ang(Wm.rotation_branch)
    assert abs(ang(W0.rotation_branch)) == min(abs(ang(Wp.rotation_branch)), abs(ang(Wm.rotation_branch)))


def test_degenerate_and_errors():
    W = oblique_wells(4, 1.0)
    assert W.degenerate and len(W.variants) == 1
    with pytest.raises(ValueError):
        oblique_wells(2, 1.1)
    with pytest.raises(ValueError):
        oblique_wells(4, 0.0)
    with pytest.raises(ValueError):
        oblique_wells(4, -1.0)
    with pytest.raises(ValueError):
        oblique_wells(4, 1.1, "sideways")


def test_dihedral_group_size_and_orthogonality():
    G = dihedral_group(5)
    assert len(G) == 10
    for g in G:
        np.testing.assert_allclose(g @ g.T, np.eye(2), atol=1e-14)


def test_with_austenite_and_roundtrip():
    W = with_austenite(hex_rhombic_wells())
    assert len(W) == 4 and np.all(W.linear[-1] == 0)
    Wn = oblique_wells(3, 0.9, "plus")
    W2 = well_set_from_dict(Wn.to_dict() | {"n": 3})
    for U, V in zip(Wn.variants, W2.variants):
        np.testing.assert_allclose(U, V)
    assert well_set_from_dict({"kind": "hex_rhombic"}).name == "hex_rhombic"
