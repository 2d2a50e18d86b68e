from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from betticlt.homology import (
    BoundaryMatrix,
    betti_numbers,
    boundary_matrix,
    euler_characteristic,
    euler_check,
    gf2_product,
    rank_gf2,
    rational_rank,
    skeleton_betti,
)
from betticlt.simplicial import (
    PointCloud,
    SimplicialComplex,
    build_cech_complex,
    build_clique_complex,
    connected_components,
)

from conftest import random_graph


def sphere(k):
    """Boundary of the (k+1)-simplex."""
    return SimplicialComplex.from_simplices(combinations(range(k + 2), k + 1), k + 1)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_simplex_boundary_is_a_sphere(k):
    b = betti_numbers(sphere(k), k)
    assert b == tuple([1] + [0] * (k - 1) + [1])


def test_known_spaces():
    tetra = build_clique_complex_from([(0, 1, 2, 3)], 3)
    assert skeleton_betti(tetra) == (1, 0, 0, 0)
    assert skeleton_betti(sphere(2)) == (1, 0, 1, 0)
    assert skeleton_betti(sphere(1)) == (1, 1, 0)
    two_points = SimplicialComplex.from_simplices([(0,), (1,)], 1)
    assert betti_numbers(two_points, 0) == (2,)


def build_clique_complex_from(maximal, max_dim):
    return SimplicialComplex.from_simplices(maximal, max_dim)


def test_projective_plane_field_dependence():
    # 6-vertex triangulation of RP^2: β_1 = β_2 = 1 over GF(2), 0 over Q
    tris = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 1, 5), (1, 2, 4),
            (2, 3, 5), (1, 3, 4), (1, 3, 5), (2, 4, 5)]
    c = SimplicialComplex.from_simplices(tris, 3)
    assert betti_numbers(c, 2) == (1, 1, 1)
    d2 = boundary_matrix(c, 2)
    assert rank_gf2(d2) == 9
    assert rational_rank(d2) == 10


def test_betti_needs_extra_dimension():
    with pytest.raises(ValueError):
        betti_numbers(sphere(1), 1 + 1)
    with pytest.raises(ValueError):
        boundary_matrix(sphere(1), 0)


def test_dense_roundtrip_and_rank():
    dense = [[1, 1, 0], [0, 1, 1], [1, 0, 1]]
    m = BoundaryMatrix.from_dense(dense)
    assert m.to_dense() == dense
    assert rank_gf2(m) == 2


def test_boundary_of_boundary_vanishes(rng):
    for _ in range(20):
        g = random_graph(rng, int(rng.integers(4, 15)), 0.6)
        c = build_clique_complex(g, 4)
        for t in range(2, 5):
            if c.dim_simplices(t):
                a, b = boundary_matrix(c, t), boundary_matrix(c, t - 1)
                assert not any(gf2_product(a, b))
                # oriented product vanishes too
                sa, sb = a.signed_rows(), b.signed_rows()
                for row in sa:
                    acc = {}
                    for col, s in row:
                        for col2, s2 in sb[col]:
                            acc[col2] = acc.get(col2, 0) + s * s2
                    assert not any(acc.values())


def test_euler_and_additivity_random_clique(rng):
    for _ in range(40):
        g = random_graph(rng, int(rng.integers(1, 20)), float(rng.uniform(0.1, 0.7)))
        c = build_clique_complex(g, g.n)
        assert euler_check(c)
        whole = skeleton_betti(c)
        parts = [skeleton_betti(cc) for cc in connected_components(c)]
        assert whole == tuple(map(sum, zip(*parts)))


def test_euler_random_cech(rng):
    for _ in range(20):
        c = build_cech_complex(PointCloud(rng.random((60, 2)), 0.08), 3)
        assert euler_check(c)
        assert skeleton_betti(c)[2] == 0


def test_rational_rank_cap():
    big = BoundaryMatrix(501, 1, tuple([1] * 501))
    with pytest.raises(ValueError):
        rational_rank(big)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1), min_size=6, max_size=6), min_size=1, max_size=8))
def test_gf2_rank_matches_numpy_elimination(rows):
    m = BoundaryMatrix.from_dense(rows)
    a = np.array(rows, dtype=np.uint8) % 2
    rank = 0
    for col in range(a.shape[1]):
        piv = [r for r in range(rank, a.shape[0]) if a[r, col]]
        if not piv:
            continue
        a[[rank, piv[0]]] = a[[piv[0], rank]]
        for r in range(a.shape[0]):
            if r != rank and a[r, col]:
                a[r] ^= a[rank]
        rank += 1
    assert rank_gf2(m) == rank


def test_euler_characteristic_sign():
    assert euler_characteristic([4, 6, 4, 1]) == 1
