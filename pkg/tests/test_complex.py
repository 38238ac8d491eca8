import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hodgelab import catalog
from hodgelab.complex import (BoundaryLabeling, boundary_components, build_complex,
                              canonical_simplex, euler_characteristic, label_boundary,
                              labeling_from_facets, manifold_boundary, rational_betti,
                              rational_rank, relative_coboundary)
from hodgelab.errors import ComplexError, LabelError, NonManifoldError

from conftest import CASES, case_id


def test_fvectors():
    assert build_complex([(0, 1, 2)]).fvector == (3, 3, 1)
    assert build_complex([(0, 1, 2), (1, 2, 3)]).fvector == (4, 5, 2)
    assert catalog.load("torus7").complex.fvector == (7, 21, 14)


def test_canonical_ordering_is_input_independent():
    a = build_complex([(2, 1, 0), (3, 2, 1)])
    b = build_complex([(1, 2, 3), (0, 2, 1)])
    for p in range(3):
        assert np.array_equal(a.simplices[p], b.simplices[p])
    assert canonical_simplex((5, 2, 9)) == (2, 5, 9)


@pytest.mark.parametrize("tops", [[(0, 0, 1)], [(0, 1, 2), (0, 1)], [(0, 1, 2), (2, 1, 0)], []])
def test_malformed_input(tops):
    with pytest.raises(ComplexError):
        build_complex(tops)


def test_boundary_examples():
    tri = build_complex([(0, 1, 2)])
    bd = manifold_boundary(tri)
    assert bd[1].sum() == 3 and bd[0].sum() == 3 and not bd[2].any()
    torus = catalog.load("torus7").complex
    assert not any(m.any() for m in manifold_boundary(torus))
    path = build_complex([(0, 1), (1, 2)])
    bd = manifold_boundary(path)
    assert [path.simplex(0, j) for j in np.flatnonzero(bd[0])] == [(0,), (2,)]


def test_non_manifold_rejected():
    book = build_complex([(0, 1, 2), (0, 1, 3), (0, 1, 4)])
    with pytest.raises(NonManifoldError):
        manifold_boundary(book)


def test_relative_coboundary_examples():
    circle = catalog.load("circle").complex
    d0 = relative_coboundary(circle, BoundaryLabeling.empty(circle), 0)
    assert d0.shape == (3, 3)
    assert np.array_equal(d0.toarray(), circle.boundary(1).T.toarray())
    interval = catalog.load("interval").complex
    d0 = relative_coboundary(interval, label_boundary(interval, "boundary"), 0)
    assert d0.shape == (2, 1)
    assert sorted(d0.toarray().ravel()) == [-1, 1]


def test_annulus_inner_circle_rank():
    cx = catalog.load("annulus").complex
    labels = label_boundary(cx, "component:0")
    d1 = relative_coboundary(cx, labels, 1)
    assert rational_rank(d1) == np.linalg.matrix_rank(d1.toarray())


@pytest.mark.parametrize("case", CASES, ids=case_id)
def test_chain_complex_identities(case):
    cx = catalog.load(case[0]).complex
    labels = label_boundary(cx, case[1])
    for p in range(1, cx.dim):
        assert not (cx.boundary(p) @ cx.boundary(p + 1)).toarray().any()
        dd = relative_coboundary(cx, labels, p) @ relative_coboundary(cx, labels, p - 1)
        assert not dd.toarray().any()
    for p in range(cx.dim):
        empty = relative_coboundary(cx, BoundaryLabeling.empty(cx), p)
        assert np.array_equal(empty.toarray(), cx.boundary(p + 1).T.toarray())


def test_euler_examples():
    assert euler_characteristic(build_complex([(0, 1, 2)])) == 1
    assert euler_characteristic(catalog.load("torus7").complex) == 0
    interval = catalog.load("interval").complex
    assert euler_characteristic(interval, label_boundary(interval, "boundary")) == -1


@pytest.mark.parametrize("case", CASES, ids=case_id)
def test_rank_nullity_matches_euler(case):
    cx = catalog.load(case[0]).complex
    labels = label_boundary(cx, case[1])
    b = rational_betti(cx, labels)
    assert sum((-1) ** p * v for p, v in enumerate(b)) == euler_characteristic(cx, labels)


def test_labeling_validation():
    cx = catalog.load("annulus").complex
    comps = boundary_components(cx)
    assert len(comps) == 2
    with pytest.raises(LabelError):
        label_boundary(cx, "component:5")
    with pytest.raises(LabelError):
        label_boundary(cx, "sideways")
    interior = [j for j in range(cx.count(1)) if not manifold_boundary(cx)[1][j]][0]
    with pytest.raises(LabelError):
        labeling_from_facets(cx, [interior])
    both = label_boundary(cx, "component:0")
    with pytest.raises(LabelError):
        BoundaryLabeling(both.m1, both.m1).validate(cx)


def test_labeling_accepts_vertex_tuples():
    cx = catalog.load("interval").complex
    a = labeling_from_facets(cx, [(0,)], [(2,)])
    b = labeling_from_facets(cx, [0])
    assert all(np.array_equal(x, y) for x, y in zip(a.m1, b.m1))


@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=6))
def test_rational_rank_matches_float_rank(entries):
    rows = np.array(entries, dtype=float)
    mat = np.vstack([rows, rows.sum(axis=0, keepdims=True)])
    assert rational_rank(mat) == np.linalg.matrix_rank(mat)


@given(st.integers(3, 9))
def test_circle_betti_property(n):
    cx = catalog.circle(n).complex
    assert rational_betti(cx) == [1, 1]


@given(st.integers(1, 4), st.integers(1, 3))
def test_annulus_relative_betti_property(n, k):
    cx = catalog.annulus(3 + n, k).complex
    assert rational_betti(cx, label_boundary(cx, "boundary")) == [0, 1, 1]
    assert rational_betti(cx, label_boundary(cx, "component:0")) == [0, 0, 0]
