import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.csgraph import connected_components

from hodgelab import catalog
from hodgelab.complex import euler_characteristic, label_boundary, manifold_boundary, rational_betti
from hodgelab.doubling import (double_complex, doubled_hodge, eigen_betti, eigenspace_projector,
                               euler_two_ways, extend_from_copy, restrict_to_copy, v4_residuals)
from hodgelab.errors import VerificationError
from hodgelab.metric import make_metric

from conftest import CASES, case_id

_Q = {}


def quad(name, m1, metric=True):
    key = (name, m1, metric)
    if key not in _Q:
        mesh = catalog.load(name)
        labels = label_boundary(mesh.complex, m1)
        g = make_metric(mesh.complex, mesh.geometry, "whitney") if metric and mesh.geometry else None
        q = double_complex(mesh.complex, labels, g)
        _Q[key] = (q, doubled_hodge(q))
    return _Q[key]


def components(W):
    return connected_components(W.edges_graph(), directed=False)


def test_interval_doubles_to_two_circles():
    q, hc = quad("interval", "boundary")
    assert q.W.fvector == (8, 8)
    ncomp, lab = components(q.W)
    assert ncomp == 2
    assert not any(m.any() for m in manifold_boundary(q.W))
    # tau2 exchanges the circles, tau1 preserves each
    assert (lab[q.tau2] != lab).all()
    assert (lab[q.tau1] == lab).all()
    assert hc.betti_numbers() == [2, 2]


@pytest.mark.parametrize("name,chi", [("triangle", 4), ("disk", 4), ("annulus", 0)])
def test_full_relative_double_is_two_closed_surfaces(name, chi):
    q, hc = quad(name, "boundary")
    assert components(q.W)[0] == 2
    assert not any(m.any() for m in manifold_boundary(q.W))
    assert euler_characteristic(q.W) == chi
    assert euler_two_ways(q, hc) == (chi, chi)


def test_triangle_double_is_glued_complex():
    q, _ = quad("triangle", "boundary")
    assert not q.W.is_simplicial


@pytest.mark.parametrize("case", [c for c in CASES if c[0] != "torus7"], ids=case_id)
def test_v4_relations(case):
    q, _ = quad(*case)
    res = v4_residuals(q)
    assert max(res.values()) < 1e-12


@pytest.mark.parametrize("case", CASES, ids=case_id)
def test_minus_plus_betti_equals_relative_betti(case):
    q, hc = quad(*case)
    want = rational_betti(q.source, q.labels)
    assert [eigen_betti(q, -1, 1, p, hc) for p in range(q.W.dim + 1)] == want
    counted, harmonic = euler_two_ways(q, hc)
    assert counted == harmonic


def test_eigen_betti_examples():
    q, hc = quad("interval", "boundary")
    assert eigen_betti(q, -1, 1, 1, hc) == 1
    q, hc = quad("disk", "boundary")
    assert eigen_betti(q, -1, 1, 1, hc) == 0
    q, hc = quad("annulus", "boundary")
    assert eigen_betti(q, -1, 1, 1, hc) == 1


def test_all_four_eigenspaces_add_up():
    q, hc = quad("annulus", "component:0")
    for p in range(3):
        total = sum(eigen_betti(q, e1, e2, p, hc) for e1 in (1, -1) for e2 in (1, -1))
        assert total == hc.betti(p)


def test_projectors():
    q, _ = quad("disk", "component:0")
    for p in range(3):
        n = q.W.count(p)
        total = sum(eigenspace_projector(q, a, b, p) for a in (1, -1) for b in (1, -1))
        np.testing.assert_allclose(total.toarray(), np.eye(n), atol=1e-15)
    with pytest.raises(ValueError):
        eigenspace_projector(q, 2, 1, 0)


def test_projector_on_single_copy():
    q, _ = quad("disk", "boundary")
    p = 2
    j = 0  # every triangle is interior, so it has four copies
    cells = np.flatnonzero(q.sources[p] == j)
    assert len(cells) == 4
    e = np.zeros(q.W.count(p))
    e[cells[q.copies[p][cells] == 0]] = 1.0
    for e1 in (1, -1):
        for e2 in (1, -1):
            img = eigenspace_projector(q, e1, e2, p) @ e
            want = {0: 1, 1: e1, 2: e2, 3: e1 * e2}
            for k in cells:
                assert img[k] == pytest.approx(0.25 * want[int(q.copies[p][k])])


def test_minus_plus_kills_tau1_invariant():
    q, _ = quad("annulus", "component:0")
    rng = np.random.default_rng(0)
    w = rng.standard_normal(q.W.count(1))
    sym = w + q.pullback(1, 1) @ w
    assert np.abs(eigenspace_projector(q, -1, 1, 1) @ sym).max() < 1e-14


def test_restrict_examples():
    q, hc = quad("interval", "boundary")
    np.testing.assert_array_equal(restrict_to_copy(q, np.zeros(q.W.count(1)), 1), np.zeros(2))
    h = hc.harmonic_basis(1)
    mp = eigenspace_projector(q, -1, 1, 1) @ h
    u, s, _ = np.linalg.svd(mp)
    omega = u[:, 0] * s[0]
    alpha = restrict_to_copy(q, omega, 1)
    assert abs(alpha.sum()) > 1e-3
    with pytest.raises(VerificationError):
        restrict_to_copy(q, np.abs(omega) + q.pullback(1, 1) @ np.abs(omega), 1)


@given(st.integers(0, 2 ** 31), st.sampled_from([("annulus", "component:0"), ("disk", "boundary"),
                                                 ("interval", "boundary"), ("square-2", "none")]))
def test_restrict_extend_inverse(seed, case):
    q, hc = quad(*case)
    rng = np.random.default_rng(seed)
    for p in range(q.W.dim + 1):
        alpha = rng.standard_normal(len(q.labels.relative_indices(p)))
        omega = extend_from_copy(q, alpha, p)
        np.testing.assert_allclose(eigenspace_projector(q, -1, 1, p) @ omega, omega, atol=1e-14)
        np.testing.assert_allclose(restrict_to_copy(q, omega, p), alpha)


def test_harmonic_restriction_is_injective():
    q, hc = quad("annulus", "boundary")
    h = hc.harmonic_basis(1)
    proj = eigenspace_projector(q, -1, 1, 1) @ h
    u, s, _ = np.linalg.svd(proj, full_matrices=False)
    basis = u[:, s > 1e-8]
    images = np.column_stack([restrict_to_copy(q, basis[:, k], 1) for k in range(basis.shape[1])])
    assert np.linalg.matrix_rank(images) == basis.shape[1] == 1


def test_isometry_and_delta_commute(rng):
    q, hc = quad("annulus", "component:1")
    for p in range(3):
        w = rng.standard_normal(q.W.count(p))
        lap = hc.laplacian(p)
        for which in (1, 2):
            t = q.pullback(which, p).toarray()
            assert hc.norm(t @ w, p) == pytest.approx(hc.norm(w, p), rel=1e-14)
            assert np.abs(lap @ t - t @ lap).max() < 1e-12 * np.abs(lap).max()
