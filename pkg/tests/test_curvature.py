import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hodgelab import catalog
from hodgelab.complex import label_boundary
from hodgelab.curvature import (CurvatureSample, FlatOneForm, bochner_screen, boundary_tensor,
                                parse_samples, s_p_nonpositive, sine_form, tensor_basis,
                                weitzenboeck_flat_residual, weitzenboeck_terms)
from hodgelab.errors import MeshParseError, VerificationError

lam_entry = st.floats(-2, 2, allow_nan=False)


def test_boundary_tensor_examples():
    np.testing.assert_array_equal(np.diag(boundary_tensor([2, -1], 1)), [0, 0, -1])
    assert not boundary_tensor([0, 0, 0], 2).any()
    a, b = 1.5, -0.25
    np.testing.assert_array_equal(np.diag(boundary_tensor([a, b], 2)), [0, -b, -a])
    assert boundary_tensor([1, 2, 3], 2).shape == (math.comb(4, 2),) * 2
    assert tensor_basis(3, 2) == [(1, 2), ("nu", 1), ("nu", 2)]


def test_boundary_tensor_errors():
    with pytest.raises(ValueError):
        boundary_tensor([1, 2], 4)
    with pytest.raises(ValueError):
        boundary_tensor([], 1)


def test_criterion_examples():
    assert s_p_nonpositive([2, -1], 1)
    assert not s_p_nonpositive([-3, 1, 1], 1)
    for p in range(1, 5):
        assert s_p_nonpositive([0.0, 0.5, 3.0], p)


@given(st.integers(2, 6).flatmap(lambda m: st.tuples(st.just(m), st.lists(lam_entry, min_size=m - 1,
                                                                          max_size=m - 1))))
def test_criterion_matches_matrix(args):
    m, lam = args
    for p in range(1, m + 1):
        top = np.linalg.eigvalsh(boundary_tensor(lam, p)).max()
        assert s_p_nonpositive(lam, p) == (top <= 1e-12)


@given(st.lists(lam_entry, min_size=1, max_size=5), st.data())
def test_criterion_monotone(lam, data):
    m = len(lam) + 1
    p = data.draw(st.integers(1, m))
    k = data.draw(st.integers(0, len(lam) - 1))
    bump = data.draw(st.floats(0, 3))
    raised = list(lam)
    raised[k] += bump
    if s_p_nonpositive(lam, p):
        assert s_p_nonpositive(raised, p)


@given(st.lists(lam_entry, min_size=1, max_size=5))
def test_trace_criterion(lam):
    assert s_p_nonpositive(lam, 1) == (sum(sorted(lam)) >= -1e-12)


def test_screen_examples():
    convex = [CurvatureSample(3, (0.5, 1.0)), CurvatureSample(3, (0.0, 2.0)),
              CurvatureSample(3, ricci_lower=0.0)]
    assert bochner_screen(convex, 1, True).conclusion == "vanishes"
    torus = [CurvatureSample(2, ricci_lower=0.0)]
    verdict = bochner_screen(torus, 1, False)
    assert verdict.conclusion == "no-conclusion"
    assert verdict.failed == ("infinite volume",)
    bad = [CurvatureSample(4, (-3, 1, 1)), CurvatureSample(4, ricci_lower=1.0)]
    verdict = bochner_screen(bad, 1, True)
    assert verdict.conclusion == "no-conclusion"
    assert len(verdict.failed) == 1 and verdict.failed[0].startswith("S_1")


def test_screen_general_degree_and_absolute():
    # trace 2 > 0 so S_1 holds, but the smallest eigenvalue is negative so S_2 fails
    samples = [CurvatureSample(3, (-1.0, 3.0)), CurvatureSample(3, ricci_lower=0.0)]
    assert bochner_screen(samples, 1, True).vanishes
    assert bochner_screen(samples, 2, True, weitzenboeck_attested=True).failed[0].startswith("S_2")
    verdict = bochner_screen(samples, 2, True)
    assert "interior R^W_2 <= 0 not attested" in verdict.failed
    # the absolute variant swaps the roles: q = m - p
    assert bochner_screen(samples, 1, True, absolute=True).failed[0].startswith("S_2")
    assert bochner_screen(samples, 2, True, absolute=True, weitzenboeck_attested=True).vanishes
    assert bochner_screen([], 1, True).failed == ("no samples",)


sample_st = st.one_of(
    st.lists(lam_entry, min_size=2, max_size=2).map(lambda v: CurvatureSample(3, tuple(v))),
    st.floats(-1, 1).map(lambda r: CurvatureSample(3, ricci_lower=r)))


@given(st.lists(sample_st, max_size=6), st.integers(0, 3), st.booleans(), st.booleans(),
       st.booleans())
def test_screen_never_fabricates(samples, p, infinite, absolute, attested):
    verdict = bochner_screen(samples, p, infinite, absolute, attested)
    assert verdict.vanishes == (not verdict.failed)
    if verdict.vanishes:
        assert infinite
        assert all(s.ricci_lower >= 0 for s in samples if not s.is_boundary) or p != 1
        q = 3 - p if absolute else p
        assert all(s_p_nonpositive(s.eigenvalues, q) for s in samples if s.is_boundary)


def test_sample_validation():
    with pytest.raises(ValueError):
        CurvatureSample(3, (1.0,))
    with pytest.raises(ValueError):
        CurvatureSample(1, ())
    with pytest.raises(ValueError):
        CurvatureSample(3, (1.0, 2.0), ricci_lower=0.0)


def test_parse_samples():
    got = parse_samples("# sample file\ndim 3\nb 1 2  # convex\ni 0.5\n")
    assert got == [CurvatureSample(3, (1.0, 2.0)), CurvatureSample(3, ricci_lower=0.5)]
    assert parse_samples("b 1 2 3\n")[0].m == 4
    for text, line in [("b 1 x\n", 1), ("dim 3\nb 1\n", 2), ("i 1 2\n", 1), ("q 1\n", 1),
                       ("i 0\n", 1)]:
        with pytest.raises(MeshParseError) as info:
            parse_samples(text)
        assert info.value.line == line


def test_flat_residual_examples():
    sq = catalog.load("square-8")
    zero = FlatOneForm(lambda x: np.zeros((len(x), 2)), lambda x: np.zeros((len(x), 2, 2)))
    assert weitzenboeck_flat_residual(sq.complex, sq.geometry, zero) == 0.0
    torus = catalog.load("torus-4")
    parallel = FlatOneForm(lambda x: np.tile([2.0, 0.0], (len(x), 1)),
                           lambda x: np.zeros((len(x), 2, 2)))
    terms = weitzenboeck_terms(torus.complex, torus.geometry, parallel)
    assert terms == {"grad": 0.0, "d": 0.0, "delta": 0.0}
    assert weitzenboeck_flat_residual(torus.complex, torus.geometry, parallel) == 0.0
    assert weitzenboeck_flat_residual(sq.complex, sq.geometry, sine_form(), 6) < 1e-6


def test_flat_terms_match_closed_forms():
    # f = sin(pi x) sin(pi y): |grad f|^2 integrates to pi^2 / 2 on the unit square
    sq = catalog.load("square-8")
    terms = weitzenboeck_terms(sq.complex, sq.geometry, sine_form(), 8)
    assert terms["grad"] == pytest.approx(math.pi ** 2 / 2, rel=1e-6)
    assert terms["d"] == pytest.approx(math.pi ** 2 / 4, rel=1e-6)
    assert terms["delta"] == pytest.approx(math.pi ** 2 / 4, rel=1e-6)


def test_flat_residual_decreases_with_order():
    sq = catalog.load("square-4")
    res = [weitzenboeck_flat_residual(sq.complex, sq.geometry, sine_form("mixed"), q)
           for q in (2, 4, 6)]
    assert res[0] > res[1] > res[2]


def test_trace_spot_check():
    sq = catalog.load("square-4")
    bad = FlatOneForm(lambda x: np.column_stack([np.ones(len(x)), np.zeros(len(x))]),
                      lambda x: np.zeros((len(x), 2, 2)))
    with pytest.raises(VerificationError):
        weitzenboeck_flat_residual(sq.complex, sq.geometry, bad)
    # dx has zero normal component on the horizontal sides and is tangent to the vertical ones
    labels = label_boundary(sq.complex, "none", "boundary")
    with pytest.raises(VerificationError):
        weitzenboeck_flat_residual(sq.complex, sq.geometry, bad, labels=labels)
