import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from hodgelab import catalog
from hodgelab.complex import build_complex
from hodgelab.derham import (AnalyticForm, class_invariance, derham_map, harmonic_pairing,
                             named_form, stokes_residual)
from hodgelab.errors import VerificationError
from hodgelab.hodge import HodgeComplex, perturb_metric
from hodgelab.metric import Geometry, whitney_metric

from conftest import hodge_for

X, Y = sympy.symbols("x y")


def poly_form(px, py, dpx_dy, dpy_dx):
    """1-form ``px dx + py dy`` from sympy polynomials, with exact derivative."""
    fx, fy = sympy.lambdify((X, Y), px, "numpy"), sympy.lambdify((X, Y), py, "numpy")
    curl = sympy.lambdify((X, Y), sympy.expand(dpy_dx - dpx_dy), "numpy")

    def comps(x):
        n = len(x)
        return np.column_stack([np.broadcast_to(fx(x[:, 0], x[:, 1]), n),
                                np.broadcast_to(fy(x[:, 0], x[:, 1]), n)])
    deriv = AnalyticForm(2, 2, lambda x: np.broadcast_to(curl(x[:, 0], x[:, 1]), len(x))[:, None])
    return AnalyticForm(1, 2, comps, deriv)


def test_constant_zero_form():
    mesh = catalog.load("disk")
    np.testing.assert_array_equal(derham_map(mesh.complex, mesh.geometry, named_form("const")),
                                  np.ones(mesh.complex.count(0)))


def test_dx_gives_signed_extent():
    mesh = catalog.load("annulus")
    vals = derham_map(mesh.complex, mesh.geometry, named_form("dx"))
    x = mesh.geometry.simplex_points(mesh.complex.simplices[1])
    np.testing.assert_allclose(vals, x[:, 1, 0] - x[:, 0, 0], atol=1e-15)


def test_x_dy_on_hypotenuse():
    cx = build_complex([(0, 1, 2)])
    geom = Geometry.from_mapping({0: [0.0, 0.0], 1: [1.0, 0.0], 2: [0.0, 1.0]})
    form = AnalyticForm(1, 2, lambda x: np.column_stack([np.zeros(len(x)), x[:, 0]]))
    for q in (2, 3, 4):
        vals = derham_map(cx, geom, form, q)
        j = cx.index((1, 2))[1]
        assert vals[j] == pytest.approx(0.5, abs=1e-12)


def test_polynomial_stokes_exact():
    mesh = catalog.load("square-4")
    px, py = X ** 2 * Y, X * Y ** 2 + X ** 3
    form = poly_form(px, py, sympy.diff(px, Y), sympy.diff(py, X))
    assert stokes_residual(mesh.complex, mesh.geometry, form, 4) < 1e-12


def test_constant_form_stokes_zero():
    mesh = catalog.load("torus-8")
    assert stokes_residual(mesh.complex, mesh.geometry, named_form("dx"), 4) == 0.0


def test_sine_stokes_on_torus():
    mesh = catalog.load("torus-16x16")
    form = named_form("sinpx-dy")
    res = [stokes_residual(mesh.complex, mesh.geometry, form, q) for q in (2, 4, 6)]
    assert res[1] < 1e-6
    assert res[0] > res[1] > res[2]


def test_stokes_under_mesh_refinement():
    form = named_form("sinpx-dy", freq=1)
    res = []
    for n in (4, 8, 16):
        mesh = catalog.load(f"torus-{n}")
        res.append(stokes_residual(mesh.complex, mesh.geometry, form, 2))
    assert res[0] > res[1] > res[2]


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(a, b):
    mesh = catalog.load("annulus-6x1")
    f, g = named_form("dtheta"), named_form("dx")
    lhs = derham_map(mesh.complex, mesh.geometry, f.combine(a, g, b))
    rhs = a * derham_map(mesh.complex, mesh.geometry, f) + b * derham_map(mesh.complex, mesh.geometry, g)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))


@given(st.integers(2, 6), st.data())
def test_polynomial_exactness_against_symbolic(q, data):
    # total degree q - 1 integrates exactly along straight edges
    deg = q - 1
    monomials = [X ** i * Y ** j for i in range(deg + 1) for j in range(deg + 1 - i)]
    ints = st.integers(-3, 3)
    px = sum(data.draw(ints) * mono for mono in monomials)
    py = sum(data.draw(ints) * mono for mono in monomials)
    ends = [sympy.Rational(data.draw(st.integers(-8, 8)), 4) for _ in range(4)]
    if ends[:2] == ends[2:]:
        return
    cx = build_complex([(0, 1)])
    geom = Geometry.from_mapping({0: [float(v) for v in ends[:2]], 1: [float(v) for v in ends[2:]]})
    form = poly_form(sympy.sympify(px), sympy.sympify(py), 0, 0)
    s = sympy.symbols("s")
    xa, ya, xb, yb = ends
    path = {X: xa + s * (xb - xa), Y: ya + s * (yb - ya)}
    integrand = sympy.expand(sympy.sympify(px).subs(path) * (xb - xa)
                             + sympy.sympify(py).subs(path) * (yb - ya))
    exact = float(sympy.integrate(integrand, (s, 0, 1)))
    got = derham_map(cx, geom, form, q)[0]
    assert got == pytest.approx(exact, abs=1e-12 * max(1.0, abs(exact)))


def test_pairing_examples():
    hc = hodge_for("torus-8")
    mesh = catalog.load("torus-8")
    res = harmonic_pairing(hc, mesh.geometry, [named_form("dx"), named_form("dy")], 1)
    assert res.rank == res.betti == 2
    res.check()
    for n in (8, 12):
        circle = catalog.circle(n)
        hc = HodgeComplex(circle.complex, None, whitney_metric(circle.complex, circle.geometry))
        assert harmonic_pairing(hc, circle.geometry, [named_form("dtheta")], 1).rank == 1
    disk = catalog.load("disk")
    hc = hodge_for("disk")
    assert harmonic_pairing(hc, disk.geometry, [named_form("const")], 0).rank == 1


def test_pairing_detects_non_spanning_forms():
    hc = hodge_for("torus-8")
    mesh = catalog.load("torus-8")
    res = harmonic_pairing(hc, mesh.geometry, [named_form("dx"), named_form("dx")], 1)
    assert res.rank == 1
    with pytest.raises(VerificationError):
        res.check()


def test_class_invariance():
    hc = hodge_for("torus-4")
    assert class_invariance(hc, hc, 1) < 1e-12
    scaled = HodgeComplex(hc.cx, hc.labels, hc.metric.scaled(3.0))
    assert class_invariance(hc, scaled, 1) < 1e-12
    rng = np.random.default_rng(7)
    for _ in range(3):
        other = HodgeComplex(hc.cx, hc.labels, perturb_metric(hc.metric, rng))
        assert class_invariance(hc, other, 1) < 1e-8


def test_bad_degree_rejected():
    mesh = catalog.load("interval")
    with pytest.raises(ValueError):
        derham_map(mesh.complex, mesh.geometry, AnalyticForm(2, 1, lambda x: x))
    with pytest.raises(KeyError):
        named_form("wiggle")
