import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hodgelab.quadrature import monomial_integral, simplex_rule


@pytest.mark.parametrize("dim", [0, 1, 2, 3])
@pytest.mark.parametrize("order", [1, 2, 4, 6, 8])
def test_weights_and_points(dim, order):
    rule = simplex_rule(dim, order)
    assert rule.weights.sum() == pytest.approx(1 / math.factorial(dim), abs=1e-14)
    assert (rule.weights > 0).all()
    assert (rule.barycentric >= -1e-15).all()


def test_monomial_oracle():
    assert monomial_integral(()) == 1
    assert monomial_integral((1,)) == pytest.approx(0.5)
    assert monomial_integral((1, 1)) == pytest.approx(1 / 24)


@given(st.integers(1, 3), st.integers(1, 7), st.integers(0, 2 ** 31))
def test_random_polynomials_exact(dim, order, seed):
    rng = np.random.default_rng(seed)
    rule = simplex_rule(dim, order)
    exps = [e for e in product(range(order + 1), repeat=dim) if sum(e) <= order]
    coef = rng.standard_normal(len(exps))
    exact = sum(c * monomial_integral(e) for c, e in zip(coef, exps))
    vals = sum(c * np.prod(rule.points ** np.array(e), axis=1) for c, e in zip(coef, exps))
    assert float(rule.weights @ vals) == pytest.approx(exact, abs=1e-13)


def test_bad_order():
    with pytest.raises(ValueError):
        simplex_rule(2, 0)
