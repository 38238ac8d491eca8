"""Gauss rules on reference simplices.

Collapsed-coordinate (conical product) Gauss-Jacobi rules on
``{x >= 0, sum(x) <= 1}``; ``n = ceil((order + 1) / 2)`` points per
direction integrate polynomials of total degree ``<= order`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class QuadratureRule:
    order: int
    dim: int
    points: np.ndarray  # (N, dim) reference Cartesian coordinates
    weights: np.ndarray  # (N,), sum 1/dim!

    @property
    def barycentric(self) -> np.ndarray:
        return np.column_stack([1.0 - self.points.sum(axis=1), self.points])

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


def _collapsed(n: int, k: int):
    if k == 0:
        return np.zeros((1, 0)), np.ones(1)
    s, w = roots_jacobi(n, k - 1, 0)
    t = (1.0 + s) / 2.0
    wt = w / 2.0 ** k
    sub_pts, sub_w = _collapsed(n, k - 1)
    pts = [np.concatenate([[ti], (1.0 - ti) * y]) for ti in t for y in sub_pts]
    wts = [wi * wy for wi in wt for wy in sub_w]
    return np.array(pts).reshape(-1, k), np.array(wts)


def monomial_integral(exponents) -> float:
    """Exact ``int x^a`` over the reference simplex: ``prod(a_i!) / (k + |a|)!``."""
    k = len(exponents)
    return math.prod(math.factorial(a) for a in exponents) / math.factorial(k + sum(exponents))


@lru_cache(maxsize=None)
def simplex_rule(dim: int, order: int) -> QuadratureRule:
    """Rule on the reference ``dim``-simplex, exact to total degree ``order``."""
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    if dim < 0:
        raise ValueError("negative simplex dimension")
    n = (order + 2) // 2
    pts, wts = _collapsed(n, dim)
    rule = QuadratureRule(order, dim, pts, wts)
    _verify(rule)
    return rule


def _verify(rule: QuadratureRule) -> None:
    k = rule.dim
    for exps in product(range(rule.order + 1), repeat=k):
        if sum(exps) > rule.order:
            continue
        approx = np.dot(rule.weights, np.prod(rule.points ** np.array(exps), axis=1))
        exact = monomial_integral(exps)
        if abs(approx - exact) > 1e-13 * max(1.0, abs(exact)):
            raise ArithmeticError(f"quadrature rule fails on monomial {exps}")
