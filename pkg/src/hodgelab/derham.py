"""De Rham map: integrate analytic forms over simplices.

A p-form in ambient ``R^d`` is given by its components on increasing
multi-indices ``I`` (``combinations(range(d), p)``), so
``omega = sum_I omega_I dx^I`` and ``omega(v_1..v_p) = sum_I omega_I det(v[I])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations
from typing import Callable

import numpy as np

from .complex import SimplicialComplex
from .errors import DegenerateGeometryError, VerificationError
from .hodge import HodgeComplex
from .metric import CochainMetric, Geometry, whitney_metric
from .quadrature import simplex_rule

DEFAULT_ORDER = 4


@dataclass(frozen=True)
class AnalyticForm:
    """A smooth p-form given by a vectorized component sampler.

    ``sampler(points)`` maps ``(N, d)`` points to ``(N, C(d, p))``
    components.  ``derivative`` is the exact ``d omega`` when known.
    """

    degree: int
    ambient_dim: int
    sampler: Callable
    derivative: "AnalyticForm | None" = None
    name: str = ""

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.asarray(self.sampler(pts), dtype=float)
        return vals.reshape(len(pts), math.comb(self.ambient_dim, self.degree))

    def __add__(self, other: "AnalyticForm") -> "AnalyticForm":
        return self.combine(1.0, other, 1.0)

    def combine(self, a: float, other: "AnalyticForm", b: float) -> "AnalyticForm":
        if (self.degree, self.ambient_dim) != (other.degree, other.ambient_dim):
            raise ValueError("forms of different type")
        deriv = None
        if self.derivative is not None and other.derivative is not None:
            deriv = self.derivative.combine(a, other.derivative, b)
        return AnalyticForm(self.degree, self.ambient_dim,
                            lambda x: a * self(x) + b * other(x), deriv)

    def as_tensor(self, points) -> np.ndarray:
        """Fully antisymmetric component tensor ``(N, d, ..., d)``."""
        vals = self(points)
        d, p = self.ambient_dim, self.degree
        out = np.zeros((len(vals),) + (d,) * p)
        for k, idx in enumerate(combinations(range(d), p)):
            for perm in _permutations_with_sign(idx):
                out[(slice(None),) + perm[0]] = perm[1] * vals[:, k]
        return out


def _permutations_with_sign(idx):
    for perm in permutations(range(len(idx))):
        inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
        yield tuple(idx[i] for i in perm), (-1) ** inv


def zero_form(degree: int, ambient_dim: int) -> AnalyticForm:
    n = math.comb(ambient_dim, degree)
    return AnalyticForm(degree, ambient_dim, lambda x: np.zeros((len(x), n)), name="0")


def constant_form(value, degree: int, ambient_dim: int, name: str = "") -> AnalyticForm:
    comps = np.asarray(value, dtype=float).reshape(-1)
    deriv = zero_form(degree + 1, ambient_dim) if degree < ambient_dim else None
    return AnalyticForm(degree, ambient_dim, lambda x: np.tile(comps, (len(x), 1)), deriv, name)


def named_form(name: str, ambient_dim: int = 2, **params) -> AnalyticForm:
    """Built-in forms: ``const``, ``dx``, ``dy``, ``dz``, ``dtheta``, ``sinpx-dy``.

    ``sinpx-dy`` is ``sin(freq pi x) dy`` (``freq`` defaults to 2).
    """
    d = ambient_dim
    if name == "const":
        return constant_form([params.get("value", 1.0)], 0, d, "const")
    if name in ("dx", "dy", "dz"):
        axis = "xyz".index(name[1])
        if axis >= d:
            raise ValueError(f"{name} needs ambient dimension > {axis}")
        comps = np.zeros(d)
        comps[axis] = 1.0
        return constant_form(comps, 1, d, name)
    if name == "dtheta":
        if d != 2:
            raise ValueError("dtheta is defined in the plane")

        def sampler(x):
            r2 = x[:, 0] ** 2 + x[:, 1] ** 2
            return np.column_stack([-x[:, 1] / r2, x[:, 0] / r2])
        return AnalyticForm(1, 2, sampler, zero_form(2, 2), "dtheta")
    if name == "sinpx-dy":
        if d != 2:
            raise ValueError("sinpx-dy is defined in the plane")
        k = float(params.get("freq", 2.0)) * math.pi
        deriv = AnalyticForm(2, 2, lambda x: (k * np.cos(k * x[:, 0]))[:, None], None, "dsinpx-dy")
        return AnalyticForm(1, 2, lambda x: np.column_stack([np.zeros(len(x)), np.sin(k * x[:, 0])]),
                            deriv, "sinpx-dy")
    raise KeyError(f"unknown form {name!r}")


def _minors(e: np.ndarray, p: int, d: int) -> np.ndarray:
    """``det(e[:, :, I])`` for every increasing ``I``: ``(n, C(d, p))``."""
    if p == 0:
        return np.ones((len(e), 1))
    return np.stack([np.linalg.det(e[:, :, list(idx)]) for idx in combinations(range(d), p)],
                    axis=1)


def integrate_over(geom: Geometry, simplices: np.ndarray, form: AnalyticForm,
                   order: int = DEFAULT_ORDER) -> np.ndarray:
    """Integral of ``form`` over each simplex of an ``(n, p+1)`` vertex array."""
    p = simplices.shape[1] - 1
    if form.degree != p:
        raise ValueError(f"cannot integrate a {form.degree}-form over {p}-simplices")
    if form.ambient_dim != geom.ambient_dim:
        raise ValueError("form and geometry live in different ambient dimensions")
    x = geom.simplex_points(simplices)
    e = x[:, 1:, :] - x[:, :1, :]
    if p:
        gram = np.einsum("nid,njd->nij", e, e)
        vol = np.sqrt(np.clip(np.linalg.det(gram), 0.0, None))
        scale = np.max(np.linalg.norm(e, axis=2), axis=1) ** p
        if (vol < 1e-12 * scale).any():
            raise DegenerateGeometryError("degenerate simplex in the de Rham map")
    rule = simplex_rule(p, order)
    nodes = x[:, :1, :] + np.einsum("qk,nkd->nqd", rule.points, e)
    vals = form(nodes.reshape(-1, geom.ambient_dim)).reshape(len(x), len(rule.weights), -1)
    minors = _minors(e, p, geom.ambient_dim)
    return np.einsum("q,nqc,nc->n", rule.weights, vals, minors)


def derham_map(cx: SimplicialComplex, geom: Geometry, form: AnalyticForm,
               order: int = DEFAULT_ORDER) -> np.ndarray:
    """Cochain of integrals over all ``form.degree``-simplices of ``cx``."""
    if form.degree > cx.dim:
        raise ValueError("form degree exceeds the complex dimension")
    return integrate_over(geom, cx.simplices[form.degree], form, order)


def stokes_residual(cx: SimplicialComplex, geom: Geometry, form: AnalyticForm,
                    order: int = DEFAULT_ORDER, metric: CochainMetric | None = None) -> float:
    """``|A(d omega) - d A(omega)|_G`` in degree ``p + 1``."""
    if form.derivative is None:
        raise ValueError("form has no derivative sampler")
    p = form.degree
    if p >= cx.dim:
        return 0.0
    lhs = derham_map(cx, geom, form.derivative, order)
    rhs = cx.coboundary(p) @ derham_map(cx, geom, form, order)
    diff = lhs - rhs
    g = (metric if metric is not None else whitney_metric(cx, geom)).gram(p + 1)
    return float(np.sqrt(max(diff @ (g @ diff), 0.0)))


@dataclass(frozen=True)
class PairingResult:
    matrix: np.ndarray  # (forms, harmonic basis)
    singular_values: np.ndarray
    rank: int
    betti: int

    @property
    def full_rank(self) -> bool:
        return self.rank == self.betti == min(self.matrix.shape)

    def check(self) -> "PairingResult":
        if not self.full_rank:
            raise VerificationError(
                f"pairing rank {self.rank} but harmonic dimension {self.betti}: "
                "mesh too coarse or forms not spanning")
        return self


def harmonic_pairing(hc: HodgeComplex, geom: Geometry, forms, p: int,
                     order: int = DEFAULT_ORDER) -> PairingResult:
    """Pair de Rham images of smooth forms with the discrete harmonic basis."""
    h = hc.harmonic_basis(p)
    idx = hc.labels.relative_indices(p)
    rows = [derham_map(hc.cx, geom, f, order)[idx] for f in forms]
    a = np.array(rows).reshape(len(rows), -1)
    mat = (hc.gram_sparse(p) @ a.T).T @ h if h.shape[1] else np.zeros((len(rows), 0))
    sv = np.linalg.svd(mat, compute_uv=False) if mat.size else np.zeros(0)
    rank = int((sv > hc.rank_tol * sv[0]).sum()) if sv.size and sv[0] > 0 else 0
    return PairingResult(mat, sv, rank, h.shape[1])


def class_invariance(hc1: HodgeComplex, hc2: HodgeComplex, p: int) -> float:
    """Max relative non-exact part of ``h1 - pr2(h1)`` over a harmonic basis of metric 1."""
    h1 = hc1.harmonic_basis(p)
    if h1.shape[1] == 0:
        return 0.0
    h2 = hc2.harmonic_projection(h1, p)
    dec = hc2.decompose(h1 - h2, p)
    rest = dec.harmonic + dec.coexact
    ratio = hc2.norm(rest, p) / hc2.norm(h1, p)
    return float(np.max(ratio))
