"""Boundary Weitzenboeck tensor, Bochner screen and a flat Weitzenboeck check.

At a boundary point pick the eigenbasis ``nu, e_1, ..., e_{m-1}`` of the
second fundamental form (inward normal ``nu``) with eigenvalues ``lam``.
The boundary tensor on p-form traces is diagonal: it kills every
``e_I`` with ``|I| = p`` and scales ``nu ^ e_I`` (``|I| = p - 1``) by
``-sum_{r not in I} lam_r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable

import numpy as np

from .complex import BoundaryLabeling, SimplicialComplex, manifold_boundary
from .errors import MeshParseError, VerificationError
from .metric import Geometry
from .quadrature import simplex_rule

NSD_TOL = 1e-12
TRACE_TOL = 1e-10


@dataclass(frozen=True)
class CurvatureSample:
    """A pointwise curvature sample.

    Boundary samples carry the ``m - 1`` second fundamental form
    eigenvalues; interior samples carry a Ricci lower bound.
    """

    m: int
    eigenvalues: tuple | None = None
    ricci_lower: float | None = None

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("manifold dimension must be >= 2")
        if (self.eigenvalues is None) == (self.ricci_lower is None):
            raise ValueError("a sample is either a boundary or an interior sample")
        if self.eigenvalues is not None:
            lam = tuple(float(v) for v in self.eigenvalues)
            if len(lam) != self.m - 1:
                raise ValueError(f"expected {self.m - 1} eigenvalues, got {len(lam)}")
            object.__setattr__(self, "eigenvalues", lam)

    @property
    def is_boundary(self) -> bool:
        return self.eigenvalues is not None


@dataclass(frozen=True)
class BochnerVerdict:
    conclusion: str  # "vanishes" or "no-conclusion"
    degree: int
    failed: tuple = field(default_factory=tuple)
    absolute: bool = False

    @property
    def vanishes(self) -> bool:
        return self.conclusion == "vanishes"


def _check(lam, p: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).reshape(-1)
    m = len(lam) + 1
    if m < 2:
        raise ValueError("need at least one eigenvalue")
    if not 0 <= p <= m:
        raise ValueError(f"degree {p} outside 0..{m}")
    return lam


def tensor_basis(m: int, p: int) -> list:
    """Basis labels: tangential p-subsets of ``1..m-1`` first, then ``nu`` ones."""
    tang = [tuple(s) for s in combinations(range(1, m), p)]
    normal = [("nu",) + tuple(s) for s in combinations(range(1, m), p - 1)] if p else []
    return tang + normal


def boundary_tensor(lam, p: int) -> np.ndarray:
    """The boundary tensor on p-forms as a diagonal ``C(m, p)`` matrix."""
    lam = _check(lam, p)
    m = len(lam) + 1
    diag = [0.0] * math.comb(m - 1, p)
    if p:
        total = lam.sum()
        for subset in combinations(range(m - 1), p - 1):
            diag.append(-(total - lam[list(subset)].sum()))
    return np.diag(np.array(diag, dtype=float))


def s_p_nonpositive(lam, p: int) -> bool:
    """True iff the sum of the ``m - p`` smallest eigenvalues is nonnegative.

    The comparison allows ``NSD_TOL`` so the answer matches the largest
    eigenvalue of :func:`boundary_tensor` being at most ``NSD_TOL``.
    """
    lam = _check(lam, p)
    m = len(lam) + 1
    if p == 0:
        return True
    return bool(np.sort(lam)[: m - p].sum() >= -NSD_TOL)


def bochner_screen(samples, p: int, infinite_volume: bool, absolute: bool = False,
                   weitzenboeck_attested: bool = False) -> BochnerVerdict:
    """Check the hypotheses of the Bochner vanishing theorem on sampled data.

    Args:
        samples: boundary and interior :class:`CurvatureSample` records.
        p: form degree.
        infinite_volume: whether the manifold has infinite volume.
        absolute: use the absolute criterion ``S_{m-p} <= 0`` instead.
        weitzenboeck_attested: caller vouches for ``R^W_p <= 0`` in the
            interior; only consulted for ``p != 1``.

    Returns:
        A verdict that is ``vanishes`` only if no precondition failed.
    """
    samples = list(samples)
    failed = []
    if not samples:
        return BochnerVerdict("no-conclusion", p, ("no samples",), absolute)
    dims = {s.m for s in samples}
    if len(dims) != 1:
        return BochnerVerdict("no-conclusion", p, ("samples disagree on dimension",), absolute)
    m = dims.pop()
    if not 0 <= p <= m:
        return BochnerVerdict("no-conclusion", p, (f"degree outside 0..{m}",), absolute)
    if not infinite_volume:
        failed.append("infinite volume")
    interior = [s for s in samples if not s.is_boundary]
    if p == 1:
        if not interior:
            failed.append("interior Ricci: no interior samples")
        bad = [k for k, s in enumerate(samples) if not s.is_boundary and s.ricci_lower < 0]
        if bad:
            failed.append(f"interior Ricci >= 0 at samples {bad}")
    elif not weitzenboeck_attested:
        failed.append(f"interior R^W_{p} <= 0 not attested")
    q = m - p if absolute else p
    bad = [k for k, s in enumerate(samples) if s.is_boundary and not s_p_nonpositive(s.eigenvalues, q)]
    if bad:
        failed.append(f"S_{q} <= 0 fails at samples {bad}")
    return BochnerVerdict("no-conclusion" if failed else "vanishes", p, tuple(failed), absolute)


def parse_samples(text: str, m: int | None = None) -> list:
    """Parse ``b lam...`` / ``i ric`` records; an optional ``dim m`` fixes ``m``."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        tokens = line.split()
        if not tokens:
            continue
        col = raw.index(tokens[0]) + 1
        kind, args = tokens[0], tokens[1:]
        try:
            values = [float(a) for a in args]
        except ValueError as exc:
            raise MeshParseError(f"bad number in {kind!r} record: {exc}", lineno, col) from None
        if kind == "dim":
            if len(values) != 1 or values[0] != int(values[0]) or values[0] < 2:
                raise MeshParseError("dim takes one integer >= 2", lineno, col)
            if m is not None and m != int(values[0]):
                raise MeshParseError(f"dim {int(values[0])} conflicts with {m}", lineno, col)
            m = int(values[0])
        elif kind == "b":
            if not values:
                raise MeshParseError("boundary sample needs eigenvalues", lineno, col)
            rows.append((lineno, col, "b", values))
        elif kind == "i":
            if len(values) != 1:
                raise MeshParseError("interior sample takes one Ricci bound", lineno, col)
            rows.append((lineno, col, "i", values))
        else:
            raise MeshParseError(f"unknown record {kind!r}", lineno, col)
    if m is None:
        lengths = {len(v) for _, _, k, v in rows if k == "b"}
        if not lengths:
            raise MeshParseError("cannot infer dimension without boundary samples or dim", 1, 1)
        m = max(lengths) + 1
    out = []
    for lineno, col, kind, values in rows:
        try:
            if kind == "b":
                out.append(CurvatureSample(m, eigenvalues=tuple(values)))
            else:
                out.append(CurvatureSample(m, ricci_lower=values[0]))
        except ValueError as exc:
            raise MeshParseError(str(exc), lineno, col) from None
    return out


def read_samples(path, m: int | None = None) -> list:
    return parse_samples(Path(path).read_text(), m)


# -- flat Weitzenboeck residual ---------------------------------------------

@dataclass(frozen=True)
class FlatOneForm:
    """A 1-form on a flat domain with vectorized samplers.

    ``value(x)`` returns ``(N, d)`` components; ``jacobian(x)`` returns
    ``(N, d, d)`` with ``J[:, i, j] = d omega_i / d x_j``.
    """

    value: Callable
    jacobian: Callable
    name: str = ""


def sine_form(kind: str = "acceptance") -> FlatOneForm:
    """Test forms on the unit square vanishing on its boundary.

    ``acceptance``: ``sin(pi x) sin(pi y) dx``.
    ``mixed``: ``e^x sin(pi y) dx + e^y sin(pi x) dy``, whose integrand
    identity only holds after integration by parts.
    """
    pi = math.pi

    def f(x):
        return np.sin(pi * x[:, 0]) * np.sin(pi * x[:, 1])

    def grad_f(x):
        return np.column_stack([pi * np.cos(pi * x[:, 0]) * np.sin(pi * x[:, 1]),
                                pi * np.sin(pi * x[:, 0]) * np.cos(pi * x[:, 1])])

    if kind == "acceptance":
        def value(x):
            return np.column_stack([f(x), np.zeros(len(x))])

        def jac(x):
            out = np.zeros((len(x), 2, 2))
            out[:, 0, :] = grad_f(x)
            return out
        return FlatOneForm(value, jac, "sin(pi x) sin(pi y) dx")
    if kind == "mixed":
        def value(x):
            ex, ey = np.exp(x[:, 0]), np.exp(x[:, 1])
            return np.column_stack([ex * np.sin(pi * x[:, 1]), ey * np.sin(pi * x[:, 0])])

        def jac(x):
            ex, ey = np.exp(x[:, 0]), np.exp(x[:, 1])
            out = np.empty((len(x), 2, 2))
            out[:, 0, 0] = ex * np.sin(pi * x[:, 1])
            out[:, 0, 1] = pi * ex * np.cos(pi * x[:, 1])
            out[:, 1, 0] = pi * ey * np.cos(pi * x[:, 0])
            out[:, 1, 1] = ey * np.sin(pi * x[:, 0])
            return out
        return FlatOneForm(value, jac, "e^x sin(pi y) dx + e^y sin(pi x) dy")
    raise KeyError(f"unknown test form {kind!r}")


def _facet_normal(pts: np.ndarray) -> np.ndarray:
    """Unit normals of ``(n, d, d)`` facet vertex arrays in ``R^d``."""
    e = pts[:, 1:, :] - pts[:, :1, :]
    n = np.empty((len(pts), pts.shape[2]))
    for k, block in enumerate(e):
        # null vector of the facet edge matrix
        n[k] = np.linalg.svd(block)[2][-1]
    return n


def _trace_check(cx: SimplicialComplex, geom: Geometry, form: FlatOneForm,
                 labels: BoundaryLabeling | None, tol: float) -> None:
    m = cx.dim
    bnd = manifold_boundary(cx)[m - 1]
    if not bnd.any():
        return
    if labels is None:
        m1, m2 = bnd, np.zeros_like(bnd)
    else:
        m1, m2 = labels.m1[m - 1], labels.m2[m - 1]
    rule = simplex_rule(m - 1, 2)
    for mask, what in ((m1, "tangential"), (m2, "normal")):
        if not mask.any():
            continue
        pts = geom.simplex_points(cx.simplices[m - 1][mask])
        normal = _facet_normal(pts)
        bary = np.vstack([np.eye(m), rule.barycentric])
        nodes = np.einsum("qk,nkd->nqd", bary, pts)
        vals = form.value(nodes.reshape(-1, pts.shape[2])).reshape(nodes.shape)
        normal_part = np.einsum("nqd,nd->nq", vals, normal)
        if what == "normal":
            err = np.abs(normal_part)
        else:
            err = np.linalg.norm(vals - normal_part[..., None] * normal[:, None, :], axis=2)
        scale = max(1.0, float(np.abs(vals).max()))
        if err.max() > tol * scale:
            raise VerificationError(f"{what} boundary trace is {err.max():.3e}, not zero")


def weitzenboeck_terms(cx: SimplicialComplex, geom: Geometry, form: FlatOneForm,
                       order: int = 6) -> dict:
    """Quadrature values of ``|grad w|^2``, ``|d w|^2`` and ``|delta w|^2``."""
    m = cx.dim
    if geom.ambient_dim != m:
        raise ValueError("flat check needs a full-dimensional embedding")
    x = geom.simplex_points(cx.simplices[m])
    e = x[:, 1:, :] - x[:, :1, :]
    jac_det = np.abs(np.linalg.det(e))
    rule = simplex_rule(m, order)
    nodes = x[:, :1, :] + np.einsum("qk,nkd->nqd", rule.points, e)
    j = form.jacobian(nodes.reshape(-1, m)).reshape(len(x), len(rule.weights), m, m)
    grad2 = np.einsum("nqij,nqij->nq", j, j)
    curl = j - np.swapaxes(j, 2, 3)
    d2 = 0.5 * np.einsum("nqij,nqij->nq", curl, curl)
    delta2 = np.einsum("nqii->nq", j) ** 2
    w = jac_det[:, None] * rule.weights[None, :]
    return {"grad": float((w * grad2).sum()), "d": float((w * d2).sum()),
            "delta": float((w * delta2).sum())}


def weitzenboeck_flat_residual(cx: SimplicialComplex, geom: Geometry, form: FlatOneForm,
                               order: int = 6, labels: BoundaryLabeling | None = None,
                               trace_tol: float = TRACE_TOL) -> float:
    """Relative gap ``|grad|^2 - |d|^2 - |delta|^2`` over ``|grad|^2``.

    Tangential traces must vanish on M1 (the whole boundary when no
    labeling is given) and normal components on M2; this is spot-checked
    at facet vertices and quadrature nodes.
    """
    _trace_check(cx, geom, form, labels, trace_tol)
    t = weitzenboeck_terms(cx, geom, form, order)
    if t["grad"] == 0.0:
        return 0.0
    return abs(t["grad"] - t["d"] - t["delta"]) / t["grad"]
