"""Geometry, Whitney-form Gram matrices, mesh quality and graph-metric probes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .complex import SimplicialComplex
from .errors import DegenerateGeometryError, VerificationError

DEGENERACY_RATIO = 1e-12
DENSE_LIMIT = 5000


@dataclass(frozen=True, eq=False)
class Geometry:
    """Vertex coordinates in Euclidean ``d``-space.

    ``period`` makes the given axes periodic (flat tori); simplex
    coordinates are then unwrapped around the first vertex by the
    minimum-image rule.  A period of 0 marks a non-periodic axis.
    """

    ids: np.ndarray
    coords: np.ndarray
    period: np.ndarray | None = None

    @classmethod
    def from_mapping(cls, points: dict, period=None) -> "Geometry":
        ids = np.array(sorted(points), dtype=np.int64)
        coords = np.array([np.atleast_1d(np.asarray(points[i], dtype=float)) for i in ids])
        per = None if period is None else np.asarray(period, dtype=float)
        return cls(ids, coords, per)

    @property
    def ambient_dim(self) -> int:
        return self.coords.shape[1]

    def check_covers(self, cx: SimplicialComplex) -> None:
        missing = np.setdiff1d(cx.vertex_ids, self.ids)
        if len(missing):
            raise DegenerateGeometryError(f"vertices without coordinates: {missing[:5].tolist()}")
        if self.ambient_dim < cx.dim:
            raise DegenerateGeometryError(
                f"ambient dimension {self.ambient_dim} < complex dimension {cx.dim}")

    def points(self, vertex_ids) -> np.ndarray:
        vertex_ids = np.asarray(vertex_ids)
        rows = np.searchsorted(self.ids, vertex_ids)
        rows = np.clip(rows, 0, len(self.ids) - 1)
        if (self.ids[rows] != vertex_ids).any():
            raise DegenerateGeometryError("vertex without coordinates")
        return self.coords[rows]

    def simplex_points(self, simplices) -> np.ndarray:
        """Coordinates ``(n, k+1, d)`` for an ``(n, k+1)`` array of vertex ids."""
        x = self.points(simplices)
        if self.period is not None:
            per = self.period
            delta = x[:, 1:, :] - x[:, :1, :]
            wrap = np.where(per > 0, per * np.round(delta / np.where(per > 0, per, 1.0)), 0.0)
            x = x.copy()
            x[:, 1:, :] = x[:, :1, :] + delta - wrap
        return x

    def scaled(self, factor: float) -> "Geometry":
        per = None if self.period is None else self.period * factor
        return Geometry(self.ids, self.coords * factor, per)


def _edge_vectors(x: np.ndarray) -> np.ndarray:
    return x[:, 1:, :] - x[:, :1, :]


def _volumes(x: np.ndarray) -> np.ndarray:
    k = x.shape[1] - 1
    if k == 0:
        return np.ones(len(x))
    e = _edge_vectors(x)
    gram = np.einsum("nid,njd->nij", e, e)
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None)) / math.factorial(k)


def _max_edge(x: np.ndarray) -> np.ndarray:
    k = x.shape[1] - 1
    if k == 0:
        return np.zeros(len(x))
    best = np.zeros(len(x))
    for a, b in combinations(range(k + 1), 2):
        best = np.maximum(best, np.linalg.norm(x[:, a] - x[:, b], axis=1))
    return best


def _check_degenerate(x: np.ndarray, vol: np.ndarray, simplices=None) -> None:
    k = x.shape[1] - 1
    if k == 0:
        return
    bad = vol < DEGENERACY_RATIO * _max_edge(x) ** k
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        which = "" if simplices is None else f" {tuple(int(v) for v in simplices[j])}"
        raise DegenerateGeometryError(f"degenerate {k}-simplex{which} (volume {vol[j]:.3e})")


def simplex_volume(geom: Geometry, simplex) -> float:
    """k-dimensional volume of one simplex (Gram determinant)."""
    s = np.asarray(simplex, dtype=np.int64).reshape(1, -1)
    x = geom.simplex_points(s)
    vol = _volumes(x)
    _check_degenerate(x, vol, s)
    return float(vol[0])


def simplex_volumes(geom: Geometry, simplices: np.ndarray) -> np.ndarray:
    x = geom.simplex_points(simplices)
    vol = _volumes(x)
    _check_degenerate(x, vol, simplices)
    return vol


def barycentric_gradients(x: np.ndarray) -> np.ndarray:
    """Gradients ``(n, k+1, d)`` of the barycentric coordinates, tangent to each simplex."""
    e = _edge_vectors(x)  # (n, k, d)
    gram = np.einsum("nid,njd->nij", e, e)
    g = np.linalg.solve(gram, e)  # rows: gradients of lambda_1..lambda_k
    g0 = -g.sum(axis=1, keepdims=True)
    return np.concatenate([g0, g], axis=1)


# -- Gram matrices -------------------------------------------------------------

def whitney_element_matrices(x: np.ndarray, p: int) -> np.ndarray:
    """Exact local Whitney p-form mass matrices ``(n, C, C)``.

    Local faces follow ``combinations(range(m + 1), p + 1)``.  Uses
    ``int lambda_a lambda_b = vol (1 + [a == b]) / ((m + 1)(m + 2))``.
    """
    n, m1, _ = x.shape
    m = m1 - 1
    vol = _volumes(x)
    _check_degenerate(x, vol)
    grads = barycentric_gradients(x)
    gamma = np.einsum("nad,nbd->nab", grads, grads)
    local = list(combinations(range(m + 1), p + 1))
    out = np.zeros((n, len(local), len(local)))
    scale = math.factorial(p) ** 2 / ((m + 1) * (m + 2))
    for i, s in enumerate(local):
        for j, t in enumerate(local):
            if j < i:
                continue
            acc = np.zeros(n)
            for k, a in enumerate(s):
                rs = [v for v in s if v != a]
                for l, b in enumerate(t):
                    rt = [v for v in t if v != b]
                    mass = vol * (2.0 if a == b else 1.0)
                    if p:
                        det = np.linalg.det(gamma[:, rs][:, :, rt])
                    else:
                        det = 1.0
                    acc += (-1) ** (k + l) * mass * det
            out[:, i, j] = out[:, j, i] = scale * acc
    return out


def lumped_element_matrices(x: np.ndarray, p: int) -> np.ndarray:
    """Diagonal alternative: each top simplex gives ``vol(T) / (C(m+1, p+1) vol(s)^2)``."""
    n, m1, _ = x.shape
    m = m1 - 1
    vol = _volumes(x)
    _check_degenerate(x, vol)
    local = list(combinations(range(m + 1), p + 1))
    out = np.zeros((n, len(local), len(local)))
    for i, s in enumerate(local):
        face_vol = _volumes(x[:, list(s), :])
        out[:, i, i] = vol / (len(local) * face_vol ** 2)
    return out


def assemble(local_faces: np.ndarray, elements: np.ndarray, n: int) -> sp.csr_matrix:
    """Scatter-add element matrices into an ``n x n`` sparse matrix."""
    c = local_faces.shape[1]
    rows = np.repeat(local_faces, c, axis=1).ravel()
    cols = np.tile(local_faces, (1, c)).ravel()
    g = sp.coo_matrix((elements.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    g.sum_duplicates()
    return g


def whitney_gram(cx: SimplicialComplex, geom: Geometry, p: int, lumped: bool = False) -> sp.csr_matrix:
    """Degree-p Gram matrix of the lowest-order Whitney forms."""
    geom.check_covers(cx)
    x = geom.simplex_points(cx.simplices[cx.dim])
    elem = (lumped_element_matrices if lumped else whitney_element_matrices)(x, p)
    return assemble(cx.local_faces(p), elem, cx.count(p))


def _check_spd(g, p: int) -> None:
    n = g.shape[0]
    if n == 0:
        return
    if (abs(g - g.T) > 1e-12 * max(abs(g).max(), 1e-300)).nnz:
        raise VerificationError(f"degree-{p} Gram is not symmetric")
    if n <= DENSE_LIMIT:
        try:
            sla.cholesky(g.toarray(), lower=True)
        except np.linalg.LinAlgError:
            raise VerificationError(f"degree-{p} Gram is not positive definite") from None
    else:
        from scipy.sparse.linalg import eigsh

        low = eigsh(g, k=1, which="SA", return_eigenvectors=False)[0]
        if low <= 0:
            raise VerificationError(f"degree-{p} Gram is not positive definite")


@dataclass(frozen=True, eq=False)
class CochainMetric:
    """Per-degree SPD Gram matrices on full (non-relative) cochains.

    ``elements`` keeps the per-top-simplex matrices when the metric was
    assembled from geometry; :mod:`hodgelab.doubling` mirrors them.
    """

    grams: tuple
    name: str = "custom"
    elements: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        for p, g in enumerate(self.grams):
            _check_spd(sp.csr_matrix(g), p)

    def gram(self, p: int) -> sp.csr_matrix:
        return sp.csr_matrix(self.grams[p])

    def restricted(self, labels, p: int) -> sp.csr_matrix:
        idx = labels.relative_indices(p)
        return self.gram(p)[idx][:, idx].tocsr()

    def scaled(self, factor: float) -> "CochainMetric":
        elems = None if self.elements is None else tuple(e * factor for e in self.elements)
        return CochainMetric(tuple(self.gram(p) * factor for p in range(len(self.grams))),
                             self.name, elems)

    def replace(self, p: int, gram) -> "CochainMetric":
        grams = list(self.grams)
        grams[p] = sp.csr_matrix(gram)
        return CochainMetric(tuple(grams), "custom")


def whitney_metric(cx: SimplicialComplex, geom: Geometry, lumped: bool = False) -> CochainMetric:
    geom.check_covers(cx)
    x = geom.simplex_points(cx.simplices[cx.dim])
    build = lumped_element_matrices if lumped else whitney_element_matrices
    elems = tuple(build(x, p) for p in range(cx.dim + 1))
    grams = tuple(assemble(cx.local_faces(p), elems[p], cx.count(p)) for p in range(cx.dim + 1))
    return CochainMetric(grams, "lumped" if lumped else "whitney", elems)


def identity_metric(cx: SimplicialComplex) -> CochainMetric:
    return CochainMetric(tuple(sp.identity(cx.count(p), format="csr") for p in range(cx.dim + 1)),
                         "identity")


def make_metric(cx: SimplicialComplex, geom: Geometry | None, kind: str = "whitney") -> CochainMetric:
    if kind == "identity":
        return identity_metric(cx)
    if geom is None:
        raise DegenerateGeometryError(f"metric {kind!r} needs vertex coordinates")
    if kind not in ("whitney", "lumped"):
        raise ValueError(f"unknown metric {kind!r}")
    return whitney_metric(cx, geom, lumped=kind == "lumped")


# -- mesh quality ----------------------------------------------------------------

@dataclass(frozen=True)
class MeshQualityReport:
    nu: float  # min top-simplex volume
    K: float  # max top-simplex diameter
    c: float  # max barycentric gradient norm
    fvector: tuple

    def as_dict(self) -> dict:
        return {"nu": self.nu, "K": self.K, "c": self.c, "fvector": list(self.fvector)}


def mesh_quality(cx: SimplicialComplex, geom: Geometry) -> MeshQualityReport:
    geom.check_covers(cx)
    x = geom.simplex_points(cx.simplices[cx.dim])
    vol = _volumes(x)
    _check_degenerate(x, vol, cx.simplices[cx.dim])
    diam = _max_edge(x)
    grads = barycentric_gradients(x)
    c = float(np.linalg.norm(grads, axis=2).max())
    return MeshQualityReport(float(vol.min()), float(diam.max()), c, cx.fvector)


def validate_g_bounded(report: MeshQualityReport, nu0: float, K0: float, c0: float) -> bool:
    return report.nu >= nu0 and report.K <= K0 and report.c <= c0


# -- graph-metric probes ------------------------------------------------------------

def _graph_distances(cx: SimplicialComplex, geom: Geometry | None, sources=None) -> np.ndarray:
    n = cx.count(0)
    f = cx.faces[1] if cx.dim >= 1 else np.zeros((0, 2), dtype=np.int64)
    if geom is not None:
        x = geom.simplex_points(cx.simplices[1])
        w = np.linalg.norm(x[:, 1] - x[:, 0], axis=1)
    else:
        w = np.ones(len(f))
    a = sp.csr_matrix((w, (f[:, 0], f[:, 1])), shape=(n, n))
    return dijkstra(a, directed=False, indices=sources)


def _vertex_rows(cx: SimplicialComplex, ids) -> np.ndarray:
    ids = np.asarray(sorted(set(int(v) for v in ids)), dtype=np.int64)
    rows = np.searchsorted(cx.vertex_ids, ids)
    if len(ids) and ((rows >= cx.count(0)) | (cx.vertex_ids[np.minimum(rows, cx.count(0) - 1)] != ids)).any():
        raise ValueError("vertex subset contains unknown vertices")
    return rows


def largeness_radius(cx: SimplicialComplex, subset, geom: Geometry | None = None) -> float:
    """Largest closed graph ball radius, over centres in ``subset``, contained in ``subset``.

    Radii are restricted to attained vertex distances, so an isolated
    member of ``subset`` contributes 0.
    """
    rows = _vertex_rows(cx, subset)
    if len(rows) == 0:
        raise ValueError("subset must be non-empty")
    dist = _graph_distances(cx, geom, sources=rows)
    if np.isinf(dist).any():
        raise ValueError("1-skeleton is not connected")
    outside = np.ones(cx.count(0), dtype=bool)
    outside[rows] = False
    best = 0.0
    for drow in dist:
        limit = drow[outside].min() if outside.any() else np.inf
        inside = drow[drow < limit]
        best = max(best, float(inside.max()))
    return best


def ball_volume_growth(cx: SimplicialComplex, radii, geom: Geometry | None = None) -> dict:
    """``r -> min_x #B(x, r)`` for closed graph balls."""
    dist = _graph_distances(cx, geom)
    if np.isinf(dist).any():
        raise ValueError("1-skeleton is not connected")
    scale = float(dist.max()) or 1.0
    out = {}
    for r in radii:
        counts = (dist <= r + 1e-12 * scale).sum(axis=1)
        out[r] = int(counts.min())
    return out
