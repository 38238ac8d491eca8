"""Four-copy doubling along M1 and M2 with its Klein four-group action.

Copies are numbered 0..3.  ``tau1`` flips copies ``0 <-> 1`` and
``2 <-> 3`` and fixes everything lying over M1; ``tau2`` flips
``0 <-> 2`` and ``1 <-> 3`` and fixes everything over M2.  Cells are glued
only when the underlying simplex itself belongs to M1 (resp. M2), so a
simplex with all vertices on M1 but not in M1 stays doubled; the result
is then a glued cell complex rather than a simplicial one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .complex import BoundaryLabeling, SimplicialComplex, euler_characteristic, from_cells
from .errors import VerificationError
from .hodge import HodgeComplex
from .metric import CochainMetric, assemble

TAU1 = np.array([1, 0, 3, 2])
TAU2 = np.array([2, 3, 0, 1])
# copy c carries the (-,+) extension with sign SIGN_MINUS_PLUS[c]
SIGN_MINUS_PLUS = np.array([1.0, -1.0, 1.0, -1.0])


@dataclass(frozen=True, eq=False)
class QuadrupleComplex:
    """The doubled complex with its involutions.

    Attributes:
        W: the glued complex.
        tau1, tau2: vertex permutations of ``W``.
        tau1_cells, tau2_cells: per-degree cell permutations.
        inclusion: per degree, the W-index of copy 0 of each simplex.
        copies: per degree, the canonical copy tag of each W-cell.
        sources: per degree, the simplex of ``source`` under each W-cell.
        metric: mirrored cochain metric on ``W``.
    """

    source: SimplicialComplex
    labels: BoundaryLabeling
    W: SimplicialComplex
    tau1: np.ndarray
    tau2: np.ndarray
    tau1_cells: tuple
    tau2_cells: tuple
    inclusion: tuple
    copies: tuple
    sources: tuple
    metric: CochainMetric

    def pullback(self, which: int, p: int) -> sp.csr_matrix:
        """Matrix of ``tau_which^*`` on p-cochains: ``(tau^* w)[k] = w[tau(k)]``."""
        perm = (self.tau1_cells if which == 1 else self.tau2_cells)[p]
        n = len(perm)
        return sp.csr_matrix((np.ones(n), (np.arange(n), perm)), shape=(n, n))

    def fixed_cells(self, which: int, p: int) -> np.ndarray:
        perm = (self.tau1_cells if which == 1 else self.tau2_cells)[p]
        return perm == np.arange(len(perm))


def _canon(copy, in_m1, in_m2):
    copy = np.asarray(copy)
    return np.where(in_m1, copy - copy % 2, np.where(in_m2, copy % 2, copy))


def _mirror_metric(cx: SimplicialComplex, W: SimplicialComplex, metric: CochainMetric | None):
    if metric is None or metric.name == "identity":
        return CochainMetric(tuple(sp.identity(W.count(p), format="csr")
                                   for p in range(W.dim + 1)), "identity")
    if metric.elements is None:
        raise ValueError("only geometry-assembled or identity metrics can be mirrored")
    grams = []
    for p in range(W.dim + 1):
        # W top cells are ordered (simplex, copy) with four copies each
        elems = np.repeat(metric.elements[p], 4, axis=0)
        grams.append(assemble(W.local_faces(p), elems, W.count(p)))
    elems = tuple(np.repeat(e, 4, axis=0) for e in metric.elements)
    return CochainMetric(tuple(grams), f"mirrored-{metric.name}", elems)


def double_complex(cx: SimplicialComplex, labels: BoundaryLabeling,
                   metric: CochainMetric | None = None) -> QuadrupleComplex:
    """Glue four copies of ``cx`` pairwise along M1 and M2."""
    labels.validate(cx)
    m = cx.dim
    keys, index = [], []
    for p in range(m + 1):
        n = cx.count(p)
        j = np.repeat(np.arange(n), 4)
        c = np.tile(np.arange(4), n)
        cc = _canon(c, labels.m1[p][j], labels.m2[p][j])
        pairs = np.unique(np.stack([j, cc], axis=1), axis=0)  # sorted by (j, copy)
        keys.append(pairs)
        index.append({(int(a), int(b)): k for k, (a, b) in enumerate(pairs)})

    # vertex ids of W follow (original id, copy) order, preserving orientation
    vid = cx.vertex_ids
    wvid = {key: k for k, key in enumerate(map(tuple, keys[0].tolist()))}

    simplices, faces = [], []
    for p in range(m + 1):
        pairs = keys[p]
        verts = np.empty((len(pairs), p + 1), dtype=np.int64)
        fc = np.empty((len(pairs), p + 1 if p else 0), dtype=np.int64)
        for k, (j, c) in enumerate(pairs):
            orig = cx.simplices[p][j]
            rows = np.searchsorted(vid, orig)
            vc = _canon(np.full(p + 1, c), labels.m1[0][rows], labels.m2[0][rows])
            verts[k] = [wvid[(int(r), int(q))] for r, q in zip(rows, vc)]
            if p:
                f = cx.faces[p][j]
                fcopy = _canon(np.full(p + 1, c), labels.m1[p - 1][f], labels.m2[p - 1][f])
                fc[k] = [index[p - 1][(int(a), int(b))] for a, b in zip(f, fcopy)]
        simplices.append(verts)
        faces.append(fc)
    W = from_cells(simplices, faces)

    def cell_perm(table, p):
        pairs = keys[p]
        j, c = pairs[:, 0], pairs[:, 1]
        image = _canon(table[c], labels.m1[p][j], labels.m2[p][j])
        return np.array([index[p][(int(a), int(b))] for a, b in zip(j, image)], dtype=np.int64)

    tau1_cells = tuple(cell_perm(TAU1, p) for p in range(m + 1))
    tau2_cells = tuple(cell_perm(TAU2, p) for p in range(m + 1))
    inclusion = tuple(
        np.array([index[p][(j, int(_canon(0, labels.m1[p][j], labels.m2[p][j])))]
                  for j in range(cx.count(p))], dtype=np.int64)
        for p in range(m + 1))
    return QuadrupleComplex(cx, labels, W, tau1_cells[0].copy(), tau2_cells[0].copy(),
                            tau1_cells, tau2_cells, inclusion,
                            tuple(k[:, 1].copy() for k in keys), tuple(k[:, 0].copy() for k in keys),
                            _mirror_metric(cx, W, metric))


def v4_residuals(q: QuadrupleComplex) -> dict:
    """Max-norm residuals of the group relations, Gram isometry and d-equivariance."""
    out = {"involution": 0.0, "commute": 0.0, "isometry": 0.0, "chain_map": 0.0}
    for p in range(q.W.dim + 1):
        t1, t2 = q.pullback(1, p), q.pullback(2, p)
        eye = sp.identity(t1.shape[0], format="csr")
        out["involution"] = max(out["involution"], abs(t1 @ t1 - eye).max(), abs(t2 @ t2 - eye).max())
        out["commute"] = max(out["commute"], abs(t1 @ t2 - t2 @ t1).max())
        g = q.metric.gram(p)
        for t in (t1, t2):
            out["isometry"] = max(out["isometry"], abs(t.T @ g @ t - g).max() if g.nnz else 0.0)
        if p < q.W.dim:
            d = q.W.coboundary(p)
            for which in (1, 2):
                lhs = d @ q.pullback(which, p)
                rhs = q.pullback(which, p + 1) @ d
                out["chain_map"] = max(out["chain_map"], abs(lhs - rhs).max() if (lhs - rhs).nnz else 0)
    return {k: float(v) for k, v in out.items()}


def eigenspace_projector(q: QuadrupleComplex, eps1: int, eps2: int, p: int) -> sp.csr_matrix:
    """``(1 + eps1 tau1^*)(1 + eps2 tau2^*) / 4`` on p-cochains of ``W``."""
    if eps1 not in (1, -1) or eps2 not in (1, -1):
        raise ValueError("eigenvalue signs must be +1 or -1")
    eye = sp.identity(q.W.count(p), format="csr")
    return (0.25 * (eye + eps1 * q.pullback(1, p)) @ (eye + eps2 * q.pullback(2, p))).tocsr()


def doubled_hodge(q: QuadrupleComplex, rank_tol: float | None = None) -> HodgeComplex:
    kw = {} if rank_tol is None else {"rank_tol": rank_tol}
    return HodgeComplex(q.W, None, q.metric, **kw)


def eigen_betti(q: QuadrupleComplex, eps1: int, eps2: int, p: int,
                hc: HodgeComplex | None = None, tol: float = 1e-6) -> int:
    """Dimension of the harmonic p-cochains of ``W`` in the ``(eps1, eps2)`` eigenspace."""
    hc = hc if hc is not None else doubled_hodge(q)
    h = hc.harmonic_basis(p)
    if h.shape[1] == 0:
        return 0
    proj = eigenspace_projector(q, eps1, eps2, p)
    a = h.T @ (hc.gram_sparse(p) @ (proj @ h))
    vals = np.linalg.eigvalsh(0.5 * (a + a.T))
    off = np.minimum(np.abs(vals), np.abs(vals - 1.0))
    if off.max() > tol:
        raise VerificationError(
            f"projector restricted to harmonic space has eigenvalue {vals[np.argmax(off)]:.3e}")
    return int((vals > 0.5).sum())


def minusplus_betti(q: QuadrupleComplex, p: int, hc: HodgeComplex | None = None) -> int:
    return eigen_betti(q, -1, 1, p, hc)


def restrict_to_copy(q: QuadrupleComplex, omega, p: int, tol: float = 1e-8) -> np.ndarray:
    """Pull a ``(-,+)`` cochain of ``W`` back to a relative cochain on copy 0."""
    omega = np.asarray(omega, dtype=float)
    proj = eigenspace_projector(q, -1, 1, p)
    scale = max(float(np.abs(omega).max()) if omega.size else 0.0, 1e-300)
    if np.abs(proj @ omega - omega).max() > tol * scale:
        raise VerificationError("cochain is not in the (-,+) eigenspace")
    values = omega[q.inclusion[p]]
    if np.abs(values[q.labels.m1[p]]).max(initial=0.0) > tol * scale:
        raise VerificationError("cochain does not vanish over M1")
    return values[q.labels.relative_indices(p)]


def extend_from_copy(q: QuadrupleComplex, alpha, p: int) -> np.ndarray:
    """Inverse of :func:`restrict_to_copy`: the ``(-,+)`` extension of a relative cochain."""
    full = np.zeros(q.source.count(p))
    full[q.labels.relative_indices(p)] = np.asarray(alpha, dtype=float)
    # cells over M2 join copies of equal sign; over M1 the value is 0 anyway
    return SIGN_MINUS_PLUS[q.copies[p]] * full[q.sources[p]]


def euler_two_ways(q: QuadrupleComplex, hc: HodgeComplex | None = None) -> tuple:
    """``chi(W)`` from the cell counts and from the harmonic dimensions."""
    hc = hc if hc is not None else doubled_hodge(q)
    counted = euler_characteristic(q.W)
    harmonic = sum((-1) ** p * hc.betti(p) for p in range(q.W.dim + 1))
    return counted, harmonic
