"""Simplicial complexes, boundary labelings and relative coboundaries.

Simplices are stored per dimension as integer arrays whose rows are
strictly increasing vertex ids; the ``i``-th face of a simplex omits its
``i``-th vertex and enters the boundary with sign ``(-1)**i``.  Face
incidence is stored explicitly, so the same container also holds the
glued complexes produced by :mod:`hodgelab.doubling`, where two distinct
cells may share a vertex set.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import ComplexError, LabelError, NonManifoldError

Simplex = tuple  # strictly increasing tuple of vertex ids


def canonical_simplex(vertices: Iterable[int]) -> Simplex:
    """Return ``vertices`` as a sorted tuple, rejecting repeats."""
    s = tuple(sorted(int(v) for v in vertices))
    if not s:
        raise ComplexError("a simplex needs at least one vertex")
    if len(set(s)) != len(s):
        raise ComplexError(f"simplex {tuple(vertices)} repeats a vertex")
    return s


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Pure complex with explicit face incidence.

    Attributes:
        simplices: ``simplices[p]`` is an ``(n_p, p + 1)`` int array.
        faces: ``faces[p][j, i]`` is the index of the ``(p-1)``-face of
            simplex ``j`` obtained by dropping vertex position ``i``.
            ``faces[0]`` is an empty ``(n_0, 0)`` array.
    """

    simplices: tuple
    faces: tuple

    @property
    def dim(self) -> int:
        return len(self.simplices) - 1

    @property
    def fvector(self) -> tuple:
        return tuple(len(s) for s in self.simplices)

    def count(self, p: int) -> int:
        return len(self.simplices[p])

    @property
    def vertex_ids(self) -> np.ndarray:
        return self.simplices[0][:, 0]

    def simplex(self, p: int, j: int) -> Simplex:
        return tuple(int(v) for v in self.simplices[p][j])

    @cached_property
    def is_simplicial(self) -> bool:
        """False when two cells of one dimension share a vertex set."""
        return all(len(np.unique(s, axis=0)) == len(s) for s in self.simplices)

    @cached_property
    def _lookup(self) -> dict:
        if not self.is_simplicial:
            raise ComplexError("vertex-tuple lookup is ambiguous on a glued cell complex")
        return {self.simplex(p, j): (p, j)
                for p in range(self.dim + 1) for j in range(self.count(p))}

    def index(self, simplex: Iterable[int]) -> tuple:
        """Return ``(p, j)`` for a simplex given by its vertices."""
        key = canonical_simplex(simplex)
        try:
            return self._lookup[key]
        except KeyError:
            raise ComplexError(f"simplex {key} is not in the complex") from None

    def boundary(self, p: int) -> sp.csr_matrix:
        """Signed boundary ``(n_{p-1}, n_p)`` integer matrix, ``1 <= p <= m``."""
        if not 1 <= p <= self.dim:
            raise ValueError(f"boundary degree {p} outside 1..{self.dim}")
        return self._boundaries[p - 1]

    def coboundary(self, p: int) -> sp.csr_matrix:
        """Full (non-relative) coboundary ``d_p``: ``(n_{p+1}, n_p)``."""
        return self.boundary(p + 1).T.tocsr()

    @cached_property
    def _boundaries(self) -> list:
        out = []
        for p in range(1, self.dim + 1):
            f = self.faces[p]
            n = len(f)
            rows = f.ravel()
            cols = np.repeat(np.arange(n), p + 1)
            signs = np.tile((-1) ** np.arange(p + 1), n)
            out.append(sp.csr_matrix((signs.astype(np.int64), (rows, cols)),
                                     shape=(self.count(p - 1), n)))
        return out

    def coface_counts(self) -> np.ndarray:
        """Number of top simplices containing each ``(m-1)``-simplex."""
        m = self.dim
        if m == 0:
            return np.zeros(0, dtype=int)
        return np.bincount(self.faces[m].ravel(), minlength=self.count(m - 1))

    def local_faces(self, p: int) -> np.ndarray:
        """Global indices of the ``p``-faces of every top simplex.

        Row ``t`` lists the faces of top simplex ``t`` in the order of
        ``itertools.combinations(range(m + 1), p + 1)`` over vertex
        positions.
        """
        m = self.dim
        subsets = list(combinations(range(m + 1), p + 1))
        out = np.empty((self.count(m), len(subsets)), dtype=np.int64)
        for k, keep in enumerate(subsets):
            idx = np.arange(self.count(m))
            positions = list(range(m + 1))
            dim = m
            for pos in sorted(set(range(m + 1)) - set(keep), reverse=True):
                i = positions.index(pos)
                idx = self.faces[dim][idx, i]
                positions.pop(i)
                dim -= 1
            out[:, k] = idx
        return out

    def edges_graph(self) -> sp.csr_matrix:
        """Vertex adjacency (index space) of the 1-skeleton."""
        n = self.count(0)
        if self.dim < 1:
            return sp.csr_matrix((n, n))
        f = self.faces[1]
        a = sp.coo_matrix((np.ones(len(f)), (f[:, 0], f[:, 1])), shape=(n, n))
        return (a + a.T).tocsr()

    def check_chain_complex(self) -> None:
        for p in range(2, self.dim + 1):
            prod = self.boundary(p - 1) @ self.boundary(p)
            if prod.count_nonzero():
                raise ComplexError(f"boundary_{p-1} o boundary_{p} != 0")


def from_cells(simplices: Sequence, faces: Sequence) -> SimplicialComplex:
    """Assemble a complex from explicit cells and face tables."""
    simplices = tuple(np.asarray(s, dtype=np.int64).reshape(len(s), p + 1)
                      for p, s in enumerate(simplices))
    faces = tuple(np.asarray(f, dtype=np.int64).reshape(len(simplices[p]), p + 1)
                  if p else np.empty((len(simplices[0]), 0), dtype=np.int64)
                  for p, f in enumerate(faces))
    cx = SimplicialComplex(simplices, faces)
    cx.check_chain_complex()
    return cx


def build_complex(top_simplices: Iterable[Iterable[int]]) -> SimplicialComplex:
    """Generate the face closure of a list of top simplices.

    Simplices in each dimension are ordered lexicographically by vertex
    tuple, which makes the result independent of the input order.
    """
    tops = [tuple(t) for t in top_simplices]
    if not tops:
        raise ComplexError("empty simplex list")
    width = len(tops[0])
    canon = []
    for t in tops:
        if len(t) != width:
            raise ComplexError(f"simplex {t} has dimension {len(t) - 1}, expected {width - 1}")
        canon.append(canonical_simplex(t))
    if len(set(canon)) != len(canon):
        dup = next(s for s in canon if canon.count(s) > 1)
        raise ComplexError(f"duplicate top simplex {dup}")
    m = width - 1

    levels = [set() for _ in range(m + 1)]
    for s in canon:
        for k in range(1, m + 2):
            levels[k - 1].update(combinations(s, k))
    ordered = [sorted(level) for level in levels]
    index = [{s: j for j, s in enumerate(level)} for level in ordered]

    simplices = []
    faces = []
    for p, level in enumerate(ordered):
        simplices.append(np.array(level, dtype=np.int64).reshape(len(level), p + 1))
        if p == 0:
            faces.append(np.empty((len(level), 0), dtype=np.int64))
            continue
        lookup = index[p - 1]
        f = np.array([[lookup[s[:i] + s[i + 1:]] for i in range(p + 1)] for s in level],
                     dtype=np.int64).reshape(len(level), p + 1)
        faces.append(f)
    return SimplicialComplex(tuple(simplices), tuple(faces))


# -- boundary ----------------------------------------------------------------

def close_under_faces(cx: SimplicialComplex, masks) -> tuple:
    """Downward closure of per-dimension boolean masks."""
    out = [np.array(mk, dtype=bool, copy=True) for mk in masks]
    for p in range(cx.dim, 0, -1):
        sel = out[p]
        if sel.any():
            out[p - 1][cx.faces[p][sel].ravel()] = True
    return tuple(out)


def _empty_masks(cx: SimplicialComplex) -> list:
    return [np.zeros(cx.count(p), dtype=bool) for p in range(cx.dim + 1)]


def manifold_boundary(cx: SimplicialComplex) -> tuple:
    """Boolean masks (one per dimension) of the boundary subcomplex.

    The boundary consists of the ``(m-1)``-simplices lying on exactly one
    top simplex, together with all their faces.
    """
    m = cx.dim
    masks = _empty_masks(cx)
    if m == 0:
        return tuple(masks)
    counts = cx.coface_counts()
    if (counts == 0).any():
        j = int(np.flatnonzero(counts == 0)[0])
        raise NonManifoldError(f"complex is not pure: {cx.simplex(m - 1, j)} has no coface")
    if (counts >= 3).any():
        j = int(np.flatnonzero(counts >= 3)[0])
        raise NonManifoldError(
            f"facet {cx.simplex(m - 1, j)} lies on {counts[j]} top simplices")
    masks[m - 1] = counts == 1
    return close_under_faces(cx, masks)


def boundary_components(cx: SimplicialComplex) -> list:
    """Connected components of the boundary, each as closed masks.

    Components are ordered by their smallest facet index.
    """
    m = cx.dim
    bd = manifold_boundary(cx)
    facets = np.flatnonzero(bd[m - 1]) if m >= 1 else np.zeros(0, dtype=int)
    if len(facets) == 0:
        return []
    if m == 1:
        labels = np.arange(len(facets))
    else:
        # facets are adjacent when they share an (m-2)-face
        ridges = cx.faces[m - 1][facets]
        rows = np.repeat(np.arange(len(facets)), m)
        inc = sp.csr_matrix((np.ones(rows.size), (rows, ridges.ravel())),
                            shape=(len(facets), cx.count(m - 2)))
        _, labels = connected_components(inc @ inc.T, directed=False)
    comps = []
    for lab in np.unique(labels):
        masks = _empty_masks(cx)
        masks[m - 1][facets[labels == lab]] = True
        comps.append(close_under_faces(cx, masks))
    comps.sort(key=lambda c: int(np.flatnonzero(c[m - 1])[0]))
    return comps


@dataclass(frozen=True, eq=False)
class BoundaryLabeling:
    """Partition of the boundary into a relative part M1 and an absolute part M2."""

    m1: tuple
    m2: tuple

    def relative_mask(self, p: int) -> np.ndarray:
        """Simplices carrying relative cochain degrees of freedom."""
        return ~self.m1[p]

    def relative_indices(self, p: int) -> np.ndarray:
        return np.flatnonzero(~self.m1[p])

    @classmethod
    def empty(cls, cx: SimplicialComplex) -> "BoundaryLabeling":
        return cls(tuple(_empty_masks(cx)), tuple(_empty_masks(cx)))

    def validate(self, cx: SimplicialComplex) -> "BoundaryLabeling":
        if len(self.m1) != cx.dim + 1 or len(self.m2) != cx.dim + 1:
            raise LabelError("label masks do not match the complex dimension")
        for p in range(cx.dim + 1):
            if len(self.m1[p]) != cx.count(p) or len(self.m2[p]) != cx.count(p):
                raise LabelError(f"label mask length mismatch in degree {p}")
            if (self.m1[p] & self.m2[p]).any():
                j = int(np.flatnonzero(self.m1[p] & self.m2[p])[0])
                raise LabelError(f"simplex {cx.simplex(p, j)} is labeled both M1 and M2")
        for name, masks in (("M1", self.m1), ("M2", self.m2)):
            closed = close_under_faces(cx, masks)
            if any((c != mk).any() for c, mk in zip(closed, masks)):
                raise LabelError(f"{name} is not closed under taking faces")
        bd = manifold_boundary(cx)
        for p in range(cx.dim + 1):
            union = self.m1[p] | self.m2[p]
            if (union != bd[p]).any():
                j = int(np.flatnonzero(union != bd[p])[0])
                what = "boundary simplex is unlabeled" if bd[p][j] else "interior simplex is labeled"
                raise LabelError(f"{what}: {cx.simplex(p, j)}")
        return self


def labeling_from_facets(cx: SimplicialComplex, m1_facets=(), m2_facets=None) -> BoundaryLabeling:
    """Build a labeling from facet index lists or vertex tuples.

    ``m2_facets=None`` assigns every boundary facet not in M1 to M2.
    """
    m = cx.dim

    def facet_mask(facets):
        mask = np.zeros(cx.count(m - 1), dtype=bool)
        for f in facets:
            if isinstance(f, (int, np.integer)):
                j = int(f)
            else:
                p, j = cx.index(f)
                if p != m - 1:
                    raise LabelError(f"{tuple(f)} is not a facet")
            mask[j] = True
        return mask

    bd = manifold_boundary(cx)
    mk1 = facet_mask(m1_facets)
    if (mk1 & ~bd[m - 1]).any():
        raise LabelError("M1 contains an interior facet")
    mk2 = bd[m - 1] & ~mk1 if m2_facets is None else facet_mask(m2_facets)
    m1 = _empty_masks(cx)
    m2 = _empty_masks(cx)
    m1[m - 1] = mk1
    m2[m - 1] = mk2
    return BoundaryLabeling(close_under_faces(cx, m1), close_under_faces(cx, m2)).validate(cx)


def label_boundary(cx: SimplicialComplex, m1="none", m2="rest") -> BoundaryLabeling:
    """Labeling from selectors.

    Selectors: ``"boundary"`` (all of it), ``"none"``, ``"rest"`` (M2
    only: whatever M1 leaves), ``"component:i[,j...]"`` (boundary
    components, see :func:`boundary_components`).
    """
    m = cx.dim
    comps = boundary_components(cx)
    bd = manifold_boundary(cx)

    def select(sel):
        sel = sel.strip()
        if sel == "boundary":
            return bd[m - 1].copy()
        if sel == "none":
            return np.zeros(cx.count(m - 1), dtype=bool)
        if sel.startswith("component:"):
            mask = np.zeros(cx.count(m - 1), dtype=bool)
            for tok in sel.split(":", 1)[1].split(","):
                k = int(tok)
                if not 0 <= k < len(comps):
                    raise LabelError(f"boundary component {k} does not exist ({len(comps)} found)")
                mask |= comps[k][m - 1]
            return mask
        raise LabelError(f"unknown boundary selector {sel!r}")

    if m == 0:
        return BoundaryLabeling.empty(cx)
    mk1 = select(m1)
    mk2 = bd[m - 1] & ~mk1 if m2 == "rest" else select(m2)
    return labeling_from_facets(cx, np.flatnonzero(mk1), np.flatnonzero(mk2))


# -- relative cochain complex ------------------------------------------------

def relative_coboundary(cx: SimplicialComplex, labels: BoundaryLabeling, p: int) -> sp.csr_matrix:
    """``d_p`` on cochains vanishing on M1, with M1 rows and columns deleted."""
    if not 0 <= p < cx.dim:
        raise ValueError(f"coboundary degree {p} outside 0..{cx.dim - 1}")
    d = cx.coboundary(p)
    return d[labels.relative_indices(p + 1)][:, labels.relative_indices(p)].tocsr()


def euler_characteristic(cx: SimplicialComplex, labels: BoundaryLabeling | None = None) -> int:
    if labels is None:
        labels = BoundaryLabeling.empty(cx)
    return int(sum((-1) ** p * int(labels.relative_mask(p).sum()) for p in range(cx.dim + 1)))


def rational_rank(matrix) -> int:
    """Exact rank over Q of an integer matrix (sparse Gaussian elimination)."""
    a = sp.csr_matrix(matrix)
    rows = []
    for i in range(a.shape[0]):
        lo, hi = a.indptr[i], a.indptr[i + 1]
        row = {int(c): Fraction(int(v)) for c, v in zip(a.indices[lo:hi], a.data[lo:hi]) if v}
        if row:
            rows.append(row)
    rank = 0
    pivots = {}  # column -> reduced row with leading entry 1
    for row in rows:
        while row:
            col = min(row)
            piv = pivots.get(col)
            if piv is None:
                lead = row[col]
                pivots[col] = {c: v / lead for c, v in row.items()}
                rank += 1
                break
            f = row[col]
            for c, v in piv.items():
                nv = row.get(c, 0) - f * v
                if nv:
                    row[c] = nv
                else:
                    row.pop(c, None)
    return rank


def rational_betti(cx: SimplicialComplex, labels: BoundaryLabeling | None = None) -> list:
    """Relative Betti numbers by exact rank-nullity."""
    if labels is None:
        labels = BoundaryLabeling.empty(cx)
    m = cx.dim
    ranks = [rational_rank(relative_coboundary(cx, labels, p)) for p in range(m)]
    out = []
    for p in range(m + 1):
        n = int(labels.relative_mask(p).sum())
        out.append(n - (ranks[p] if p < m else 0) - (ranks[p - 1] if p > 0 else 0))
    return out
