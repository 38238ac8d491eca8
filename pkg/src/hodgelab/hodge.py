"""Discrete L2 Hodge theory on relative cochain complexes.

All operators act on *relative* cochains: vectors indexed by the
p-simplices outside M1.  Grams are restricted accordingly.  The
G-self-adjoint Laplacian ``Delta = G^{-1} K`` is diagonalized through the
symmetric similarity ``L^{-1} K L^{-T}`` with ``G = L L^T``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .complex import BoundaryLabeling, SimplicialComplex, label_boundary, relative_coboundary
from .errors import RankToleranceWarning, VerificationError
from .metric import DENSE_LIMIT, CochainMetric, identity_metric

RANK_TOL = 1e-9
# eigenvalues within this factor of the cutoff trigger a warning
WARN_BAND = 1e3


def codifferential(d, g_low, g_high) -> np.ndarray:
    """Adjoint of ``d: C^p -> C^{p+1}`` w.r.t. the Grams: ``G_p^{-1} d^T G_{p+1}``."""
    d = _dense(d)
    g_low = _dense(g_low)
    g_high = _dense(g_high)
    if d.shape != (g_high.shape[0], g_low.shape[0]):
        raise ValueError(f"shape mismatch: d {d.shape}, Grams {g_low.shape}, {g_high.shape}")
    if g_low.shape[0] == 0:
        return np.zeros((0, d.shape[0]))
    try:
        factor = sla.cho_factor(g_low)
    except np.linalg.LinAlgError:
        raise VerificationError("Gram matrix is singular or indefinite") from None
    return sla.cho_solve(factor, d.T @ g_high)


def _dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


@dataclass(frozen=True)
class SpectralData:
    degree: int
    eigenvalues: np.ndarray
    lambda1: float  # smallest nonzero eigenvalue (inf if none)
    harmonic_dim: int
    eigenvectors: np.ndarray | None = field(default=None, repr=False)  # G-orthonormal columns

    def summary(self) -> dict:
        ev = self.eigenvalues
        return {"degree": self.degree, "count": int(ev.size),
                "min": float(ev.min()) if ev.size else None,
                "max": float(ev.max()) if ev.size else None,
                "lambda1": None if np.isinf(self.lambda1) else float(self.lambda1),
                "harmonic_dim": self.harmonic_dim}


@dataclass(frozen=True)
class HodgeDecomposition:
    harmonic: np.ndarray
    exact: np.ndarray
    coexact: np.ndarray
    residual: float  # relative reconstruction error in the G-norm


class HodgeComplex:
    """Relative cochain complex with an L2 structure.

    Args:
        cx: the simplicial complex.
        labels: boundary labeling; ``None`` puts the whole boundary in M2
            (no constraint on cochains).
        metric: cochain metric; defaults to identity Grams.
        rank_tol: eigenvalues below ``rank_tol * largest`` count as zero.
        dense_limit: above this many relative p-simplices the kernel and
            decomposition use sparse iterative solvers.
    """

    def __init__(self, cx: SimplicialComplex, labels: BoundaryLabeling | None = None,
                 metric: CochainMetric | None = None, rank_tol: float = RANK_TOL,
                 dense_limit: int = DENSE_LIMIT):
        if rank_tol <= 0:
            raise ValueError("rank tolerance must be positive")
        self.cx = cx
        self.labels = (labels if labels is not None else label_boundary(cx)).validate(cx)
        self.metric = metric if metric is not None else identity_metric(cx)
        if len(self.metric.grams) != cx.dim + 1:
            raise ValueError("metric does not match the complex dimension")
        self.rank_tol = rank_tol
        self.dense_limit = dense_limit
        self._cache = {}

    @property
    def dim(self) -> int:
        return self.cx.dim

    def _memo(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def size(self, p: int) -> int:
        if not 0 <= p <= self.dim:
            return 0
        return int(self.labels.relative_mask(p).sum())

    def _check_degree(self, p: int) -> None:
        if not 0 <= p <= self.dim:
            raise ValueError(f"degree {p} outside 0..{self.dim}")

    def is_dense(self, p: int) -> bool:
        return self.size(p) <= self.dense_limit

    # -- operators ---------------------------------------------------------

    def d_sparse(self, p: int) -> sp.csr_matrix:
        """Relative ``d_p: C^p -> C^{p+1}``; zero-size outside ``0..m-1``."""
        if 0 <= p < self.dim:
            return self._memo(("ds", p), lambda: relative_coboundary(self.cx, self.labels, p)
                              .astype(float))
        return sp.csr_matrix((self.size(p + 1), self.size(p)))

    def d(self, p: int) -> np.ndarray:
        return self._memo(("d", p), lambda: self.d_sparse(p).toarray())

    def gram_sparse(self, p: int) -> sp.csr_matrix:
        if not 0 <= p <= self.dim:
            return sp.csr_matrix((0, 0))
        return self._memo(("gs", p), lambda: self.metric.restricted(self.labels, p))

    def gram(self, p: int) -> np.ndarray:
        return self._memo(("g", p), lambda: self.gram_sparse(p).toarray())

    def cholesky(self, p: int) -> np.ndarray:
        """Lower Cholesky factor of the restricted Gram."""
        def build():
            g = self.gram(p)
            if g.shape[0] == 0:
                return g
            try:
                return sla.cholesky(g, lower=True)
            except np.linalg.LinAlgError:
                raise VerificationError(f"degree-{p} Gram is not positive definite") from None
        return self._memo(("chol", p), build)

    def _gram_solver(self, p: int):
        return self._memo(("glu", p), lambda: spla.factorized(self.gram_sparse(p).tocsc()))

    def codifferential(self, p: int) -> np.ndarray:
        """``delta_p: C^p -> C^{p-1}``, the G-adjoint of ``d_{p-1}``."""
        self._check_degree(p)
        if p == 0:
            return np.zeros((0, self.size(0)))
        return self._memo(("delta", p), lambda: codifferential(
            self.d(p - 1), self.gram(p - 1), self.gram(p)))

    def stiffness(self, p: int) -> np.ndarray:
        """Symmetric ``K_p = G_p Delta_p``."""
        self._check_degree(p)

        def build():
            k = np.zeros((self.size(p), self.size(p)))
            if p < self.dim:
                d = self.d(p)
                k += d.T @ self.gram(p + 1) @ d
            if p > 0 and self.size(p - 1):
                gd = self.gram(p) @ self.d(p - 1)
                k += gd @ sla.cho_solve(sla.cho_factor(self.gram(p - 1)), gd.T)
            return 0.5 * (k + k.T)
        return self._memo(("k", p), build)

    def laplacian(self, p: int) -> np.ndarray:
        """``Delta_p = delta_{p+1} d_p + d_{p-1} delta_p`` on relative p-cochains."""
        self._check_degree(p)

        def build():
            lap = np.zeros((self.size(p), self.size(p)))
            if p < self.dim:
                lap += self.codifferential(p + 1) @ self.d(p)
            if p > 0:
                lap += self.d(p - 1) @ self.codifferential(p)
            return lap
        return self._memo(("lap", p), build)

    # -- inner products ----------------------------------------------------------

    def inner(self, a, b, p: int):
        """G-inner product; columns of 2-D arrays are handled pairwise."""
        g = self.gram_sparse(p)
        return np.einsum("i...,i...->...", np.asarray(a), g @ np.asarray(b))

    def norm(self, a, p: int):
        return np.sqrt(np.maximum(self.inner(a, a, p), 0.0))

    # -- spectrum and kernels ---------------------------------------------------

    def spectrum(self, p: int) -> SpectralData:
        """Full eigendecomposition of ``Delta_p`` (dense)."""
        self._check_degree(p)
        return self._memo(("spec", p), lambda: self._dense_spectrum(p))

    def _dense_spectrum(self, p: int) -> SpectralData:
        n = self.size(p)
        if n == 0:
            return SpectralData(p, np.zeros(0), np.inf, 0, np.zeros((0, 0)))
        low = self.cholesky(p)
        k = self.stiffness(p)
        tmp = sla.solve_triangular(low, k, lower=True)
        sym = sla.solve_triangular(low, tmp.T, lower=True)
        sym = 0.5 * (sym + sym.T)
        vals, vecs = np.linalg.eigh(sym)
        vecs = sla.solve_triangular(low.T, vecs, lower=False)
        zero = self._zero_mask(vals, p)
        nonzero = vals[~zero]
        lam1 = float(nonzero.min()) if nonzero.size else np.inf
        return SpectralData(p, vals, lam1, int(zero.sum()), vecs)

    def _zero_mask(self, vals: np.ndarray, p: int) -> np.ndarray:
        scale = float(np.max(np.abs(vals))) if vals.size else 0.0
        if scale == 0.0:
            return np.ones(vals.shape, dtype=bool)
        cut = self.rank_tol * scale
        near = (np.abs(vals) > cut / WARN_BAND) & (np.abs(vals) < cut * WARN_BAND)
        if near.any():
            warnings.warn(f"degree {p}: eigenvalue {vals[near][0]:.3e} is within a factor "
                          f"{WARN_BAND:g} of the rank cutoff {cut:.3e}",
                          RankToleranceWarning, stacklevel=3)
        return vals < cut

    def harmonic_basis(self, p: int) -> np.ndarray:
        """G-orthonormal basis of ``ker Delta_p`` as columns."""
        self._check_degree(p)

        def build():
            if self.is_dense(p):
                spec = self.spectrum(p)
                return spec.eigenvectors[:, :spec.harmonic_dim]
            return self._sparse_harmonic_basis(p)
        return self._memo(("harm", p), build)

    def _sparse_stiffness(self, p: int) -> sp.csr_matrix:
        k = sp.csr_matrix((self.size(p), self.size(p)))
        if p < self.dim:
            d = self.d_sparse(p)
            k = k + d.T @ self.gram_sparse(p + 1) @ d
        if p > 0 and self.size(p - 1):
            gd = self.gram_sparse(p) @ self.d_sparse(p - 1)
            lu = spla.splu(self.gram_sparse(p - 1).tocsc())
            k = k + gd @ sp.csr_matrix(lu.solve(gd.T.toarray()))
        return sp.csr_matrix(0.5 * (k + k.T))

    def _sparse_harmonic_basis(self, p: int) -> np.ndarray:
        n = self.size(p)
        k = self._sparse_stiffness(p)
        g = self.gram_sparse(p).tocsc()
        top = spla.eigsh(k, k=1, M=g, which="LA", return_eigenvectors=False)[0]
        if top <= 0:
            return np.linalg.inv(np.linalg.cholesky(g.toarray())).T
        sigma = -1e-3 * top
        want = min(8, n - 1)
        while True:
            vals, vecs = spla.eigsh(k, k=want, M=g, sigma=sigma, which="LM")
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
            zero = vals < self.rank_tol * top
            if not zero.all() or want >= n - 1:
                break
            want = min(2 * want, n - 1)
        basis = vecs[:, zero]
        # re-orthonormalize in G
        gram = basis.T @ (g @ basis)
        return basis @ np.linalg.inv(np.linalg.cholesky(gram)).T

    def betti(self, p: int) -> int:
        return int(self.harmonic_basis(p).shape[1])

    def betti_numbers(self) -> list:
        return [self.betti(p) for p in range(self.dim + 1)]

    def harmonic_projection(self, omega, p: int) -> np.ndarray:
        h = self.harmonic_basis(p)
        return h @ (h.T @ (self.gram_sparse(p) @ np.asarray(omega, dtype=float)))

    # -- decomposition --------------------------------------------------------------

    def _range_basis(self, a: np.ndarray) -> np.ndarray:
        if a.size == 0:
            return np.zeros((a.shape[0], 0))
        u, s, _ = np.linalg.svd(a, full_matrices=False)
        if s.size == 0 or s[0] == 0:
            return np.zeros((a.shape[0], 0))
        return u[:, s > self.rank_tol * s[0]]

    def _projectors(self, p: int):
        def build():
            low = self.cholesky(p)
            # in y = L^T x coordinates the G-inner product is Euclidean
            exact = self._range_basis(low.T @ self.d(p - 1)) if p > 0 else np.zeros((self.size(p), 0))
            coexact = (self._range_basis(sla.solve_triangular(low, self.d(p).T, lower=True))
                       if p < self.dim else np.zeros((self.size(p), 0)))
            return exact, coexact
        return self._memo(("proj", p), build)

    def decompose(self, omega, p: int) -> HodgeDecomposition:
        """G-orthogonal split into harmonic, exact and coexact parts."""
        self._check_degree(p)
        omega = np.asarray(omega, dtype=float)
        if omega.shape[0] != self.size(p):
            raise ValueError(f"cochain has {omega.shape[0]} entries, expected {self.size(p)}")
        harm = self.harmonic_projection(omega, p)
        if self.is_dense(p):
            low = self.cholesky(p)
            qe, qc = self._projectors(p)
            y = low.T @ omega
            exact = sla.solve_triangular(low.T, qe @ (qe.T @ y), lower=False)
            coexact = sla.solve_triangular(low.T, qc @ (qc.T @ y), lower=False)
        else:
            exact, coexact = self._sparse_parts(omega, p)
        rest = omega - harm - exact - coexact
        denom = self.norm(omega, p)
        resid = self.norm(rest, p)
        resid = np.where(denom > 0, resid / np.where(denom > 0, denom, 1.0), resid)
        return HodgeDecomposition(harm, exact, coexact, resid if resid.ndim else float(resid))

    def _sparse_parts(self, omega, p: int):
        g = self.gram_sparse(p)
        cols = omega.reshape(len(omega), -1)
        ex_cols, co_cols = [], []
        for w in cols.T:
            e = np.zeros_like(w)
            c = np.zeros_like(w)
            if p > 0 and self.size(p - 1):
                d = self.d_sparse(p - 1)
                a = (d.T @ g @ d).tocsr()
                alpha, _ = spla.minres(a, d.T @ (g @ w), rtol=1e-14, maxiter=20 * a.shape[0])
                e = d @ alpha
            if p < self.dim and self.size(p + 1):
                d = self.d_sparse(p)
                g1 = self.gram_sparse(p + 1)
                solve = self._gram_solver(p)
                op = spla.LinearOperator(
                    (self.size(p + 1),) * 2,
                    matvec=lambda b: g1 @ (d @ solve(d.T @ (g1 @ b))), dtype=float)
                beta, _ = spla.minres(op, g1 @ (d @ w), rtol=1e-14, maxiter=20 * op.shape[0])
                c = solve(d.T @ (g1 @ beta))
            ex_cols.append(e)
            co_cols.append(c)
        exact = np.column_stack(ex_cols).reshape(omega.shape)
        coexact = np.column_stack(co_cols).reshape(omega.shape)
        return exact, coexact

    # -- heat flow ---------------------------------------------------------------------

    def heat_flow(self, omega, p: int, t: float) -> np.ndarray:
        """``exp(-t Delta_p) omega``."""
        if t < 0:
            raise ValueError("heat-flow time must be non-negative")
        omega = np.asarray(omega, dtype=float)
        if t == 0:
            return omega.copy()
        if self.is_dense(p):
            spec = self.spectrum(p)
            vals = np.where(self._zero_mask(spec.eigenvalues, p), 0.0, spec.eigenvalues)
            x = spec.eigenvectors
            coeff = x.T @ (self.gram_sparse(p) @ omega)
            decay = np.exp(-t * vals)
            return x @ (decay.reshape(-1, *([1] * (omega.ndim - 1))) * coeff)
        k = self._sparse_stiffness(p)
        solve = self._gram_solver(p)
        op = spla.LinearOperator((self.size(p),) * 2, matvec=lambda v: -t * solve(k @ v),
                                 rmatvec=lambda v: -t * (k @ solve(v)), dtype=float)
        trace = -t * float(np.sum(k.diagonal() / self.gram_sparse(p).diagonal()))
        if omega.ndim == 1:
            return spla.expm_multiply(op, omega, traceA=trace)
        return np.column_stack([spla.expm_multiply(op, w, traceA=trace) for w in omega.T])

    def heat_transient(self, omega, p: int, t: float) -> np.ndarray:
        """``exp(-t Delta_p) omega - P omega`` without forming the difference.

        Subtracting the harmonic part from :meth:`heat_flow` leaves roundoff of
        order ``eps * |omega|``, which swamps the transient once ``exp(-lambda_1 t)``
        drops below machine precision. Here only the nonzero modes are evolved.
        """
        if t < 0:
            raise ValueError("heat-flow time must be non-negative")
        omega = np.asarray(omega, dtype=float)
        if self.is_dense(p):
            spec = self.spectrum(p)
            keep = ~self._zero_mask(spec.eigenvalues, p)
            x = spec.eigenvectors[:, keep]
            coeff = x.T @ (self.gram_sparse(p) @ omega)
            decay = np.exp(-t * spec.eigenvalues[keep])
            return x @ (decay.reshape(-1, *([1] * (omega.ndim - 1))) * coeff)
        y = self.heat_flow(omega - self.harmonic_projection(omega, p), p, t)
        return y - self.harmonic_projection(y, p)


# -- module-level conveniences ---------------------------------------------------------

def laplacian(cx, labels, metric, p: int) -> np.ndarray:
    return HodgeComplex(cx, labels, metric).laplacian(p)


def spectrum(cx, labels, metric, p: int) -> SpectralData:
    return HodgeComplex(cx, labels, metric).spectrum(p)


def harmonic_basis(cx, labels, metric, p: int) -> np.ndarray:
    return HodgeComplex(cx, labels, metric).harmonic_basis(p)


def betti(cx, labels, metric, p: int) -> int:
    return HodgeComplex(cx, labels, metric).betti(p)


# -- metric change ------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricChangeProjection:
    """Orthogonal projections between the harmonic spaces of two metrics.

    ``forward`` sends coefficients in ``basis1`` to coefficients in
    ``basis2`` (projection in metric 2); ``backward`` is the projection in
    metric 1 expressed the other way round.
    """

    degree: int
    basis1: np.ndarray
    basis2: np.ndarray
    forward: np.ndarray
    backward: np.ndarray

    def apply_forward(self, h1) -> np.ndarray:
        coeff = np.linalg.lstsq(self.basis1, h1, rcond=None)[0]
        return self.basis2 @ (self.forward @ coeff)

    def apply_backward(self, h2) -> np.ndarray:
        coeff = np.linalg.lstsq(self.basis2, h2, rcond=None)[0]
        return self.basis1 @ (self.backward @ coeff)

    def composite_error(self) -> float:
        b = self.forward.shape[1]
        if b == 0:
            return 0.0
        return float(np.abs(self.backward @ self.forward - np.eye(b)).max())


def metric_change_projection(hc1: HodgeComplex, hc2: HodgeComplex, p: int) -> MetricChangeProjection:
    """pr2 restricted to harmonic(metric1) and pr1 restricted to harmonic(metric2)."""
    if hc1.cx is not hc2.cx and hc1.cx.fvector != hc2.cx.fvector:
        raise ValueError("metrics live on different complexes")
    h1 = hc1.harmonic_basis(p)
    h2 = hc2.harmonic_basis(p)
    if h1.shape[1] != h2.shape[1]:
        raise VerificationError(
            f"harmonic dimensions differ ({h1.shape[1]} vs {h2.shape[1]}): rank tolerance failure")
    forward = h2.T @ (hc2.gram_sparse(p) @ h1)
    backward = h1.T @ (hc1.gram_sparse(p) @ h2)
    return MetricChangeProjection(p, h1, h2, forward, backward)


def perturb_metric(metric: CochainMetric, rng: np.random.Generator,
                   condition: float = 1e3) -> CochainMetric:
    """Random SPD congruence ``C G C`` per degree with ``cond(C^2) <= condition``."""
    grams = []
    for g in metric.grams:
        g = _dense(g)
        n = g.shape[0]
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        s = np.exp(rng.uniform(0.0, 0.5 * np.log(condition), size=n))
        c = (q * s) @ q.T
        pert = c @ g @ c
        grams.append(sp.csr_matrix(0.5 * (pert + pert.T)))
    return CochainMetric(tuple(grams), "perturbed")


def random_cochains(hc: HodgeComplex, p: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((hc.size(p), count))


__all__ = ["RANK_TOL", "codifferential", "SpectralData", "HodgeDecomposition", "HodgeComplex",
           "laplacian", "spectrum", "harmonic_basis", "betti", "MetricChangeProjection",
           "metric_change_projection", "perturb_metric", "random_cochains"]
