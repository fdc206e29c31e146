"""Spectral abscissa of Metzler matrices by shifted power iteration."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigs

from .errors import ConvergenceError, ValidationError
from .graph import Graph
from .moments import MomentMatrix, is_metzler

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100_000

_PLAIN_ITER = 2000       # plain iterations before switching to a warm start
_DENSE_WARM_DIM = 64     # blocks up to this size get their warm start from LAPACK
_WARM_MAXITER = 5000     # ARPACK restarts


@dataclass(frozen=True)
class SpectralResult:
    lambda_max: float
    iterations: int
    residual: float
    shift_used: float


def _as_sparse(m) -> sp.csr_matrix:
    if isinstance(m, MomentMatrix):
        return m.matrix
    if sp.issparse(m):
        return sp.csr_matrix(m)
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("matrix must be square")
    return sp.csr_matrix(a)


def perron_root(b: sp.csr_matrix, tol: float, max_iter: int):
    """Spectral radius of a nonnegative matrix with positive diagonal.

    Returns ``(rho, iterations, residual)``. The radius of a reducible
    matrix is the largest radius among the diagonal blocks of its strongly
    connected components, each of which is irreducible; blocks whose row
    sums cannot beat the best root found so far are skipped.
    ``iterations`` is the total over all blocks iterated.
    """
    b = sp.csr_matrix(b, copy=True)
    b.eliminate_zeros()
    ncomp, labels = connected_components(b, directed=True, connection="strong")
    if ncomp == 1:
        return _power_block(b, tol, max_iter)
    sizes = np.bincount(labels, minlength=ncomp)
    diag = b.diagonal()
    single = sizes[labels] == 1
    best = float(diag[single].max()) if single.any() else 0.0
    row_sum = np.asarray(b.sum(axis=1)).ravel()
    resid, its = 0.0, 0
    big = np.flatnonzero(sizes > 1)
    # row sums bound the radius of each block from above
    bound = np.array([row_sum[labels == c].max() for c in big])
    for c in big[np.argsort(-bound)]:
        members = np.flatnonzero(labels == c)
        if row_sum[members].max() <= best:
            break
        rho, k, r = _power_block(b[members][:, members], tol, max_iter)
        its += k
        if rho > best:
            best, resid = rho, r
    return best, its, resid


def _iterate(b: sp.csr_matrix, v: np.ndarray, tol: float, budget: int):
    """Normalised power iteration from positive ``v`` (summing to 1).

    Each iterate ``v`` is strictly positive, so
    ``min (Bv)_i / v_i <= rho <= max (Bv)_i / v_i`` brackets the root; success
    means the bracket is narrower than ``tol * rho``. Returns
    ``(converged, rho, iterations, residual, v)``.
    """
    rho = resid = math.nan
    for k in range(1, budget + 1):
        w = b @ v
        rho = float(w.sum())
        if v.min() > 0.0:
            ratio = w / v
            resid = (float(ratio.max()) - float(ratio.min())) / rho
            if resid <= tol:
                return True, rho, k, resid, v
        else:
            # an entry underflowed; no bracket until in-flow restores it
            resid = math.inf
        v = w / rho
    return False, rho, budget, resid, v


def _warm_start(b: sp.csr_matrix, v: np.ndarray) -> np.ndarray | None:
    """Positive approximation of the Perron vector from an eigensolver.

    Only a starting point: power iteration from it still has to close the
    bracket. Tiny entries are floored, which costs a few iterations to undo
    but keeps the bracket defined.
    """
    dim = b.shape[0]
    try:
        if dim <= _DENSE_WARM_DIM:
            vals, vecs = np.linalg.eig(b.toarray())
            vec = vecs[:, int(np.argmax(vals.real))]
        else:
            vals, vecs = eigs(b, k=1, which="LM", v0=v, ncv=min(dim - 1, 40), tol=0,
                              maxiter=_WARM_MAXITER)
            vec = vecs[:, 0]
    except (ArpackNoConvergence, ArpackError, np.linalg.LinAlgError):
        return None
    u = np.abs(vec.real)
    if not np.all(np.isfinite(u)) or u.max() == 0.0:
        return None
    u = np.maximum(u / u.max(), 1e-290)
    return u / u.sum()


def _power_block(b: sp.csr_matrix, tol: float, max_iter: int):
    """Perron root of one irreducible block.

    Power iteration runs from a random positive start. If the bracket has
    not closed after ``_PLAIN_ITER`` steps, which happens when eigenvalues
    cluster within a tiny fraction of the root (small transmission rates),
    the iterate is replaced by an eigensolver's eigenvector estimate and
    iteration continues with the remaining budget.
    """
    v = np.random.default_rng(0).uniform(0.5, 1.5, size=b.shape[0])
    v /= v.sum()
    first = min(max_iter, _PLAIN_ITER)
    ok, rho, its, resid, v = _iterate(b, v, tol, first)
    if not ok and max_iter > first:
        u = _warm_start(b, v)
        ok, rho, more, resid, _ = _iterate(b, v if u is None else u, tol, max_iter - first)
        its += more
    if not ok:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations "
                               f"(relative bracket {resid:.3e})", last=(rho, its, resid))
    return rho, its, resid


def lambda_max_metzler(m, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                       shift: float | None = None) -> SpectralResult:
    """Largest real part among the eigenvalues of a Metzler matrix.

    The matrix is shifted by ``s = 1 + max |m_ii|`` (or ``shift``) to make it
    entrywise nonnegative with a positive diagonal; its Perron root minus
    ``s`` is the answer.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    a = _as_sparse(m)
    if not is_metzler(a):
        raise ValidationError("matrix is not Metzler (negative off-diagonal entry)")
    diag = a.diagonal()
    s = 1.0 + float(np.abs(diag).max()) if shift is None else float(shift)
    if s + float(diag.min()) <= 0:
        raise ValidationError("shift too small: shifted diagonal must be positive")
    b = (a + s * sp.identity(a.shape[0], format="csr")).tocsr()
    try:
        rho, its, resid = perron_root(b, tol, max_iter)
    except ConvergenceError as exc:
        rho, its, resid = exc.last
        raise ConvergenceError(str(exc), last=SpectralResult(rho - s, its, resid, s)) from None
    return SpectralResult(rho - s, its, resid, s)


def lambda_max_adjacency(g: Graph, tol: float = DEFAULT_TOL,
                         max_iter: int = DEFAULT_MAX_ITER) -> SpectralResult:
    """Largest adjacency eigenvalue, via the Perron root of ``A + I``."""
    a = g.adjacency()
    b = (a + sp.identity(g.num_nodes, format="csr")).tocsr()
    try:
        rho, its, resid = perron_root(b, tol, max_iter)
    except ConvergenceError as exc:
        rho, its, resid = exc.last
        raise ConvergenceError(str(exc), last=SpectralResult(rho - 1.0, its, resid, 1.0)) from None
    return SpectralResult(rho - 1.0, its, resid, 1.0)


def rho_sis_bar(beta: float, delta: float, lambda_A: float) -> float:
    """Growth-rate bound of plain SIS: ``beta * lambda_A - delta``."""
    return beta * lambda_A - delta


def dense_lambda_max(m) -> float:
    """Dense-eigensolver reference value, for validation on small matrices."""
    a = _as_sparse(m)
    if a.shape[0] > 1000:
        raise ValidationError("dense reference limited to dimension 1000")
    return float(np.linalg.eigvals(a.toarray()).real.max())
