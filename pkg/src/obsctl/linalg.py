"""Sparse linear algebra kernel.

Matrices are stored as canonical ``scipy.sparse.csr_matrix`` objects (sorted,
duplicate-free column indices).  Factorizations wrap SuperLU with a
fill-reducing ordering and report ill-conditioning instead of silently
returning garbage; the homotopy driver relies on that to decide when to stop
increasing the penalty parameter.
"""

import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-14
RESIDUAL_TOL = 1e-6


class IllConditionedError(ArithmeticError):
    """A linear system is too ill-conditioned to be solved reliably."""


class SingularMatrixError(IllConditionedError):
    """Zero (or negligible) pivot encountered during factorization."""


class DimensionMismatchError(ValueError):
    pass


class NoConvergenceError(RuntimeError):
    """An iterative method exhausted its iteration budget."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


def as_csr(A):
    """Return ``A`` as a canonical CSR matrix of float64."""
    A = sp.csr_matrix(A, dtype=np.float64)
    A.sum_duplicates()
    A.sort_indices()
    return A


def check_csr(A):
    """Raise ``ValueError`` if ``A`` violates the canonical CSR invariants."""
    nrows, ncols = A.shape
    ptr, idx = A.indptr, A.indices
    if len(ptr) != nrows + 1 or ptr[0] != 0 or np.any(np.diff(ptr) < 0):
        raise ValueError("row offsets must be nondecreasing with length nrows+1")
    if len(idx) and (idx.min() < 0 or idx.max() >= ncols):
        raise ValueError("column index out of range")
    for i in range(nrows):
        row = idx[ptr[i]:ptr[i + 1]]
        if np.any(np.diff(row) <= 0):
            raise ValueError(f"row {i} is not strictly increasing")


def is_symmetric(A, tol=0.0):
    diff = abs(A - A.T)
    return diff.nnz == 0 or diff.max() <= tol


class Factorization:
    """Direct factorization of a sparse square matrix.

    Symmetric matrices are first factored in SuperLU's symmetric mode (no row
    pivoting, minimum-degree ordering on A+A^T), which for an SPD matrix is a
    scaled Cholesky factorization; ``spd_ok`` records whether every pivot came
    out positive.  Otherwise a partially pivoted LU with COLAMD ordering is
    used.  Pivots are judged on the equilibrated matrix, so a few huge
    diagonal entries do not make ordinary pivots look negligible.
    """

    def __init__(self, A, pivot_tol=PIVOT_TOL, residual_tol=RESIDUAL_TOL):
        A = as_csr(A)
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"matrix must be square, got {A.shape}")
        self.A = A
        self.shape = A.shape
        self.residual_tol = residual_tol
        self._anorm = abs(A).sum(axis=1).max() if A.nnz else 0.0
        if self._anorm == 0.0:
            raise SingularMatrixError("zero matrix")

        # Equilibrate so that the pivot test is independent of row scaling:
        # symmetric Jacobi scaling D^-1/2 A D^-1/2 when the diagonal is
        # positive, otherwise rows divided by their largest entry.
        diag = A.diagonal()
        symmetric = is_symmetric(A)
        if symmetric and np.all(diag > 0):
            s = 1.0 / np.sqrt(diag)
            self._row = s
            self._col = s
        else:
            rmax = np.asarray(abs(A).max(axis=1).todense()).ravel()
            if np.any(rmax == 0):
                raise SingularMatrixError("matrix has an empty row")
            self._row = 1.0 / rmax
            self._col = np.ones(A.shape[0])
            symmetric = False
        B = as_csr(sp.diags(self._row) @ A @ sp.diags(self._col))
        scale = np.abs(B.diagonal()).max()
        if scale == 0.0:
            scale = 1.0

        self.spd_ok = False
        lu = None
        if symmetric:
            try:
                lu = splu(B.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                          options={"SymmetricMode": True})
                if np.all(lu.U.diagonal() > pivot_tol * scale):
                    self.spd_ok = True
                else:
                    lu = None
            except RuntimeError:
                lu = None
        if lu is None:
            try:
                lu = splu(B.tocsc(), permc_spec="COLAMD")
            except RuntimeError as exc:
                raise SingularMatrixError(str(exc)) from exc
        self._lu = lu

        piv = np.abs(lu.U.diagonal())
        self.min_pivot = float(piv.min())
        if self.min_pivot <= pivot_tol * scale:
            raise SingularMatrixError(
                f"pivot {self.min_pivot:.3e} below {pivot_tol:g} x max diagonal {scale:.3e}")

    def solve(self, b):
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.shape[0]:
            raise DimensionMismatchError(f"rhs has length {b.shape[0]}, expected {self.shape[0]}")
        x = self._col * self._lu.solve(self._row * b)
        if not np.all(np.isfinite(x)):
            raise IllConditionedError("non-finite solution")
        # normwise backward error
        r = self.A @ x - b
        scale = self._anorm * np.abs(x).max() + np.abs(b).max()
        if scale > 0 and np.abs(r).max() > self.residual_tol * scale:
            raise IllConditionedError(
                f"solve residual {np.abs(r).max():.3e} exceeds {self.residual_tol:g} relative")
        return x


def factorize(A, **kwargs):
    return Factorization(A, **kwargs)


def solve(F, b):
    return F.solve(b)


def cg_jacobi(A, b, x0=None, tol=1e-12, maxiter=None):
    """Jacobi-preconditioned conjugate gradients for SPD ``A``.

    Stops when ``||r|| <= tol * ||b||``.  Returns ``(x, iterations)``.
    """
    A = as_csr(A)
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatchError(f"shape {A.shape} incompatible with rhs of length {n}")
    maxiter = 10 * n if maxiter is None else maxiter
    d = A.diagonal()
    if np.any(d <= 0):
        raise ValueError("Jacobi preconditioner requires a positive diagonal")
    dinv = 1.0 / d

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - A @ x
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), 0
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for k in range(1, maxiter + 1):
        Ap = A @ p
        step = rz / (p @ Ap)
        x += step * p
        r -= step * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, k
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NoConvergenceError(f"CG did not converge in {maxiter} iterations", maxiter)


def spd_solve(A, b, tol=1e-12):
    """Solve an SPD system directly, falling back to CG on factorization failure."""
    try:
        return Factorization(A).solve(b)
    except IllConditionedError:
        log.warning("direct solve failed; falling back to Jacobi-CG")
        return cg_jacobi(A, b, tol=tol)[0]


def smallest_generalized_eigenvalue(A, M, tol=1e-12, max_iters=10000):
    """Smallest eigenpair of ``A v = lam M v`` by inverse power iteration.

    Both matrices must be symmetric positive definite.  The iteration stops
    once successive Rayleigh quotients differ by less than ``tol * lam``.
    The returned eigenvector is M-normalized and sign-fixed so that its sum is
    nonnegative.
    """
    A = as_csr(A)
    M = as_csr(M)
    if A.shape != M.shape or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"incompatible shapes {A.shape} and {M.shape}")
    F = Factorization(A)

    v = np.ones(A.shape[0])
    v /= np.sqrt(v @ (M @ v))
    lam = (v @ (A @ v))
    for _ in range(max_iters):
        w = F.solve(M @ v)
        w /= np.sqrt(w @ (M @ w))
        lam_new = w @ (A @ w)
        v = w
        if abs(lam_new - lam) < tol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    else:
        raise NoConvergenceError(f"inverse iteration did not converge in {max_iters} steps",
                                 max_iters)
    if v.sum() < 0:
        v = -v
    return float(lam), v
