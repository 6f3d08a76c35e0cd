"""Symmetric sparse matrices and a preconditioned conjugate gradient solver.

Storage and matrix-vector products are delegated to scipy CSR; the CG loop
is local so tolerance semantics (relative to the right-hand side, with an
absolute floor) and breakdown detection are under our control.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class SolverError(RuntimeError):
    """Linear solver breakdown or invalid input."""


@dataclass
class SparseSym:
    """Structurally symmetric matrix in canonical CSR form."""

    mat: sp.csr_matrix

    @property
    def n(self):
        return self.mat.shape[0]

    @property
    def nnz(self):
        return self.mat.nnz

    def diagonal(self):
        return self.mat.diagonal()

    def toarray(self):
        return self.mat.toarray()


def from_triplets(n, rows, cols, values) -> SparseSym:
    """Build from COO triplets, summing duplicates deterministically."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    if len(rows) and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
        raise SolverError("triplet index out of range")
    mat = sp.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return SparseSym(mat)


def matvec(a, x):
    mat = a.mat if isinstance(a, SparseSym) else a
    return mat @ np.asarray(x, dtype=float)


@dataclass
class CgResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool


def cg(a, b, x0=None, tol=1e-12, maxiter=None, precond="jacobi",
       residual_history=None) -> CgResult:
    """Preconditioned conjugate gradients for SPD systems.

    Convergence is declared when ||b - A x|| <= tol * max(||b||, 1e-300).
    Raises SolverError on NaN contamination or loss of positive
    definiteness; a clean non-converged return reports the last residual.
    """
    mat = a.mat if isinstance(a, SparseSym) else a
    b = np.asarray(b, dtype=float)
    n = len(b)
    if maxiter is None:
        maxiter = 10 * n
    bnorm = np.linalg.norm(b)
    target = tol * max(bnorm, 1e-300)
    if bnorm == 0.0:
        return CgResult(np.zeros(n), 0, 0.0, True)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - mat @ x
    rnorm = np.linalg.norm(r)
    if residual_history is not None:
        residual_history.append(rnorm)
    if rnorm <= target:
        return CgResult(x, 0, rnorm, True)

    if precond == "jacobi":
        d = mat.diagonal()
        if np.any(d <= 0):
            raise SolverError("nonpositive diagonal entry, matrix not SPD")
        minv = 1.0 / d
    elif precond == "none":
        minv = None
    else:
        raise ValueError(f"unknown preconditioner {precond!r}")

    z = r * minv if minv is not None else r
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, maxiter + 1):
        ap = mat @ p
        pap = float(p @ ap)
        if not np.isfinite(pap):
            raise SolverError("NaN detected in conjugate gradient iteration")
        if pap <= 0.0:
            raise SolverError("breakdown: matrix is not positive definite")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        rnorm = np.linalg.norm(r)
        if residual_history is not None:
            residual_history.append(rnorm)
        if not np.isfinite(rnorm):
            raise SolverError("NaN detected in conjugate gradient iteration")
        if rnorm <= target:
            return CgResult(x, it, rnorm, True)
        z = r * minv if minv is not None else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return CgResult(x, maxiter, rnorm, False)
