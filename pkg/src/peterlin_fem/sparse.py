"""Sparse matrices: triplet assembly, CSR storage and a direct solver.

Thin wrappers around scipy.sparse; the package-level contract is the CSR
canonical form, the matvec, and the relative-residual guarantee of `solve`.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidParameterError, SolverFailureError

DEFAULT_REL_TOL = 1e-10


class TripletBuffer:
    """Accumulates (row, col, value) entries; duplicates sum on compression."""

    def __init__(self, nrows, ncols):
        if nrows < 0 or ncols < 0:
            raise InvalidParameterError("matrix dimensions must be non-negative")
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self._rows = []
        self._cols = []
        self._vals = []

    def add(self, row, col, value):
        self.add_many([row], [col], [value])

    def add_many(self, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if not (rows.shape == cols.shape == values.shape):
            raise InvalidParameterError("triplet arrays must have matching lengths")
        if rows.size and (rows.min() < 0 or rows.max() >= self.nrows
                          or cols.min() < 0 or cols.max() >= self.ncols):
            raise InvalidParameterError("triplet index out of declared dimensions")
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(values)

    def arrays(self):
        if not self._rows:
            z = np.zeros(0)
            return z.astype(np.int64), z.astype(np.int64), z
        return (np.concatenate(self._rows), np.concatenate(self._cols),
                np.concatenate(self._vals))


class SparseMatrix:
    """Immutable CSR matrix with sorted, unique column indices per row."""

    def __init__(self, csr):
        csr = csr.tocsr()
        csr.sum_duplicates()
        csr.sort_indices()
        self.csr = csr

    @property
    def shape(self):
        return self.csr.shape

    @property
    def nnz(self):
        return self.csr.nnz

    def toarray(self):
        return self.csr.toarray()


def compress(buffer):
    """Canonical CSR from a triplet buffer; duplicate entries are summed."""
    rows, cols, vals = buffer.arrays()
    coo = sp.coo_matrix((vals, (rows, cols)), shape=(buffer.nrows, buffer.ncols))
    return SparseMatrix(coo.tocsr())


def from_scipy(matrix):
    return SparseMatrix(sp.csr_matrix(matrix))


def spmv(A, x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != A.shape[1]:
        raise InvalidParameterError(f"dimension mismatch: {A.shape} @ {x.shape}")
    return A.csr @ x


def solve(A, b, rel_tol=DEFAULT_REL_TOL):
    """Solve A x = b by sparse LU, enforcing ||Ax - b|| <= rel_tol ||b||."""
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise InvalidParameterError("solve requires a square matrix")
    if b.shape[0] != A.shape[0]:
        raise InvalidParameterError(f"dimension mismatch: {A.shape} vs rhs {b.shape}")
    try:
        lu = spla.splu(A.csr.tocsc())
        x = lu.solve(b)
    except RuntimeError as exc:  # singular factorization
        raise SolverFailureError(f"sparse LU failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverFailureError("sparse LU produced non-finite entries")
    b_norm = np.linalg.norm(b)
    residual = np.linalg.norm(A.csr @ x - b)
    if residual > rel_tol * b_norm and residual > 1e-300:
        raise SolverFailureError(
            f"residual {residual:.3e} exceeds {rel_tol:.1e} * ||b|| = {rel_tol * b_norm:.3e}",
            residual=residual)
    return x
