"""Compressed sparse row matrix wrapper used for the off-diagonal block."""

from __future__ import annotations

import numpy as np
import scipy.sparse

__all__ = ["SparseMatrix"]


class SparseMatrix:
    """Real sparse matrix in CSR form.

    Thin wrapper over :class:`scipy.sparse.csr_matrix` that enforces the
    invariants the solvers rely on: canonical ordering (strictly increasing
    column indices within each row) and at least one stored nonzero.
    """

    def __init__(self, csr):
        csr = scipy.sparse.csr_matrix(csr)
        csr.sum_duplicates()
        csr.sort_indices()
        csr.eliminate_zeros()
        if csr.nnz == 0:
            raise ValueError("matrix must contain at least one nonzero")
        self._csr = csr

    @classmethod
    def from_coo(cls, m, n, rows, cols, values):
        coo = scipy.sparse.coo_matrix((values, (rows, cols)), shape=(m, n))
        return cls(coo.tocsr())

    @classmethod
    def from_dense(cls, array):
        return cls(scipy.sparse.csr_matrix(np.asarray(array, dtype=float)))

    @classmethod
    def from_diagonal(cls, values):
        values = np.asarray(values, dtype=float)
        n = values.size
        return cls(scipy.sparse.diags(values, 0, shape=(n, n), format="csr"))

    @property
    def shape(self):
        return self._csr.shape

    @property
    def nnz(self):
        return self._csr.nnz

    @property
    def indptr(self):
        return self._csr.indptr

    @property
    def indices(self):
        return self._csr.indices

    @property
    def data(self):
        return self._csr.data

    def matvec(self, v):
        """Product ``A @ v``."""
        return self._csr @ v

    def rmatvec(self, u):
        """Transposed product ``A.T @ u``."""
        return self._csr.T @ u

    def to_dense(self):
        return self._csr.toarray()

    def to_scipy(self):
        return self._csr

    def frobenius_norm(self):
        return float(np.sqrt(np.sum(self._csr.data**2)))

    def __repr__(self):
        m, n = self.shape
        return f"SparseMatrix({m}x{n}, nnz={self.nnz})"
