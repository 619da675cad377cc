"""Symmetric positive definite operators and the weighted normalization kernel.

Every solver in this package weights inner products with a pair of SPD
matrices.  Those matrices enter only through two actions, ``apply`` (matrix
times vector) and ``solve`` (inverse times vector), so they are wrapped in a
small operator hierarchy instead of being passed around as arrays.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

__all__ = [
    "SpdOperator",
    "IdentityOperator",
    "DiagonalOperator",
    "CholeskyOperator",
    "InnerCgOperator",
    "spd_operator_from_matrix",
    "spd_norm",
    "normalize",
    "BREAKDOWN_RTOL",
    "DimensionError",
    "NonSpdError",
]

# Relative threshold below which a normalization coefficient counts as zero.
BREAKDOWN_RTOL = 1e-14


class DimensionError(ValueError):
    """Operand dimensions do not match the operator."""


class NonSpdError(ValueError):
    """A quadratic form came out negative: the operator is not SPD."""


class SpdOperator:
    """Abstract symmetric positive definite operator of a fixed dimension."""

    kind = "abstract"

    def __init__(self, dim):
        if dim < 1:
            raise DimensionError(f"operator dimension must be positive, got {dim}")
        self.dim = int(dim)

    def apply(self, v):
        """Return the matrix-vector product with ``v``."""
        raise NotImplementedError

    def solve(self, b):
        """Return the solution of ``op @ x = b``."""
        raise NotImplementedError

    def apply_block(self, block):
        """Apply the operator to each column of a 2-D array."""
        out = np.empty_like(block)
        for i in range(block.shape[1]):
            out[:, i] = self.apply(block[:, i])
        return out

    def _check_dim(self, v):
        if v.shape != (self.dim,):
            raise DimensionError(
                f"expected vector of length {self.dim}, got shape {v.shape}"
            )

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class IdentityOperator(SpdOperator):
    kind = "identity"

    def apply(self, v):
        self._check_dim(v)
        return v

    def solve(self, b):
        self._check_dim(b)
        return b

    def apply_block(self, block):
        return block


class DiagonalOperator(SpdOperator):
    kind = "diagonal"

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1:
            raise DimensionError("diagonal values must be a 1-D array")
        if not np.all(values > 0.0):
            raise NonSpdError("diagonal entries must be strictly positive")
        super().__init__(values.size)
        self.values = values

    def apply(self, v):
        self._check_dim(v)
        return self.values * v

    def solve(self, b):
        self._check_dim(b)
        return b / self.values

    def apply_block(self, block):
        return self.values[:, None] * block


class CholeskyOperator(SpdOperator):
    """Dense SPD matrix held together with its Cholesky factor."""

    kind = "dense-cholesky"

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError("expected a square 2-D array")
        super().__init__(matrix.shape[0])
        self.matrix = matrix
        try:
            self._factor = scipy.linalg.cho_factor(matrix)
        except scipy.linalg.LinAlgError as exc:
            raise NonSpdError(f"Cholesky factorization failed: {exc}") from exc

    def apply(self, v):
        self._check_dim(v)
        return self.matrix @ v

    def solve(self, b):
        self._check_dim(b)
        return scipy.linalg.cho_solve(self._factor, b)

    def apply_block(self, block):
        return self.matrix @ block


class InnerCgOperator(SpdOperator):
    """Sparse SPD matrix whose solves run an inner conjugate-gradient loop."""

    kind = "inner-cg"

    def __init__(self, matrix, rtol=1e-14, maxiter=None):
        matrix = scipy.sparse.csr_matrix(matrix)
        if matrix.shape[0] != matrix.shape[1]:
            raise DimensionError("expected a square sparse matrix")
        super().__init__(matrix.shape[0])
        self.matrix = matrix
        self.rtol = float(rtol)
        self.maxiter = int(maxiter) if maxiter is not None else 10 * self.dim

    def apply(self, v):
        self._check_dim(v)
        return self.matrix @ v

    def solve(self, b):
        self._check_dim(b)
        if not np.any(b):
            return np.zeros_like(b)
        x, info = scipy.sparse.linalg.cg(
            self.matrix, b, rtol=self.rtol, atol=0.0, maxiter=self.maxiter
        )
        if info < 0:
            raise NonSpdError(f"inner CG failed with code {info}")
        return x

    def apply_block(self, block):
        return self.matrix @ block


def spd_operator_from_matrix(matrix, dense_cutoff=2000):
    """Wrap an SPD matrix in the cheapest suitable operator.

    Dense Cholesky is used up to ``dense_cutoff``; larger matrices fall back
    to inner-CG solves.
    """
    if scipy.sparse.issparse(matrix):
        n = matrix.shape[0]
        if n <= dense_cutoff:
            return CholeskyOperator(matrix.toarray())
        return InnerCgOperator(matrix)
    matrix = np.asarray(matrix, dtype=float)
    if matrix.shape[0] <= dense_cutoff:
        return CholeskyOperator(matrix)
    return InnerCgOperator(scipy.sparse.csr_matrix(matrix))


def spd_norm(op, v):
    """Weighted norm ``sqrt(v' @ op @ v)`` of a vector.

    Raises :class:`NonSpdError` if the quadratic form is negative beyond
    rounding noise.
    """
    v = np.asarray(v, dtype=float)
    op._check_dim(v)
    q = float(v @ op.apply(v))
    if q < 0.0:
        if q < -1e-10 * max(1.0, float(v @ v)):
            raise NonSpdError(f"negative quadratic form {q!r}")
        q = 0.0
    return math.sqrt(q)


def normalize(op, b):
    """Weighted normalization ``beta * op @ u = b``.

    Computes ``t = op.solve(b)`` and ``beta = sqrt(t @ b)``.  Returns
    ``(beta, u)`` with ``u = t / beta`` of unit ``op``-norm, or ``(beta,
    None)`` when ``beta`` falls below the breakdown threshold
    ``BREAKDOWN_RTOL * ||b||``.
    """
    b = np.asarray(b, dtype=float)
    op._check_dim(b)
    t = op.solve(b)
    s = float(t @ b)
    bnorm = float(np.linalg.norm(b))
    if s < 0.0:
        if s < -1e-10 * max(1.0, bnorm * float(np.linalg.norm(t))):
            raise NonSpdError(f"negative quadratic form {s!r} in normalization")
        s = 0.0
    beta = math.sqrt(s)
    if beta <= BREAKDOWN_RTOL * bnorm:
        return beta, None
    return beta, t / beta
