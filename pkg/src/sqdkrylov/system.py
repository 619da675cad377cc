"""The symmetric quasi-definite block system and residual helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import SpdOperator
from .sparse import SparseMatrix

__all__ = ["SqdSystem", "OpCounter"]


@dataclass
class OpCounter:
    """Running count of products with the off-diagonal block."""

    a: int = 0
    at: int = 0

    @property
    def total(self):
        return self.a + self.at


@dataclass(frozen=True)
class SqdSystem:
    """Block system ``[[M, A], [A', -N]] @ (x, y) = (b, c)``.

    ``M`` (m-by-m) and ``N`` (n-by-n) are SPD operators, ``A`` is an m-by-n
    sparse matrix, and ``b``, ``c`` are optional default right-hand vectors
    attached by the problem generators.
    """

    M: SpdOperator
    N: SpdOperator
    A: SparseMatrix
    b: np.ndarray | None = None
    c: np.ndarray | None = None
    name: str = ""
    seed: int | None = None

    def __post_init__(self):
        m, n = self.A.shape
        if self.M.dim != m or self.N.dim != n:
            raise ValueError(
                f"operator dimensions ({self.M.dim}, {self.N.dim}) do not match "
                f"A of shape {(m, n)}"
            )

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    def apply_k(self, x, y):
        """Product of the block matrix with ``(x, y)``."""
        return self.M.apply(x) + self.A.matvec(y), self.A.rmatvec(x) - self.N.apply(y)

    def residual(self, b, c, x, y):
        """Block residual ``(b, c) - K @ (x, y)``."""
        kx, ky = self.apply_k(x, y)
        return b - kx, c - ky

    def hinv_norm(self, rx, ry):
        """Norm of a block vector weighted by ``blockdiag(M, N)^{-1}``."""
        qx = float(rx @ self.M.solve(rx))
        qy = float(ry @ self.N.solve(ry))
        return math.sqrt(max(qx, 0.0) + max(qy, 0.0))

    def h_norm(self, rx, ry):
        """Norm of a block vector weighted by ``blockdiag(M, N)``."""
        qx = float(rx @ self.M.apply(rx))
        qy = float(ry @ self.N.apply(ry))
        return math.sqrt(max(qx, 0.0) + max(qy, 0.0))

    def residual_hinv_norm(self, b, c, x, y):
        rx, ry = self.residual(b, c, x, y)
        return self.hinv_norm(rx, ry)

    def rhs(self):
        """Attached right-hand pair, raising if the generator set none."""
        if self.b is None or self.c is None:
            raise ValueError("system carries no right-hand side")
        return self.b, self.c
