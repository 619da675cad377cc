"""Dense kernels: one-sided Jacobi SVD and a direct solver for oracles.

The Jacobi kernel exists to make the restarted processes reproducible: the
singular value decomposition of the small projected matrix must come with a
fixed sign convention and a fixed tie-breaking order, which off-the-shelf
LAPACK drivers do not promise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "DenseSvd",
    "dense_svd",
    "dense_solve",
    "JacobiConvergenceError",
    "SingularMatrixError",
]

# Pairs are rotated while their normalized off-diagonal entry exceeds this.
JACOBI_REL_TOL = 1e-14
# Columns whose norm falls below 1e-14 * ||T||_F count as exactly zero.
JACOBI_ZERO_RTOL = 1e-14
JACOBI_MAX_SWEEPS = 30


class JacobiConvergenceError(RuntimeError):
    """Jacobi sweeps did not converge; carries the last off-diagonal residual."""

    def __init__(self, off_diagonal):
        self.off_diagonal = off_diagonal
        super().__init__(
            f"one-sided Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps "
            f"(relative off-diagonal residual {off_diagonal:.3e})"
        )


class SingularMatrixError(RuntimeError):
    """Direct solve hit a singular-to-working-precision pivot."""


@dataclass(frozen=True)
class DenseSvd:
    """Factorization ``T = U @ diag(sigma) @ V.T`` with orthonormal U, V."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    def reconstruct(self):
        return (self.U * self.sigma) @ self.V.T


@lru_cache(maxsize=64)
def _round_robin_schedule(p):
    """Tournament schedule: tuples of disjoint (i, j) index arrays covering
    every column pair once per sweep."""
    players = list(range(p))
    if p % 2 == 1:
        players.append(p)  # bye
    size = len(players)
    rounds = []
    arr = players[:]
    for _ in range(size - 1):
        ii, jj = [], []
        for a in range(size // 2):
            i, j = arr[a], arr[size - 1 - a]
            if i >= p or j >= p:
                continue
            ii.append(min(i, j))
            jj.append(max(i, j))
        rounds.append((np.asarray(ii, dtype=np.intp), np.asarray(jj, dtype=np.intp)))
        arr = [arr[0], arr[-1]] + arr[1:-1]
    return tuple(rounds)


def _sweep(b, v, tol, floor):
    """One cyclic sweep of disjoint-pair rotations; returns the largest
    normalized off-diagonal value seen before rotating."""
    p = b.shape[1]
    worst = 0.0
    for ii, jj in _round_robin_schedule(p):
        if ii.size == 0:
            continue
        bi = b[:, ii]
        bj = b[:, jj]
        aii = np.einsum("ij,ij->j", bi, bi)
        ajj = np.einsum("ij,ij->j", bj, bj)
        aij = np.einsum("ij,ij->j", bi, bj)
        denom = np.sqrt(aii * ajj)
        active = denom > floor * floor
        rel = np.zeros_like(aij)
        np.divide(np.abs(aij), denom, out=rel, where=active)
        if rel.size:
            worst = max(worst, float(rel.max()))
        rotate = active & (rel > tol)
        if not np.any(rotate):
            continue
        isel = ii[rotate]
        jsel = jj[rotate]
        tau = (ajj[rotate] - aii[rotate]) / (2.0 * aij[rotate])
        t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
        c = 1.0 / np.sqrt(1.0 + t * t)
        s = c * t
        bi = b[:, isel].copy()
        bj = b[:, jsel].copy()
        b[:, isel] = c * bi - s * bj
        b[:, jsel] = s * bi + c * bj
        vi = v[:, isel].copy()
        vj = v[:, jsel].copy()
        v[:, isel] = c * vi - s * vj
        v[:, jsel] = s * vi + c * vj
    return worst


def _complete_orthonormal(u, taken):
    """Fill the columns of ``u`` flagged in ``taken`` (False entries) with an
    orthonormal completion drawn from standard basis vectors."""
    p = u.shape[0]
    established = [u[:, i] for i in range(u.shape[1]) if taken[i]]
    for col in range(u.shape[1]):
        if taken[col]:
            continue
        for axis in range(p):
            w = np.zeros(p)
            w[axis] = 1.0
            for q in established:
                w -= (q @ w) * q
            nrm = np.linalg.norm(w)
            if nrm > 0.5:
                w /= nrm
                u[:, col] = w
                established.append(w)
                break
        else:  # pragma: no cover - cannot happen for p columns
            raise RuntimeError("failed to complete orthonormal basis")


def dense_svd(t):
    """Singular value decomposition of a small square matrix.

    One-sided Jacobi with cyclic sweeps.  Singular values come out
    nonincreasing (ties keep the pre-sort column order), and the first
    nonzero entry of every right singular vector is positive.

    Raises :class:`JacobiConvergenceError` after the sweep cap.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {t.shape}")
    p = t.shape[0]
    fnorm = float(np.linalg.norm(t))
    b = t.copy()
    v = np.eye(p)
    if p > 1 and fnorm > 0.0:
        floor = JACOBI_ZERO_RTOL * fnorm
        worst = np.inf
        for _ in range(JACOBI_MAX_SWEEPS):
            worst = _sweep(b, v, JACOBI_REL_TOL, floor)
            if worst <= JACOBI_REL_TOL:
                break
        else:
            raise JacobiConvergenceError(worst)

    sigma = np.linalg.norm(b, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    b = b[:, order]
    v = v[:, order]

    zero_floor = JACOBI_ZERO_RTOL * fnorm
    u = np.zeros((p, p))
    taken = np.zeros(p, dtype=bool)
    for i in range(p):
        if sigma[i] > zero_floor:
            u[:, i] = b[:, i] / sigma[i]
            taken[i] = True
        else:
            sigma[i] = 0.0
    if not np.all(taken):
        _complete_orthonormal(u, taken)

    for i in range(p):
        col = v[:, i]
        nz = np.nonzero(col)[0]
        if nz.size and col[nz[0]] < 0.0:
            v[:, i] = -col
            u[:, i] = -u[:, i]
    return DenseSvd(U=u, sigma=sigma, V=v)


def dense_solve(k, f):
    """Direct solve of a dense square system.

    Used as the independent reference for the iterative solvers; raises
    :class:`SingularMatrixError` when the factorization detects a singular
    pivot or produces non-finite values.
    """
    k = np.asarray(k, dtype=float)
    f = np.asarray(f, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {k.shape}")
    try:
        x = np.linalg.solve(k, f)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("solution contains non-finite entries")
    return x
