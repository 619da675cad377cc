"""Projectors built from elliptic singular vectors, and deflated systems.

With ``U_k`` and ``V_k`` spanning elliptic singular subspaces, the oblique
projectors ``P = I - M U_k U_k'`` and ``Q = I - V_k V_k' N`` remove the
influence of the corresponding singular values from the block system.  The
deflated system keeps the same operator; only the right-hand side changes.
All applications are matrix-free (two tall-skinny products); the dense
diagnostics materialize operators under an explicit size cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dense import dense_solve
from .system import SqdSystem

__all__ = [
    "DeflationBasis",
    "apply_p",
    "apply_qt",
    "apply_pt",
    "apply_q",
    "deflated_rhs",
    "correct_solution",
    "residual_error_diag",
    "spectrum_diag",
    "deflation_bound_diag",
]

SPECTRUM_SIZE_CAP = 2000


@dataclass(frozen=True)
class DeflationBasis:
    """Approximate elliptic singular triplets used for deflation.

    ``T`` is the projected block ``U' A V`` computed once at construction;
    it is close to ``diag(sigma)`` when the triplet residuals are small but
    is never assumed equal to it.  ``eps`` records the achieved residual
    bound of the triplets.
    """

    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    T: np.ndarray
    eps: float

    @property
    def k(self):
        return self.sigma.size

    @classmethod
    def from_vectors(cls, sys: SqdSystem, u_block, v_block, sigma, eps=0.0):
        u_block = np.asarray(u_block, dtype=float)
        v_block = np.asarray(v_block, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        t = u_block.T @ (sys.A.to_scipy() @ v_block) if sigma.size else np.zeros((0, 0))
        return cls(U=u_block, V=v_block, sigma=sigma, T=t, eps=float(eps))

    @classmethod
    def from_esvd(cls, sys: SqdSystem, result):
        return cls.from_vectors(sys, result.U, result.V, result.sigma, result.achieved_eps)

    @classmethod
    def empty(cls, sys: SqdSystem):
        return cls(
            U=np.zeros((sys.m, 0)),
            V=np.zeros((sys.n, 0)),
            sigma=np.zeros(0),
            T=np.zeros((0, 0)),
            eps=0.0,
        )


def apply_p(basis: DeflationBasis, sys: SqdSystem, w):
    """Apply ``P = I - M U_k U_k'`` without forming it."""
    if basis.k == 0:
        return np.array(w, dtype=float, copy=True)
    return w - sys.M.apply(basis.U @ (basis.U.T @ w))


def apply_qt(basis: DeflationBasis, sys: SqdSystem, w):
    """Apply ``Q' = I - N V_k V_k'`` without forming it."""
    if basis.k == 0:
        return np.array(w, dtype=float, copy=True)
    return w - sys.N.apply(basis.V @ (basis.V.T @ w))


def apply_pt(basis: DeflationBasis, sys: SqdSystem, w):
    """Apply ``P' = I - U_k U_k' M``."""
    if basis.k == 0:
        return np.array(w, dtype=float, copy=True)
    return w - basis.U @ (basis.U.T @ sys.M.apply(w))


def apply_q(basis: DeflationBasis, sys: SqdSystem, w):
    """Apply ``Q = I - V_k V_k' N``."""
    if basis.k == 0:
        return np.array(w, dtype=float, copy=True)
    return w - basis.V @ (basis.V.T @ sys.N.apply(w))


def deflated_rhs(basis: DeflationBasis, sys: SqdSystem, b, c):
    """Right-hand side ``(P b, Q' c)`` of the deflated system."""
    return apply_p(basis, sys, b), apply_qt(basis, sys, c)


def correct_solution(basis: DeflationBasis, sys: SqdSystem, b, c, x_defl, y_defl):
    """Recover the solution of the original system from a deflated solve.

    Adds the component inside the deflation subspaces, obtained from the
    small ``2k``-by-``2k`` block ``[[I, T], [T', -I]]``, to the projected
    deflated solution.
    """
    k = basis.k
    if k == 0:
        return np.array(x_defl, copy=True), np.array(y_defl, copy=True)
    block = np.block(
        [[np.eye(k), basis.T], [basis.T.T, -np.eye(k)]]
    )
    rhs = np.concatenate([basis.U.T @ b, basis.V.T @ c])
    w = dense_solve(block, rhs)
    x = basis.U @ w[:k] + apply_pt(basis, sys, x_defl)
    y = basis.V @ w[k:] + apply_q(basis, sys, y_defl)
    return x, y


def residual_error_diag(basis, sys, b, c, u_tilde, u_tilde_star, u_star):
    """Evaluate the residual and error identities of the corrected solution.

    Parameters are block pairs ``(x, y)``: an approximate deflated solution,
    an exact deflated solution, and the exact solution of the original
    system.  Returns both sides of the three relations (two identities plus
    the weighted error inequality) for exact-triplet diagnostics.
    """
    xt, yt = u_tilde
    x = correct_solution(basis, sys, b, c, xt, yt)
    rx, ry = sys.residual(b, c, *x)
    rxt, ryt = sys.residual(b, c, xt, yt)
    proj_rx = apply_p(basis, sys, rxt)
    proj_ry = apply_qt(basis, sys, ryt)

    ex = u_star[0] - x[0]
    ey = u_star[1] - x[1]
    dxt = u_tilde_star[0] - xt
    dyt = u_tilde_star[1] - yt
    proj_ex = apply_pt(basis, sys, dxt)
    proj_ey = apply_q(basis, sys, dyt)
    return {
        "residual": (rx, ry),
        "projected_residual": (proj_rx, proj_ry),
        "error": (ex, ey),
        "projected_error": (proj_ex, proj_ey),
        "error_h_norm": sys.h_norm(ex, ey),
        "deflated_error_h_norm": sys.h_norm(dxt, dyt),
    }


def _dense_inv_sqrt(mat):
    w, q = np.linalg.eigh(mat)
    if np.min(w) <= 0.0:
        raise ValueError("operator materialization is not positive definite")
    return (q / np.sqrt(w)) @ q.T


def spectrum_diag(sys: SqdSystem, basis: DeflationBasis | None = None):
    """Eigenvalues of the two-side weighted (optionally deflated) operator.

    Without deflation these are ``+-sqrt(sigma_i^2 + 1)`` for each nonzero
    elliptic singular value plus ``+1`` and ``-1`` blocks; deflating with
    exact triplets additionally sends ``2k`` of them to zero.  Dense
    diagnostic, capped at ``m + n <= 2000``.
    """
    mn = sys.m + sys.n
    if mn > SPECTRUM_SIZE_CAP:
        raise ValueError(f"system size {mn} exceeds diagnostic cap {SPECTRUM_SIZE_CAP}")
    m_dense = sys.M.apply_block(np.eye(sys.m))
    n_dense = sys.N.apply_block(np.eye(sys.n))
    a_dense = sys.A.to_dense()
    k_dense = np.block([[m_dense, a_dense], [a_dense.T, -n_dense]])
    if basis is not None and basis.k > 0:
        p_dense = np.eye(sys.m) - (m_dense @ basis.U) @ basis.U.T
        qt_dense = np.eye(sys.n) - (n_dense @ basis.V) @ basis.V.T
        proj = np.block(
            [
                [p_dense, np.zeros((sys.m, sys.n))],
                [np.zeros((sys.n, sys.m)), qt_dense],
            ]
        )
        k_dense = proj @ k_dense
    hinv_sqrt = np.block(
        [
            [_dense_inv_sqrt(m_dense), np.zeros((sys.m, sys.n))],
            [np.zeros((sys.n, sys.m)), _dense_inv_sqrt(n_dense)],
        ]
    )
    weighted = hinv_sqrt @ k_dense @ hinv_sqrt
    weighted = 0.5 * (weighted + weighted.T)
    return np.sort(np.linalg.eigvalsh(weighted))


def deflation_bound_diag(basis: DeflationBasis, sys: SqdSystem, b, c, x_defl, y_defl):
    """Compare the corrected residual against its theoretical bound.

    The bound combines the projected residual of the deflated solve with a
    term proportional to the achieved triplet accuracy ``eps``:
    ``eps * sqrt(k) * ((1 + sigma_k^2)^{-1/2} ||f|| + sqrt(2) ||u~||_H)``
    with the norms weighted by the inverse of ``blockdiag(M, N)``.
    """
    x, y = correct_solution(basis, sys, b, c, x_defl, y_defl)
    measured = sys.residual_hinv_norm(b, c, x, y)
    rxt, ryt = sys.residual(b, c, x_defl, y_defl)
    term1 = sys.hinv_norm(apply_p(basis, sys, rxt), apply_qt(basis, sys, ryt))
    k = basis.k
    if k == 0:
        bound = term1
    else:
        sig_k = basis.sigma[-1]
        f_norm = sys.hinv_norm(b, c)
        u_h_norm = sys.h_norm(x_defl, y_defl)
        bound = term1 + basis.eps * math.sqrt(k) * (
            f_norm / math.sqrt(1.0 + sig_k * sig_k) + math.sqrt(2.0) * u_h_norm
        )
    return {"measured": measured, "bound": bound, "projected_residual": term1}
