"""Saunders-Simon-Yip tridiagonalization with two weighted inner products.

Given SPD operators M, N and a matrix A, the process builds an M-orthonormal
block U and an N-orthonormal block V such that ``U' A V`` is tridiagonal.
Both the plain solver and the deflated-restart variants drive the same
expansion kernel, so their first-cycle arithmetic is identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import BREAKDOWN_RTOL
from .system import OpCounter, SqdSystem

__all__ = ["TriDiag", "SsyProcess", "verify_relations"]


@dataclass
class TriDiag:
    """Coefficient sequences of the projected tridiagonal matrix.

    ``alphas`` holds the diagonal, ``betas`` the subdiagonal including the
    seed coefficient of ``b`` (so ``betas[0]`` is the normalization of the
    first left vector), and ``gammas`` mirrors that for the right side.
    """

    alphas: list = field(default_factory=list)
    betas: list = field(default_factory=list)
    gammas: list = field(default_factory=list)

    @property
    def order(self):
        return len(self.alphas)

    def t_matrix(self, j=None):
        """Dense leading j-by-j projected matrix."""
        if j is None:
            j = self.order
        t = np.zeros((j, j))
        for i in range(j):
            t[i, i] = self.alphas[i]
        for i in range(1, j):
            t[i, i - 1] = self.betas[i]
            t[i - 1, i] = self.gammas[i]
        return t

    def lower_matrix(self, j=None):
        """Rectangular (j+1)-by-j matrix including the next subdiagonal entry."""
        if j is None:
            j = self.order
        t = np.zeros((j + 1, j))
        t[:j, :] = self.t_matrix(j)
        t[j, j - 1] = self.betas[j]
        return t

    def upper_matrix(self, j=None):
        """Rectangular j-by-(j+1) matrix including the next superdiagonal entry."""
        if j is None:
            j = self.order
        t = np.zeros((j, j + 1))
        t[:, :j] = self.t_matrix(j)
        t[j - 1, j] = self.gammas[j]
        return t


class ColumnStore:
    """Growable Fortran-ordered column block.

    Column-major storage keeps every ``view()`` contiguous, so identical
    expansions produce bit-identical reorthogonalization arithmetic no
    matter how the capacities were chosen.
    """

    def __init__(self, dim, capacity=16):
        self.dim = dim
        self.data = np.empty((dim, max(capacity, 1)), order="F")
        self.count = 0

    def append(self, col):
        if self.count == self.data.shape[1]:
            grown = np.empty((self.dim, 2 * self.data.shape[1]), order="F")
            grown[:, : self.count] = self.data
            self.data = grown
        self.data[:, self.count] = col
        self.count += 1

    def view(self, count=None):
        return self.data[:, : self.count if count is None else count]

    def column(self, i):
        return self.data[:, i]

    @property
    def stored_columns(self):
        return self.count


class RingStore:
    """Two-column window with the ColumnStore access pattern.

    Only the last two logical columns stay resident, which is all the
    three-term recurrence needs; ``view()`` is unavailable by design.
    """

    def __init__(self, dim):
        self.dim = dim
        self.count = 0
        self._cols = [None, None]

    def append(self, col):
        self._cols[0] = self._cols[1]
        self._cols[1] = col
        self.count += 1

    def column(self, i):
        if i == self.count - 1:
            return self._cols[1]
        if i == self.count - 2:
            return self._cols[0]
        raise IndexError(f"column {i} no longer stored (window at {self.count})")

    def view(self, count=None):
        raise RuntimeError("windowed storage keeps no basis block")

    @property
    def stored_columns(self):
        return sum(1 for c in self._cols if c is not None)


class HeadWindowStore:
    """Fixed leading block plus a two-column window.

    Long non-restarting runs keep the deflation block resident for
    reorthogonalization while everything past it streams through a window,
    so memory stays independent of the iteration count.
    """

    def __init__(self, fixed_block):
        self.fixed = np.asfortranarray(fixed_block)
        self.count = self.fixed.shape[1]
        self._cols = [None, None]

    def append(self, col):
        self._cols[0] = self._cols[1]
        self._cols[1] = col
        self.count += 1

    def column(self, i):
        nfixed = self.fixed.shape[1]
        if i < nfixed:
            return self.fixed[:, i]
        if i == self.count - 1 and self._cols[1] is not None:
            return self._cols[1]
        if i == self.count - 2 and self._cols[0] is not None:
            return self._cols[0]
        raise IndexError(f"column {i} no longer stored (window at {self.count})")

    def view(self, count=None):
        nfixed = self.fixed.shape[1]
        if count is None or count > nfixed:
            raise RuntimeError("only the fixed leading block is stored")
        return self.fixed[:, :count]

    @property
    def stored_columns(self):
        return self.fixed.shape[1] + sum(1 for c in self._cols if c is not None)


def normalize_image(op, w, block=None, image_block=None):
    """Normalize the operator image ``w`` of the next basis vector.

    Computes ``t = op.solve(w)`` and ``beta = sqrt(t @ w)``.  When a basis
    ``block`` (with its ``image_block`` of operator images) is supplied, the
    image is first reorthogonalized with one classical Gram-Schmidt pass,
    repeated once more if the correction exceeds half the incoming norm.

    Returns ``(beta, u, image)`` where ``image = w / beta``; ``u`` is None on
    breakdown, detected against ``BREAKDOWN_RTOL`` times the incoming norm.
    """
    wnorm = float(np.linalg.norm(w))
    t = op.solve(w)
    if block is not None and block.shape[1] > 0:
        pre = math.sqrt(max(float(t @ w), 0.0))
        coeff = block.T @ w
        w = w - image_block @ coeff
        t = t - block @ coeff
        if float(np.linalg.norm(coeff)) > 0.5 * pre:
            coeff = block.T @ w
            w = w - image_block @ coeff
            t = t - block @ coeff
    s = float(t @ w)
    beta = math.sqrt(max(s, 0.0))
    if beta <= BREAKDOWN_RTOL * wnorm:
        return beta, None, None
    return beta, t / beta, w / beta


def expand_pair(
    sys,
    counter,
    u_cur,
    v_cur,
    mu_cur,
    nv_cur,
    mu_prev,
    nv_prev,
    beta_cur,
    gamma_cur,
    reorth_u=None,
    reorth_v=None,
):
    """One three-term expansion of the pair of bases.

    ``reorth_u`` / ``reorth_v`` are optional ``(block, image_block)`` pairs to
    project the new images against.  Returns
    ``(alpha, beta_next, u_next, mu_next, gamma_next, v_next, nv_next)``
    where the vectors are ``None`` on the side that broke down.
    """
    q = sys.A.matvec(v_cur)
    counter.a += 1
    q = q - gamma_cur * mu_prev
    p = sys.A.rmatvec(u_cur)
    counter.at += 1
    p = p - beta_cur * nv_prev
    alpha = float(u_cur @ q)
    wu = q - alpha * mu_cur
    wv = p - alpha * nv_cur
    ub, uib = reorth_u if reorth_u is not None else (None, None)
    vb, vib = reorth_v if reorth_v is not None else (None, None)
    beta_next, u_next, mu_next = normalize_image(sys.M, wu, ub, uib)
    gamma_next, v_next, nv_next = normalize_image(sys.N, wv, vb, vib)
    return alpha, beta_next, u_next, mu_next, gamma_next, v_next, nv_next


class SsyProcess:
    """Stored-basis driver for the tridiagonalization process.

    Keeps the full column blocks (needed for reorthogonalization and for the
    restarted variants); the plain solver runs a two-column window instead
    when no reorthogonalization is requested.
    """

    def __init__(
        self,
        sys: SqdSystem,
        b,
        c,
        reorth=False,
        counter=None,
        capacity=16,
        keep_basis=True,
    ):
        if reorth and not keep_basis:
            raise ValueError("reorthogonalization requires the stored basis")
        self.sys = sys
        self.reorth = bool(reorth)
        self.counter = counter if counter is not None else OpCounter()
        self.tridiag = TriDiag()
        if keep_basis:
            self.U = ColumnStore(sys.m, capacity)
            self.V = ColumnStore(sys.n, capacity)
            self.MU = ColumnStore(sys.m, capacity)
            self.NV = ColumnStore(sys.n, capacity)
        else:
            self.U = RingStore(sys.m)
            self.V = RingStore(sys.n)
            self.MU = RingStore(sys.m)
            self.NV = RingStore(sys.n)
        self.breakdown = False
        self.breakdown_side = None

        b = np.asarray(b, dtype=float)
        c = np.asarray(c, dtype=float)
        beta1, u1, mu1 = normalize_image(sys.M, b)
        gamma1, v1, nv1 = normalize_image(sys.N, c)
        self.tridiag.betas.append(beta1)
        self.tridiag.gammas.append(gamma1)
        if u1 is None or v1 is None:
            self.breakdown = True
            self.breakdown_side = "left" if u1 is None else "right"
            return
        self.U.append(u1)
        self.MU.append(mu1)
        self.V.append(v1)
        self.NV.append(nv1)

    @property
    def j(self):
        """Number of completed expansion steps."""
        return self.tridiag.order

    def step(self):
        """Extend both bases by one column.

        Returns True on success.  On breakdown the diagonal entry of the
        step is still recorded (the solvers need it to finish the iterate)
        and False is returned.
        """
        if self.breakdown:
            raise RuntimeError("process already broke down")
        j = self.j + 1  # index of the step being performed
        mu_prev = (
            self.MU.column(j - 2) if j >= 2 else np.zeros(self.sys.m)
        )
        nv_prev = (
            self.NV.column(j - 2) if j >= 2 else np.zeros(self.sys.n)
        )
        reorth_u = (self.U.view(), self.MU.view()) if self.reorth else None
        reorth_v = (self.V.view(), self.NV.view()) if self.reorth else None
        alpha, beta, u, mu, gamma, v, nv = expand_pair(
            self.sys,
            self.counter,
            self.U.column(j - 1),
            self.V.column(j - 1),
            self.MU.column(j - 1),
            self.NV.column(j - 1),
            mu_prev,
            nv_prev,
            self.tridiag.betas[j - 1],
            self.tridiag.gammas[j - 1],
            reorth_u,
            reorth_v,
        )
        self.tridiag.alphas.append(alpha)
        self.tridiag.betas.append(beta)
        self.tridiag.gammas.append(gamma)
        if u is None or v is None:
            self.breakdown = True
            self.breakdown_side = "left" if u is None else "right"
            return False
        self.U.append(u)
        self.MU.append(mu)
        self.V.append(v)
        self.NV.append(nv)
        return True

    def run(self, steps):
        """Perform up to ``steps`` expansions, stopping early on breakdown."""
        for _ in range(steps):
            if not self.step():
                break
        return self


def verify_relations(sys: SqdSystem, process: SsyProcess):
    """Measure how well the process relations hold.

    Evaluates the four residuals of the fundamental identities with fresh
    operator applications:

    - ``r_av``:    Frobenius norm of ``A V_j - M U_{j+1} T_{j+1,j}``
    - ``r_atu``:   Frobenius norm of ``A' U_j - N V_{j+1} T_{j,j+1}'``
    - ``r_orth_u``: max entry of ``U_{j+1}' M U_{j+1} - I``
    - ``r_orth_v``: max entry of ``V_{j+1}' N V_{j+1} - I``
    """
    j = process.j
    if j < 1:
        raise ValueError("at least one completed step required")
    td = process.tridiag
    have_next = process.U.count >= j + 1
    ncols = j + 1 if have_next else j
    u_block = process.U.view(ncols)
    v_block = process.V.view(ncols)
    mu_block = sys.M.apply_block(u_block)
    nv_block = sys.N.apply_block(v_block)

    t_lower = td.lower_matrix(j)[:ncols, :]
    t_upper = td.upper_matrix(j)[:, :ncols]
    av = sys.A.to_scipy() @ v_block[:, :j]
    atu = sys.A.to_scipy().T @ u_block[:, :j]
    r_av = float(np.linalg.norm(av - mu_block @ t_lower))
    r_atu = float(np.linalg.norm(atu - nv_block @ t_upper.T))

    gram_u = u_block.T @ mu_block - np.eye(ncols)
    gram_v = v_block.T @ nv_block - np.eye(ncols)
    r_orth_u = float(np.max(np.abs(gram_u)))
    r_orth_v = float(np.max(np.abs(gram_v)))
    return {
        "r_av": r_av,
        "r_atu": r_atu,
        "r_orth_u": r_orth_u,
        "r_orth_v": r_orth_v,
    }
