"""Partial elliptic SVD by a tridiagonalization process with deflated restarting.

An elliptic singular triplet ``(sigma, u, v)`` of A satisfies ``A v = sigma
M u`` and ``A' u = sigma N v``.  Each cycle expands the bases to dimension
``p``, extracts Ritz triplets from the small projected matrix, and folds the
``k`` best ones together with the last basis pair into the next cycle.  The
projected matrix then acquires an arrow-shaped head but the expansion keeps
its three-term form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import dense_svd
from .process import ColumnStore, HeadWindowStore, expand_pair, normalize_image
from .reports import BREAKDOWN, CONVERGED, MAX_CYCLES
from .system import OpCounter, SqdSystem

__all__ = [
    "ArrowTriDiag",
    "EsvdConfig",
    "EsvdResult",
    "ritz_extract",
    "triplet_residuals",
    "check_convergence",
    "restart_fold",
    "gssy_dr",
]


@dataclass
class ArrowTriDiag:
    """Projected matrix after a deflated restart.

    The leading k-by-k head is diagonal, row and column ``k`` carry the
    coupling to the folded continuation vector, and the trailing block is
    tridiagonal.  ``k = 0`` degenerates to a plain tridiagonal matrix, which
    is what the first cycle produces.
    """

    k: int
    head: np.ndarray
    coupling_row: np.ndarray  # entries (k, 0..k-1)
    coupling_col: np.ndarray  # entries (0..k-1, k)
    tail_alphas: list = field(default_factory=list)
    tail_betas: list = field(default_factory=list)
    tail_gammas: list = field(default_factory=list)

    @property
    def p(self):
        return self.k + len(self.tail_alphas)

    def densify(self):
        p = self.p
        t = np.zeros((p, p))
        k = self.k
        for i in range(k):
            t[i, i] = self.head[i]
            t[i, k] = self.coupling_col[i]
            t[k, i] = self.coupling_row[i]
        for idx, a in enumerate(self.tail_alphas):
            t[k + idx, k + idx] = a
        for idx, bta in enumerate(self.tail_betas):
            t[k + 1 + idx, k + idx] = bta
        for idx, gma in enumerate(self.tail_gammas):
            t[k + idx, k + 1 + idx] = gma
        return t


@dataclass(frozen=True)
class EsvdConfig:
    """Parameters of the deflated-restart run."""

    p: int
    k: int
    eps_svd: float = 1e-10
    maxcycle: int = 10
    selector: str = "largest"

    def validate(self, m, n):
        if not 1 <= self.k < self.p <= min(m, n):
            raise ValueError(
                f"need 1 <= k < p <= min(m, n); got k={self.k}, p={self.p}, "
                f"min(m, n)={min(m, n)}"
            )
        if self.selector != "largest":
            raise ValueError(f"unsupported triplet selector {self.selector!r}")
        if self.maxcycle < 1:
            raise ValueError("maxcycle must be at least 1")


@dataclass
class EsvdResult:
    """Approximate elliptic singular triplets plus restart leftovers.

    ``residuals`` are the per-triplet bounds
    ``max(beta_next * |last row of Vhat_k|, gamma_next * |last row of Uhat_k|)``.
    The trailing basis pair and coupling vectors allow warm starting
    subsequent solves.
    """

    U: np.ndarray
    V: np.ndarray
    sigma: np.ndarray
    residuals: np.ndarray
    cycles: int
    converged: int
    status: str
    matvecs: int
    u_next: np.ndarray | None = None
    v_next: np.ndarray | None = None
    beta_next: float = 0.0
    gamma_next: float = 0.0
    coupling_row: np.ndarray | None = None
    coupling_col: np.ndarray | None = None
    residual_history: list = field(default_factory=list)
    matvec_history: list = field(default_factory=list)

    @property
    def k(self):
        return self.sigma.size

    @property
    def achieved_eps(self):
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def ritz_extract(t, u_block, v_block, k):
    """Ritz triplets of the projected matrix.

    ``t`` is an :class:`ArrowTriDiag` (or any object with ``densify``) or a
    dense array.  Returns ``(uhat_k, vhat_k, sigma_k, U_k, V_k)`` where the
    hatted blocks are the leading singular vectors of the small matrix and
    ``U_k = U_p @ uhat_k``, ``V_k = V_p @ vhat_k``.
    """
    dense = t.densify() if hasattr(t, "densify") else np.asarray(t, dtype=float)
    svd = dense_svd(dense)
    uhat = svd.U[:, :k]
    vhat = svd.V[:, :k]
    sigma = svd.sigma[:k].copy()
    return uhat, vhat, sigma, u_block @ uhat, v_block @ vhat


def triplet_residuals(uhat_k, vhat_k, beta_next, gamma_next):
    """Residual bound of each Ritz triplet from the last row of the small
    singular vectors."""
    last_u = np.abs(uhat_k[-1, :])
    last_v = np.abs(vhat_k[-1, :])
    return np.maximum(beta_next * last_v, gamma_next * last_u)


def check_convergence(residuals, eps_svd):
    """Number of triplets whose residual bound meets the tolerance."""
    if isinstance(residuals, EsvdResult):
        residuals = residuals.residuals
    return int(np.count_nonzero(np.asarray(residuals) <= eps_svd))


def restart_fold(u_block, v_block, u_next, v_next, uhat_k, vhat_k, sigma_k, beta_next, gamma_next):
    """Fold the selected Ritz vectors and the trailing pair into a restart.

    Returns ``(U_fold, V_fold, head)`` where the fold blocks have ``k + 1``
    columns and ``head`` is the restarted projected matrix without its tail.
    """
    k = sigma_k.size
    u_fold = np.empty((u_block.shape[0], k + 1), order="F")
    v_fold = np.empty((v_block.shape[0], k + 1), order="F")
    if k:
        u_fold[:, :k] = u_block @ uhat_k
        v_fold[:, :k] = v_block @ vhat_k
    u_fold[:, k] = u_next
    v_fold[:, k] = v_next
    head = ArrowTriDiag(
        k=k,
        head=sigma_k.copy(),
        coupling_row=beta_next * vhat_k[-1, :].copy() if k else np.zeros(0),
        coupling_col=gamma_next * uhat_k[-1, :].copy() if k else np.zeros(0),
    )
    return u_fold, v_fold, head


class DrProcess:
    """Restartable process state shared by the eigensolver and the solver.

    Owns the basis stores (with their operator images), the arrow-shaped
    projected matrix of the current cycle, and the fold bookkeeping.  One
    ``head_step`` plus ``p - k - 1`` ``tail_step`` calls advance a cycle.
    """

    def __init__(self, sys: SqdSystem, b, c, p, counter=None):
        self.sys = sys
        self.p = p
        self.counter = counter if counter is not None else OpCounter()
        self.k = 0
        self.arrow = None
        self.beta_next = 0.0
        self.gamma_next = 0.0
        self.breakdown = False
        cap = p + 1
        self.U = ColumnStore(sys.m, cap)
        self.MU = ColumnStore(sys.m, cap)
        self.V = ColumnStore(sys.n, cap)
        self.NV = ColumnStore(sys.n, cap)
        beta1, u1, mu1 = normalize_image(sys.M, np.asarray(b, dtype=float))
        gamma1, v1, nv1 = normalize_image(sys.N, np.asarray(c, dtype=float))
        self.beta1 = beta1
        self.gamma1 = gamma1
        if u1 is None or v1 is None:
            self.breakdown = True
            return
        self.U.append(u1)
        self.MU.append(mu1)
        self.V.append(v1)
        self.NV.append(nv1)

    @property
    def cols(self):
        return self.U.count

    def start_cycle(self, head=None):
        """Reset the arrow matrix for a new cycle (``head`` from a fold)."""
        if head is None:
            head = ArrowTriDiag(
                k=self.k,
                head=np.zeros(0),
                coupling_row=np.zeros(0),
                coupling_col=np.zeros(0),
            )
        self.arrow = head

    def head_step(self, reorth=True, reorth_cols=None):
        """Continuation step against the folded head (step ``k + 1``).

        With ``k = 0`` this is exactly the first step of the plain process.
        Returns the diagonal entry ``alpha_{k+1}``.
        """
        sys = self.sys
        k = self.k
        u_head = self.U.column(k)
        v_head = self.V.column(k)
        q = sys.A.matvec(v_head)
        self.counter.a += 1
        if k:
            q = q - self.MU.view(k) @ self.arrow.coupling_col
        pvec = sys.A.rmatvec(u_head)
        self.counter.at += 1
        if k:
            pvec = pvec - self.NV.view(k) @ self.arrow.coupling_row
        alpha = float(u_head @ q)
        wu = q - alpha * self.MU.column(k)
        wv = pvec - alpha * self.NV.column(k)
        if reorth:
            ncols = k + 1 if reorth_cols is None else reorth_cols
            beta, u, mu = normalize_image(sys.M, wu, self.U.view(ncols), self.MU.view(ncols))
            gamma, v, nv = normalize_image(sys.N, wv, self.V.view(ncols), self.NV.view(ncols))
        else:
            beta, u, mu = normalize_image(sys.M, wu)
            gamma, v, nv = normalize_image(sys.N, wv)
        self.arrow.tail_alphas.append(alpha)
        self._absorb(beta, u, mu, gamma, v, nv)
        return alpha

    def tail_step(self, reorth=True, update_t=True, reorth_cols=None):
        """Three-term expansion step ``j`` in ``k + 2 .. p``.

        ``reorth_cols`` limits the reorthogonalization block to the leading
        columns (the solver's non-restarting stage projects against the
        converged vectors only).  Returns ``alpha_j``.
        """
        sys = self.sys
        j = self.cols  # current step index: stores hold u_1..u_j
        if reorth:
            ncols = self.U.count if reorth_cols is None else reorth_cols
            reorth_u = (self.U.view(ncols), self.MU.view(ncols))
            reorth_v = (self.V.view(ncols), self.NV.view(ncols))
        else:
            reorth_u = reorth_v = None
        alpha, beta, u, mu, gamma, v, nv = expand_pair(
            sys,
            self.counter,
            self.U.column(j - 1),
            self.V.column(j - 1),
            self.MU.column(j - 1),
            self.NV.column(j - 1),
            self.MU.column(j - 2),
            self.NV.column(j - 2),
            self.beta_next,
            self.gamma_next,
            reorth_u,
            reorth_v,
        )
        if update_t:
            self.arrow.tail_betas.append(self.beta_next)
            self.arrow.tail_gammas.append(self.gamma_next)
            self.arrow.tail_alphas.append(alpha)
        self._absorb(beta, u, mu, gamma, v, nv)
        return alpha

    def _absorb(self, beta, u, mu, gamma, v, nv):
        self.beta_next = beta
        self.gamma_next = gamma
        if u is None or v is None:
            self.breakdown = True
            return
        self.U.append(u)
        self.MU.append(mu)
        self.V.append(v)
        self.NV.append(nv)

    def freeze_to_window(self):
        """Swap the stores for fixed-block-plus-window storage.

        Called when the restarts stop: the resident fold block stays
        available for reorthogonalization while later columns stream
        through a two-column window, keeping memory independent of the
        remaining iteration count.
        """
        self.U = HeadWindowStore(self.U.view())
        self.MU = HeadWindowStore(self.MU.view())
        self.V = HeadWindowStore(self.V.view())
        self.NV = HeadWindowStore(self.NV.view())

    def extract(self, k):
        """Ritz extraction from the current cycle at order ``k``."""
        ncols = self.arrow.p
        uhat, vhat, sigma, u_k, v_k = ritz_extract(
            self.arrow, self.U.view(ncols), self.V.view(ncols), k
        )
        residuals = triplet_residuals(uhat, vhat, self.beta_next, self.gamma_next)
        return uhat, vhat, sigma, u_k, v_k, residuals

    def fold(self, uhat_k, vhat_k, sigma_k):
        """Restart the stores with the Ritz vectors plus the trailing pair."""
        pcols = self.arrow.p
        k = sigma_k.size
        u_next = self.U.column(pcols)
        v_next = self.V.column(pcols)
        u_fold, v_fold, head = restart_fold(
            self.U.view(pcols),
            self.V.view(pcols),
            u_next,
            v_next,
            uhat_k,
            vhat_k,
            sigma_k,
            self.beta_next,
            self.gamma_next,
        )
        mu_fold = np.empty_like(u_fold)
        nv_fold = np.empty_like(v_fold)
        if k:
            mu_fold[:, :k] = self.MU.view(pcols) @ uhat_k
            nv_fold[:, :k] = self.NV.view(pcols) @ vhat_k
        mu_fold[:, k] = self.MU.column(pcols)
        nv_fold[:, k] = self.NV.column(pcols)

        cap = self.p + 1
        self.U = ColumnStore(self.sys.m, cap)
        self.MU = ColumnStore(self.sys.m, cap)
        self.V = ColumnStore(self.sys.n, cap)
        self.NV = ColumnStore(self.sys.n, cap)
        for i in range(k + 1):
            self.U.append(u_fold[:, i])
            self.MU.append(mu_fold[:, i])
            self.V.append(v_fold[:, i])
            self.NV.append(nv_fold[:, i])
        self.k = k
        return head


def gssy_dr(sys: SqdSystem, config: EsvdConfig, b=None, c=None):
    """Compute the ``k`` largest approximate elliptic singular triplets.

    Runs restarted cycles until every selected triplet satisfies the
    residual test at ``config.eps_svd`` or ``config.maxcycle`` is exhausted.
    Starting vectors default to the system right-hand side when present,
    else to ones scaled to unit norm.
    """
    config.validate(sys.m, sys.n)
    if b is None:
        b = sys.b if sys.b is not None else np.full(sys.m, 1.0 / np.sqrt(sys.m))
    if c is None:
        c = sys.c if sys.c is not None else np.full(sys.n, 1.0 / np.sqrt(sys.n))

    proc = DrProcess(sys, b, c, config.p)
    if proc.breakdown:
        empty = np.zeros(0)
        return EsvdResult(
            U=np.zeros((sys.m, 0)),
            V=np.zeros((sys.n, 0)),
            sigma=empty,
            residuals=empty,
            cycles=0,
            converged=0,
            status=BREAKDOWN,
            matvecs=proc.counter.total,
        )

    k = config.k
    head = None
    status = MAX_CYCLES
    history = []
    matvec_history = []
    cycles = 0
    for cycle in range(1, config.maxcycle + 1):
        cycles = cycle
        proc.start_cycle(head)
        proc.head_step(reorth=True)
        while not proc.breakdown and proc.cols < config.p + 1:
            proc.tail_step(reorth=True)
        if proc.breakdown:
            status = BREAKDOWN
            break
        uhat, vhat, sigma, u_k, v_k, residuals = proc.extract(k)
        history.append(residuals)
        matvec_history.append(proc.counter.total)
        nconv = check_convergence(residuals, config.eps_svd)
        if nconv == k:
            status = CONVERGED
            break
        if cycle < config.maxcycle:
            head = proc.fold(uhat, vhat, sigma)

    if status == BREAKDOWN:
        # Extract whatever the incomplete cycle supports.
        order = min(k, proc.arrow.p if proc.arrow else 0)
        if order:
            uhat, vhat, sigma, u_k, v_k, residuals = proc.extract(order)
            history.append(residuals)
            nconv = check_convergence(residuals, config.eps_svd)
        else:
            sigma = np.zeros(0)
            u_k = np.zeros((sys.m, 0))
            v_k = np.zeros((sys.n, 0))
            residuals = np.zeros(0)
            uhat = np.zeros((0, 0))
            vhat = np.zeros((0, 0))
            nconv = 0

    return EsvdResult(
        U=u_k,
        V=v_k,
        sigma=sigma,
        residuals=residuals,
        cycles=cycles,
        converged=nconv,
        status=status,
        matvecs=proc.counter.total,
        u_next=proc.U.column(proc.U.count - 1).copy() if proc.U.count else None,
        v_next=proc.V.column(proc.V.count - 1).copy() if proc.V.count else None,
        beta_next=proc.beta_next,
        gamma_next=proc.gamma_next,
        coupling_row=proc.beta_next * vhat[-1, :].copy() if sigma.size else np.zeros(0),
        coupling_col=proc.gamma_next * uhat[-1, :].copy() if sigma.size else np.zeros(0),
        residual_history=history,
        matvec_history=matvec_history,
    )
