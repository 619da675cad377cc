"""TriCG with deflated restarting.

The solver runs in cycles of at most ``p`` expansion steps.  While the
selected Ritz triplets are not yet accurate (the restarting stage), every
cycle ends by folding them plus the trailing basis pair into the next one.
Once they pass the residual test, the restarting machinery is switched off
and the iteration continues like plain TriCG, reorthogonalizing only
against the converged vectors (the non-restarting stage).

Within a restarted cycle the projected matrix has an arrow-shaped head, so
the factorization and direction recurrences need dedicated head formulas;
from step ``k + 2`` onward they reduce to the plain solver ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .deflation import DeflationBasis
from .esvd import DrProcess, check_convergence
from .reports import (
    BREAKDOWN,
    CONVERGED,
    MAX_CYCLES,
    MAX_ITERATIONS,
    ConvergenceRecord,
    SolveReport,
)
from .system import SqdSystem
from .tricg import (
    IterState,
    LdlBreakdownError,
    LdlState,
    PIVOT_FLOOR,
    iterate_advance,
    ldl_advance,
    residual_norm,
)

__all__ = [
    "HeadFactors",
    "TricgDrConfig",
    "TricgDrResult",
    "RecycleContext",
    "head_ldl",
    "head_directions",
    "tricg_dr_solve",
]

RESTARTING = "restarting"
NON_RESTARTING = "non-restarting"


@dataclass(frozen=True)
class HeadFactors:
    """LDL' entries of the arrow-shaped head.

    Arrays hold the per-column values for the first ``k`` block columns
    (``d_odd`` is identically one there); the bridge scalars belong to
    block column ``k + 1``, after which the plain recurrences take over.
    """

    k: int
    d_odd: np.ndarray
    delta: np.ndarray
    d_even: np.ndarray
    eta: np.ndarray
    sigma: np.ndarray
    lam: np.ndarray
    d_bridge_odd: float
    delta_bridge: float
    d_bridge_even: float


@dataclass(frozen=True)
class TricgDrConfig:
    """Parameters of a deflated-restart solve."""

    p: int
    k: int
    tol: float = 1e-8
    eps_svd: float = 1e-10
    maxcycle: int = 10
    maxit: int = 80000
    reorth: bool = True

    def validate(self, m, n):
        if not 0 <= self.k < self.p <= min(m, n):
            raise ValueError(
                f"need 0 <= k < p <= min(m, n); got k={self.k}, p={self.p}, "
                f"min(m, n)={min(m, n)}"
            )
        if self.maxcycle < 1:
            raise ValueError("maxcycle must be at least 1")
        if self.maxit <= self.p:
            raise ValueError("maxit must exceed p")


@dataclass(frozen=True)
class RecycleContext:
    """Deflation payload carried between right-hand sides.

    Holds the ``k + 1`` folded basis columns together with their operator
    images and the projected blocks: ``t_diag`` is the k-by-k head (the Ritz
    values), ``coupling_row``/``coupling_col`` the border entries, from
    which the rectangular blocks of the warm-start residual formula are
    assembled.
    """

    U: np.ndarray
    V: np.ndarray
    MU: np.ndarray
    NV: np.ndarray
    sigma: np.ndarray
    coupling_row: np.ndarray
    coupling_col: np.ndarray
    eps: float

    @property
    def k(self):
        return self.sigma.size

    def t_block(self):
        """Square k-by-k projected block (diagonal head)."""
        return np.diag(self.sigma)

    def t_lower(self):
        """(k+1)-by-k block coupling ``A V_k`` to ``M U_{k+1}``."""
        t = np.zeros((self.k + 1, self.k))
        t[: self.k, :] = self.t_block()
        t[self.k, :] = self.coupling_row
        return t

    def t_upper(self):
        """k-by-(k+1) block coupling ``A' U_k`` to ``N V_{k+1}``."""
        t = np.zeros((self.k, self.k + 1))
        t[:, : self.k] = self.t_block()
        t[:, self.k] = self.coupling_col
        return t


@dataclass
class TricgDrResult:
    x: np.ndarray
    y: np.ndarray
    report: SolveReport
    basis: DeflationBasis | None = None
    context: RecycleContext | None = None


def head_ldl(head_alphas, coupling_row, coupling_col, alpha_next) -> HeadFactors:
    """Factor the arrow-shaped head of the restarted projected matrix.

    ``head_alphas`` are the k folded Ritz values, the coupling vectors the
    border row and column of the arrow, and ``alpha_next`` the first tail
    diagonal entry.  With ``k = 0`` this reduces to the first plain step.
    """
    head_alphas = np.asarray(head_alphas, dtype=float)
    coupling_row = np.asarray(coupling_row, dtype=float)
    coupling_col = np.asarray(coupling_col, dtype=float)
    k = head_alphas.size
    d_odd = np.ones(k)
    delta = head_alphas / d_odd
    d_even = -1.0 - d_odd * delta * delta
    eta = coupling_col / d_odd
    sigma = coupling_row / d_even
    lam = -d_odd * delta * eta / d_even
    d_bridge_odd = 1.0 - float(np.sum(d_even * sigma * sigma))
    if abs(d_bridge_odd) < PIVOT_FLOOR:
        raise LdlBreakdownError(2 * k + 1)
    delta_bridge = (alpha_next - float(np.sum(d_even * lam * sigma))) / d_bridge_odd
    d_bridge_even = (
        -1.0
        - float(np.sum(d_odd * eta * eta + d_even * lam * lam))
        - d_bridge_odd * delta_bridge * delta_bridge
    )
    if abs(d_bridge_even) < PIVOT_FLOOR:
        raise LdlBreakdownError(2 * k + 2)
    return HeadFactors(
        k=k,
        d_odd=d_odd,
        delta=delta,
        d_even=d_even,
        eta=eta,
        sigma=sigma,
        lam=lam,
        d_bridge_odd=d_bridge_odd,
        delta_bridge=delta_bridge,
        d_bridge_even=d_bridge_even,
    )


def head_directions(u_fold, v_fold, factors: HeadFactors):
    """Directions ``g_{2k+1}`` and ``g_{2k+2}`` of the restarted cycle.

    ``u_fold``/``v_fold`` are the ``k + 1`` folded basis columns.  The k
    leading direction pairs never materialize; their contributions are
    accumulated into the four returned vectors.
    """
    k = factors.k
    u_next = u_fold[:, k]
    v_next = v_fold[:, k]
    if k == 0:
        gx_odd = u_next.copy()
        gy_odd = np.zeros(v_fold.shape[0])
        gx_even = -factors.delta_bridge * gx_odd
        gy_even = v_next.copy()
        return gx_odd, gx_even, gy_odd, gy_even
    u_k = u_fold[:, :k]
    v_k = v_fold[:, :k]
    gx_odd = u_next + u_k @ (factors.sigma * factors.delta)
    gy_odd = -(v_k @ factors.sigma)
    gx_even = -factors.delta_bridge * gx_odd - u_k @ (
        factors.eta - factors.lam * factors.delta
    )
    gy_even = v_next - factors.delta_bridge * gy_odd - v_k @ factors.lam
    return gx_odd, gx_even, gy_odd, gy_even


def _head_states(proc, factors, beta_seed, gamma_seed, x_carry, y_carry):
    """Seed the recurrence states after a head step (iterate ``k + 1``)."""
    k = factors.k
    pi_odd = beta_seed / factors.d_bridge_odd
    pi_even = (gamma_seed - beta_seed * factors.delta_bridge) / factors.d_bridge_even
    gx_odd, gx_even, gy_odd, gy_even = head_directions(
        proc.U.view(k + 1), proc.V.view(k + 1), factors
    )
    x = x_carry + pi_odd * gx_odd + pi_even * gx_even
    y = y_carry + pi_odd * gy_odd + pi_even * gy_even
    ldl = LdlState(
        j=k + 1,
        d_odd=factors.d_bridge_odd,
        d_even=factors.d_bridge_even,
        d_odd_prev=factors.d_odd[-1] if k else 0.0,
        d_even_prev=factors.d_even[-1] if k else 0.0,
        delta=factors.delta_bridge,
        sigma=factors.sigma[-1] if k else 0.0,
        eta=factors.eta[-1] if k else 0.0,
        lam=factors.lam[-1] if k else 0.0,
        beta=0.0,
        gamma=0.0,
    )
    it = IterState(
        j=k + 1,
        x=x,
        y=y,
        pi_odd=pi_odd,
        pi_even=pi_even,
        xi_odd=pi_odd - factors.delta_bridge * pi_even,
        xi_even=pi_even,
        gx_odd=gx_odd,
        gx_even=gx_even,
        gy_odd=gy_odd,
        gy_even=gy_even,
    )
    return ldl, it


def tricg_dr_solve(sys: SqdSystem, b, c, config: TricgDrConfig, collect_iterates=False):
    """Solve the block system with deflated restarts.

    The first cycle reproduces plain TriCG for ``p`` steps.  Later cycles
    continue from the folded Ritz vectors with the residual expressed in the
    new basis; once all ``k`` triplets converge, restarts stop and the
    iteration runs on to ``maxit``.  Returns a :class:`TricgDrResult` whose
    ``basis``/``context`` carry the deflation subspace for recycling.
    """
    config.validate(sys.m, sys.n)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    proc = DrProcess(sys, b, c, config.p)
    beta_seed, gamma_seed = proc.beta1, proc.gamma1
    r0 = math.sqrt(beta_seed * beta_seed + gamma_seed * gamma_seed)
    residuals = [r0]
    records = [ConvergenceRecord(0, 0, r0, 1, RESTARTING)]
    iterates = [] if collect_iterates else None
    x = np.zeros(sys.m)
    y = np.zeros(sys.n)

    def finish(status, iteration, cycle, basis, context):
        report = SolveReport(
            status=status,
            iterations=iteration,
            matvecs=proc.counter.total,
            residuals=residuals,
            records=records,
            final_residual=sys.residual_hinv_norm(b, c, x, y),
            cycles=cycle,
        )
        if iterates is not None:
            report.iterates = iterates
        report.basis_columns = max(proc.U.stored_columns, proc.V.stored_columns)
        return TricgDrResult(x=x, y=y, report=report, basis=basis, context=context)

    if proc.breakdown:
        status = CONVERGED if r0 <= config.tol else BREAKDOWN
        return finish(status, 0, 0, None, None)
    if r0 <= config.tol:
        return finish(CONVERGED, 0, 0, None, None)

    conv_sv = False
    basis = None
    context = None
    head = None
    iteration = 0
    cycle = 0
    status = MAX_CYCLES
    for cycle in range(1, config.maxcycle + 1):
        stage = NON_RESTARTING if conv_sv else RESTARTING
        proc.start_cycle(head)
        k = proc.k
        try:
            alpha_head = proc.head_step(
                reorth=config.reorth, reorth_cols=k if conv_sv else None
            )
            factors = head_ldl(
                proc.arrow.head,
                proc.arrow.coupling_row,
                proc.arrow.coupling_col,
                alpha_head,
            )
        except LdlBreakdownError:
            status = BREAKDOWN
            break
        ldl, it = _head_states(proc, factors, beta_seed, gamma_seed, x, y)
        x, y = it.x, it.y
        iteration += 1
        res = residual_norm(ldl, it, proc.beta_next, proc.gamma_next)
        residuals.append(res)
        records.append(
            ConvergenceRecord(iteration, proc.counter.total, res, cycle, stage)
        )
        if iterates is not None:
            iterates.append((x.copy(), y.copy()))
        if res <= config.tol:
            status = CONVERGED
            break
        if proc.breakdown:
            status = BREAKDOWN
            break

        inner_limit = config.maxit if conv_sv else config.p
        broke = False
        hit_tol = False
        for j in range(k + 2, inner_limit + 1):
            beta_j, gamma_j = proc.beta_next, proc.gamma_next
            alpha_j = proc.tail_step(
                reorth=config.reorth,
                update_t=not conv_sv,
                reorth_cols=k if conv_sv else None,
            )
            try:
                ldl = ldl_advance(ldl, alpha_j, beta_j, gamma_j)
            except LdlBreakdownError:
                broke = True
                break
            it = iterate_advance(
                it, ldl, proc.U.column(j - 1), proc.V.column(j - 1), 0.0, 0.0
            )
            x, y = it.x, it.y
            iteration += 1
            res = residual_norm(ldl, it, proc.beta_next, proc.gamma_next)
            residuals.append(res)
            records.append(
                ConvergenceRecord(iteration, proc.counter.total, res, cycle, stage)
            )
            if iterates is not None:
                iterates.append((x.copy(), y.copy()))
            if res <= config.tol:
                hit_tol = True
                break
            if proc.breakdown:
                broke = True
                break
        if hit_tol:
            status = CONVERGED
            break
        if broke:
            status = BREAKDOWN
            break
        if conv_sv:
            status = MAX_ITERATIONS
            break
        if cycle == config.maxcycle:
            status = MAX_CYCLES
            break

        # Restart: seeds from the final solution coefficients, then fold.
        beta_seed = -proc.beta_next * it.xi_even
        gamma_seed = -proc.gamma_next * it.xi_odd
        uhat, vhat, sigma, u_k, v_k, trip_res = proc.extract(config.k)
        nconv = check_convergence(trip_res, config.eps_svd)
        head = proc.fold(uhat, vhat, sigma)
        eps = float(np.max(trip_res)) if trip_res.size else 0.0
        context = RecycleContext(
            U=proc.U.view().copy(),
            V=proc.V.view().copy(),
            MU=proc.MU.view().copy(),
            NV=proc.NV.view().copy(),
            sigma=sigma.copy(),
            coupling_row=head.coupling_row.copy(),
            coupling_col=head.coupling_col.copy(),
            eps=eps,
        )
        basis = DeflationBasis.from_vectors(sys, u_k, v_k, sigma, eps)
        if nconv == config.k:
            conv_sv = True
            proc.freeze_to_window()

    return finish(status, iteration, cycle, basis, context)
