"""Warm-started solves for sequences of right-hand sides (D-TriCG).

The first right-hand side is solved with deflated restarts, which leaves a
recycle context behind.  Every later right-hand side starts from the best
approximation inside the deflation subspace; its residual is assembled from
the stored projected blocks without touching the off-diagonal operator, and
plain short-recurrence iterations finish the job while staying orthogonal
to the deflation subspace.
"""

from __future__ import annotations

import math

import numpy as np

from .dense import dense_solve
from .process import RingStore, expand_pair, normalize_image
from .reports import (
    BREAKDOWN,
    CONVERGED,
    MAX_ITERATIONS,
    ConvergenceRecord,
    SolveReport,
)
from .system import OpCounter, SqdSystem
from .tricg import (
    IterState,
    LdlBreakdownError,
    LdlState,
    iterate_advance,
    ldl_advance,
    residual_norm,
)
from .tricg_dr import RecycleContext, TricgDrConfig, tricg_dr_solve

__all__ = [
    "context_from_esvd",
    "empty_context",
    "warm_start",
    "initial_residual",
    "dtricg_solve",
    "multi_rhs_driver",
]


def empty_context(sys: SqdSystem) -> RecycleContext:
    """Context with no deflation vectors; warm starts become no-ops."""
    return RecycleContext(
        U=np.zeros((sys.m, 1)),
        V=np.zeros((sys.n, 1)),
        MU=np.zeros((sys.m, 1)),
        NV=np.zeros((sys.n, 1)),
        sigma=np.zeros(0),
        coupling_row=np.zeros(0),
        coupling_col=np.zeros(0),
        eps=0.0,
    )


def context_from_esvd(sys: SqdSystem, result) -> RecycleContext:
    """Build a recycle context from a converged partial-ESVD run."""
    k = result.sigma.size
    u = np.empty((sys.m, k + 1), order="F")
    v = np.empty((sys.n, k + 1), order="F")
    u[:, :k] = result.U
    v[:, :k] = result.V
    u[:, k] = result.u_next if result.u_next is not None else 0.0
    v[:, k] = result.v_next if result.v_next is not None else 0.0
    return RecycleContext(
        U=u,
        V=v,
        MU=sys.M.apply_block(u),
        NV=sys.N.apply_block(v),
        sigma=result.sigma.copy(),
        coupling_row=result.coupling_row.copy(),
        coupling_col=result.coupling_col.copy(),
        eps=result.achieved_eps,
    )


def warm_start(ctx: RecycleContext, b_i, c_i):
    """Initial guess inside the deflation subspace.

    Solves the small projected system and lifts: returns
    ``(x0, y0, d_x, d_y)`` with ``x0 = U_k d_x`` and ``y0 = V_k d_y``.
    """
    k = ctx.k
    if k == 0:
        return (
            np.zeros(ctx.U.shape[0]),
            np.zeros(ctx.V.shape[0]),
            np.zeros(0),
            np.zeros(0),
        )
    u_k = ctx.U[:, :k]
    v_k = ctx.V[:, :k]
    block = np.block([[np.eye(k), ctx.t_block()], [ctx.t_block().T, -np.eye(k)]])
    rhs = np.concatenate([u_k.T @ b_i, v_k.T @ c_i])
    d = dense_solve(block, rhs)
    return u_k @ d[:k], v_k @ d[k:], d[:k], d[k:]


def initial_residual(ctx: RecycleContext, b_i, c_i, d_x, d_y):
    """Residual of the warm start via the stored projected blocks.

    Uses the rectangular relation between the deflation vectors and their
    operator images, so no product with the off-diagonal block is needed.
    """
    k = ctx.k
    if k == 0:
        return np.array(b_i, dtype=float, copy=True), np.array(c_i, dtype=float, copy=True)
    eye_rect = np.zeros((k + 1, k))
    eye_rect[:k, :] = np.eye(k)
    wx = eye_rect @ d_x + ctx.t_lower() @ d_y
    wy = ctx.t_upper().T @ d_x - eye_rect @ d_y
    return b_i - ctx.MU @ wx, c_i - ctx.NV @ wy


def dtricg_solve(sys: SqdSystem, ctx: RecycleContext, b_i, c_i, tol=1e-8, maxit=None):
    """Warm-started TriCG for one additional right-hand side.

    Runs the short-recurrence iteration on the shifted system whose
    right-hand side is the warm-start residual, reorthogonalizing every new
    basis vector against the deflation vectors.  With an empty context this
    is exactly the plain solver.
    """
    b_i = np.asarray(b_i, dtype=float)
    c_i = np.asarray(c_i, dtype=float)
    if maxit is None:
        maxit = 2 * (sys.m + sys.n)
    x0, y0, d_x, d_y = warm_start(ctx, b_i, c_i)
    r0x, r0y = initial_residual(ctx, b_i, c_i, d_x, d_y)

    k = ctx.k
    counter = OpCounter()
    reorth_u = (ctx.U[:, :k], ctx.MU[:, :k]) if k else None
    reorth_v = (ctx.V[:, :k], ctx.NV[:, :k]) if k else None

    beta1, u1, mu1 = normalize_image(sys.M, r0x, *(reorth_u or (None, None)))
    gamma1, v1, nv1 = normalize_image(sys.N, r0y, *(reorth_v or (None, None)))
    r0 = math.sqrt(beta1 * beta1 + gamma1 * gamma1)
    residuals = [r0]
    records = [ConvergenceRecord(0, 0, r0, 1, "d-tricg")]
    x = x0.copy()
    y = y0.copy()

    def finish(status, iterations):
        return (
            x,
            y,
            SolveReport(
                status=status,
                iterations=iterations,
                matvecs=counter.total,
                residuals=residuals,
                records=records,
                final_residual=sys.residual_hinv_norm(b_i, c_i, x, y),
            ),
        )

    if r0 <= tol:
        return finish(CONVERGED, 0)
    if u1 is None or v1 is None:
        return finish(BREAKDOWN, 0)

    u_store = RingStore(sys.m)
    mu_store = RingStore(sys.m)
    v_store = RingStore(sys.n)
    nv_store = RingStore(sys.n)
    u_store.append(u1)
    mu_store.append(mu1)
    v_store.append(v1)
    nv_store.append(nv1)
    beta_next, gamma_next = beta1, gamma1
    ldl = LdlState.initial()
    it = IterState.initial(sys.m, sys.n)
    status = MAX_ITERATIONS
    iterations = 0
    for j in range(1, maxit + 1):
        beta_j, gamma_j = beta_next, gamma_next
        mu_prev = mu_store.column(j - 2) if j >= 2 else np.zeros(sys.m)
        nv_prev = nv_store.column(j - 2) if j >= 2 else np.zeros(sys.n)
        alpha_j, beta_next, u_next, mu_next, gamma_next, v_next, nv_next = expand_pair(
            sys,
            counter,
            u_store.column(j - 1),
            v_store.column(j - 1),
            mu_store.column(j - 1),
            nv_store.column(j - 1),
            mu_prev,
            nv_prev,
            beta_j,
            gamma_j,
            reorth_u,
            reorth_v,
        )
        broke = u_next is None or v_next is None
        try:
            ldl = ldl_advance(ldl, alpha_j, beta_j, gamma_j)
        except LdlBreakdownError:
            status = BREAKDOWN
            break
        it = iterate_advance(it, ldl, u_store.column(j - 1), v_store.column(j - 1), beta1, gamma1)
        x = x0 + it.x
        y = y0 + it.y
        iterations = j
        res = residual_norm(ldl, it, beta_next, gamma_next)
        residuals.append(res)
        records.append(ConvergenceRecord(j, counter.total, res, 1, "d-tricg"))
        if res <= tol:
            status = CONVERGED
            break
        if broke:
            status = BREAKDOWN
            break
        u_store.append(u_next)
        mu_store.append(mu_next)
        v_store.append(v_next)
        nv_store.append(nv_next)
    return finish(status, iterations)


def multi_rhs_driver(sys: SqdSystem, rhs_list, config: TricgDrConfig):
    """Solve a sequence of right-hand sides with recycling.

    The first pair goes through the deflated-restart solver, which yields
    the recycle context; every later pair is warm started and finished by
    :func:`dtricg_solve`.  Returns a list of ``(x, y, report)`` triples.
    """
    if not rhs_list:
        raise ValueError("need at least one right-hand side")
    b1, c1 = rhs_list[0]
    first = tricg_dr_solve(sys, b1, c1, config)
    ctx = first.context if first.context is not None else empty_context(sys)
    results = [(first.x, first.y, first.report)]
    for b_i, c_i in rhs_list[1:]:
        results.append(dtricg_solve(sys, ctx, b_i, c_i, tol=config.tol, maxit=config.maxit))
    return results
