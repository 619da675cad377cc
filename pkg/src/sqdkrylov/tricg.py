"""Short-recurrence Galerkin solver for symmetric quasi-definite systems.

The solver expands the tridiagonalization process one step at a time and
keeps an LDL' factorization of the permuted projected matrix, so iterates
and residual norms follow from scalar recurrences with a four-vector
direction window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .process import SsyProcess
from .reports import (
    BREAKDOWN,
    CONVERGED,
    MAX_ITERATIONS,
    ConvergenceRecord,
    SolveReport,
)
from .system import SqdSystem

__all__ = [
    "LdlState",
    "IterState",
    "LdlBreakdownError",
    "ldl_advance",
    "iterate_advance",
    "residual_norm",
    "tricg_solve",
]

# The factorization exists in exact arithmetic; pivots at this magnitude
# signal numerical collapse instead.
PIVOT_FLOOR = 1e-300


class LdlBreakdownError(RuntimeError):
    """A pivot of the LDL' factorization collapsed."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"zero pivot d_{index} in LDL' factorization")


@dataclass(frozen=True)
class LdlState:
    """Window of the LDL' recurrences after step ``j``.

    Holds ``d`` values ``d_{2j-3} .. d_{2j}`` plus the multipliers of the
    current block column.  The initial state encodes the seeds
    ``d_{-1} = d_0 = sigma_1 = eta_1 = lambda_1 = 0``.
    """

    j: int
    d_odd: float  # d_{2j-1}
    d_even: float  # d_{2j}
    d_odd_prev: float  # d_{2j-3}
    d_even_prev: float  # d_{2j-2}
    delta: float
    sigma: float
    eta: float
    lam: float
    beta: float  # beta_j of the step that produced this state
    gamma: float  # gamma_j

    @classmethod
    def initial(cls):
        return cls(
            j=0,
            d_odd=0.0,
            d_even=0.0,
            d_odd_prev=0.0,
            d_even_prev=0.0,
            delta=0.0,
            sigma=0.0,
            eta=0.0,
            lam=0.0,
            beta=0.0,
            gamma=0.0,
        )


def ldl_advance(state: LdlState, alpha_j, beta_j, gamma_j) -> LdlState:
    """Advance the LDL' recurrences by one step.

    Raises :class:`LdlBreakdownError` when a pivot magnitude falls below
    ``PIVOT_FLOOR``.
    """
    j = state.j + 1
    if j == 1:
        sigma = 0.0
        eta = 0.0
        lam = 0.0
    else:
        if abs(state.d_even) < PIVOT_FLOOR:
            raise LdlBreakdownError(2 * j - 2)
        if abs(state.d_odd) < PIVOT_FLOOR:
            raise LdlBreakdownError(2 * j - 3)
        sigma = beta_j / state.d_even
        eta = gamma_j / state.d_odd
        lam = -gamma_j * state.delta / state.d_even
    d_odd = 1.0 - sigma * sigma * state.d_even
    if abs(d_odd) < PIVOT_FLOOR:
        raise LdlBreakdownError(2 * j - 1)
    delta = (alpha_j - lam * beta_j) / d_odd
    d_even = (
        -1.0
        - eta * eta * state.d_odd
        - lam * lam * state.d_even
        - delta * delta * d_odd
    )
    if abs(d_even) < PIVOT_FLOOR:
        raise LdlBreakdownError(2 * j)
    return LdlState(
        j=j,
        d_odd=d_odd,
        d_even=d_even,
        d_odd_prev=state.d_odd,
        d_even_prev=state.d_even,
        delta=delta,
        sigma=sigma,
        eta=eta,
        lam=lam,
        beta=beta_j,
        gamma=gamma_j,
    )


@dataclass(frozen=True)
class IterState:
    """Iterate, solution coefficients and direction window after step ``j``."""

    j: int
    x: np.ndarray
    y: np.ndarray
    pi_odd: float  # pi_{2j-1}
    pi_even: float  # pi_{2j}
    xi_odd: float
    xi_even: float
    gx_odd: np.ndarray  # g_{2j-1}^x
    gx_even: np.ndarray  # g_{2j}^x
    gy_odd: np.ndarray
    gy_even: np.ndarray

    @classmethod
    def initial(cls, m, n):
        return cls(
            j=0,
            x=np.zeros(m),
            y=np.zeros(n),
            pi_odd=0.0,
            pi_even=0.0,
            xi_odd=0.0,
            xi_even=0.0,
            gx_odd=np.zeros(m),
            gx_even=np.zeros(m),
            gy_odd=np.zeros(n),
            gy_even=np.zeros(n),
        )


def iterate_advance(state: IterState, ldl: LdlState, u_j, v_j, beta1, gamma1) -> IterState:
    """Advance solution coefficients, directions and the iterate by one step."""
    j = ldl.j
    if j != state.j + 1:
        raise ValueError(f"LDL state at step {ldl.j}, iterate at {state.j}")
    if j == 1:
        pi_odd = beta1 / ldl.d_odd
        pi_even = (gamma1 - ldl.delta * beta1) / ldl.d_even
    else:
        pi_odd = -ldl.beta * state.pi_even / ldl.d_odd
        pi_even = (
            -(
                ldl.delta * ldl.d_odd * pi_odd
                + ldl.lam * ldl.d_even_prev * state.pi_even
                + ldl.gamma * state.pi_odd
            )
            / ldl.d_even
        )
    gx_odd = -ldl.sigma * state.gx_even + u_j
    gy_odd = -ldl.sigma * state.gy_even
    gx_even = -ldl.delta * gx_odd - ldl.lam * state.gx_even - ldl.eta * state.gx_odd
    gy_even = (
        -ldl.delta * gy_odd - ldl.lam * state.gy_even - ldl.eta * state.gy_odd + v_j
    )
    x = state.x + pi_odd * gx_odd + pi_even * gx_even
    y = state.y + pi_odd * gy_odd + pi_even * gy_even
    return IterState(
        j=j,
        x=x,
        y=y,
        pi_odd=pi_odd,
        pi_even=pi_even,
        xi_odd=pi_odd - ldl.delta * pi_even,
        xi_even=pi_even,
        gx_odd=gx_odd,
        gx_even=gx_even,
        gy_odd=gy_odd,
        gy_even=gy_even,
    )


def residual_norm(ldl, state, beta_next, gamma_next):
    """Recurrence value of the residual norm in the inverse-weighted metric."""
    if state is None or state.j == 0:
        return math.sqrt(beta_next * beta_next + gamma_next * gamma_next)
    rx = gamma_next * (state.pi_odd - ldl.delta * state.pi_even)
    ry = beta_next * state.pi_even
    return math.sqrt(rx * rx + ry * ry)


def tricg_solve(
    sys: SqdSystem,
    b,
    c,
    tol=1e-8,
    maxit=None,
    reorth=False,
    collect_iterates=False,
):
    """Solve ``[[M, A], [A', -N]] (x, y) = (b, c)`` by short recurrences.

    Parameters
    ----------
    tol : float
        Stopping threshold on the recurrence residual norm weighted by the
        inverse of ``blockdiag(M, N)``.
    maxit : int, optional
        Iteration cap; defaults to ``2 * (m + n)``.
    reorth : bool
        Fully reorthogonalize new basis vectors against all previous ones.
        This stores the basis; the default windowed mode keeps O(m + n)
        state regardless of the iteration count.
    collect_iterates : bool
        Keep a copy of every iterate in ``report.iterates`` (diagnostics).

    Returns
    -------
    (x, y, report) : (ndarray, ndarray, SolveReport)
    """
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if maxit is None:
        maxit = 2 * (sys.m + sys.n)

    proc = SsyProcess(sys, b, c, reorth=reorth, keep_basis=reorth)
    td = proc.tridiag
    beta1, gamma1 = td.betas[0], td.gammas[0]
    x = np.zeros(sys.m)
    y = np.zeros(sys.n)
    r0 = residual_norm(None, None, beta1, gamma1)
    residuals = [r0]
    records = [ConvergenceRecord(0, 0, r0, 1, "tricg")]
    iterates = [] if collect_iterates else None

    if proc.breakdown:
        status = CONVERGED if r0 <= tol else BREAKDOWN
        return x, y, _make_report(sys, b, c, x, y, status, 0, proc, residuals, records, iterates)
    if r0 <= tol:
        return x, y, _make_report(sys, b, c, x, y, CONVERGED, 0, proc, residuals, records, iterates)

    ldl = LdlState.initial()
    it = IterState.initial(sys.m, sys.n)
    status = MAX_ITERATIONS
    iterations = 0
    for j in range(1, maxit + 1):
        ok = proc.step()
        alpha_j = td.alphas[j - 1]
        beta_j, gamma_j = td.betas[j - 1], td.gammas[j - 1]
        beta_next, gamma_next = td.betas[j], td.gammas[j]
        try:
            ldl = ldl_advance(ldl, alpha_j, beta_j, gamma_j)
        except LdlBreakdownError:
            status = BREAKDOWN
            break
        it = iterate_advance(it, ldl, proc.U.column(j - 1), proc.V.column(j - 1), beta1, gamma1)
        iterations = j
        res = residual_norm(ldl, it, beta_next, gamma_next)
        residuals.append(res)
        records.append(ConvergenceRecord(j, proc.counter.total, res, 1, "tricg"))
        if iterates is not None:
            iterates.append((it.x.copy(), it.y.copy()))
        if res <= tol:
            status = CONVERGED
            break
        if not ok:
            status = BREAKDOWN
            break
    x, y = it.x, it.y
    return x, y, _make_report(sys, b, c, x, y, status, iterations, proc, residuals, records, iterates)


def _make_report(sys, b, c, x, y, status, iterations, proc, residuals, records, iterates):
    report = SolveReport(
        status=status,
        iterations=iterations,
        matvecs=proc.counter.total,
        residuals=residuals,
        records=records,
        final_residual=sys.residual_hinv_norm(b, c, x, y),
        basis_columns=max(proc.U.stored_columns, proc.V.stored_columns),
    )
    if iterates is not None:
        report.iterates = iterates
    return report
