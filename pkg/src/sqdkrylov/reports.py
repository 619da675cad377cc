"""Solve reports and per-iteration convergence records."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "ConvergenceRecord",
    "SolveReport",
    "CONVERGED",
    "MAX_ITERATIONS",
    "MAX_CYCLES",
    "BREAKDOWN",
]

CONVERGED = "converged"
MAX_ITERATIONS = "max-iterations"
MAX_CYCLES = "max-cycles"
BREAKDOWN = "breakdown"


@dataclass(frozen=True)
class ConvergenceRecord:
    """One residual-history row: recurrence residual after an iteration."""

    iteration: int
    matvecs: int
    residual: float
    cycle: int
    stage: str


@dataclass
class SolveReport:
    """Outcome of an iterative solve.

    ``residuals`` holds the recurrence residual norms including the
    iteration-0 value, so its length is ``iterations + 1``.
    """

    status: str
    iterations: int
    matvecs: int
    residuals: list = field(default_factory=list)
    records: list = field(default_factory=list)
    final_residual: float | None = None
    cycles: int = 1
    seed: int | None = None
    basis_columns: int = 0

    @property
    def converged(self):
        return self.status == CONVERGED

    def final_recurrence_residual(self):
        return self.residuals[-1] if self.residuals else float("nan")
