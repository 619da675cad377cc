"""Krylov solvers with deflated restarting for symmetric quasi-definite systems.

The package solves block systems ``[[M, A], [A', -N]] (x, y) = (b, c)`` with
SPD ``M`` and ``N``: a short-recurrence Galerkin solver, a partial elliptic
SVD process with deflated restarting, the deflated-restart solver built on
it, and a warm-started recycler for sequences of right-hand sides.
"""

from .deflation import (
    DeflationBasis,
    apply_p,
    apply_pt,
    apply_q,
    apply_qt,
    correct_solution,
    deflated_rhs,
    deflation_bound_diag,
    residual_error_diag,
    spectrum_diag,
)
from .dense import DenseSvd, JacobiConvergenceError, SingularMatrixError, dense_solve, dense_svd
from .esvd import (
    ArrowTriDiag,
    EsvdConfig,
    EsvdResult,
    check_convergence,
    gssy_dr,
    restart_fold,
    ritz_extract,
    triplet_residuals,
)
from .multi_rhs import (
    context_from_esvd,
    dtricg_solve,
    empty_context,
    initial_residual,
    multi_rhs_driver,
    warm_start,
)
from .operators import (
    CholeskyOperator,
    DiagonalOperator,
    DimensionError,
    IdentityOperator,
    InnerCgOperator,
    NonSpdError,
    SpdOperator,
    normalize,
    spd_norm,
    spd_operator_from_matrix,
)
from .problems import (
    gen_ones_rhs,
    gen_synth1,
    gen_synth3,
    random_rhs_sequence,
    read_matrix_market,
    write_history_csv,
    write_matrix_market,
)
from .process import SsyProcess, TriDiag, verify_relations
from .reports import ConvergenceRecord, SolveReport
from .sparse import SparseMatrix
from .system import SqdSystem
from .tricg import IterState, LdlState, iterate_advance, ldl_advance, residual_norm, tricg_solve
from .tricg_dr import (
    HeadFactors,
    RecycleContext,
    TricgDrConfig,
    TricgDrResult,
    head_directions,
    head_ldl,
    tricg_dr_solve,
)

__version__ = "0.1.0"

__all__ = [
    "ArrowTriDiag",
    "CholeskyOperator",
    "ConvergenceRecord",
    "DeflationBasis",
    "DenseSvd",
    "DiagonalOperator",
    "DimensionError",
    "EsvdConfig",
    "EsvdResult",
    "HeadFactors",
    "IdentityOperator",
    "InnerCgOperator",
    "IterState",
    "JacobiConvergenceError",
    "LdlState",
    "NonSpdError",
    "RecycleContext",
    "SingularMatrixError",
    "SolveReport",
    "SparseMatrix",
    "SpdOperator",
    "SqdSystem",
    "SsyProcess",
    "TriDiag",
    "TricgDrConfig",
    "TricgDrResult",
    "apply_p",
    "apply_pt",
    "apply_q",
    "apply_qt",
    "check_convergence",
    "context_from_esvd",
    "correct_solution",
    "deflated_rhs",
    "deflation_bound_diag",
    "dense_solve",
    "dense_svd",
    "dtricg_solve",
    "empty_context",
    "gen_ones_rhs",
    "gen_synth1",
    "gen_synth3",
    "gssy_dr",
    "head_directions",
    "head_ldl",
    "initial_residual",
    "iterate_advance",
    "ldl_advance",
    "multi_rhs_driver",
    "normalize",
    "random_rhs_sequence",
    "read_matrix_market",
    "residual_error_diag",
    "residual_norm",
    "restart_fold",
    "ritz_extract",
    "spd_norm",
    "spd_operator_from_matrix",
    "spectrum_diag",
    "tricg_dr_solve",
    "tricg_solve",
    "triplet_residuals",
    "verify_relations",
    "warm_start",
    "write_history_csv",
    "write_matrix_market",
]
