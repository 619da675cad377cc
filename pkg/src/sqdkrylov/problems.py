"""Problem generators, MatrixMarket ingestion, and history serialization."""

from __future__ import annotations

import numpy as np

from .operators import IdentityOperator
from .reports import ConvergenceRecord
from .sparse import SparseMatrix
from .system import SqdSystem

__all__ = [
    "DEFAULT_SEED",
    "gen_synth1",
    "gen_synth3",
    "gen_ones_rhs",
    "random_rhs_sequence",
    "read_matrix_market",
    "write_matrix_market",
    "write_history_csv",
    "read_history_csv",
    "MatrixMarketError",
]

DEFAULT_SEED = 7


def _identity_diag_system(diag, seed, name):
    a = SparseMatrix.from_diagonal(diag)
    m, n = a.shape
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(m)
    c = rng.standard_normal(n)
    return SqdSystem(
        M=IdentityOperator(m), N=IdentityOperator(n), A=a, b=b, c=c, name=name, seed=seed
    )


def gen_synth1(seed=DEFAULT_SEED):
    """Diagonal 2060x2060 test matrix with 60 large singular values.

    Entries are 2000 equispaced values on [0, 800] followed by 60 equispaced
    values on [1e3, 1e5]; both mass operators are the identity and the
    right-hand vectors are standard normal draws from ``seed``.
    """
    diag = np.concatenate([np.linspace(0.0, 800.0, 2000), np.linspace(1e3, 1e5, 60)])
    return _identity_diag_system(diag, seed, "synth1")


def gen_synth3(seed=DEFAULT_SEED):
    """Diagonal 2000x2000 test matrix with 40 clustered large singular values.

    Entries are 1960 equispaced values on [0, 100] followed by 40 equispaced
    values on [1000, 1020].
    """
    diag = np.concatenate([np.linspace(0.0, 100.0, 1960), np.linspace(1000.0, 1020.0, 40)])
    return _identity_diag_system(diag, seed, "synth3")


def gen_ones_rhs(m, n):
    """Unit-norm all-ones right-hand pair ``(e / sqrt(m), e / sqrt(n))``."""
    if m < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    return np.full(m, 1.0 / np.sqrt(m)), np.full(n, 1.0 / np.sqrt(n))


def random_rhs_sequence(m, n, count, seed):
    """Deterministic sequence of standard-normal right-hand pairs."""
    rng = np.random.default_rng(seed)
    return [(rng.standard_normal(m), rng.standard_normal(n)) for _ in range(count)]


class MatrixMarketError(ValueError):
    """Malformed MatrixMarket input; carries the offending line number."""

    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


def read_matrix_market(path):
    """Parse a real coordinate MatrixMarket file into a sparse matrix.

    Accepts the ``general`` and ``symmetric`` symmetry fields; symmetric
    storage (lower triangle) is expanded to general form.  Any deviation
    from the grammar raises :class:`MatrixMarketError` naming the line.
    """
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        header = fh.readline()
        if not header:
            raise MatrixMarketError(1, "empty file")
        tokens = header.strip().split()
        if len(tokens) != 5 or tokens[0] != "%%MatrixMarket":
            raise MatrixMarketError(1, f"bad header {header.strip()!r}")
        obj, fmt, field_, symmetry = (t.lower() for t in tokens[1:])
        if obj != "matrix" or fmt != "coordinate":
            raise MatrixMarketError(1, f"unsupported format {obj!r} {fmt!r}")
        if field_ != "real":
            raise MatrixMarketError(1, f"unsupported field {field_!r} (need real)")
        if symmetry not in ("general", "symmetric"):
            raise MatrixMarketError(1, f"unsupported symmetry {symmetry!r}")

        lineno = 1
        size = None
        for line in fh:
            lineno += 1
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            parts = stripped.split()
            if len(parts) != 3:
                raise MatrixMarketError(lineno, f"bad size line {stripped!r}")
            try:
                m, n, nnz = (int(p) for p in parts)
            except ValueError as exc:
                raise MatrixMarketError(lineno, f"bad size line {stripped!r}") from exc
            if m < 1 or n < 1 or nnz < 0:
                raise MatrixMarketError(lineno, f"bad dimensions {stripped!r}")
            size = (m, n, nnz)
            break
        if size is None:
            raise MatrixMarketError(lineno, "missing size line")
        m, n, nnz = size
        if symmetry == "symmetric" and m != n:
            raise MatrixMarketError(lineno, "symmetric matrix must be square")

        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=float)
        count = 0
        for line in fh:
            lineno += 1
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            if count >= nnz:
                raise MatrixMarketError(
                    lineno, f"more than the declared {nnz} entries"
                )
            parts = stripped.split()
            if len(parts) != 3:
                raise MatrixMarketError(lineno, f"bad entry {stripped!r}")
            try:
                i = int(parts[0])
                j = int(parts[1])
                v = float(parts[2])
            except ValueError as exc:
                raise MatrixMarketError(lineno, f"bad entry {stripped!r}") from exc
            if not 1 <= i <= m or not 1 <= j <= n:
                raise MatrixMarketError(
                    lineno, f"index ({i}, {j}) outside {m} x {n}"
                )
            if symmetry == "symmetric" and i < j:
                raise MatrixMarketError(
                    lineno, "upper-triangular entry in symmetric storage"
                )
            rows[count] = i - 1
            cols[count] = j - 1
            vals[count] = v
            count += 1
        if count != nnz:
            raise MatrixMarketError(
                lineno, f"declared {nnz} entries but found {count}"
            )

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
        )
        vals = np.concatenate([vals, vals[off]])
    return SparseMatrix.from_coo(m, n, rows, cols, vals)


def write_matrix_market(path, matrix: SparseMatrix):
    """Write a sparse matrix in general coordinate form."""
    csr = matrix.to_scipy().tocoo()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]} {csr.nnz}\n")
        for i, j, v in zip(csr.row, csr.col, csr.data):
            fh.write(f"{i + 1} {j + 1} {v:.17e}\n")


def write_history_csv(path, records):
    """Write convergence records as CSV with full-precision residuals."""
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("iteration,matvecs,residual,cycle,stage\n")
        for r in records:
            fh.write(f"{r.iteration},{r.matvecs},{r.residual:.17e},{r.cycle},{r.stage}\n")


def read_history_csv(path):
    """Parse a convergence history written by :func:`write_history_csv`."""
    records = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "iteration,matvecs,residual,cycle,stage":
            raise ValueError(f"unexpected header {header!r}")
        for line in fh:
            it, mv, res, cyc, stage = line.strip().split(",")
            records.append(
                ConvergenceRecord(int(it), int(mv), float(res), int(cyc), stage)
            )
    return records
