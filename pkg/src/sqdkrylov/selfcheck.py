"""Invariant battery behind the ``verify`` CLI subcommand.

Each check exercises one structural identity on freshly generated random
instances and reports a failure string instead of raising, so the command
can list everything that is off at once.
"""

from __future__ import annotations

import numpy as np

from .deflation import DeflationBasis, apply_p, deflated_rhs, spectrum_diag
from .dense import dense_svd
from .esvd import EsvdConfig, gssy_dr
from .multi_rhs import initial_residual, context_from_esvd, warm_start
from .operators import CholeskyOperator, IdentityOperator
from .process import SsyProcess, verify_relations
from .sparse import SparseMatrix
from .system import SqdSystem
from .tricg import tricg_solve

__all__ = ["run_suite"]


def _random_spd(dim, rng):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return (q * rng.uniform(0.5, 2.0, dim)) @ q.T


def _random_system(m, n, rng, weighted=True):
    a = rng.standard_normal((m, n))
    if weighted:
        m_op = CholeskyOperator(_random_spd(m, rng))
        n_op = CholeskyOperator(_random_spd(n, rng))
    else:
        m_op = IdentityOperator(m)
        n_op = IdentityOperator(n)
    return SqdSystem(M=m_op, N=n_op, A=SparseMatrix.from_dense(a))


def _check_process_relations(rng):
    sys_ = _random_system(40, 30, rng)
    proc = SsyProcess(sys_, rng.standard_normal(40), rng.standard_normal(30), reorth=True)
    proc.run(15)
    rel = verify_relations(sys_, proc)
    scale = sys_.A.frobenius_norm()
    worst = max(rel["r_av"], rel["r_atu"]) / scale
    worst = max(worst, rel["r_orth_u"], rel["r_orth_v"])
    if worst > 1e-10:
        return f"process relations off by {worst:.2e}"
    return None


def _check_tricg_oracle(rng):
    m = n = 35
    sys_ = _random_system(m, n, rng, weighted=False)
    b = rng.standard_normal(m)
    c = rng.standard_normal(n)
    x, y, report = tricg_solve(sys_, b, c, tol=1e-10, maxit=400)
    a = sys_.A.to_dense()
    k_dense = np.block([[np.eye(m), a], [a.T, -np.eye(n)]])
    ref = np.linalg.solve(k_dense, np.concatenate([b, c]))
    err = np.linalg.norm(np.concatenate([x, y]) - ref) / np.linalg.norm(ref)
    if report.status != "converged" or err > 1e-8:
        return f"solver vs dense reference: status {report.status}, error {err:.2e}"
    return None


def _check_jacobi_svd(rng):
    for size in (1, 2, 7, 18):
        t = rng.standard_normal((size, size))
        svd = dense_svd(t)
        recon = np.linalg.norm(svd.reconstruct() - t)
        orth = max(
            np.max(np.abs(svd.U.T @ svd.U - np.eye(size))),
            np.max(np.abs(svd.V.T @ svd.V - np.eye(size))),
        )
        if recon > 1e-12 * max(np.linalg.norm(t), 1.0) or orth > 1e-12:
            return f"size {size}: reconstruction {recon:.2e}, orthogonality {orth:.2e}"
    return None


def _check_deflation(rng):
    values = np.sort(rng.uniform(0.5, 30.0, 25))[::-1]
    n = values.size
    sys_ = SqdSystem(
        M=IdentityOperator(n), N=IdentityOperator(n), A=SparseMatrix.from_diagonal(values)
    )
    k = 4
    basis = DeflationBasis.from_vectors(sys_, np.eye(n)[:, :k], np.eye(n)[:, :k], values[:k])
    w = rng.standard_normal(n)
    pw = apply_p(basis, sys_, w)
    ppw = apply_p(basis, sys_, pw)
    if np.linalg.norm(ppw - pw) > 1e-12 * np.linalg.norm(w):
        return "projector not idempotent"
    eigs = spectrum_diag(sys_, basis)
    zeros = np.count_nonzero(np.abs(eigs) <= 1e-8)
    if zeros != 2 * k:
        return f"deflated spectrum has {zeros} zeros, expected {2 * k}"
    return None


def _check_warm_start(rng):
    sys_ = _random_system(30, 24, rng, weighted=False)
    cfg = EsvdConfig(p=12, k=3, eps_svd=1e-10, maxcycle=60)
    result = gssy_dr(sys_, cfg, b=rng.standard_normal(30), c=rng.standard_normal(24))
    ctx = context_from_esvd(sys_, result)
    b = rng.standard_normal(30)
    c = rng.standard_normal(24)
    x0, y0, dx, dy = warm_start(ctx, b, c)
    r0x, r0y = initial_residual(ctx, b, c, dx, dy)
    ex, ey = sys_.residual(b, c, x0, y0)
    err = np.hypot(np.linalg.norm(r0x - ex), np.linalg.norm(r0y - ey))
    scale = np.hypot(np.linalg.norm(ex), np.linalg.norm(ey))
    if err > 1e-9 * max(scale, 1.0):
        return f"warm-start residual identity off by {err / max(scale, 1.0):.2e}"
    return None


def run_suite(seed=0):
    """Run every check; returns a list of (name, detail) failures."""
    rng = np.random.default_rng(seed)
    checks = [
        ("process-relations", _check_process_relations),
        ("tricg-dense-reference", _check_tricg_oracle),
        ("jacobi-svd", _check_jacobi_svd),
        ("deflation-projectors", _check_deflation),
        ("warm-start-residual", _check_warm_start),
    ]
    failures = []
    for name, fn in checks:
        try:
            detail = fn(rng)
        except Exception as exc:  # surface crashes as failures
            detail = f"raised {type(exc).__name__}: {exc}"
        if detail:
            failures.append((name, detail))
    return failures
