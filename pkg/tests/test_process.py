import numpy as np
import pytest

from sqdkrylov import (
    CholeskyOperator,
    DiagonalOperator,
    IdentityOperator,
    SparseMatrix,
    SqdSystem,
    SsyProcess,
    verify_relations,
)
from helpers import diag_system, random_system


def test_init_seeds_normalizations():
    sys_ = random_system(4, 4, np.random.default_rng(0))
    b = 2.0 * np.eye(4)[:, 0]
    c = 3.0 * np.eye(4)[:, 0]
    proc = SsyProcess(sys_, b, c)
    assert proc.tridiag.betas[0] == 2.0
    assert proc.tridiag.gammas[0] == 3.0
    assert np.array_equal(proc.U.column(0), np.eye(4)[:, 0])
    assert np.array_equal(proc.V.column(0), np.eye(4)[:, 0])


def test_init_zero_side_breaks_down():
    sys_ = random_system(4, 4, np.random.default_rng(0))
    proc = SsyProcess(sys_, np.zeros(4), np.ones(4))
    assert proc.breakdown
    assert proc.breakdown_side == "left"


def test_init_weighted_normalization():
    sys_ = SqdSystem(
        M=DiagonalOperator([4.0]),
        N=IdentityOperator(1),
        A=SparseMatrix.from_diagonal([1.0]),
    )
    proc = SsyProcess(sys_, np.array([2.0]), np.array([1.0]))
    assert proc.tridiag.betas[0] == pytest.approx(1.0)
    assert np.allclose(proc.U.column(0), [0.5])


def test_one_dimensional_breakdown_after_first_step():
    sys_ = diag_system([3.0])
    proc = SsyProcess(sys_, np.ones(1), np.ones(1))
    assert not proc.step()
    assert proc.breakdown
    assert proc.tridiag.alphas == [3.0]
    assert proc.tridiag.betas[1] == 0.0
    assert proc.tridiag.gammas[1] == 0.0


def test_symmetric_identity_breakdown():
    # A v_1 = u_1 exactly, so the second vectors vanish.
    sys_ = diag_system([1.0, 1.0])
    e1 = np.eye(2)[:, 0]
    proc = SsyProcess(sys_, e1, e1)
    assert not proc.step()
    assert proc.tridiag.alphas == [1.0]


@pytest.mark.parametrize("weighted", [False, True])
def test_relations_random_system(weighted):
    rng = np.random.default_rng(14)
    sys_ = random_system(30, 20, rng, weighted=weighted)
    proc = SsyProcess(sys_, rng.standard_normal(30), rng.standard_normal(20), reorth=True)
    proc.run(10)
    rel = verify_relations(sys_, proc)
    scale = sys_.A.frobenius_norm()
    assert rel["r_av"] <= 1e-10 * scale
    assert rel["r_atu"] <= 1e-10 * scale
    assert rel["r_orth_u"] <= 1e-10
    assert rel["r_orth_v"] <= 1e-10


def test_relations_single_step_near_exact():
    rng = np.random.default_rng(3)
    sys_ = random_system(10, 8, rng)
    proc = SsyProcess(sys_, rng.standard_normal(10), rng.standard_normal(8))
    proc.run(1)
    rel = verify_relations(sys_, proc)
    scale = sys_.A.frobenius_norm()
    assert rel["r_av"] <= 1e-13 * scale
    assert rel["r_atu"] <= 1e-13 * scale


def test_relations_without_reorth_reported_not_asserted():
    rng = np.random.default_rng(4)
    sys_ = random_system(40, 30, rng)
    proc = SsyProcess(sys_, rng.standard_normal(40), rng.standard_normal(30), reorth=False)
    proc.run(15)
    rel = verify_relations(sys_, proc)
    for value in rel.values():
        assert np.isfinite(value)


def test_projected_matrix_identity():
    # U' A V equals the tridiagonal coefficient matrix entrywise.
    rng = np.random.default_rng(8)
    sys_ = random_system(25, 18, rng, weighted=True)
    proc = SsyProcess(sys_, rng.standard_normal(25), rng.standard_normal(18), reorth=True)
    proc.run(12)
    j = proc.j
    t = proc.tridiag.t_matrix(j)
    projected = proc.U.view(j).T @ (sys_.A.to_scipy() @ proc.V.view(j))
    a_norm = np.linalg.norm(sys_.A.to_dense(), 2)
    assert np.max(np.abs(projected - t)) <= 1e-9 * a_norm


def test_coefficients_invariant_under_operator_representation():
    rng = np.random.default_rng(21)
    m, n = 16, 12
    a = rng.standard_normal((m, n))
    dm = rng.uniform(0.5, 3.0, m)
    dn = rng.uniform(0.5, 3.0, n)
    b = rng.standard_normal(m)
    c = rng.standard_normal(n)
    sys_diag = SqdSystem(DiagonalOperator(dm), DiagonalOperator(dn), SparseMatrix.from_dense(a))
    sys_chol = SqdSystem(
        CholeskyOperator(np.diag(dm)), CholeskyOperator(np.diag(dn)), SparseMatrix.from_dense(a)
    )
    p1 = SsyProcess(sys_diag, b, c, reorth=True).run(10)
    p2 = SsyProcess(sys_chol, b, c, reorth=True).run(10)
    for x1, x2 in zip(p1.tridiag.alphas, p2.tridiag.alphas):
        assert x1 == pytest.approx(x2, rel=1e-10, abs=1e-12)
    for x1, x2 in zip(p1.tridiag.betas, p2.tridiag.betas):
        assert x1 == pytest.approx(x2, rel=1e-10, abs=1e-12)


def test_breakdown_bounded_by_rank_structure():
    rng = np.random.default_rng(30)
    sys_ = random_system(30, 20, rng)
    proc = SsyProcess(sys_, rng.standard_normal(30), rng.standard_normal(20), reorth=True)
    steps = 0
    while not proc.breakdown and steps < 40:
        if not proc.step():
            break
        steps += 1
    assert proc.breakdown
    assert proc.j <= 21  # min(m, n) + 1


def test_window_mode_stores_two_columns():
    rng = np.random.default_rng(9)
    sys_ = random_system(40, 40, rng)
    proc = SsyProcess(
        sys_, rng.standard_normal(40), rng.standard_normal(40), keep_basis=False
    )
    proc.run(25)
    assert proc.U.stored_columns <= 2
    assert proc.V.stored_columns <= 2
    with pytest.raises(RuntimeError):
        proc.U.view()


def test_window_mode_rejects_reorth():
    sys_ = random_system(4, 4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        SsyProcess(sys_, np.ones(4), np.ones(4), reorth=True, keep_basis=False)
