import numpy as np
import pytest

from sqdkrylov import (
    ArrowTriDiag,
    EsvdConfig,
    SsyProcess,
    check_convergence,
    gssy_dr,
    restart_fold,
    ritz_extract,
    triplet_residuals,
)
from sqdkrylov.esvd import DrProcess
from helpers import dense_esvd, dense_m, dense_n, diag_system, random_system


def test_arrow_densify_layout():
    arrow = ArrowTriDiag(
        k=2,
        head=np.array([5.0, 4.0]),
        coupling_row=np.array([0.1, 0.2]),
        coupling_col=np.array([0.3, 0.4]),
        tail_alphas=[3.0, 2.0],
        tail_betas=[0.5],
        tail_gammas=[0.6],
    )
    t = arrow.densify()
    expected = np.array(
        [
            [5.0, 0.0, 0.3, 0.0],
            [0.0, 4.0, 0.4, 0.0],
            [0.1, 0.2, 3.0, 0.6],
            [0.0, 0.0, 0.5, 2.0],
        ]
    )
    assert np.array_equal(t, expected)


def test_arrow_with_empty_head_is_tridiagonal():
    arrow = ArrowTriDiag(
        k=0,
        head=np.zeros(0),
        coupling_row=np.zeros(0),
        coupling_col=np.zeros(0),
        tail_alphas=[1.0, 2.0],
        tail_betas=[0.5],
        tail_gammas=[0.7],
    )
    assert np.array_equal(arrow.densify(), [[1.0, 0.7], [0.5, 2.0]])


def test_ritz_extract_exact_diagonal():
    sys_ = diag_system([5.0, 2.0, 1.0])
    start = np.ones(3)
    proc = SsyProcess(sys_, start, start.copy(), reorth=True)
    proc.run(3)  # exhausts the space, breakdown on the third step
    td = proc.tridiag
    uhat, vhat, sigma, u_k, v_k = ritz_extract(td.t_matrix(3), proc.U.view(3), proc.V.view(3), 2)
    assert np.allclose(sigma, [5.0, 2.0], atol=1e-10)
    res = triplet_residuals(uhat, vhat, td.betas[3], td.gammas[3])
    assert np.all(res <= 1e-12)


def test_triplet_residual_matches_explicit_raleigh_residual():
    rng = np.random.default_rng(12)
    sys_ = random_system(50, 40, rng, weighted=True)
    cfg = EsvdConfig(p=15, k=3, eps_svd=1e-30, maxcycle=1)
    result = gssy_dr(sys_, cfg, b=rng.standard_normal(50), c=rng.standard_normal(40))
    a = sys_.A.to_dense()
    m_dense = dense_m(sys_)
    n_dense = dense_n(sys_)
    m_inv = np.linalg.inv(m_dense)
    n_inv = np.linalg.inv(n_dense)
    for i in range(3):
        ru = a @ result.V[:, i] - result.sigma[i] * (m_dense @ result.U[:, i])
        rv = a.T @ result.U[:, i] - result.sigma[i] * (n_dense @ result.V[:, i])
        left = np.sqrt(ru @ m_inv @ ru)
        right = np.sqrt(rv @ n_inv @ rv)
        # The bound stores the max of the two sides.
        assert result.residuals[i] == pytest.approx(max(left, right), abs=1e-9)


def test_converged_sigma_match_dense_esvd():
    rng = np.random.default_rng(3)
    sys_ = random_system(100, 80, rng, weighted=True)
    cfg = EsvdConfig(p=20, k=5, eps_svd=1e-10, maxcycle=50)
    result = gssy_dr(sys_, cfg, b=rng.standard_normal(100), c=rng.standard_normal(80))
    assert result.status == "converged"
    _, sv, _ = dense_esvd(sys_)
    assert np.max(np.abs(result.sigma - sv[:5]) / sv[:5]) <= 1e-8
    mm = dense_m(sys_)
    nn = dense_n(sys_)
    assert np.max(np.abs(result.U.T @ mm @ result.U - np.eye(5))) <= 1e-9
    assert np.max(np.abs(result.V.T @ nn @ result.V - np.eye(5))) <= 1e-9


def test_check_convergence_counts():
    assert check_convergence(np.array([0.0, 0.0, 0.0]), 1e-12) == 3
    assert check_convergence(np.array([0.0, 1e-9, 0.0]), 0.0) == 2


def test_restart_fold_k0_reduces_to_plain_restart():
    u_next = np.array([1.0, 0.0])
    v_next = np.array([0.0, 1.0, 0.0])
    u_fold, v_fold, head = restart_fold(
        np.zeros((2, 4)),
        np.zeros((3, 4)),
        u_next,
        v_next,
        np.zeros((4, 0)),
        np.zeros((4, 0)),
        np.zeros(0),
        0.5,
        0.7,
    )
    assert u_fold.shape == (2, 1)
    assert np.array_equal(u_fold[:, 0], u_next)
    assert np.array_equal(v_fold[:, 0], v_next)
    assert head.k == 0
    assert head.coupling_row.size == 0


def test_fold_orthonormality_and_decomposition():
    rng = np.random.default_rng(10)
    sys_ = random_system(40, 30, rng, weighted=True)
    p, k = 12, 4
    proc = DrProcess(sys_, rng.standard_normal(40), rng.standard_normal(30), p)
    proc.start_cycle()
    proc.head_step()
    while proc.cols < p + 1:
        proc.tail_step()
    uhat, vhat, sigma, _, _, _ = proc.extract(k)
    head = proc.fold(uhat, vhat, sigma)

    mm = dense_m(sys_)
    nn = dense_n(sys_)
    u_fold = proc.U.view()
    v_fold = proc.V.view()
    assert np.max(np.abs(u_fold.T @ mm @ u_fold - np.eye(k + 1))) <= 1e-9
    assert np.max(np.abs(v_fold.T @ nn @ v_fold - np.eye(k + 1))) <= 1e-9

    # After continuing a full second cycle, the fundamental decomposition
    # holds with the arrow-shaped projected matrix.
    proc.start_cycle(head)
    proc.head_step()
    while proc.cols < p + 1:
        proc.tail_step()
    a = sys_.A.to_dense()
    u_p = proc.U.view(p)
    v_p = proc.V.view(p)
    t_dense = proc.arrow.densify()
    e_p = np.zeros(p)
    e_p[-1] = 1.0
    a_norm = np.linalg.norm(a, 2)
    lhs = a @ v_p
    rhs = mm @ u_p @ t_dense + proc.beta_next * np.outer(mm @ proc.U.column(p), e_p)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * a_norm
    lhs_t = a.T @ u_p
    rhs_t = nn @ v_p @ t_dense.T + proc.gamma_next * np.outer(nn @ proc.V.column(p), e_p)
    assert np.max(np.abs(lhs_t - rhs_t)) <= 1e-9 * a_norm
    assert np.max(np.abs(u_p.T @ a @ v_p - t_dense)) <= 1e-9 * a_norm


def test_fold_zero_coupling_decouples():
    # An exactly invariant pair gives zero couplings after the fold.
    sys_ = diag_system([7.0, 3.0, 1.0, 0.5])
    uhat = np.zeros((4, 1))
    uhat[0, 0] = 1.0
    u_fold, v_fold, head = restart_fold(
        np.eye(4),
        np.eye(4),
        np.eye(4)[:, 3],
        np.eye(4)[:, 3],
        uhat,
        uhat.copy(),
        np.array([7.0]),
        0.0,
        0.0,
    )
    assert np.array_equal(head.coupling_row, [0.0])
    assert np.array_equal(head.coupling_col, [0.0])


def test_residuals_nonincreasing_across_cycles():
    rng = np.random.default_rng(6)
    sys_ = random_system(60, 60, rng)
    cfg = EsvdConfig(p=14, k=4, eps_svd=1e-12, maxcycle=40)
    result = gssy_dr(sys_, cfg, b=rng.standard_normal(60), c=rng.standard_normal(60))
    history = result.residual_history
    assert len(history) >= 2
    for prev, cur in zip(history, history[1:]):
        assert np.all(cur <= prev * (1.0 + 1e-6) + 1e-15)


def test_config_validation():
    with pytest.raises(ValueError):
        EsvdConfig(p=5, k=5).validate(10, 10)
    with pytest.raises(ValueError):
        EsvdConfig(p=50, k=2).validate(10, 10)
    with pytest.raises(ValueError):
        EsvdConfig(p=5, k=2, selector="smallest").validate(10, 10)


def test_breakdown_returns_partial_result():
    sys_ = diag_system([5.0, 2.0, 1.0])
    cfg = EsvdConfig(p=3, k=2, eps_svd=1e-12, maxcycle=4)
    result = gssy_dr(sys_, cfg, b=np.ones(3), c=np.ones(3))
    # Space exhausted inside the first cycle: breakdown with exact triplets.
    assert result.status == "breakdown"
    assert np.allclose(result.sigma, [5.0, 2.0], atol=1e-10)
    assert np.all(result.residuals <= 1e-10)
