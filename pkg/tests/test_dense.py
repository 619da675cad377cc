import numpy as np
import pytest

from sqdkrylov import SingularMatrixError, dense_solve, dense_svd


def test_svd_diagonal_sorted():
    result = dense_svd(np.diag([1.0, 5.0, 2.0]))
    assert np.array_equal(result.sigma, [5.0, 2.0, 1.0])


def test_svd_1x1_negative():
    result = dense_svd(np.array([[-3.0]]))
    assert result.sigma[0] == 3.0
    # Sign convention puts the positive sign on the right vector.
    assert result.V[0, 0] == 1.0
    assert result.U[0, 0] == -1.0


def test_svd_eigen_relation_oracle():
    rng = np.random.default_rng(11)
    t = rng.standard_normal((12, 12))
    result = dense_svd(t)
    lhs = t.T @ t @ result.V - result.V * result.sigma**2
    assert np.linalg.norm(lhs) <= 1e-10 * np.linalg.norm(t) ** 2


@pytest.mark.parametrize("seed", range(5))
def test_svd_invariants_random_sizes(seed):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        p = int(rng.integers(1, 31))
        t = rng.standard_normal((p, p)) * 10.0 ** rng.integers(-3, 4)
        result = dense_svd(t)
        eye = np.eye(p)
        assert np.max(np.abs(result.U.T @ result.U - eye)) <= 1e-12
        assert np.max(np.abs(result.V.T @ result.V - eye)) <= 1e-12
        err = np.linalg.norm(result.reconstruct() - t)
        assert err <= 1e-12 * max(np.linalg.norm(t), 1e-300)
        assert np.all(np.diff(result.sigma) <= 0)
        assert np.all(result.sigma >= 0)


def test_svd_matches_lapack_values():
    rng = np.random.default_rng(2)
    t = rng.standard_normal((17, 17))
    result = dense_svd(t)
    ref = np.linalg.svd(t, compute_uv=False)
    assert np.allclose(result.sigma, ref, rtol=1e-12, atol=1e-13)


def test_svd_sign_convention_deterministic():
    rng = np.random.default_rng(9)
    t = rng.standard_normal((8, 8))
    r1 = dense_svd(t)
    r2 = dense_svd(t.copy())
    assert np.array_equal(r1.U, r2.U)
    assert np.array_equal(r1.V, r2.V)
    for i in range(8):
        first_nonzero = r1.V[np.nonzero(r1.V[:, i])[0][0], i]
        assert first_nonzero > 0


def test_svd_rank_deficient():
    t = np.zeros((4, 4))
    t[0, 0] = 2.0
    result = dense_svd(t)
    assert result.sigma[0] == pytest.approx(2.0)
    assert np.all(result.sigma[1:] == 0.0)
    assert np.max(np.abs(result.U.T @ result.U - np.eye(4))) <= 1e-12


def test_svd_rejects_rectangular():
    with pytest.raises(ValueError):
        dense_svd(np.ones((2, 3)))


def test_solve_identity():
    assert np.array_equal(dense_solve(np.eye(2), np.array([1.0, 2.0])), [1.0, 2.0])


def test_solve_2x2_closed_form():
    k = np.array([[1.0, 3.0], [3.0, -1.0]])
    x = dense_solve(k, np.array([1.0, 1.0]))
    assert np.allclose(x, [0.4, 0.2], atol=1e-15)


def test_solve_random_sqd_residual():
    rng = np.random.default_rng(4)
    m, n = 12, 8
    a = rng.standard_normal((m, n))
    k = np.block([[np.eye(m), a], [a.T, -np.eye(n)]])
    f = rng.standard_normal(m + n)
    x = dense_solve(k, f)
    assert np.linalg.norm(k @ x - f) <= 1e-12 * np.linalg.norm(f)


def test_solve_singular_raises():
    with pytest.raises(SingularMatrixError):
        dense_solve(np.zeros((3, 3)), np.ones(3))
