import numpy as np
import pytest
import scipy.sparse
from hypothesis import given, settings
from hypothesis import strategies as st

from sqdkrylov import (
    CholeskyOperator,
    DiagonalOperator,
    DimensionError,
    IdentityOperator,
    InnerCgOperator,
    NonSpdError,
    normalize,
    spd_norm,
    spd_operator_from_matrix,
)
from helpers import random_spd


def test_spd_norm_identity():
    assert spd_norm(IdentityOperator(2), np.array([3.0, 4.0])) == 5.0


def test_spd_norm_diagonal_closed_form():
    assert spd_norm(DiagonalOperator([4.0]), np.array([1.0])) == 2.0


def test_spd_norm_matches_dense_multiply():
    rng = np.random.default_rng(0)
    mat = random_spd(8, rng)
    op = CholeskyOperator(mat)
    for _ in range(10):
        v = rng.standard_normal(8)
        expected = np.sqrt(v @ mat @ v)
        assert spd_norm(op, v) == pytest.approx(expected, rel=1e-12)


def test_spd_norm_dimension_mismatch():
    with pytest.raises(DimensionError):
        spd_norm(IdentityOperator(3), np.ones(4))


def test_spd_norm_rejects_indefinite_quadratic_form():
    class Fake(IdentityOperator):
        def apply(self, v):
            return -v

    with pytest.raises(NonSpdError):
        spd_norm(Fake(2), np.ones(2))


def test_normalize_identity():
    beta, u = normalize(IdentityOperator(2), np.array([2.0, 0.0]))
    assert beta == 2.0
    assert np.array_equal(u, np.array([1.0, 0.0]))


def test_normalize_zero_vector_breaks_down():
    beta, u = normalize(IdentityOperator(3), np.zeros(3))
    assert beta == 0.0
    assert u is None


def test_normalize_diagonal_hand_value():
    beta, u = normalize(DiagonalOperator([4.0, 1.0]), np.array([2.0, 0.0]))
    assert beta == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(u, [0.5, 0.0])


@given(
    scale=st.floats(min_value=1e-6, max_value=1e6),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
@settings(max_examples=50, deadline=None)
def test_normalize_unit_weighted_norm(scale, seed):
    rng = np.random.default_rng(seed)
    mat = random_spd(6, rng)
    op = CholeskyOperator(mat)
    b = scale * rng.standard_normal(6)
    beta, u = normalize(op, b)
    if u is not None:
        assert spd_norm(op, u) == pytest.approx(1.0, abs=1e-12)


def test_diagonal_requires_positive_entries():
    with pytest.raises(NonSpdError):
        DiagonalOperator([1.0, 0.0])


def test_cholesky_rejects_indefinite():
    with pytest.raises(NonSpdError):
        CholeskyOperator(np.array([[1.0, 2.0], [2.0, 1.0]]))


@pytest.mark.parametrize("kind", ["identity", "diagonal", "cholesky", "inner-cg"])
def test_solve_apply_roundtrip(kind):
    rng = np.random.default_rng(42)
    dim = 12
    if kind == "identity":
        op, tol = IdentityOperator(dim), 1e-13
    elif kind == "diagonal":
        op, tol = DiagonalOperator(rng.uniform(0.5, 3.0, dim)), 1e-13
    elif kind == "cholesky":
        op, tol = CholeskyOperator(random_spd(dim, rng)), 1e-13
    else:
        mat = scipy.sparse.csr_matrix(random_spd(dim, rng))
        op, tol = InnerCgOperator(mat), 1e-10
    for _ in range(5):
        v = rng.standard_normal(dim)
        back = op.solve(op.apply(v))
        assert np.linalg.norm(back - v) <= tol * np.linalg.norm(v)


def test_operator_factory_picks_kind():
    rng = np.random.default_rng(1)
    dense = random_spd(5, rng)
    assert spd_operator_from_matrix(dense).kind == "dense-cholesky"
    sparse_big = scipy.sparse.identity(3000, format="csr")
    assert spd_operator_from_matrix(sparse_big).kind == "inner-cg"


def test_apply_block_matches_columnwise():
    rng = np.random.default_rng(3)
    op = CholeskyOperator(random_spd(7, rng))
    block = rng.standard_normal((7, 4))
    expected = np.column_stack([op.apply(block[:, i]) for i in range(4)])
    assert np.allclose(op.apply_block(block), expected, atol=1e-14)
