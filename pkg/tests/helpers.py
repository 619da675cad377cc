"""Shared oracles and generators for the test suite.

Everything here is independent of the solver recurrences under test: dense
algebra goes through numpy/LAPACK, weighted decompositions through explicit
square roots.
"""

import numpy as np

from sqdkrylov import (
    CholeskyOperator,
    IdentityOperator,
    SparseMatrix,
    SqdSystem,
)


def random_spd(dim, rng, lo=0.5, hi=2.0):
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return (q * rng.uniform(lo, hi, dim)) @ q.T


def random_system(m, n, rng, weighted=False):
    a = rng.standard_normal((m, n))
    if weighted:
        m_op = CholeskyOperator(random_spd(m, rng))
        n_op = CholeskyOperator(random_spd(n, rng))
    else:
        m_op = IdentityOperator(m)
        n_op = IdentityOperator(n)
    return SqdSystem(M=m_op, N=n_op, A=SparseMatrix.from_dense(a))


def diag_system(values):
    values = np.asarray(values, dtype=float)
    n = values.size
    return SqdSystem(
        M=IdentityOperator(n),
        N=IdentityOperator(n),
        A=SparseMatrix.from_diagonal(values),
    )


def dense_m(sys_):
    return sys_.M.apply_block(np.eye(sys_.m))


def dense_n(sys_):
    return sys_.N.apply_block(np.eye(sys_.n))


def dense_k(sys_):
    a = sys_.A.to_dense()
    return np.block([[dense_m(sys_), a], [a.T, -dense_n(sys_)]])


def inv_sqrt(mat):
    w, q = np.linalg.eigh(mat)
    return (q / np.sqrt(w)) @ q.T


def dense_esvd(sys_):
    """Reference elliptic SVD through explicit operator square roots."""
    mi = inv_sqrt(dense_m(sys_))
    ni = inv_sqrt(dense_n(sys_))
    u, s, vt = np.linalg.svd(mi @ sys_.A.to_dense() @ ni)
    return mi @ u, s, ni @ vt.T


def build_s_matrix(alphas, betas, gammas):
    """Dense permuted projected matrix from coefficient sequences.

    ``alphas`` has length j; ``betas``/``gammas`` carry entries 2..j (the
    seeds are not part of the matrix).
    """
    j = len(alphas)
    s = np.zeros((2 * j, 2 * j))
    for i in range(j):
        s[2 * i, 2 * i] = 1.0
        s[2 * i + 1, 2 * i + 1] = -1.0
        s[2 * i, 2 * i + 1] = alphas[i]
        s[2 * i + 1, 2 * i] = alphas[i]
    for i in range(1, j):
        s[2 * i - 2, 2 * i + 1] = gammas[i - 1]
        s[2 * i + 1, 2 * i - 2] = gammas[i - 1]
        s[2 * i - 1, 2 * i] = betas[i - 1]
        s[2 * i, 2 * i - 1] = betas[i - 1]
    return s


def build_arrow_s_matrix(arrow):
    """Dense permuted projected matrix of an arrow-shaped head plus tail."""
    t = arrow.densify()
    p = t.shape[0]
    s = np.zeros((2 * p, 2 * p))
    for a in range(p):
        for b in range(p):
            s[2 * a, 2 * b] = 1.0 if a == b else 0.0
            s[2 * a + 1, 2 * b + 1] = -1.0 if a == b else 0.0
            s[2 * a, 2 * b + 1] = t[a, b]
            s[2 * a + 1, 2 * b] = t[b, a]
    return s


def interleave(u_block, v_block):
    """Columns (u_1, 0), (0, v_1), (u_2, 0), ... of the combined basis."""
    m, j = u_block.shape
    n = v_block.shape[0]
    w = np.zeros((m + n, 2 * j))
    for i in range(j):
        w[:m, 2 * i] = u_block[:, i]
        w[m:, 2 * i + 1] = v_block[:, i]
    return w


def galerkin_iterate(u_block, v_block, alphas, betas, gammas, beta1, gamma1):
    """Dense reference iterate: solve the projected system directly."""
    j = len(alphas)
    s = build_s_matrix(alphas, betas, gammas)
    rhs = np.zeros(2 * j)
    rhs[0] = beta1
    rhs[1] = gamma1
    z = np.linalg.solve(s, rhs)
    x = u_block[:, :j] @ z[0::2]
    y = v_block[:, :j] @ z[1::2]
    return x, y
