import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kcausal.errors import NotPositiveDefinite, NumericalBreakdown
from kcausal.kernel import gaussian_gram, gaussian_gram_column
from kcausal.numerics import (
    cholesky,
    incomplete_cholesky,
    partial_covariance,
    sym_generalized_eig,
)

from oracles import residualize


def test_cholesky_identity():
    assert np.allclose(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_hand_checked_2x2():
    s = np.array([[4.0, 2.0], [2.0, 5.0]])
    expected = np.array([[2.0, 0.0], [1.0, 2.0]])
    assert np.allclose(cholesky(s), expected)


def test_cholesky_reconstruction_8x8():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((8, 8))
    s = a.T @ a + np.eye(8)
    ell = cholesky(s)
    assert np.abs(ell @ ell.T - s).max() < 1e-10
    assert np.allclose(np.triu(ell, 1), 0.0)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=12), st.integers(min_value=0, max_value=10_000))
def test_cholesky_reconstructs_random_spd(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    s = a @ a.T + np.eye(n)
    ell = cholesky(s)
    assert np.abs(ell @ ell.T - s).max() < 1e-10 * np.abs(s).max()


def _column_oracle(k):
    return lambda j: k[:, j]


def test_icd_identity_full_rank():
    k = np.eye(3)
    low = incomplete_cholesky(_column_oracle(k), np.ones(3), 1e-6)
    assert low.rank == 3
    assert np.allclose(low.factor @ low.factor.T, k)
    assert low.residual_trace < 1e-6


def test_icd_rank_one_ones():
    k = np.ones((4, 4))
    low = incomplete_cholesky(_column_oracle(k), np.ones(4), 1e-6)
    assert low.rank == 1
    assert low.residual_trace < 1e-6
    assert np.allclose(low.factor @ low.factor.T, k)


def test_icd_gaussian_gram_residual_against_dense():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((200, 1))
    k = gaussian_gram(m, 1.0)
    low = incomplete_cholesky(
        lambda j: gaussian_gram_column(m, 1.0, j), np.ones(200), 1e-6
    )
    resid = np.trace(k - low.factor @ low.factor.T)
    assert resid < 1e-6
    assert abs(resid - low.residual_trace) < 1e-8
    assert low.rank < 200


def test_icd_residual_strictly_decreases():
    rng = np.random.default_rng(2)
    m = rng.standard_normal((120, 2))
    k = gaussian_gram(m, 1.0)
    low = incomplete_cholesky(_column_oracle(k), np.diag(k).copy(), 1e-8)
    norms = np.sum(low.factor**2, axis=0)
    assert np.all(norms > 0)
    residuals = np.trace(k) - np.cumsum(norms)
    assert np.all(np.diff(residuals) < 0)


def test_icd_invariant_under_sample_permutation():
    # distinct diagonal entries make the greedy pivot order unambiguous
    rng = np.random.default_rng(3)
    a = rng.standard_normal((60, 8))
    k = a @ a.T
    perm = rng.permutation(60)
    k2 = k[np.ix_(perm, perm)]
    low1 = incomplete_cholesky(_column_oracle(k), np.diag(k).copy(), 1e-7)
    low2 = incomplete_cholesky(_column_oracle(k2), np.diag(k2).copy(), 1e-7)
    assert abs(low1.residual_trace - low2.residual_trace) < 1e-12
    assert np.allclose(low2.factor, low1.factor[perm])


def test_icd_permuted_rbf_reconstructions_agree():
    # unit diagonals leave the first pivot tie-broken by index, so only the
    # reconstruction (not the factor itself) is permutation-invariant
    rng = np.random.default_rng(30)
    m = rng.standard_normal((80, 2))
    perm = rng.permutation(80)
    low1 = incomplete_cholesky(
        lambda j: gaussian_gram_column(m, 1.0, j), np.ones(80), 1e-7
    )
    m2 = m[perm]
    low2 = incomplete_cholesky(
        lambda j: gaussian_gram_column(m2, 1.0, j), np.ones(80), 1e-7
    )
    assert abs(low1.residual_trace - low2.residual_trace) < 1e-7
    k1 = low1.factor @ low1.factor.T
    k2 = low2.factor @ low2.factor.T
    assert np.abs(k2 - k1[np.ix_(perm, perm)]).max() < 1e-5


def test_icd_breakdown_on_indefinite():
    k = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NumericalBreakdown):
        incomplete_cholesky(_column_oracle(k), np.diag(k).copy(), 0.0)


def test_icd_max_rank_cap():
    k = np.eye(10)
    low = incomplete_cholesky(_column_oracle(k), np.ones(10), 0.0, max_rank=4)
    assert low.rank == 4
    assert abs(low.residual_trace - 6.0) < 1e-12


def test_gen_eig_identity():
    spec = sym_generalized_eig(np.eye(4), np.eye(4))
    assert np.allclose(spec.eigenvalues, 1.0)


def test_gen_eig_diagonal():
    spec = sym_generalized_eig(np.diag([2.0, 1.0]), np.eye(2))
    assert np.allclose(spec.eigenvalues, [2.0, 1.0])


def test_gen_eig_matches_brute_force():
    rng = np.random.default_rng(4)
    c = rng.standard_normal((6, 6))
    c = c + c.T
    a = rng.standard_normal((6, 6))
    d = a.T @ a + np.eye(6)
    spec = sym_generalized_eig(c, d)
    brute = np.sort(np.linalg.eigvals(np.linalg.solve(d, c)).real)[::-1]
    assert np.abs(spec.eigenvalues - brute).max() < 1e-9
    # residual of the pencil equation itself
    for i in range(6):
        v = spec.eigenvectors[:, i]
        assert np.abs(c @ v - spec.eigenvalues[i] * (d @ v)).max() < 1e-8


def test_gen_eig_congruence_invariance():
    rng = np.random.default_rng(5)
    c = rng.standard_normal((5, 5))
    c = c + c.T
    a = rng.standard_normal((5, 5))
    d = a.T @ a + np.eye(5)
    m = rng.standard_normal((5, 5)) + np.eye(5)
    s1 = sym_generalized_eig(c, d)
    s2 = sym_generalized_eig(m.T @ c @ m, m.T @ d @ m)
    assert np.abs(s1.eigenvalues - s2.eigenvalues).max() < 1e-9


def test_gen_eig_propagates_not_positive_definite():
    with pytest.raises(NotPositiveDefinite):
        sym_generalized_eig(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_partial_covariance_no_conditioning_influence():
    rng = np.random.default_rng(6)
    s_ab = rng.standard_normal((3, 3))
    s_zz = np.eye(2)
    out = partial_covariance(s_ab, np.zeros((3, 2)), s_zz, np.zeros((2, 3)))
    assert np.allclose(out, s_ab)


def test_partial_covariance_empty_z():
    s_ab = np.array([[2.0, 0.5], [0.5, 1.0]])
    out = partial_covariance(s_ab, np.zeros((2, 0)), np.zeros((0, 0)), np.zeros((0, 2)))
    assert np.allclose(out, s_ab)


def test_partial_covariance_perfect_explanation():
    rng = np.random.default_rng(7)
    z = rng.standard_normal((50, 3))
    s = z.T @ z / 50
    out = partial_covariance(s, s, s, s, ridge=0.0)
    assert np.abs(out).max() < 1e-10


def test_partial_covariance_matches_regression_residuals():
    rng = np.random.default_rng(8)
    n = 400
    z = rng.standard_normal((n, 3))
    a = z @ rng.standard_normal((3, 2)) + rng.standard_normal((n, 2))
    b = z @ rng.standard_normal((3, 4)) + rng.standard_normal((n, 4))
    s_ab = a.T @ b / n
    s_az = a.T @ z / n
    s_zz = z.T @ z / n
    s_zb = z.T @ b / n
    out = partial_covariance(s_ab, s_az, s_zz, s_zb)
    ra = residualize(a, z)
    rb = residualize(b, z)
    assert np.abs(out - ra.T @ rb / n).max() < 1e-8


def test_partial_covariance_schur_psd():
    rng = np.random.default_rng(9)
    for _ in range(10):
        a = rng.standard_normal((7, 7))
        joint = a @ a.T + 0.5 * np.eye(7)
        s_aa = joint[:4, :4]
        s_az = joint[:4, 4:]
        s_zz = joint[4:, 4:]
        out = partial_covariance(s_aa, s_az, s_zz, s_az.T)
        assert np.linalg.eigvalsh(out).min() > -1e-10
