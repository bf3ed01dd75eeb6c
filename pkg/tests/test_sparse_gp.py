import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import dense_gauss_logpdf, random_params
from sgpmic.errors import InputError
from sgpmic.kernels import KernelParams, KernelSpec, gram
from sgpmic.sparse_gp import (DtcFactor, build_dtc, expected_pointwise_loglik, posterior_qf,
                              weighted_log_marginal, weighted_log_marginal_grads)

RBF, LIN = KernelSpec.RBF, KernelSpec.LINEAR


def instance(rng, n=12, m=4, q=2, p=2, spec=RBF):
    params = random_params(rng)
    X = rng.normal(size=(n, q))
    Xu = rng.normal(size=(m, q))
    factor = build_dtc(spec, params, X, Xu)
    b = rng.uniform(0.2, 3.0, size=n)
    Y = rng.normal(size=(n, p))
    return factor, b, Y


def dense_cov(factor, b):
    return factor.nystrom() + np.diag(1.0 / b)


def test_factor_shapes(rng):
    factor, _, _ = instance(rng)
    assert factor.n == 12 and factor.n_inducing == 4
    assert np.allclose(factor.q_diag, np.diag(factor.nystrom()))


@pytest.mark.parametrize("spec", [RBF, LIN])
def test_log_marginal_dense_oracle(rng, spec):
    for _ in range(10):
        factor, b, Y = instance(rng, spec=spec)
        C = dense_cov(factor, b)
        assert weighted_log_marginal(factor, b, Y) == pytest.approx(
            dense_gauss_logpdf(Y, C), abs=1e-8)
        assert weighted_log_marginal(factor, b, Y[:, 0]) == pytest.approx(
            dense_gauss_logpdf(Y[:, 0], C), abs=1e-8)


def test_posterior_dense_oracle(rng):
    for _ in range(10):
        factor, b, Y = instance(rng)
        Q = factor.nystrom()
        C = dense_cov(factor, b)
        S_dense = Q - Q @ np.linalg.solve(C, Q)
        f_dense = Q @ np.linalg.solve(C, Y)
        post = posterior_qf(factor, b, Y)
        assert np.allclose(post.sigma_diag, np.diag(S_dense), atol=1e-8)
        assert np.allclose(post.f_mean, f_dense, atol=1e-8)
        V = factor.v
        assert np.allclose(V @ post.u_cov @ V.T, S_dense, atol=1e-8)


def test_posterior_matches_bayes_rule_in_whitened_coords(rng):
    factor, b, Y = instance(rng)
    V = factor.v
    prec = np.eye(V.shape[1]) + V.T @ (b[:, None] * V)
    post = posterior_qf(factor, b, Y)
    assert np.allclose(post.u_cov, np.linalg.inv(prec), atol=1e-10)
    assert np.allclose(post.u_mean, np.linalg.solve(prec, V.T @ (b[:, None] * Y)), atol=1e-10)


def test_nystrom_identity(rng):
    # theta_white = 0 up to underflow
    params = KernelParams(log_rbf=0.3, log_gamma=-0.2, log_bias=-2.0, log_white=-745.0)
    for _ in range(5):
        X = rng.normal(size=(10, 2))
        factor = build_dtc(RBF, params, X, X, jitter_base=1e-12)
        K = gram(RBF, params, X, X, same_set=False)
        assert np.max(np.abs(factor.nystrom() - K)) < 1e-6


def test_single_inducing_point(rng):
    factor, b, Y = instance(rng, m=1)
    assert weighted_log_marginal(factor, b, Y) == pytest.approx(
        dense_gauss_logpdf(Y, dense_cov(factor, b)), abs=1e-8)


def test_bad_weights(rng):
    factor, b, Y = instance(rng)
    with pytest.raises(InputError):
        weighted_log_marginal(factor, np.zeros_like(b), Y)
    with pytest.raises(InputError):
        weighted_log_marginal(factor, b[:-1], Y)
    with pytest.raises(InputError):
        weighted_log_marginal(factor, b, Y[:-1])


def test_from_matrices_shape_check():
    with pytest.raises(InputError):
        DtcFactor.from_matrices(np.ones((4, 2)), np.eye(3))


def _lml(kfu, kuu, b, Y, jb=1e-6):
    return weighted_log_marginal(DtcFactor.from_matrices(kfu, kuu, jb), b, Y)


def test_grads_fd(rng):
    params = random_params(rng)
    X = rng.normal(size=(9, 2))
    Xu = rng.normal(size=(3, 2))
    kfu = gram(RBF, params, X, Xu)
    kuu = gram(RBF, params, Xu, Xu, True)
    b = rng.uniform(0.5, 2.0, size=9)
    Y = rng.normal(size=(9, 2))
    jb = 1e-3  # large enough for the jitter-dependence term to matter
    g = weighted_log_marginal_grads(DtcFactor.from_matrices(kfu, kuu, jb), b, Y)
    assert g["value"] == pytest.approx(_lml(kfu, kuu, b, Y, jb), rel=1e-12)
    h = 1e-6
    for i in range(9):
        for j in range(3):
            P, M = kfu.copy(), kfu.copy()
            P[i, j] += h
            M[i, j] -= h
            fd = (_lml(P, kuu, b, Y, jb) - _lml(M, kuu, b, Y, jb)) / (2 * h)
            assert g["k_fu"][i, j] == pytest.approx(fd, rel=1e-5, abs=1e-7)
    for i in range(3):
        for j in range(3):
            P, M = kuu.copy(), kuu.copy()
            # symmetric perturbation; off-diagonals move two entries
            P[i, j] += h
            M[i, j] -= h
            if i != j:
                P[j, i] += h
                M[j, i] -= h
            fd = (_lml(kfu, P, b, Y, jb) - _lml(kfu, M, b, Y, jb)) / (2 * h)
            an = g["k_uu"][i, j] * (1 if i == j else 2)
            assert an == pytest.approx(fd, rel=1e-5, abs=1e-7)
    for i in range(9):
        P, M = b.copy(), b.copy()
        P[i] += h
        M[i] -= h
        fd = (_lml(kfu, kuu, P, Y, jb) - _lml(kfu, kuu, M, Y, jb)) / (2 * h)
        assert g["b"][i] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_expected_loglik_against_sampling(rng):
    factor, b, Y = instance(rng, n=5, m=3, p=1)
    post = posterior_qf(factor, b, Y)
    beta = 1.7
    got = expected_pointwise_loglik(post, Y, beta)[:, 0]
    # closed form of E[(y-f)^2] = (y - mean)^2 + var
    f = post.f_mean[:, 0]
    want = 0.5 * np.log(beta / (2 * np.pi)) - 0.5 * beta * ((Y[:, 0] - f) ** 2 + post.sigma_diag)
    assert np.allclose(got, want)
    V = factor.v
    w = rng.multivariate_normal(post.u_mean[:, 0], post.u_cov, size=200000)
    fs = w @ V.T
    mc = np.mean(0.5 * np.log(beta / (2 * np.pi)) - 0.5 * beta * (Y[:, 0] - fs) ** 2, axis=0)
    assert np.allclose(got, mc, atol=2e-2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 20), st.integers(1, 6))
def test_log_marginal_property(seed, n, m):
    rng = np.random.default_rng(seed)
    factor, b, Y = instance(rng, n=n, m=min(m, n), p=1)
    assert weighted_log_marginal(factor, b, Y) == pytest.approx(
        dense_gauss_logpdf(Y, dense_cov(factor, b)), abs=1e-7, rel=1e-9)
