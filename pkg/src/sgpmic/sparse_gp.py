"""Low-rank (DTC) Gaussian algebra for one mixture component.

Under the deterministic training conditional the prior covariance of the
latent function values is the Nystrom operator ``Q = K_fu K_uu^-1 K_uf``.
Writing ``K_uu = L L^T`` and ``V = K_fu L^-T`` gives ``Q = V V^T`` with
``V`` of shape (N, N'), so every quantity below is computed through the
N' x N' matrix ``A = I + V^T B V`` and never through an N x N one.

Equivalently, ``f = V w`` with whitened inducing coordinates
``w ~ N(0, I_{N'})``; posteriors are stored in those coordinates too.
"""
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InputError, NumericalError
from .kernels import gram, jittered_cholesky

LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class DtcFactor:
    """Cached low-rank factorization of one component's prior.

    ``k_uu`` is the Gram matrix of the inducing inputs *before* jitter;
    ``jitter = jitter_scale * mean(diag k_uu)`` is what was added before
    factorizing into ``chol_uu``, and ``chol_uu_inv`` is its inverse.
    """

    chol_uu: np.ndarray
    k_fu: np.ndarray
    v: np.ndarray
    q_diag: np.ndarray
    k_uu: np.ndarray
    jitter: float
    jitter_scale: float
    chol_uu_inv: np.ndarray

    @property
    def n(self):
        return self.k_fu.shape[0]

    @property
    def n_inducing(self):
        return self.k_fu.shape[1]

    @classmethod
    def from_matrices(cls, k_fu, k_uu, jitter_base=1e-6):
        k_fu = np.asarray(k_fu, dtype=np.float64)
        k_uu = np.asarray(k_uu, dtype=np.float64)
        if k_fu.ndim != 2 or k_uu.shape != (k_fu.shape[1], k_fu.shape[1]):
            raise InputError("k_fu must be (N, N') and k_uu (N', N')")
        L, j, scale = jittered_cholesky(k_uu, jitter_base)
        # one explicit triangular inverse lets every later solve against L
        # run as a matrix product
        linv, info = linalg.lapack.dtrtri(L, lower=1)
        if info != 0:
            raise NumericalError("jittered inducing Cholesky factor is singular")
        v = k_fu @ linv.T
        return cls(L, k_fu, v, np.einsum("ij,ij->i", v, v), k_uu, j, scale, linv)

    def nystrom(self):
        """Dense ``Q = V V^T``; for tests and small problems only."""
        return self.v @ self.v.T


def build_dtc(spec, params, X, X_u, jitter_base=1e-6):
    """Factor the DTC prior of a component with inputs ``X`` and inducing
    inputs ``X_u``.  The white term enters ``K_uu`` only."""
    X = np.asarray(X, dtype=np.float64)
    X_u = np.asarray(X_u, dtype=np.float64)
    if X_u.ndim != 2 or X_u.shape[0] < 1:
        raise InputError("need at least one inducing point")
    k_uu = gram(spec, params, X_u, X_u, same_set=True)
    k_fu = gram(spec, params, X, X_u, same_set=False)
    return DtcFactor.from_matrices(k_fu, k_uu, jitter_base)


def _weights(b, n):
    b = np.asarray(b, dtype=np.float64).ravel()
    if b.shape != (n,):
        raise InputError(f"weight vector has length {b.size}, expected {n}")
    if not np.all(np.isfinite(b)) or np.any(b <= 0):
        raise InputError("weights b must be finite and strictly positive")
    return b


def _as_columns(y, n):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] != n:
        raise InputError(f"targets have {y.shape[0]} rows, expected {n}")
    return y


class _Woodbury:
    """Inner N' x N' system shared by the marginal, its gradients and q(f)."""

    def __init__(self, factor, b):
        self.factor = factor
        self.b = _weights(b, factor.n)
        V = factor.v
        A = V.T @ (self.b[:, None] * V)
        A[np.diag_indices_from(A)] += 1.0
        try:
            self.chol_a = linalg.cholesky(A, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise NumericalError("inner Woodbury system is singular") from exc

    def solve_a(self, rhs):
        return linalg.cho_solve((self.chol_a, True), rhs, check_finite=False)

    def inv_a(self):
        """A^-1 from its Cholesky factor."""
        inv, info = linalg.lapack.dpotri(self.chol_a, lower=1)
        if info != 0:
            raise NumericalError("inner Woodbury system is singular")
        # the upper triangle is zero (chol_a is stored lower with zeros above),
        # so adding the transpose and halving the diagonal is exact
        inv += inv.T
        inv[np.diag_indices_from(inv)] *= 0.5
        return inv

    def logdet_cov(self):
        """log det(Q + B^-1)."""
        return -np.sum(np.log(self.b)) + 2.0 * np.sum(np.log(np.diag(self.chol_a)))

    def cinv(self, M):
        """(Q + B^-1)^-1 M for an (N, k) matrix M."""
        V, b = self.factor.v, self.b
        BM = b[:, None] * M
        return BM - b[:, None] * (V @ self.solve_a(V.T @ BM))

    def z(self):
        """Z = V L_A^-T, so that V A^-1 V^T = Z Z^T."""
        return linalg.solve_triangular(
            self.chol_a, self.factor.v.T, lower=True, check_finite=False).T


def weighted_log_marginal(factor, b, y):
    """log N(y | 0, Q + B^-1) with ``B = diag(b)``.

    ``y`` may be a vector or an (N, P) matrix; for a matrix the column
    log-densities are summed.  Cost is O(N N'^2 + N N' P).
    """
    wb = _Woodbury(factor, b)
    Y = _as_columns(y, factor.n)
    n, p = Y.shape
    quad = np.sum(Y * wb.cinv(Y))
    return float(-0.5 * (n * p * LOG_2PI + p * wb.logdet_cov() + quad))


def weighted_log_marginal_grads(factor, b, y):
    """Gradients of :func:`weighted_log_marginal`.

    Returns a dict with

    ``k_fu``  (N, N') derivative with respect to the cross covariance,
    ``k_uu``  (N', N') derivative with respect to the un-jittered inducing
              Gram (symmetric; the jitter's dependence on ``mean(diag)`` is
              included),
    ``b``     (N,) derivative with respect to the weights,
    ``value`` the log-marginal itself.
    """
    wb = _Woodbury(factor, b)
    Y = _as_columns(y, factor.n)
    n, p = Y.shape
    b = wb.b
    V, L_inv = factor.v, factor.chol_uu_inv

    # everything in whitened coordinates: with C = V V^T + B^-1,
    # C^-1 V = B V A^-1 and V^T C^-1 V = I - A^-1
    a_inv = wb.inv_a()
    VA = V @ a_inv
    alpha = b[:, None] * (Y - VA @ (V.T @ (b[:, None] * Y)))
    value = -0.5 * (n * p * LOG_2PI + p * wb.logdet_cov() + np.sum(Y * alpha))

    # W = dG/dC = (alpha alpha^T - p C^-1) / 2, never formed
    s_ = V.T @ alpha
    two_wv = alpha @ s_.T
    two_wv -= p * (b[:, None] * VA)
    vwv = s_ @ s_.T
    vwv += p * a_inv
    vwv[np.diag_indices_from(vwv)] -= p
    vwv *= 0.5
    cinv_diag = b - b * b * np.einsum("ij,ij->i", VA, V)
    w_diag = 0.5 * (np.sum(alpha * alpha, axis=1) - p * cinv_diag)

    # K_fu K_uu^-1 = V L^-1, so dG/dK_fu = 2 W V L^-1 and
    # dG/dK_uu = -L^-T (V^T W V) L^-1
    g_kfu = two_wv @ L_inv
    g_kuu = L_inv.T @ (vwv @ L_inv)
    g_kuu *= -1.0
    g_kuu = 0.5 * (g_kuu + g_kuu.T)
    m = g_kuu.shape[0]
    g_kuu[np.diag_indices(m)] += np.trace(g_kuu) * factor.jitter_scale / m
    g_b = -w_diag / (b * b)
    return {"value": float(value), "k_fu": g_kfu, "k_uu": g_kuu, "b": g_b}


@dataclass
class ComponentPosterior:
    """Gaussian q(f) for one component, one column per output dimension.

    ``f_mean`` is (N, P) and ``sigma_diag`` (N,) is the diagonal of the
    covariance shared by all columns.  ``u_mean`` (N', P) and ``u_cov``
    (N', N') describe the same distribution in the whitened inducing
    coordinates ``f = V w``.
    """

    f_mean: np.ndarray
    sigma_diag: np.ndarray
    u_mean: np.ndarray
    u_cov: np.ndarray


def posterior_qf(factor, b, Y):
    """Optimal q(f) given weights ``b``.

    The covariance is ``Q - Q (Q + B^-1)^-1 Q = V A^-1 V^T``, defined even
    though ``Q`` has rank at most N'; only its diagonal is materialized.
    """
    wb = _Woodbury(factor, b)
    Y = _as_columns(Y, factor.n)
    V = factor.v
    u_mean = wb.solve_a(V.T @ (wb.b[:, None] * Y))
    Z = wb.z()
    linv = linalg.solve_triangular(wb.chol_a, np.eye(len(wb.chol_a)), lower=True,
                                   check_finite=False)
    u_cov = linv.T @ linv
    return ComponentPosterior(
        f_mean=V @ u_mean,
        sigma_diag=np.einsum("ij,ij->i", Z, Z),
        u_mean=u_mean,
        u_cov=u_cov,
    )


def expected_pointwise_loglik(post, Y, beta):
    """<log N(y_ni | f_ni, 1/beta)> under q(f), as an (N, P) matrix."""
    if not beta > 0:
        raise InputError("beta must be positive")
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    f_mean = np.asarray(post.f_mean, dtype=np.float64)
    if f_mean.ndim == 1:
        f_mean = f_mean[:, None]
    sigma = np.asarray(post.sigma_diag, dtype=np.float64)
    if Y.shape != f_mean.shape or sigma.shape != (Y.shape[0],):
        raise InputError("posterior and data shapes disagree")
    return 0.5 * np.log(beta / (2.0 * np.pi)) - 0.5 * beta * ((Y - f_mean) ** 2 + sigma[:, None])
