"""Mixture of sparse GP-LVM components fitted by variational EM.

Each component ``m`` maps the shared latent points ``X`` to the data through
a DTC sparse GP with its own kernel; the latent points additionally follow a
diagonal Gaussian mixture with means ``means[m]`` and variances
``exp(log_cov_diag[m])``.  The E-step computes q(f) and q(S) in closed form;
the M-step maximizes the KL-corrected bound, in which q(f) is integrated out
analytically, over every free parameter with scaled conjugate gradients.
"""
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import InputError, NonFiniteError, NumericalError
from .initialization import fcm_cluster, isomap_embed, select_inducing
from .kernels import (KernelParams, KernelSpec, gram_with_cache, input_grad_contract,
                      param_grad_contract, param_names)
from .metrics import clustering_accuracy
from .scg import ScgConfig, scg_minimize
from .sparse_gp import (LOG_2PI, DtcFactor, expected_pointwise_loglik, posterior_qf,
                        weighted_log_marginal, weighted_log_marginal_grads)

EPS_R = 1e-8
JITTER_BASE = 1e-6
DEFAULT_INNER_ITERS = 20
DEFAULT_N_ITER = 100
FCM_RESTARTS = 10


@dataclass
class ModelState:
    X: np.ndarray
    X_u: np.ndarray
    kernels: list
    beta: float
    log_pi: np.ndarray
    means: np.ndarray
    log_cov_diag: np.ndarray
    spec: KernelSpec = KernelSpec.RBF

    def __post_init__(self):
        self.spec = KernelSpec.parse(self.spec)
        self.X = np.asarray(self.X, dtype=np.float64)
        self.X_u = np.asarray(self.X_u, dtype=np.float64)
        self.log_pi = np.asarray(self.log_pi, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.log_cov_diag = np.asarray(self.log_cov_diag, dtype=np.float64)
        self.kernels = list(self.kernels)
        M, Q = self.means.shape
        if self.X.ndim != 2 or self.X.shape[1] != Q or self.X_u.shape[1:] != (Q,):
            raise InputError("latent dimensions of X, X_u and means disagree")
        if self.log_pi.shape != (M,) or self.log_cov_diag.shape != (M, Q):
            raise InputError("mixture parameter shapes disagree")
        if len(self.kernels) != M:
            raise InputError("need one KernelParams per component")
        if not self.beta > 0 or not np.isfinite(self.beta):
            raise InputError("beta must be positive and finite")

    @property
    def n_components(self):
        return self.means.shape[0]

    @property
    def latent_dim(self):
        return self.X.shape[1]

    @property
    def n_inducing(self):
        return self.X_u.shape[0]

    @property
    def pi(self):
        return np.exp(self.log_pi - logsumexp(self.log_pi))

    @property
    def cov_diag(self):
        return np.exp(self.log_cov_diag)

    def copy(self):
        return replace(self, X=self.X.copy(), X_u=self.X_u.copy(), kernels=list(self.kernels),
                       log_pi=self.log_pi.copy(), means=self.means.copy(),
                       log_cov_diag=self.log_cov_diag.copy())

    # -- flat parameter vector used by the M-step --------------------------

    def blocks(self):
        """Ordered (name, size) pairs describing :meth:`pack`."""
        M, Q = self.means.shape
        n_k = len(param_names(self.spec))
        return [("X", self.X.size), ("X_u", self.X_u.size), ("kernel", M * n_k),
                ("log_beta", 1), ("log_pi", M), ("means", M * Q), ("log_cov_diag", M * Q)]

    def block_slices(self):
        out, start = {}, 0
        for name, size in self.blocks():
            out[name] = slice(start, start + size)
            start += size
        return out

    def pack(self):
        kern = np.concatenate([k.to_vector(self.spec) for k in self.kernels])
        return np.concatenate([self.X.ravel(), self.X_u.ravel(), kern, [np.log(self.beta)],
                               self.log_pi, self.means.ravel(), self.log_cov_diag.ravel()])

    def unpack(self, vec):
        """New state with parameters taken from ``vec`` (layout of :meth:`pack`)."""
        vec = np.asarray(vec, dtype=np.float64)
        sl = self.block_slices()
        n_k = len(param_names(self.spec))
        kern = vec[sl["kernel"]].reshape(self.n_components, n_k)
        with np.errstate(over="raise"):
            try:
                beta = float(np.exp(vec[sl["log_beta"]][0]))
            except FloatingPointError as exc:
                raise NumericalError("beta overflowed") from exc
        return ModelState(
            X=vec[sl["X"]].reshape(self.X.shape),
            X_u=vec[sl["X_u"]].reshape(self.X_u.shape),
            kernels=[k.with_vector(self.spec, row) for k, row in zip(self.kernels, kern)],
            beta=beta,
            log_pi=vec[sl["log_pi"]].copy(),
            means=vec[sl["means"]].reshape(self.means.shape),
            log_cov_diag=vec[sl["log_cov_diag"]].reshape(self.log_cov_diag.shape),
            spec=self.spec,
        )


def floor_responsibilities(r, eps=EPS_R):
    """Clamp entries to at least ``eps`` while keeping rows summing to one."""
    r = np.array(r, dtype=np.float64, copy=True)
    if r.shape[1] == 1:
        return np.ones_like(r)
    for _ in range(r.shape[1]):
        low = r < eps
        if not low.any():
            break
        r[low] = eps
        free = ~low
        budget = 1.0 - eps * low.sum(axis=1, keepdims=True)
        r = np.where(free, r * budget / np.sum(np.where(free, r, 0.0), axis=1, keepdims=True), r)
    return r


def latent_log_density(state):
    """(N, M) matrix of log N(x_n | mean_m, diag(cov_m))."""
    c = state.cov_diag
    diff = state.X[:, None, :] - state.means[None, :, :]
    return (-0.5 * state.latent_dim * LOG_2PI - 0.5 * np.sum(state.log_cov_diag, axis=1)[None, :]
            - 0.5 * np.sum(diff * diff / c[None, :, :], axis=2))


def _check_r(r, state):
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (state.X.shape[0], state.n_components):
        raise InputError(f"responsibilities must be {(state.X.shape[0], state.n_components)}")
    if np.any(r <= 0):
        raise InputError("responsibilities must be floored (strictly positive)")
    return r


def _check_y(Y, state):
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] != state.X.shape[0]:
        raise InputError("Y must be (N, P) with N matching the latent points")
    return Y


def component_factor(state, m, jitter_base=JITTER_BASE):
    params = state.kernels[m]
    k_uu, _ = gram_with_cache(state.spec, params, state.X_u, state.X_u, True)
    k_fu, _ = gram_with_cache(state.spec, params, state.X, state.X_u, False)
    return DtcFactor.from_matrices(k_fu, k_uu, jitter_base)


def estep_qf(state, r, Y, jitter_base=JITTER_BASE):
    """Exact q(f) of every component given responsibilities ``r``."""
    r = _check_r(r, state)
    Y = _check_y(Y, state)
    return [posterior_qf(component_factor(state, m, jitter_base), state.beta * r[:, m], Y)
            for m in range(state.n_components)]


def qs_log_weights(state, posteriors, Y):
    """Unnormalized log q(s_nm): log pi + latent log-density + expected fit."""
    Y = _check_y(Y, state)
    fit = np.column_stack([expected_pointwise_loglik(post, Y, state.beta).sum(axis=1)
                           for post in posteriors])
    return np.log(state.pi)[None, :] + latent_log_density(state) + fit


def estep_qs(state, posteriors, Y, eps=EPS_R):
    """Responsibilities from the current q(f), normalized per row and floored."""
    logp = qs_log_weights(state, posteriors, Y)
    norm = logsumexp(logp, axis=1, keepdims=True)
    bad = ~np.isfinite(norm.ravel())
    if bad.any():
        raise NumericalError(f"q(S) row {int(np.flatnonzero(bad)[0])} has no finite weight")
    return floor_responsibilities(np.exp(logp - norm), eps)


def assign_clusters(r):
    """Index of the largest responsibility per row (first index on ties)."""
    return np.argmax(np.asarray(r), axis=1)


def c_terms(state, r, P):
    """(N, M) matrix of the per-point, per-component bound constants."""
    r = _check_r(r, state)
    beta = state.beta
    return (r * latent_log_density(state) + r * np.log(state.pi)[None, :] - r * np.log(r)
            + 0.5 * P * ((r - 1.0) * np.log(beta / (2.0 * np.pi)) - np.log(r)))


@dataclass
class BoundReport:
    kl_corrected: float
    gaussian_term: float
    c_term: float
    standard: float = None
    per_iteration_trace: list = field(default_factory=list)
    mstep_traces: list = field(default_factory=list)
    estep_bounds: list = field(default_factory=list)


def kl_bound(state, r, Y, with_standard=False, jitter_base=JITTER_BASE):
    """KL-corrected bound: sum of weighted DTC log-marginals plus c-terms."""
    r = _check_r(r, state)
    Y = _check_y(Y, state)
    gauss = 0.0
    for m in range(state.n_components):
        gauss += weighted_log_marginal(component_factor(state, m, jitter_base),
                                       state.beta * r[:, m], Y)
    c = float(np.sum(c_terms(state, r, Y.shape[1])))
    report = BoundReport(kl_corrected=gauss + c, gaussian_term=gauss, c_term=c)
    if with_standard:
        report.standard = standard_bound(state, r, estep_qf(state, r, Y, jitter_base), Y,
                                         jitter_base)
    return report


def standard_bound_terms(state, r, posteriors, Y, jitter_base=JITTER_BASE):
    """The individual summands of the standard variational bound.

    The DTC prior and q(f) are both supported on the range of ``V``, so the
    prior cross-entropy and the entropy of q(f) are evaluated in the
    whitened inducing coordinates ``f = V w``, ``w ~ N(0, I)``; the change
    of variables contributes the same log-Jacobian to both and cancels.
    """
    r = _check_r(r, state)
    Y = _check_y(Y, state)
    P = Y.shape[1]
    beta = state.beta
    lik = prior = ent_f = 0.0
    for m, post in enumerate(posteriors):
        factor = component_factor(state, m, jitter_base)
        V = factor.v
        S = np.asarray(post.u_cov)
        mu = np.asarray(post.u_mean)
        f_mean = V @ mu
        sigma = np.einsum("ij,ij->i", V @ S, V)
        ell = 0.5 * np.log(beta / (2.0 * np.pi)) - 0.5 * beta * ((Y - f_mean) ** 2 + sigma[:, None])
        lik += float(np.sum(r[:, m:m + 1] * ell))
        k = S.shape[0]
        prior += -0.5 * (P * k * LOG_2PI + np.sum(mu * mu) + P * np.trace(S))
        sign, logdet = np.linalg.slogdet(S)
        if sign <= 0:
            raise NumericalError("q(f) covariance is not positive definite")
        ent_f += P * 0.5 * (k * (1.0 + LOG_2PI) + logdet)
    return {
        "likelihood": lik,
        "f_prior": prior,
        "latent_prior": float(np.sum(r * latent_log_density(state))),
        "mixing_prior": float(np.sum(r * np.log(state.pi)[None, :])),
        "entropy_s": float(-np.sum(r * np.log(r))),
        "entropy_f": ent_f,
    }


def standard_bound(state, r, posteriors, Y, jitter_base=JITTER_BASE):
    """Standard (uncollapsed) variational bound for explicit q(S), q(f)."""
    return float(sum(standard_bound_terms(state, r, posteriors, Y, jitter_base).values()))


def kl_bound_grads(state, r, Y, jitter_base=JITTER_BASE):
    """Value and analytic gradient of the KL-corrected bound.

    The gradient is with respect to ``state.pack()``; ``r`` is held fixed.
    """
    r = _check_r(r, state)
    Y = _check_y(Y, state)
    N, P = Y.shape
    M, Q = state.means.shape
    spec, beta = state.spec, state.beta
    X, Xu = state.X, state.X_u

    gX = np.zeros_like(X)
    gXu = np.zeros_like(Xu)
    g_kern = []
    g_logbeta = 0.0
    value = 0.0
    for m in range(M):
        params = state.kernels[m]
        k_uu, cache_uu = gram_with_cache(spec, params, Xu, Xu, True)
        k_fu, cache_fu = gram_with_cache(spec, params, X, Xu, False)
        factor = DtcFactor.from_matrices(k_fu, k_uu, jitter_base)
        b = beta * r[:, m]
        gr = weighted_log_marginal_grads(factor, b, Y)
        value += gr["value"]
        G_fu, G_uu = gr["k_fu"], gr["k_uu"]
        g_kern.append(param_grad_contract(spec, params, X, Xu, False, G_fu, cache_fu)
                      + param_grad_contract(spec, params, Xu, Xu, True, G_uu, cache_uu))
        ga, gb = input_grad_contract(spec, params, X, Xu, G_fu, cache_fu)
        gX += ga
        gXu += gb
        ga, gb = input_grad_contract(spec, params, Xu, Xu, G_uu, cache_uu)
        gXu += ga + gb
        g_logbeta += float(gr["b"] @ b)

    # c-terms
    logn = latent_log_density(state)
    pi = state.pi
    value += float(np.sum(r * logn + r * np.log(pi)[None, :] - r * np.log(r)
                          + 0.5 * P * ((r - 1.0) * np.log(beta / (2.0 * np.pi)) - np.log(r))))
    c = state.cov_diag
    diff = X[:, None, :] - state.means[None, :, :]
    scaled = diff / c[None, :, :]
    gX -= np.einsum("nm,nmq->nq", r, scaled)
    g_means = np.einsum("nm,nmq->mq", r, scaled)
    g_logcov = np.einsum("nm,nmq->mq", r, 0.5 * diff * scaled) - 0.5 * r.sum(axis=0)[:, None]
    g_logpi = r.sum(axis=0) - pi * r.sum()
    g_logbeta += 0.5 * P * float(np.sum(r - 1.0))

    grad = np.concatenate([gX.ravel(), gXu.ravel(), np.concatenate(g_kern), [g_logbeta],
                           g_logpi, g_means.ravel(), g_logcov.ravel()])
    return value, grad


# -- initialization and the EM driver --------------------------------------

def beta_from_variance(Y):
    """Noise precision (1 / (0.5 sqrt(mean column variance)))^2."""
    mean_var = float(np.mean(np.var(Y, axis=0, ddof=1)))
    if not mean_var > 0:
        raise InputError("data has zero variance in every column")
    return (1.0 / (0.5 * np.sqrt(mean_var))) ** 2


def _initialize(Y, M, Q, n_prime, seed, kernel, k_neighbors):
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 2:
        raise InputError("Y must be an (N, P) matrix with N >= 2")
    N, P = Y.shape
    if not 1 <= Q <= P:
        raise InputError(f"need 1 <= Q <= P (Q={Q}, P={P})")
    if not 1 <= n_prime <= N:
        raise InputError(f"need 1 <= N' <= N (N'={n_prime}, N={N})")
    if not 1 <= M <= N:
        raise InputError("need 1 <= M <= N")
    beta = beta_from_variance(Y)
    X = isomap_embed(Y, k_neighbors, Q)
    X = X - X.mean(axis=0)
    scale = np.sqrt(np.mean(np.var(X, axis=0)))
    if scale > 0:
        X = X / scale
    rng = np.random.default_rng(seed)
    X_u = select_inducing(X, n_prime, rng)
    fcm = fcm_cluster(X, M, seed=rng, n_init=FCM_RESTARTS)
    spec = KernelSpec.parse(kernel)
    kern = KernelParams(log_lin=0.0, log_rbf=0.0, log_gamma=0.0, log_bias=-2.0, log_white=-2.0)
    state = ModelState(X=X, X_u=X_u, kernels=[kern] * M, beta=beta,
                       log_pi=np.full(M, -np.log(M)), means=fcm.centers,
                       log_cov_diag=np.zeros((M, Q)), spec=spec)
    return state, fcm


def init_model(Y, M, Q, n_prime, seed=0, kernel=KernelSpec.RBF, k_neighbors=10):
    """Initial parameters: ISOMAP latent points (rescaled to unit average
    variance), inducing inputs sampled from them, FCM centres, uniform
    mixing weights, unit latent variances, and beta from the data variance."""
    return _initialize(Y, M, Q, n_prime, seed, kernel, k_neighbors)[0]


def standardize(Y):
    """Zero-mean, unit-variance columns (constant columns are only centred)."""
    Y = np.asarray(Y, dtype=np.float64)
    sd = Y.std(axis=0)
    sd[sd == 0] = 1.0
    return (Y - Y.mean(axis=0)) / sd


class FitResult(NamedTuple):
    state: ModelState
    responsibilities: np.ndarray
    report: BoundReport


class _Objective:
    """Negated KL bound and gradient over the packed parameters, caching the
    last evaluation so value/gradient calls at one point share work."""

    def __init__(self, template, r, Y, jitter_base):
        self.template, self.r, self.Y, self.jitter_base = template, r, Y, jitter_base
        self._x = None
        self._value = None
        self._grad = None

    def _eval(self, x, need_grad):
        if self._x is not None and np.array_equal(x, self._x) and (self._grad is not None
                                                                   or not need_grad):
            return
        state = self.template.unpack(x)
        if need_grad:
            v, g = kl_bound_grads(state, self.r, self.Y, self.jitter_base)
            self._grad = -g
        else:
            v = kl_bound(state, self.r, self.Y, jitter_base=self.jitter_base).kl_corrected
            self._grad = None
        self._x = np.array(x, copy=True)
        self._value = -v

    def value(self, x):
        # SCG asks for the gradient at every accepted trial point, and a
        # joint evaluation costs about twice a value alone, so compute both
        try:
            self._eval(x, True)
        except (NumericalError, InputError, FloatingPointError):
            return np.inf
        return self._value

    def grad(self, x):
        try:
            self._eval(x, True)
        except (NumericalError, InputError, FloatingPointError):
            return np.full_like(x, np.nan)
        return self._grad


def em_fit(Y, M, Q, n_prime, n_iter=DEFAULT_N_ITER, seed=0, kernel=KernelSpec.RBF,
           standardize_data=True, inner_iters=DEFAULT_INNER_ITERS, labels=None,
           k_neighbors=10, jitter_base=JITTER_BASE, callback=None):
    """Fit the mixture by alternating E-steps and SCG M-steps.

    Returns ``(state, responsibilities, report)``.  ``labels``, when given,
    are used only to record clustering accuracy in the iteration trace.
    """
    if n_iter < 1:
        raise InputError("n_iter must be >= 1")
    Y = np.asarray(Y, dtype=np.float64)
    if standardize_data:
        Y = standardize(Y)
    state, fcm = _initialize(Y, M, Q, n_prime, seed, kernel, k_neighbors)
    r = floor_responsibilities(fcm.memberships)
    cfg = ScgConfig(max_iters=inner_iters)
    report = BoundReport(kl_corrected=np.nan, gaussian_term=np.nan, c_term=np.nan)
    for it in range(1, n_iter + 1):
        try:
            posts = estep_qf(state, r, Y, jitter_base)
            r = estep_qs(state, posts, Y)
            obj = _Objective(state, r, Y, jitter_base)
            res = scg_minimize(obj.value, obj.grad, state.pack(), cfg)
        except NumericalError as exc:
            raise NonFiniteError(f"numerical failure at EM iteration {it}: {exc}",
                                 iteration=it) from exc
        if not np.isfinite(res.f_star):
            raise NonFiniteError(f"non-finite bound at EM iteration {it}", iteration=it)
        state = state.unpack(res.x_star)
        acc = None if labels is None else clustering_accuracy(labels, assign_clusters(r))
        report.estep_bounds.append(-res.f_trace[0])
        report.mstep_traces.append([-f for f in res.f_trace])
        report.per_iteration_trace.append((it, -res.f_star, acc))
        if callback is not None:
            callback(it, state, r)
    final = kl_bound(state, r, Y, jitter_base=jitter_base)
    report.kl_corrected = final.kl_corrected
    report.gaussian_term = final.gaussian_term
    report.c_term = final.c_term
    return FitResult(state, r, report)
