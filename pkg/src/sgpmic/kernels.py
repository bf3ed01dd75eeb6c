"""Covariance functions, Gram matrices and their analytic derivatives.

Two families are supported, each with bias and white-noise terms::

    linear: k(z, z') = t_lin * z.z' + t_bias + [same index] * t_white
    rbf:    k(z, z') = t_rbf * exp(-gamma/2 * |z - z'|^2) + t_bias
                       + [same index] * t_white

All hyperparameters are stored as logarithms so that any real vector is a
valid parameter setting; derivatives are taken with respect to the logs.
The white term only ever touches the diagonal of a same-set Gram matrix.
"""
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy import linalg

from ._backend import impl as _impl
from .errors import InputError, SingularKernelError


class KernelSpec(str, Enum):
    LINEAR = "linear"
    RBF = "rbf"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown kernel family {value!r}") from None


_PARAM_NAMES = {
    KernelSpec.LINEAR: ("log_lin", "log_bias", "log_white"),
    KernelSpec.RBF: ("log_rbf", "log_gamma", "log_bias", "log_white"),
}

ALL_PARAM_NAMES = ("log_lin", "log_rbf", "log_gamma", "log_bias", "log_white")
_LOG_MAX = float(np.log(np.finfo(np.float64).max))


def param_names(spec):
    """Names of the log-parameters that are active for ``spec``, in order."""
    return _PARAM_NAMES[KernelSpec.parse(spec)]


@dataclass(frozen=True)
class KernelParams:
    """Log-domain kernel hyperparameters.

    Parameters irrelevant to a family (``log_lin`` for RBF, ``log_rbf`` and
    ``log_gamma`` for linear) are carried but ignored.
    """

    log_lin: float = 0.0
    log_rbf: float = 0.0
    log_gamma: float = 0.0
    log_bias: float = -2.0
    log_white: float = -2.0

    def __post_init__(self):
        for name in ALL_PARAM_NAMES:
            value = getattr(self, name)
            if not np.isfinite(value) or value > _LOG_MAX:
                raise InputError(f"kernel parameter {name}={value} is not finite")

    @property
    def lin(self):
        return float(np.exp(self.log_lin))

    @property
    def rbf(self):
        return float(np.exp(self.log_rbf))

    @property
    def gamma(self):
        return float(np.exp(self.log_gamma))

    @property
    def bias(self):
        return float(np.exp(self.log_bias))

    @property
    def white(self):
        return float(np.exp(self.log_white))

    def to_vector(self, spec):
        return np.array([getattr(self, n) for n in param_names(spec)])

    def with_vector(self, spec, vec):
        return replace(self, **{n: float(v) for n, v in zip(param_names(spec), vec)})

    def as_array(self):
        """All five log-parameters, in ``ALL_PARAM_NAMES`` order."""
        return np.array([getattr(self, n) for n in ALL_PARAM_NAMES])

    @classmethod
    def from_array(cls, arr):
        return cls(**{n: float(v) for n, v in zip(ALL_PARAM_NAMES, arr)})


def _points(A, name="points"):
    A = np.ascontiguousarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[1] < 1:
        raise InputError(f"{name} must be an (n, Q) array with Q >= 1")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} contains non-finite values")
    return A


def _check_pair(A, B, same_set):
    A = _points(A, "A")
    B = A if B is None else _points(B, "B")
    if A.shape[1] != B.shape[1]:
        raise InputError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if same_set and (A.shape != B.shape or not np.array_equal(A, B)):
        raise InputError("same_set=True requires identical point sets")
    return A, B


def kernel_eval(spec, params, z, z_prime, same_index):
    """Evaluate a single covariance entry k(z, z')."""
    z = np.asarray(z, dtype=np.float64).ravel()
    zp = np.asarray(z_prime, dtype=np.float64).ravel()
    if z.shape != zp.shape or z.size < 1:
        raise InputError("z and z_prime must have equal dimension >= 1")
    if not (np.all(np.isfinite(z)) and np.all(np.isfinite(zp))):
        raise InputError("non-finite kernel input")
    spec = KernelSpec.parse(spec)
    if spec is KernelSpec.LINEAR:
        value = params.lin * float(z @ zp)
    else:
        d2 = float(np.sum((z - zp) ** 2))
        value = params.rbf * np.exp(-0.5 * params.gamma * d2)
    value += params.bias
    if same_index:
        value += params.white
    return float(value)


def gram(spec, params, A, B=None, same_set=False):
    """Gram matrix with entry (i, j) = k(A_i, B_j).

    ``same_set=True`` (which requires ``B`` to equal ``A``) adds the white
    term on the diagonal.
    """
    return gram_with_cache(spec, params, A, B, same_set)[0]


def kernel_grad_params(spec, params, A, B=None, same_set=False):
    """dK/d(log theta) for every active parameter, as a dict of matrices."""
    spec = KernelSpec.parse(spec)
    A, B = _check_pair(A, B, same_set)
    n, m = A.shape[0], B.shape[0]
    out = {}
    if spec is KernelSpec.LINEAR:
        out["log_lin"] = params.lin * (A @ B.T)
    else:
        E, D2 = _impl.rbf_parts(A, B, params.gamma)
        out["log_rbf"] = params.rbf * E
        out["log_gamma"] = params.rbf * E * (-0.5 * params.gamma * D2)
    out["log_bias"] = np.full((n, m), params.bias)
    white = np.zeros((n, m))
    if same_set:
        white[np.diag_indices(n)] = params.white
    out["log_white"] = white
    return out


def param_grad_contract(spec, params, A, B, same_set, G, cache=None):
    """Return sum_ij G_ij dK_ij/d(log theta) for each active parameter.

    Vector ordered as :func:`param_names`.  ``cache`` is the second value
    returned by :func:`gram_with_cache` for the same inputs.
    """
    spec = KernelSpec.parse(spec)
    if cache is None:
        _, cache = gram_with_cache(spec, params, A, B, same_set)
    out = []
    if spec is KernelSpec.LINEAR:
        out.append(params.lin * np.sum(G * cache))
    else:
        E, D2 = cache
        GE = G * E
        out.append(params.rbf * np.sum(GE))
        out.append(params.rbf * -0.5 * params.gamma * np.sum(GE * D2))
    out.append(params.bias * np.sum(G))
    out.append(params.white * np.trace(G) if same_set else 0.0)
    return np.array(out)


def gram_with_cache(spec, params, A, B=None, same_set=False):
    """Like :func:`gram` but also return the intermediate reused by the
    gradient contractions: ``A B^T`` (linear) or ``(E, D2)`` (RBF)."""
    spec = KernelSpec.parse(spec)
    A, B = _check_pair(A, B, same_set)
    if spec is KernelSpec.LINEAR:
        cache = A @ B.T
        K = params.lin * cache
    else:
        cache = _impl.rbf_parts(A, B, params.gamma)
        K = params.rbf * cache[0]
    K = K + params.bias
    if same_set:
        K[np.diag_indices_from(K)] += params.white
        K = 0.5 * (K + K.T)
    return K, cache


def kernel_grad_inputs(spec, params, A, B=None, same_set=False):
    """Input derivatives of the Gram matrix.

    Returns ``(dA, dB)``, each of shape (n, n', Q), with
    ``dA[i, j, q] = dK_ij / dA_iq`` and ``dB[i, j, q] = dK_ij / dB_jq``.
    For a same-set Gram the total derivative with respect to point ``p`` is
    the sum of both contributions.
    """
    spec = KernelSpec.parse(spec)
    A, B = _check_pair(A, B, same_set)
    if spec is KernelSpec.LINEAR:
        dA = params.lin * np.broadcast_to(B[None, :, :], (A.shape[0],) + B.shape)
        dB = params.lin * np.broadcast_to(A[:, None, :], (A.shape[0], B.shape[0], A.shape[1]))
        return np.array(dA), np.array(dB)
    E, _ = _impl.rbf_parts(A, B, params.gamma)
    diff = A[:, None, :] - B[None, :, :]
    dA = params.rbf * E[:, :, None] * (-params.gamma) * diff
    return dA, -dA


def input_grad_contract(spec, params, A, B, G, cache=None):
    """Contract input derivatives with a weight matrix ``G`` (n x n').

    Returns ``(gA, gB)`` with ``gA[i, q] = sum_j G_ij dK_ij/dA_iq`` and
    ``gB[j, q] = sum_i G_ij dK_ij/dB_jq``.  The white term has no input
    dependence, so the same routine serves same-set and cross Grams.
    """
    spec = KernelSpec.parse(spec)
    A, B = _check_pair(A, B, False)
    G = np.ascontiguousarray(G, dtype=np.float64)
    if spec is KernelSpec.LINEAR:
        return params.lin * (G @ B), params.lin * (G.T @ A)
    E = cache[0] if cache is not None else _impl.rbf_parts(A, B, params.gamma)[0]
    return _impl.rbf_input_grad(A, B, G, params.gamma, np.ascontiguousarray(E), params.rbf)


MAX_DOUBLINGS = 10


def jittered_cholesky(K, base):
    """Cholesky of ``K + j I`` under the escalating jitter policy.

    ``j`` starts at ``base * mean(diag K)`` and doubles on failure, at most
    ``MAX_DOUBLINGS`` times.  Returns ``(L, j, scale)`` where
    ``j = scale * mean(diag K)``.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InputError("jitter requires a square same-set Gram matrix")
    if not np.all(np.isfinite(K)):
        raise SingularKernelError("Gram matrix contains non-finite entries")
    mean_diag = float(np.mean(np.diag(K)))
    scale = float(base)
    eye = np.eye(K.shape[0])
    for _ in range(MAX_DOUBLINGS + 1):
        j = scale * mean_diag
        try:
            L = linalg.cholesky(K + j * eye, lower=True, check_finite=False)
        except linalg.LinAlgError:
            scale *= 2.0
            continue
        if np.all(np.diag(L) > 0):
            return L, j, scale
        scale *= 2.0
    raise SingularKernelError(
        f"Cholesky failed after {MAX_DOUBLINGS} jitter doublings (n={K.shape[0]})")


def add_jitter(K, base=1e-6):
    """Return ``K + j I`` with the smallest jitter of the doubling schedule
    for which the Cholesky factorization succeeds."""
    _, j, _ = jittered_cholesky(K, base)
    return np.asarray(K, dtype=np.float64) + j * np.eye(len(K))
