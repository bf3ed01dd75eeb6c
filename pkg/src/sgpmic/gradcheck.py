"""Finite-difference verification of the bound gradient, block by block."""
from dataclasses import dataclass

import numpy as np

from .kernels import KernelParams, KernelSpec
from .mixture import ModelState, floor_responsibilities, kl_bound, kl_bound_grads

TOLERANCE = 1e-4
ABS_FLOOR = 1e-8


@dataclass
class GradcheckReport:
    block_errors: dict
    analytic: np.ndarray
    numeric: np.ndarray

    @property
    def worst_block(self):
        return max(self.block_errors, key=self.block_errors.get)

    @property
    def max_error(self):
        return max(self.block_errors.values())

    def passed(self, tol=TOLERANCE):
        return self.max_error < tol


def random_instance(N=15, n_prime=4, M=2, Q=2, P=3, seed=0, kernel=KernelSpec.RBF):
    """A random model state, responsibilities and data of the given sizes."""
    rng = np.random.default_rng(seed)
    Y = rng.normal(size=(N, P))
    kernels = [KernelParams(*rng.uniform(-0.5, 0.5, 3), *rng.uniform(-2.5, -1.5, 2))
               for _ in range(M)]
    state = ModelState(X=rng.normal(size=(N, Q)), X_u=rng.normal(size=(n_prime, Q)),
                       kernels=kernels, beta=float(rng.uniform(0.5, 3.0)),
                       log_pi=rng.normal(scale=0.3, size=M), means=rng.normal(size=(M, Q)),
                       log_cov_diag=rng.normal(scale=0.3, size=(M, Q)), spec=kernel)
    r = floor_responsibilities(rng.dirichlet(np.ones(M), size=N))
    return state, r, Y


def numeric_gradient(state, r, Y, rel_step=1e-4):
    """Fourth-order central differences of the KL-corrected bound."""
    x0 = state.pack()
    out = np.empty_like(x0)

    def f(x):
        return kl_bound(state.unpack(x), r, Y).kl_corrected

    for i in range(x0.size):
        h = rel_step * max(1.0, abs(x0[i]))
        e = np.zeros_like(x0)
        e[i] = h
        out[i] = (-f(x0 + 2 * e) + 8 * f(x0 + e) - 8 * f(x0 - e) + f(x0 - 2 * e)) / (12 * h)
    return out


def relative_errors(a, b, abs_floor=ABS_FLOOR):
    """Per-coordinate |a-b| / max(|a|, |b|); coordinates where both are
    below ``abs_floor`` are compared absolutely."""
    diff = np.abs(a - b)
    scale = np.maximum(np.abs(a), np.abs(b))
    return np.where(scale < abs_floor, diff, diff / np.where(scale < abs_floor, 1.0, scale))


def gradcheck(state, r, Y, corrupt=False):
    """Compare analytic and numeric gradients; ``corrupt`` perturbs the
    analytic gradient as a negative control."""
    _, g = kl_bound_grads(state, r, Y)
    if corrupt:
        g = g.copy()
        g[state.block_slices()["X_u"]] *= 1.01
    fd = numeric_gradient(state, r, Y)
    err = relative_errors(g, fd)
    blocks = {name: float(err[sl].max()) if err[sl].size else 0.0
              for name, sl in state.block_slices().items()}
    return GradcheckReport(blocks, g, fd)
