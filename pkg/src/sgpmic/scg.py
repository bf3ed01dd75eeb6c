"""Scaled conjugate gradients (Moller, 1993) for unconstrained minimization.

Each iteration estimates the curvature along the search direction from one
extra gradient evaluation, regularizes it with a trust parameter ``lambda``
and takes the resulting step only if the objective decreases; otherwise
``lambda`` is inflated and the step is retried.  Accepted iterates are
therefore monotonically non-increasing in ``f``.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InputError, NonFiniteError

LAMBDA_MIN = 1e-15
LAMBDA_MAX = 1e15
SIGMA0 = 1e-4


class StopReason(str, Enum):
    GRAD_TOL = "GradTol"
    STEP_TOL = "StepTol"
    MAX_ITERS = "MaxIters"


@dataclass(frozen=True)
class ScgConfig:
    max_iters: int = 100
    grad_tol: float = 1e-10
    step_tol: float = 1e-12
    initial_lambda: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InputError("max_iters must be >= 1")
        if not (self.grad_tol > 0 and self.step_tol > 0 and self.initial_lambda > 0):
            raise InputError("tolerances and initial_lambda must be positive")


@dataclass
class ScgResult:
    x_star: np.ndarray
    f_star: float
    iterations_used: int
    converged_by: StopReason
    f_trace: list = field(default_factory=list)
    n_f_evals: int = 0
    n_g_evals: int = 0


def scg_minimize(f, g, x0, cfg=None):
    """Minimize ``f`` starting from ``x0``.

    ``f_trace`` in the result holds the objective at the start and after
    every iteration (accepted or not), so it is non-increasing.
    """
    cfg = cfg or ScgConfig()
    x = np.array(x0, dtype=np.float64, copy=True)
    nparams = x.size
    counts = {"f": 0, "g": 0}

    def fval(z):
        counts["f"] += 1
        return float(f(z))

    def gval(z):
        counts["g"] += 1
        return np.asarray(g(z), dtype=np.float64)

    fold = fval(x)
    gradnew = gval(x)
    if not np.isfinite(fold) or not np.all(np.isfinite(gradnew)):
        raise NonFiniteError("objective or gradient non-finite at the start point")

    trace = [fold]

    def done(reason, it):
        return ScgResult(x, fold, it, reason, trace, counts["f"], counts["g"])

    if np.max(np.abs(gradnew), initial=0.0) < cfg.grad_tol:
        return done(StopReason.GRAD_TOL, 0)

    lam = cfg.initial_lambda
    d = -gradnew
    success = True
    nsuccess = 0
    mu = kappa = theta = 0.0
    for it in range(1, cfg.max_iters + 1):
        if success:
            mu = float(d @ gradnew)
            if mu >= 0:
                d = -gradnew
                mu = float(d @ gradnew)
            kappa = float(d @ d)
            if kappa == 0.0:
                return done(StopReason.GRAD_TOL, it - 1)
            sigma = SIGMA0 / np.sqrt(kappa)
            gplus = gval(x + sigma * d)
            if not np.all(np.isfinite(gplus)):
                raise NonFiniteError("gradient non-finite near the current iterate",
                                     result=done(StopReason.MAX_ITERS, it - 1))
            theta = float(d @ (gplus - gradnew)) / sigma

        delta = theta + lam * kappa
        if delta <= 0:
            delta = lam * kappa
            lam = lam - theta / kappa
        alpha = -mu / delta
        step = alpha * d
        xnew = x + step
        try:
            fnew = fval(xnew)
        except ArithmeticError:
            fnew = np.inf
        if np.isfinite(fnew) and fnew <= fold and alpha * mu != 0.0:
            comparison = 2.0 * (fnew - fold) / (alpha * mu)
        else:
            comparison = -1.0

        if comparison >= 0:
            success = True
            nsuccess += 1
            x = xnew
            fprev, fold = fold, fnew
            gradold = gradnew
            gradnew = gval(x)
            if not np.all(np.isfinite(gradnew)):
                raise NonFiniteError("gradient non-finite at an accepted iterate",
                                     result=ScgResult(x - step, fprev, it, StopReason.MAX_ITERS,
                                                      trace, counts["f"], counts["g"]))
            trace.append(fold)
            if np.max(np.abs(gradnew)) < cfg.grad_tol:
                return done(StopReason.GRAD_TOL, it)
            if np.max(np.abs(step)) < cfg.step_tol:
                return done(StopReason.STEP_TOL, it)
        else:
            success = False
            trace.append(fold)

        if comparison < 0.25:
            lam = min(4.0 * lam, LAMBDA_MAX)
        elif comparison > 0.75:
            lam = max(0.5 * lam, LAMBDA_MIN)

        if nsuccess == nparams:
            d = -gradnew
            nsuccess = 0
        elif success:
            gamma = float((gradold - gradnew) @ gradnew) / mu
            d = gamma * d - gradnew

    return done(StopReason.MAX_ITERS, cfg.max_iters)
