import numpy as np
import pytest

from sgpmic.errors import InputError, NonFiniteError
from sgpmic.scg import ScgConfig, StopReason, scg_minimize


def sphere(x):
    return float(x @ x)


def sphere_g(x):
    return 2 * x


def rosen(x):
    return float((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)


def rosen_g(x):
    return np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2),
                     200 * (x[1] - x[0] ** 2)])


def test_sphere():
    res = scg_minimize(sphere, sphere_g, np.array([3.0, 4.0]))
    assert np.linalg.norm(res.x_star) < 1e-8
    assert res.f_star == pytest.approx(sphere(res.x_star))


def test_rosenbrock():
    res = scg_minimize(rosen, rosen_g, np.array([-1.2, 1.0]), ScgConfig(max_iters=500))
    assert np.allclose(res.x_star, [1.0, 1.0], atol=1e-4)
    assert res.iterations_used <= 500


def test_spd_quadratic_against_solve():
    rng = np.random.default_rng(3)
    R = rng.normal(size=(10, 10))
    A = R @ R.T + 10 * np.eye(10)
    c = rng.normal(size=10)
    res = scg_minimize(lambda x: float(x @ A @ x - 2 * c @ x), lambda x: 2 * (A @ x - c),
                       np.zeros(10), ScgConfig(max_iters=100))
    assert np.linalg.norm(2 * (A @ res.x_star - c)) < 1e-6
    assert np.allclose(res.x_star, np.linalg.solve(A, c), atol=1e-6)


def test_trace_monotone_and_counts():
    res = scg_minimize(rosen, rosen_g, np.array([-1.2, 1.0]), ScgConfig(max_iters=60))
    tr = np.array(res.f_trace)
    assert np.all(np.diff(tr) <= 0)
    assert tr[0] == pytest.approx(rosen(np.array([-1.2, 1.0])))
    assert res.n_f_evals + res.n_g_evals <= 3 * res.iterations_used + 2


def test_scale_robustness():
    rng = np.random.default_rng(0)
    R = rng.normal(size=(5, 5))
    A = R @ R.T + np.eye(5)
    x0 = rng.normal(size=5)
    a = scg_minimize(lambda x: float(x @ A @ x), lambda x: 2 * A @ x, x0)
    b = scg_minimize(lambda x: 7.5 * float(x @ A @ x), lambda x: 15 * A @ x, x0)
    assert b.f_star == pytest.approx(7.5 * a.f_star, abs=1e-12)
    assert np.linalg.norm(a.x_star - b.x_star) < 1e-6


def test_never_worse_than_start():
    x0 = np.array([1.0, 1.0])
    res = scg_minimize(rosen, rosen_g, x0, ScgConfig(max_iters=5))
    assert res.f_star <= rosen(x0) + 1e-12
    assert res.converged_by in tuple(StopReason)


def test_deterministic():
    a = scg_minimize(rosen, rosen_g, np.array([-1.2, 1.0]), ScgConfig(max_iters=40))
    b = scg_minimize(rosen, rosen_g, np.array([-1.2, 1.0]), ScgConfig(max_iters=40))
    assert np.array_equal(a.x_star, b.x_star) and a.f_trace == b.f_trace


def test_max_iters_reason():
    res = scg_minimize(rosen, rosen_g, np.array([-1.2, 1.0]), ScgConfig(max_iters=3))
    assert res.converged_by == StopReason.MAX_ITERS
    assert res.iterations_used == 3


def test_nonfinite_trial_rejected():
    # a wall at x > 2: trial points beyond it return inf and are rejected
    def f(x):
        return np.inf if x[0] > 2 else float((x[0] - 1.9) ** 2)

    res = scg_minimize(f, lambda x: np.array([2 * (x[0] - 1.9)]), np.array([-50.0]))
    assert np.isfinite(res.f_star)
    assert res.x_star[0] <= 2


def test_nonfinite_start_or_gradient():
    with pytest.raises(NonFiniteError):
        scg_minimize(lambda x: np.nan, sphere_g, np.ones(2))
    with pytest.raises(NonFiniteError):
        scg_minimize(sphere, lambda x: np.full_like(x, np.nan), np.ones(2))

    # gradient breaks once the iterate gets close to the optimum
    def g(x):
        return np.full_like(x, np.nan) if np.linalg.norm(x) < 1.0 else 2 * x

    x0 = np.array([3.0, 4.0])
    with pytest.raises(NonFiniteError) as info:
        scg_minimize(sphere, g, x0)
    last = info.value.result
    assert last is not None
    assert np.all(np.isfinite(last.x_star)) and last.f_star <= sphere(x0)


def test_config_validation():
    with pytest.raises(InputError):
        ScgConfig(max_iters=0)
    with pytest.raises(InputError):
        ScgConfig(grad_tol=0)
