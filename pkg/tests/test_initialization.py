import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.distance import pdist

from sgpmic.errors import InputError
from sgpmic.initialization import (classical_mds, fcm_cluster, geodesic_distances,
                                   isomap_embed, pca_variance_dims, select_inducing)


def test_isomap_line():
    Y = np.column_stack([np.arange(10.0), np.zeros(10)])
    x = isomap_embed(Y, k_neighbors=2, Q=1)[:, 0]
    steps = np.diff(x)
    assert np.all(steps > 0) or np.all(steps < 0)
    assert np.allclose(np.abs(steps), 1.0, atol=1e-10)


def test_isomap_triangle():
    Y = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])
    X = isomap_embed(Y, k_neighbors=2, Q=2)
    assert np.allclose(sorted(pdist(X)), [3.0, 4.0, 5.0], atol=1e-8)


def test_isomap_quarter_circle_monotone():
    t = np.linspace(0, np.pi / 2, 30)
    Y = np.column_stack([np.cos(t), np.sin(t)])
    x = isomap_embed(Y, k_neighbors=2, Q=1)[:, 0]
    d = np.diff(x)
    assert np.all(d > 0) or np.all(d < 0)


def test_isomap_affine_subspace_distances():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(20, 2))
    basis = np.linalg.qr(rng.normal(size=(4, 2)))[0]
    Y = Z @ basis.T + 3.0
    X = isomap_embed(Y, k_neighbors=19, Q=2)
    assert np.allclose(pdist(X), pdist(Z), atol=1e-6)


def test_isomap_repairs_disconnected_graph():
    Y = np.vstack([np.column_stack([np.arange(5.0), np.zeros(5)]),
                   np.column_stack([np.arange(5.0) + 100, np.zeros(5)])])
    D = geodesic_distances(Y, k_neighbors=2)
    assert np.all(np.isfinite(D))
    assert D[0, 9] == pytest.approx(104.0)


def test_mds_pads_and_warns():
    D = np.abs(np.subtract.outer(np.arange(4.0), np.arange(4.0)))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        X = classical_mds(D, 3)
    assert any("padding" in str(x.message) for x in w)
    assert np.allclose(X[:, 1:], 0)


def test_isomap_bad_args():
    with pytest.raises(InputError):
        isomap_embed(np.zeros((4, 2)), k_neighbors=0)
    with pytest.raises(InputError):
        isomap_embed(np.zeros((4, 2)), Q=0)


def test_fcm_single_cluster_is_mean():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 2))
    res = fcm_cluster(X, 1, seed=0)
    assert np.allclose(res.centers[0], X.mean(0))


def test_fcm_two_blobs():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(25, 2))
    a = 0.1 * a / np.max(np.linalg.norm(a, axis=1))
    X = np.vstack([a + [5, 0], -a - [5, 0]])
    res = fcm_cluster(X, 2, fuzzifier=2.0, seed=3)
    c = res.centers[np.argsort(res.centers[:, 0])]
    assert np.allclose(c, [[-5, 0], [5, 0]], atol=0.2)
    # k-means oracle: the two halves are the two clusters
    assert set(res.memberships[:25].argmax(1)) != set(res.memberships[25:].argmax(1))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_fcm_invariants(seed, M):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(15, 2))
    res = fcm_cluster(X, M, seed=seed)
    assert np.all(np.abs(res.memberships.sum(1) - 1) <= 1e-12)
    tr = np.array(res.objective_trace)
    assert np.all(np.diff(tr) <= 1e-9 * max(1.0, tr[0]))


def test_fcm_point_on_center():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [4.0, 0.0]])
    res = fcm_cluster(X, 3, seed=0)
    assert np.all(np.isfinite(res.memberships))
    assert np.allclose(res.memberships.sum(1), 1)


def test_fcm_restarts_keep_best():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 2))
    best = fcm_cluster(X, 4, seed=5, n_init=6)
    rng5 = np.random.default_rng(5)
    singles = [fcm_cluster(X, 4, seed=rng5) for _ in range(6)]
    assert best.objective_trace[-1] == min(s.objective_trace[-1] for s in singles)


def test_fcm_errors():
    with pytest.raises(InputError):
        fcm_cluster(np.zeros((3, 2)), 4)
    with pytest.raises(InputError):
        fcm_cluster(np.zeros((3, 2)), 2, fuzzifier=1.0)


def test_pca_dims_identity_covariance():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(400, 4))
    # whiten exactly so every eigenvalue is equal
    Z -= Z.mean(0)
    Z = Z @ np.linalg.inv(np.linalg.cholesky(np.cov(Z, rowvar=False))).T
    assert pca_variance_dims(Z, 50) == 2
    assert pca_variance_dims(Z, 100) == 4


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(1, 100), st.floats(1, 100))
def test_pca_dims_monotone(seed, a, b):
    rng = np.random.default_rng(seed)
    Y = rng.normal(size=(30, 5)) * [5, 3, 2, 1, 0.5]
    lo, hi = sorted((a, b))
    assert pca_variance_dims(Y, lo) <= pca_variance_dims(Y, hi)


def test_pca_dims_errors():
    with pytest.raises(InputError):
        pca_variance_dims(np.ones((5, 3)), 95)
    with pytest.raises(InputError):
        pca_variance_dims(np.random.default_rng(0).normal(size=(5, 3)), 0)


def test_select_inducing():
    X = np.arange(20.0).reshape(10, 2)
    full = select_inducing(X, 10, seed=1)
    assert sorted(map(tuple, full)) == sorted(map(tuple, X))
    assert np.array_equal(select_inducing(X, 4, seed=3), select_inducing(X, 4, seed=3))
    one = select_inducing(X, 1, seed=0)
    assert one.shape == (1, 2) and any(np.array_equal(one[0], x) for x in X)
    with pytest.raises(InputError):
        select_inducing(X, 11)
