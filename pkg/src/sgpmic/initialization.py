"""Initialization: ISOMAP embedding, fuzzy c-means, PCA dimension choice and
inducing-point sampling."""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from .errors import InputError


def _matrix(Y, name="Y"):
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2:
        raise InputError(f"{name} must be a 2-D array")
    if not np.all(np.isfinite(Y)):
        raise InputError(f"{name} contains non-finite values")
    return Y


def _knn_graph(Y, k):
    """Symmetric k-nearest-neighbour graph with Euclidean edge weights."""
    n = Y.shape[0]
    k = min(k, n - 1)
    tree = cKDTree(Y)
    dist, idx = tree.query(Y, k=k + 1)
    rows = np.repeat(np.arange(n), k)
    cols = idx[:, 1:].ravel()
    vals = dist[:, 1:].ravel()
    W = np.zeros((n, n))
    W[rows, cols] = vals
    W = np.maximum(W, W.T)
    # coincident points get a tiny positive weight so the edge survives
    zero_edge = np.zeros((n, n), dtype=bool)
    zero_edge[rows, cols] = vals == 0
    zero_edge |= zero_edge.T
    W[zero_edge] = np.finfo(float).tiny
    return W


def _connect_components(W, Y):
    """Join every smaller component to the largest one through its closest
    inter-component pair of points."""
    n_comp, labels = connected_components(csr_matrix(W), directed=False)
    if n_comp == 1:
        return W
    sizes = np.bincount(labels)
    main = int(np.argmax(sizes))
    main_idx = np.flatnonzero(labels == main)
    main_tree = cKDTree(Y[main_idx])
    for c in range(n_comp):
        if c == main:
            continue
        members = np.flatnonzero(labels == c)
        dist, nearest = main_tree.query(Y[members], k=1)
        best = int(np.argmin(dist))
        i, j = members[best], main_idx[nearest[best]]
        w = max(dist[best], np.finfo(float).tiny)
        W[i, j] = W[j, i] = w
    return W


def geodesic_distances(Y, k_neighbors=10):
    """All-pairs shortest-path distances over the (repaired) k-NN graph."""
    Y = _matrix(Y)
    if k_neighbors < 1:
        raise InputError("k_neighbors must be >= 1")
    if Y.shape[0] == 1:
        return np.zeros((1, 1))
    W = _connect_components(_knn_graph(Y, k_neighbors), Y)
    return dijkstra(csr_matrix(W), directed=False)


def classical_mds(D, Q):
    """Top-``Q`` eigen-embedding of the double-centred squared distances."""
    n = D.shape[0]
    D2 = D ** 2
    row = D2.mean(axis=1)
    B = -0.5 * (D2 - row[:, None] - row[None, :] + D2.mean())
    evals, evecs = linalg.eigh(B)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    tol = 1e-10 * max(evals[0], 1.0)
    n_pos = int(np.sum(evals[:Q] > tol))
    X = np.zeros((n, Q))
    if n_pos < Q:
        warnings.warn(f"only {n_pos} positive eigenvalues; padding the embedding "
                      f"with {Q - n_pos} zero coordinates", RuntimeWarning, stacklevel=3)
    X[:, :n_pos] = evecs[:, :n_pos] * np.sqrt(evals[:n_pos])
    # deterministic orientation: largest-magnitude entry of each axis positive
    for q in range(n_pos):
        if X[np.argmax(np.abs(X[:, q])), q] < 0:
            X[:, q] = -X[:, q]
    return X


def isomap_embed(Y, k_neighbors=10, Q=2, seed=None):
    """ISOMAP: k-NN graph, Dijkstra geodesics, classical MDS.

    The result is deterministic; ``seed`` is accepted for interface
    symmetry with the other initializers and unused.
    """
    if Q < 1:
        raise InputError("Q must be >= 1")
    return classical_mds(geodesic_distances(Y, k_neighbors), Q)


@dataclass
class FcmResult:
    centers: np.ndarray
    memberships: np.ndarray
    objective_trace: list = field(default_factory=list)
    n_iter: int = 0


def _fcm_memberships(X, centers, fuzzifier):
    D2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    U = np.zeros_like(D2)
    hit = D2 == 0.0
    hit_rows = hit.any(axis=1)
    if np.any(~hit_rows):
        d = D2[~hit_rows]
        # u_ik = 1 / sum_j (d_ik / d_ij)^(1/(m-1)), in a scale-stable form
        p = -1.0 / (fuzzifier - 1.0)
        w = (d / d.min(axis=1, keepdims=True)) ** p
        U[~hit_rows] = w / w.sum(axis=1, keepdims=True)
    if np.any(hit_rows):
        h = hit[hit_rows].astype(float)
        U[hit_rows] = h / h.sum(axis=1, keepdims=True)
    return U, D2


def fcm_objective(X, centers, U, fuzzifier):
    D2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return float(np.sum(U ** fuzzifier * D2))


def fcm_cluster(X, M, fuzzifier=2.0, max_iters=300, tol=1e-6, seed=None, n_init=1):
    """Fuzzy c-means by alternating center and membership updates.

    Starts from random row-stochastic memberships drawn with ``seed``.
    Converges when no center moves by more than ``tol``.  With
    ``n_init > 1`` the algorithm is restarted that many times from
    independent draws and the run with the lowest final objective is kept.
    """
    X = _matrix(X, "X")
    n = X.shape[0]
    if not fuzzifier > 1:
        raise InputError("fuzzifier must be > 1")
    if not 1 <= M <= n:
        raise InputError("need 1 <= M <= N")
    if n_init < 1:
        raise InputError("n_init must be >= 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        res = _fcm_single(X, M, fuzzifier, max_iters, tol, rng)
        if best is None or res.objective_trace[-1] < best.objective_trace[-1]:
            best = res
    return best


def _fcm_single(X, M, fuzzifier, max_iters, tol, rng):
    n = X.shape[0]
    U = rng.random((n, M))
    U /= U.sum(axis=1, keepdims=True)
    centers = None
    trace = []
    it = 0
    for it in range(1, max_iters + 1):
        Um = U ** fuzzifier
        new_centers = (Um.T @ X) / Um.sum(axis=0)[:, None]
        trace.append(fcm_objective(X, new_centers, U, fuzzifier))
        U, _ = _fcm_memberships(X, new_centers, fuzzifier)
        trace.append(fcm_objective(X, new_centers, U, fuzzifier))
        moved = np.inf if centers is None else np.max(np.abs(new_centers - centers))
        centers = new_centers
        if moved < tol:
            break
    return FcmResult(centers, U, trace, it)


def pca_variance_dims(Y, pct):
    """Smallest number of principal components whose covariance eigenvalues
    retain at least ``pct`` percent of the total variance."""
    Y = _matrix(Y)
    if not 0 < pct <= 100:
        raise InputError("pct must lie in (0, 100]")
    if Y.shape[1] < 2:
        raise InputError("need at least two columns")
    C = np.cov(Y, rowvar=False)
    evals = np.clip(np.sort(linalg.eigvalsh(C))[::-1], 0.0, None)
    total = evals.sum()
    if not total > 0:
        raise InputError("data has zero total variance")
    cum = np.cumsum(evals) / total * 100.0
    return int(min(np.searchsorted(cum, pct - 1e-9) + 1, Y.shape[1]))


def select_inducing(X, n_prime, seed=None):
    """Uniform sample of ``n_prime`` distinct rows of ``X``."""
    X = _matrix(X, "X")
    if not 1 <= n_prime <= X.shape[0]:
        raise InputError(f"n_prime={n_prime} must lie in [1, N={X.shape[0]}]")
    rng = np.random.default_rng(seed)
    return X[rng.choice(X.shape[0], size=n_prime, replace=False)].copy()
