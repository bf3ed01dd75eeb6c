"""Clustering accuracy (majority-label map) and NMI, both on a 0-100 scale."""
import math

import numpy as np

from .errors import InputError


def _pair(truth, clusters):
    truth = np.asarray(truth).ravel()
    clusters = np.asarray(clusters).ravel()
    if truth.shape != clusters.shape or truth.size == 0:
        raise InputError("truth and clusters must be non-empty and equally long")
    return truth, clusters


def contingency(truth, clusters):
    """Count table ``T[a, c]`` plus the sorted label and cluster values."""
    truth, clusters = _pair(truth, clusters)
    labels, ti = np.unique(truth, return_inverse=True)
    cl, ci = np.unique(clusters, return_inverse=True)
    T = np.zeros((labels.size, cl.size), dtype=np.int64)
    np.add.at(T, (ti, ci), 1)
    return T, labels, cl


def clustering_accuracy(truth, clusters):
    """Percentage of points whose cluster's majority label equals their own.

    Majority ties go to the smallest label value.
    """
    T, _, _ = contingency(truth, clusters)
    # argmax returns the first maximum, and labels are sorted ascending
    hits = T[np.argmax(T, axis=0), np.arange(T.shape[1])].sum()
    return 100.0 * hits / T.sum()


def _entropy(p):
    p = p[p > 0]
    # fsum is exactly rounded, so relabeling cannot change the result
    return -math.fsum(p * np.log(p))


def nmi(truth, clusters):
    """200 * I(truth; clusters) / (H(truth) + H(clusters)).

    Zero when exactly one partition has zero entropy; 100 when both do.
    """
    T, _, _ = contingency(truth, clusters)
    n = T.sum()
    pj = T / n
    # integer marginals are exact, so their order of summation is irrelevant
    pa = T.sum(axis=1) / n
    pc = T.sum(axis=0) / n
    ha, hc = _entropy(pa), _entropy(pc)
    if ha == 0.0 and hc == 0.0:
        return 100.0
    if ha == 0.0 or hc == 0.0:
        return 0.0
    nz = pj > 0
    mi = math.fsum(pj[nz] * np.log(pj[nz] / np.outer(pa, pc)[nz]))
    return float(np.clip(200.0 * mi / (ha + hc), 0.0, 100.0))
