# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for the RBF covariance and its input gradients.

Mirrors :mod:`sgpmic._pykernels` exactly; the two are selected between in
:mod:`sgpmic._backend`.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

NAME = "cython"


def sqdist(double[:, ::1] A, double[:, ::1] B):
    """Squared Euclidean distances between the rows of ``A`` and ``B``."""
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, q
    cdef double acc, diff
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] D = out
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for q in range(d):
                    diff = A[i, q] - B[j, q]
                    acc = acc + diff * diff
                D[i, j] = acc
    return out


def rbf_parts(double[:, ::1] A, double[:, ::1] B, double gamma):
    """Return ``(E, D2)`` with ``E = exp(-gamma/2 * D2)``."""
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, q
    cdef double acc, diff, half = 0.5 * gamma
    e_arr = np.empty((n, m), dtype=np.float64)
    d_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] E = e_arr
    cdef double[:, ::1] D = d_arr
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for q in range(d):
                    diff = A[i, q] - B[j, q]
                    acc = acc + diff * diff
                D[i, j] = acc
                E[i, j] = exp(-half * acc)
    return e_arr, d_arr


def rbf_input_grad(double[:, ::1] A, double[:, ::1] B,
                   double[:, ::1] W, double gamma, double[:, ::1] E=None, double scale=1.0):
    """Contract RBF input derivatives with weights ``W`` (already multiplied
    by ``theta_rbf * E``), or with ``W * scale * E`` when ``E`` is given.

    Returns ``(gA, gB)`` where ``gA[i] = sum_j W[i, j] * (-gamma) * (A[i] - B[j])``
    and ``gB[j] = sum_i W[i, j] * gamma * (A[i] - B[j])``.
    """
    cdef Py_ssize_t n = A.shape[0], m = B.shape[0], d = A.shape[1]
    cdef Py_ssize_t i, j, q
    cdef double w, rs
    ga_arr = np.zeros((n, d), dtype=np.float64)
    gb_arr = np.zeros((m, d), dtype=np.float64)
    cs_arr = np.zeros(m, dtype=np.float64)
    cdef double[:, ::1] gA = ga_arr
    cdef double[:, ::1] gB = gb_arr
    cdef double[::1] cs = cs_arr
    cdef bint fused = E is not None
    # gA[i] = -gamma (rowsum_i A[i] - sum_j W_ij B[j])
    # gB[j] =  gamma (sum_i W_ij A[i] - colsum_j B[j])
    with nogil:
        for i in range(n):
            rs = 0.0
            for j in range(m):
                w = W[i, j]
                if fused:
                    w = w * scale * E[i, j]
                rs = rs + w
                cs[j] = cs[j] + w
                for q in range(d):
                    gA[i, q] = gA[i, q] + w * B[j, q]
                    gB[j, q] = gB[j, q] + w * A[i, q]
            for q in range(d):
                gA[i, q] = gamma * (gA[i, q] - rs * A[i, q])
        for j in range(m):
            for q in range(d):
                gB[j, q] = gamma * (gB[j, q] - cs[j] * B[j, q])
    return ga_arr, gb_arr
