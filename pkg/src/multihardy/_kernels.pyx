# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; signatures mirror ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def pairwise_potential(x, poles, double delta=0.0):
    cdef double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] P = np.ascontiguousarray(poles, dtype=np.float64)
    cdef Py_ssize_t m = X.shape[0], N = X.shape[1], n = P.shape[0]
    cdef Py_ssize_t k, i, j, c
    cdef double d2 = delta * delta, s, t
    out = np.zeros(m)
    cdef double[::1] O = out
    cdef double[::1] inv = np.empty(n)
    cdef double[:, ::1] w = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for c in range(N):
                t = P[i, c] - P[j, c]
                s += t * t
            w[i, j] = s
    for k in range(m):
        for i in range(n):
            s = d2
            for c in range(N):
                t = X[k, c] - P[i, c]
                s += t * t
            inv[i] = 1.0 / s
        s = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                s += w[i, j] * inv[i] * inv[j]
        O[k] = s
    return out


def sum_inverse_square(x, poles, double delta=0.0):
    cdef double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] P = np.ascontiguousarray(poles, dtype=np.float64)
    cdef Py_ssize_t m = X.shape[0], N = X.shape[1], n = P.shape[0]
    cdef Py_ssize_t k, i, c
    cdef double d2 = delta * delta, s, t, acc
    out = np.zeros(m)
    cdef double[::1] O = out
    for k in range(m):
        acc = 0.0
        for i in range(n):
            s = d2
            for c in range(N):
                t = X[k, c] - P[i, c]
                s += t * t
            acc += 1.0 / s
        O[k] = acc
    return out


def power_product(x, poles, exps):
    cdef double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[:, ::1] P = np.ascontiguousarray(poles, dtype=np.float64)
    cdef double[::1] E = np.ascontiguousarray(exps, dtype=np.float64)
    cdef Py_ssize_t m = X.shape[0], N = X.shape[1], n = P.shape[0]
    cdef Py_ssize_t k, i, c
    cdef double s, t, lg, v
    val = np.empty(m)
    grad = np.zeros((m, N))
    cdef double[::1] V = val
    cdef double[:, ::1] G = grad
    for k in range(m):
        lg = 0.0
        for i in range(n):
            s = 0.0
            for c in range(N):
                t = X[k, c] - P[i, c]
                s += t * t
            lg += 0.5 * E[i] * log(s)
            for c in range(N):
                G[k, c] += E[i] * (X[k, c] - P[i, c]) / s
        v = exp(lg)
        V[k] = v
        for c in range(N):
            G[k, c] *= v
    return val, grad
