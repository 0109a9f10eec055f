# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the numeric kernels.

Mirrors _pykern exactly (same signatures, same semantics); see that module
for the contracts. Uses typed memoryviews only, so no numpy C API is needed.
"""

import numpy as np

from libc.math cimport fabs, log


def accumulate_outer(double[:, ::1] winners, double[:, ::1] losers):
    cdef Py_ssize_t n_pairs = winners.shape[0]
    cdef Py_ssize_t m = winners.shape[1]
    out = np.zeros((m, m), dtype=np.float64)
    cdef double[:, ::1] w = out
    cdef Py_ssize_t k, x, y
    cdef double wx
    for k in range(n_pairs):
        for x in range(m):
            wx = winners[k, x]
            for y in range(m):
                w[x, y] += wx * losers[k, y]
    for x in range(m):
        w[x, x] = 0.0
    return out


def bt_fit_loop(double[:, ::1] w, double[::1] p0, double tol, Py_ssize_t max_iter):
    cdef Py_ssize_t m = w.shape[0]
    totals_arr = np.zeros(m, dtype=np.float64)
    p_arr = np.array(p0, dtype=np.float64, copy=True)
    p_new_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] totals = totals_arr
    cdef double[::1] p = p_arr
    cdef double[::1] p_new = p_new_arr
    cdef Py_ssize_t x, y, it
    cdef double denom, norm, delta, change

    for x in range(m):
        for y in range(m):
            totals[x] += w[x, y]

    delta = float("inf")
    for it in range(1, max_iter + 1):
        norm = 0.0
        for x in range(m):
            denom = 0.0
            for y in range(m):
                if y != x:
                    denom += (w[x, y] + w[y, x]) / (p[x] + p[y])
            p_new[x] = totals[x] / denom
            norm += p_new[x]
        delta = 0.0
        for x in range(m):
            p_new[x] /= norm
            change = fabs(p_new[x] - p[x])
            if change > delta:
                delta = change
            p[x] = p_new[x]
        if delta < tol:
            return p_arr, it, delta
    return p_arr, max_iter, delta


def kl_rows(double[::1] target, double[:, ::1] corpus):
    cdef Py_ssize_t n = corpus.shape[0]
    cdef Py_ssize_t m = corpus.shape[1]
    out = np.zeros(n, dtype=np.float64)
    cdef double[::1] div = out
    log_t_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] log_t = log_t_arr
    cdef Py_ssize_t i, x
    cdef double acc
    for x in range(m):
        log_t[x] = log(target[x])
    for i in range(n):
        acc = 0.0
        for x in range(m):
            acc += target[x] * (log_t[x] - log(corpus[i, x]))
        div[i] = acc
    return out
