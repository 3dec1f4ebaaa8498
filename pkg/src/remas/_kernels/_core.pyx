# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled batch kernels for the simulation inner loop.

Mirrors _kernels.pyref function by function; see that module for the
contracts.  Loops accumulate left to right per row, so results can differ
from the BLAS-backed reference at rounding level.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, INFINITY

cnp.import_array()

BACKEND = "cython"


def ucb_select_batch(cnp.float64_t[:, ::1] counts, cnp.float64_t[:, ::1] sums,
                     double t, double sigma, cnp.uint8_t[::1] active):
    cdef Py_ssize_t n = counts.shape[0]
    cdef Py_ssize_t a_count = counts.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] arms = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] arms_v = arms
    cdef Py_ssize_t i, a
    cdef double logterm = log(t + 1.0)
    cdef double best, v
    cdef Py_ssize_t best_a
    for i in range(n):
        if active[i] == 0:
            arms_v[i] = -1
            continue
        best = -INFINITY
        best_a = 0
        for a in range(a_count):
            if counts[i, a] <= 0.0:
                v = INFINITY
            else:
                v = sums[i, a] / counts[i, a] + sigma * sqrt(4.0 * logterm / counts[i, a])
            if v > best:
                best = v
                best_a = a
        arms_v[i] = best_a
    return arms


def discounted_update_batch(cnp.float64_t[:, ::1] counts, cnp.float64_t[:, ::1] sums,
                            cnp.int64_t[::1] arms, cnp.float64_t[::1] rewards,
                            double gamma):
    cdef Py_ssize_t n = counts.shape[0]
    cdef Py_ssize_t a_count = counts.shape[1]
    cdef Py_ssize_t i, a
    if gamma != 1.0:
        for i in range(n):
            for a in range(a_count):
                counts[i, a] *= gamma
                sums[i, a] *= gamma
    for i in range(n):
        if arms[i] >= 0:
            counts[i, arms[i]] += 1.0
            sums[i, arms[i]] += rewards[i]


def window_update_batch(cnp.uint8_t[:, ::1] flags, cnp.int64_t[::1] wcounts,
                        Py_ssize_t head, cnp.float64_t[::1] residuals,
                        cnp.float64_t[::1] thresholds, cnp.uint8_t[::1] active):
    cdef Py_ssize_t n = flags.shape[0]
    cdef Py_ssize_t i
    cdef cnp.uint8_t new
    for i in range(n):
        if active[i] == 0:
            continue
        new = 1 if residuals[i] > thresholds[i] else 0
        wcounts[i] += new - flags[i, head]
        flags[i, head] = new


def ledger_update_batch(cnp.float64_t[:, :, ::1] ledger, cnp.int64_t[::1] arms,
                        cnp.float64_t[::1] rewards, cnp.float64_t[:, ::1] means,
                        double sigma, cnp.uint8_t[::1] active):
    cdef Py_ssize_t n = ledger.shape[0]
    cdef Py_ssize_t k_count = ledger.shape[1]
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef Py_ssize_t i, k, l
    cdef double y, dk, dl, inc
    for i in range(n):
        if active[i] == 0 or arms[i] < 0:
            continue
        y = rewards[i]
        for k in range(k_count):
            dk = y - means[k, arms[i]]
            for l in range(k + 1, k_count):
                dl = y - means[l, arms[i]]
                inc = (dl * dl - dk * dk) * inv
                ledger[i, k, l] += inc
                ledger[i, l, k] -= inc


def maximin_batch(cnp.float64_t[:, :, ::1] ledger):
    cdef Py_ssize_t n = ledger.shape[0]
    cdef Py_ssize_t k_count = ledger.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] scores = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] best_v = best
    cdef cnp.float64_t[::1] scores_v = scores
    cdef Py_ssize_t i, k, l
    cdef double row_min, best_score
    cdef Py_ssize_t best_k
    for i in range(n):
        best_score = -INFINITY
        best_k = 0
        for k in range(k_count):
            row_min = INFINITY
            for l in range(k_count):
                if l != k and ledger[i, k, l] < row_min:
                    row_min = ledger[i, k, l]
            if row_min > best_score:
                best_score = row_min
                best_k = k
        best_v[i] = best_k
        scores_v[i] = best_score
    return best, scores


def mix_batch(cnp.float64_t[:, ::1] weights, cnp.float64_t[:, ::1] x):
    cdef Py_ssize_t n = weights.shape[0]
    cdef Py_ssize_t m = x.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n, m), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out_v = out
    cdef Py_ssize_t i, j, c
    cdef double w
    for i in range(n):
        for j in range(n):
            w = weights[i, j]
            if w == 0.0:
                continue
            for c in range(m):
                out_v[i, c] += w * x[j, c]
    return out
