# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same contracts as :mod:`plrank._pure`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()

ctypedef cnp.int64_t idx_t


def pl_loglik(const double[::1] weights, const idx_t[:, ::1] rankings):
    cdef Py_ssize_t N = rankings.shape[0], n = rankings.shape[1]
    cdef Py_ssize_t k, p
    cdef double s, total = 0.0
    cdef double[::1] suffix = np.empty(max(n, 1))
    if N == 0 or n < 2:
        return 0.0
    with nogil:
        for k in range(N):
            s = 0.0
            for p in range(n - 1, -1, -1):
                s = s + weights[rankings[k, p]]
                suffix[p] = s
            for p in range(n - 1):
                total += log(weights[rankings[k, p]]) - log(suffix[p])
    return total


def pl_scores_loss_grad(const double[:, ::1] scores, const idx_t[:, ::1] rankings):
    cdef Py_ssize_t N = scores.shape[0], n = scores.shape[1]
    cdef Py_ssize_t k, p, item
    cdef double m, s, acc, lk
    loss_arr = np.zeros(N)
    grad_arr = np.zeros((N, n))
    cdef double[::1] loss = loss_arr
    cdef double[:, ::1] grad = grad_arr
    cdef double[::1] e = np.empty(max(n, 1))
    cdef double[::1] suffix = np.empty(max(n, 1))
    if N == 0 or n < 2:
        return loss_arr, grad_arr
    with nogil:
        for k in range(N):
            m = scores[k, 0]
            for p in range(1, n):
                if scores[k, p] > m:
                    m = scores[k, p]
            s = 0.0
            for p in range(n - 1, -1, -1):
                e[p] = exp(scores[k, rankings[k, p]] - m)
                s = s + e[p]
                suffix[p] = s
            acc = 0.0
            lk = 0.0
            for p in range(n):
                item = rankings[k, p]
                if p < n - 1:
                    acc = acc + 1.0 / suffix[p]
                    lk += log(suffix[p]) - (scores[k, item] - m)
                    grad[k, item] = e[p] * acc - 1.0
                else:
                    grad[k, item] = e[p] * acc
            loss[k] = lk
    return loss_arr, grad_arr


def mm_denominators(const double[::1] weights, const idx_t[:, ::1] rankings):
    cdef Py_ssize_t N = rankings.shape[0], n = rankings.shape[1]
    cdef Py_ssize_t k, p
    cdef double s, acc
    denom_arr = np.zeros(n)
    cdef double[::1] denom = denom_arr
    cdef double[::1] suffix = np.empty(max(n, 1))
    if N == 0 or n < 2:
        return denom_arr
    with nogil:
        for k in range(N):
            s = 0.0
            for p in range(n - 1, -1, -1):
                s = s + weights[rankings[k, p]]
                suffix[p] = s
            acc = 0.0
            for p in range(n):
                if p < n - 1:
                    acc = acc + 1.0 / suffix[p]
                denom[rankings[k, p]] += acc
    return denom_arr


def sample_rankings(const double[::1] weights, const double[:, ::1] uniforms):
    cdef Py_ssize_t n = weights.shape[0], N = uniforms.shape[0]
    cdef Py_ssize_t k, p, j, choice, last
    cdef double total, target, cum
    out_arr = np.empty((N, n), dtype=np.int64)
    cdef idx_t[:, ::1] out = out_arr
    cdef double[::1] remaining = np.empty(max(n, 1))
    with nogil:
        for k in range(N):
            for j in range(n):
                remaining[j] = weights[j]
            for p in range(n - 1):
                total = 0.0
                last = -1
                for j in range(n):
                    total = total + remaining[j]
                    if remaining[j] > 0.0:
                        last = j
                target = uniforms[k, p] * total
                cum = 0.0
                choice = -1
                for j in range(n):
                    cum = cum + remaining[j]
                    if cum > target and remaining[j] > 0.0:
                        choice = j
                        break
                if choice < 0:
                    choice = last
                out[k, p] = choice
                remaining[choice] = 0.0
            for j in range(n):
                if remaining[j] > 0.0:
                    out[k, n - 1] = j
                    break
    return out_arr


def average_overlap_batch(const idx_t[:, ::1] a, const idx_t[:, ::1] b):
    cdef Py_ssize_t N = a.shape[0], n = a.shape[1]
    cdef Py_ssize_t k, i, overlap
    cdef double acc
    out_arr = np.zeros(N)
    cdef double[::1] out = out_arr
    cdef unsigned char[::1] seen_a = np.zeros(max(n, 1), dtype=np.uint8)
    cdef unsigned char[::1] seen_b = np.zeros(max(n, 1), dtype=np.uint8)
    with nogil:
        for k in range(N):
            for i in range(n):
                seen_a[i] = 0
                seen_b[i] = 0
            overlap = 0
            acc = 0.0
            for i in range(n):
                seen_a[a[k, i]] = 1
                seen_b[b[k, i]] = 1
                if a[k, i] == b[k, i]:
                    overlap += 1
                else:
                    overlap += seen_b[a[k, i]] + seen_a[b[k, i]]
                acc += <double>overlap / <double>(i + 1)
            out[k] = acc / n
    return out_arr
