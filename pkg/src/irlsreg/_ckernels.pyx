# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror ``_pykernels``."""

import numpy as np

from libc.math cimport copysign, fabs, fmax, pow, sqrt


def correlate2d_same(const double[:, ::1] image, const double[:, ::1] kernel):
    cdef Py_ssize_t h = image.shape[0], w = image.shape[1]
    cdef Py_ssize_t kh = kernel.shape[0], kw = kernel.shape[1]
    cdef Py_ssize_t ch = kh // 2, cw = kw // 2
    cdef Py_ssize_t i, j, a, c, ii, jj, a_lo, a_hi, c_lo, c_hi
    cdef double acc
    out = np.zeros((h, w), dtype=np.float64)
    cdef double[:, ::1] o = out
    for i in range(h):
        a_lo = ch - i if i < ch else 0
        a_hi = kh if i + kh - ch <= h else h - i + ch
        for j in range(w):
            c_lo = cw - j if j < cw else 0
            c_hi = kw if j + kw - cw <= w else w - j + cw
            acc = 0.0
            for a in range(a_lo, a_hi):
                ii = i + a - ch
                for c in range(c_lo, c_hi):
                    jj = j + c - cw
                    acc += kernel[a, c] * image[ii, jj]
            o[i, j] = acc
    return out


def irls_weights(const double[::1] x, double eps, const double[::1] q):
    cdef Py_ssize_t k, n = x.shape[0]
    cdef double e2 = eps * eps
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for k in range(n):
        if q[k] == 2.0:
            o[k] = 1.0
        elif q[k] == 1.0:
            o[k] = 1.0 / sqrt(x[k] * x[k] + e2)
        else:
            o[k] = pow(x[k] * x[k] + e2, (q[k] - 2.0) / 2.0)
    return out


def reweighted_scale(const double[::1] v, const double[::1] lam,
                     const double[::1] q, const double[::1] w):
    cdef Py_ssize_t k, n = v.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for k in range(n):
        o[k] = v[k] / (1.0 + lam[k] * q[k] * w[k])
    return out


def soft_threshold(const double[::1] v, double tau):
    cdef Py_ssize_t k, n = v.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    # branch-free so random signs do not stall the pipeline
    for k in range(n):
        o[k] = copysign(fmax(fabs(v[k]) - tau, 0.0), v[k]) + 0.0
    return out
