# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels (see _kernels_py for the contracts)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND_NAME = "cython"


def garch_recursion(double[::1] x2, double[::1] icpt, double[::1] alphas,
                    double[::1] betas, double[::1] h_head):
    cdef Py_ssize_t n = x2.shape[0]
    cdef Py_ssize_t p = alphas.shape[0]
    cdef Py_ssize_t q = betas.shape[0]
    cdef Py_ssize_t m = h_head.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h_arr = np.empty(n)
    cdef double[::1] h = h_arr
    cdef Py_ssize_t t, i, j
    cdef double acc
    for t in range(min(m, n)):
        h[t] = h_head[t]
    for t in range(m, n):
        acc = icpt[t]
        for i in range(1, p + 1):
            if t - i >= 0:
                acc += alphas[i - 1] * x2[t - i]
        for j in range(1, q + 1):
            acc += betas[j - 1] * h[t - j]
        h[t] = acc
    return h_arr


def sim_recursion(double[::1] eps, double[::1] icpt, double[::1] alphas,
                  double[::1] betas, double v0):
    cdef Py_ssize_t n = eps.shape[0]
    cdef Py_ssize_t p = alphas.shape[0]
    cdef Py_ssize_t q = betas.shape[0]
    cdef Py_ssize_t m = max(p, q)
    if m < 1:
        m = 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] h_arr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_arr = np.empty(n)
    cdef double[::1] h = h_arr
    cdef double[::1] x = x_arr
    cdef Py_ssize_t t, i, j
    cdef double acc
    for t in range(min(m, n)):
        h[t] = v0
        x[t] = sqrt(v0) * eps[t]
    for t in range(m, n):
        acc = icpt[t]
        for i in range(1, p + 1):
            acc += alphas[i - 1] * x[t - i] * x[t - i]
        for j in range(1, q + 1):
            acc += betas[j - 1] * h[t - j]
        h[t] = acc
        x[t] = sqrt(acc) * eps[t]
    return x_arr, h_arr


def multi_conv(double[:, ::1] signals, double[:, ::1] kernels,
               long[::1] lengths, long[::1] shifts, Py_ssize_t n_out):
    # kernel taps are accumulated four at a time: each block makes one
    # forward pass over t, so signal loads stay in registers and the output
    # row is revisited length/4 times instead of length times
    cdef Py_ssize_t n_rows = signals.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = np.zeros((n_rows, n_out))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t s, t, i, d, length, shift, start, boundary_end
    cdef double k, k0, k1, k2, k3
    with nogil:
        for s in range(n_rows):
            length = lengths[s]
            shift = shifts[s]
            i = 0
            while i + 4 <= length:
                k0 = kernels[s, i]
                k1 = kernels[s, i + 1]
                k2 = kernels[s, i + 2]
                k3 = kernels[s, i + 3]
                start = shift + i
                boundary_end = start + 3 if start + 3 < n_out else n_out
                for t in range(start, boundary_end):
                    for d in range(4):
                        if t - start - d >= 0:
                            out[s, t] += kernels[s, i + d] * signals[s, t - start - d]
                for t in range(start + 3, n_out):
                    out[s, t] += (k0 * signals[s, t - start]
                                  + k1 * signals[s, t - start - 1]
                                  + k2 * signals[s, t - start - 2]
                                  + k3 * signals[s, t - start - 3])
                i += 4
            while i < length:
                k = kernels[s, i]
                start = shift + i
                if k != 0.0:
                    for t in range(start, n_out):
                        out[s, t] += k * signals[s, t - start]
                i += 1
    return out_arr
