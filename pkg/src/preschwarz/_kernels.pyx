# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for dense graded series arithmetic."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def series_mul(const double complex[::1] a, const double complex[::1] b,
               const cnp.intp_t[::1] ia, const cnp.intp_t[::1] ib,
               const cnp.intp_t[::1] ic, Py_ssize_t size):
    """Truncated Cauchy product driven by a precomputed index table."""
    out = np.zeros(size, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t t, n = ia.shape[0]
    cdef double complex x
    for t in range(n):
        x = a[ia[t]]
        if x != 0:
            o[ic[t]] += x * b[ib[t]]
    return out


def series_mul_slice(const double complex[::1] a, const double complex[::1] b,
                     const cnp.intp_t[::1] ia, const cnp.intp_t[::1] ib,
                     const cnp.intp_t[::1] ic, Py_ssize_t lo, Py_ssize_t hi):
    """Entries ``lo:hi`` of the product (one homogeneous degree, usually)."""
    out = np.zeros(hi - lo, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t t, k, n = ia.shape[0]
    for t in range(n):
        k = ic[t]
        if lo <= k < hi:
            o[k - lo] += a[ia[t]] * b[ib[t]]
    return out
