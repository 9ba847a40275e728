# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  See ``_core_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, hypot, fabs

cnp.import_array()

# past the peak the ratio tables keep terms decreasing, so a term this small
# ends the sum long before subnormal arithmetic sets in
cdef double NEGLIGIBLE = 1e-280


def series_sums(x, ratios, nterms):
    cdef const double complex[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    cdef const double[::1] rv = np.ascontiguousarray(ratios, dtype=np.float64)
    cdef const long long[::1] nv = np.ascontiguousarray(nterms, dtype=np.int64)
    cdef Py_ssize_t m = xv.shape[0]
    sums_arr = np.empty(m, dtype=np.complex128)
    peak_arr = np.empty(m, dtype=np.float64)
    cdef double complex[::1] sums = sums_arr
    cdef double[::1] peak = peak_arr
    cdef Py_ssize_t i, n, stop
    cdef double complex term, total, xi
    cdef double big, mod, lead
    if m and np.max(nterms) > rv.shape[0]:
        raise ValueError("ratio table shorter than requested truncation")
    with nogil:
        for i in range(m):
            xi = xv[i]
            term = 1.0
            total = 1.0
            big = 1.0
            stop = nv[i]
            for n in range(stop):
                term = term * xi * rv[n]
                total = total + term
                lead = fabs(term.real) + fabs(term.imag)
                if lead > big:
                    mod = hypot(term.real, term.imag)
                    if mod > big:
                        big = mod
                elif lead < NEGLIGIBLE:
                    break
            sums[i] = total
            peak[i] = big
    return sums_arr, peak_arr


def pivoted_cholesky(a, double tol):
    work = np.array(a, dtype=np.complex128, order="C", copy=True)
    cdef double complex[:, ::1] A = work
    cdef Py_ssize_t n = A.shape[0]
    low_arr = np.zeros((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] L = low_arr
    perm_arr = np.arange(n, dtype=np.int64)
    cdef long long[::1] perm = perm_arr
    cdef Py_ssize_t k, j, i, c, best, rank = 0
    cdef double dmax, piv
    cdef double complex tmp
    cdef long long ptmp
    with nogil:
        for k in range(n):
            best = k
            dmax = A[k, k].real
            for j in range(k + 1, n):
                if A[j, j].real > dmax:
                    dmax = A[j, j].real
                    best = j
            if dmax <= tol:
                break
            if best != k:
                for c in range(n):
                    tmp = A[k, c]; A[k, c] = A[best, c]; A[best, c] = tmp
                for c in range(n):
                    tmp = A[c, k]; A[c, k] = A[c, best]; A[c, best] = tmp
                for c in range(k):
                    tmp = L[k, c]; L[k, c] = L[best, c]; L[best, c] = tmp
                ptmp = perm[k]; perm[k] = perm[best]; perm[best] = ptmp
            piv = sqrt(A[k, k].real)
            L[k, k] = piv
            for i in range(k + 1, n):
                L[i, k] = A[i, k] / piv
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    A[i, j] = A[i, j] - L[i, k] * L[j, k].conjugate()
            rank = k + 1
    factor = np.empty((n, rank), dtype=np.complex128)
    factor[perm_arr] = low_arr[:, :rank]
    schur = work[rank:, rank:].copy()
    return factor, perm_arr, rank, schur


def moment_ratios(Py_ssize_t count, Py_ssize_t start):
    out_arr = np.empty(count, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double r = 1.0
    cdef Py_ssize_t n
    with nogil:
        n = start
        while n >= 0:
            r = (n + 1.0) / ((2.0 * n + 5.0) - (n + 3.0) * r)
            if n < count:
                out[n] = r
            n -= 1
    return out_arr
