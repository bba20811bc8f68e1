# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled lattice pair sums (same contract as ``pairsum_py.pair_sum``)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, sqrt, INFINITY

cnp.import_array()


def pair_sum(values, I, J, Py_ssize_t n, double p, double exponent, int mode=0,
             double rmin2=0.0, double rmax2=INFINITY):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] V = np.ascontiguousarray(
        np.asarray(values, dtype=np.float64).reshape(len(I), -1))
    cdef cnp.ndarray[cnp.int64_t, ndim=1] II = np.ascontiguousarray(I, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] JJ = np.ascontiguousarray(J, dtype=np.int64)
    cdef Py_ssize_t M = V.shape[0], k = V.shape[1]
    if mode == 1 and k != 3:
        raise ValueError("wedge mode needs 3-component values")
    # kernel lookup over |di|, |dj|
    cdef cnp.ndarray[cnp.float64_t, ndim=2] table = np.zeros((n, n))
    cdef Py_ssize_t a, b, c, di, dj
    cdef double r2
    for di in range(n):
        for dj in range(n):
            r2 = <double>(di * di + dj * dj)
            if r2 > 0 and r2 >= rmin2 and r2 < rmax2:
                table[di, dj] = pow(r2, -0.5 * exponent)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rows = np.zeros(M)
    cdef double acc, q, t, w, x0, x1, x2
    cdef double half_p = 0.5 * p
    cdef bint square = p == 2.0
    for a in range(M):
        acc = 0.0
        for b in range(a + 1, M):
            di = II[b] - II[a]
            dj = JJ[b] - JJ[a]
            if di < 0:
                di = -di
            if dj < 0:
                dj = -dj
            w = table[di, dj]
            if w == 0.0:
                continue
            if mode == 0:
                q = 0.0
                for c in range(k):
                    t = V[a, c] - V[b, c]
                    q += t * t
            else:
                x0 = V[a, 1] * V[b, 2] - V[a, 2] * V[b, 1]
                x1 = V[a, 2] * V[b, 0] - V[a, 0] * V[b, 2]
                x2 = V[a, 0] * V[b, 1] - V[a, 1] * V[b, 0]
                q = x0 * x0 + x1 * x1 + x2 * x2
            if q == 0.0:
                continue
            if square:
                acc += q * w
            else:
                acc += pow(q, half_p) * w
        rows[a] = acc
    return 2.0 * float(np.sum(rows))
