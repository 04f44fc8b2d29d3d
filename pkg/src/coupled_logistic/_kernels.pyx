# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: stencil application, fused power sums and
nonlinear gradient terms, and the tridiagonal Sturm count.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature and semantics.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, floor, pow, sqrt

cnp.import_array()


def neg_lap_1d(const double[::1] f, double h):
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t i
    cdef double ih2 = 1.0 / (h * h)
    cdef double left, right
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        left = f[i - 1] if i > 0 else 0.0
        right = f[i + 1] if i < n - 1 else 0.0
        o[i] = (2.0 * f[i] - left - right) * ih2
    return out


def neg_lap_2d(const double[::1] f, Py_ssize_t n1, Py_ssize_t n2, double h1, double h2):
    cdef Py_ssize_t i, j, k
    cdef double ih1 = 1.0 / (h1 * h1)
    cdef double ih2 = 1.0 / (h2 * h2)
    cdef double c, a, b
    out = np.empty(n1 * n2, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n1):
        for j in range(n2):
            k = i * n2 + j
            c = f[k]
            a = 2.0 * c
            if i > 0:
                a -= f[k - n2]
            if i < n1 - 1:
                a -= f[k + n2]
            b = 2.0 * c
            if j > 0:
                b -= f[k - 1]
            if j < n2 - 1:
                b -= f[k + 1]
            o[k] = a * ih1 + b * ih2
    return out


cdef inline int _pow_mode(double q):
    # 0: small non-negative integer, 1: integer plus one half, 2: general
    if q >= 0 and q <= 8 and floor(q) == q:
        return 0
    if q > 0 and q <= 8 and floor(q) == q - 0.5:
        return 1
    return 2


cdef inline double _ipow(double a, int k) nogil:
    cdef double r = 1.0
    while k > 0:
        if k & 1:
            r *= a
        a *= a
        k >>= 1
    return r


cdef inline double _powq(double a, double q, int mode) nogil:
    if mode == 0:
        return _ipow(a, <int>q)
    if mode == 1:
        return _ipow(a, <int>floor(q)) * sqrt(a)
    return pow(a, q)


def power_sums(const double[::1] u, const double[::1] v, double p):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double q = 0.5 * p
    cdef double su = 0.0, sv = 0.0, suv = 0.0
    cdef double uq, vq
    cdef int mode = _pow_mode(q)
    for i in range(n):
        uq = _powq(fabs(u[i]), q, mode)
        vq = _powq(fabs(v[i]), q, mode)
        su += uq * uq
        sv += vq * vq
        suv += uq * vq
    return su, sv, suv


def nonlinear_grad(const double[::1] u, const double[::1] v, double p, double beta):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i
    cdef double q1 = 0.5 * p - 1.0
    cdef double au, av, uq1, vq1, uq, vq, su, sv
    gu_arr = np.empty(n, dtype=np.float64)
    gv_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] gu = gu_arr
    cdef double[::1] gv = gv_arr
    cdef int mode = _pow_mode(q1)
    for i in range(n):
        au = fabs(u[i])
        av = fabs(v[i])
        uq1 = _powq(au, q1, mode)
        vq1 = _powq(av, q1, mode)
        uq = uq1 * au
        vq = vq1 * av
        su = 1.0 if u[i] > 0 else (-1.0 if u[i] < 0 else 0.0)
        sv = 1.0 if v[i] > 0 else (-1.0 if v[i] < 0 else 0.0)
        gu[i] = su * (uq * uq1 - beta * uq1 * vq)
        gv[i] = sv * (vq * vq1 - beta * vq1 * uq)
    return gu_arr, gv_arr


def sturm_count(const double[::1] diag, const double[::1] off, double shift):
    cdef Py_ssize_t n = diag.shape[0]
    cdef Py_ssize_t i
    cdef long count = 0
    cdef double q = 1.0
    cdef double b2
    for i in range(n):
        b2 = off[i - 1] * off[i - 1] if i > 0 else 0.0
        q = diag[i] - shift - b2 / q
        if q <= 0.0:
            count += 1
            if q == 0.0:
                q = -1e-300
    return count
