# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same contracts as ``_pykernels``."""
from libc.math cimport exp, cos, sin, cosh, acosh, fabs, ceil, sqrt, INFINITY

import numpy as np

cdef double _EPS = 2.220446049250313e-16
cdef double _TAIL_LOG = 46.0


cdef inline double _f(double nu, double x, double t) nogil:
    return exp(-x * cosh(t)) * cos(nu * t)


cdef int _k_imag(double nu, double x, double tol, double rtol, int max_level,
                 double *value, double *err, long *evals) nogil:
    cdef double big_t = acosh(1.0 + _TAIL_LOG / x)
    cdef double h = 0.5
    cdef double v
    if 1.0 / sqrt(x) < h:
        h = 1.0 / sqrt(x)
    if nu > 0 and 1.0 / nu < h:
        h = 1.0 / nu
    cdef long n = <long>ceil(big_t / h)
    cdef long k
    cdef double s = 0.0, a = 0.0
    for k in range(1, n + 1):
        v = _f(nu, x, k * h)
        s += v
        a += fabs(v)
    cdef double f0 = exp(-x)
    cdef double prev = h * (0.5 * f0 + s)
    cdef double abs_sum = h * (0.5 * f0 + a)
    cdef double cur, diff = INFINITY, floor_
    cdef int level
    evals[0] = n + 1
    for level in range(1, max_level + 1):
        h *= 0.5
        n = <long>ceil(big_t / h)
        s = 0.0
        a = 0.0
        k = 1
        while k <= n:
            v = _f(nu, x, k * h)
            s += v
            a += fabs(v)
            k += 2
        evals[0] += (n + 1) // 2
        cur = 0.5 * prev + h * s
        abs_sum = 0.5 * abs_sum + h * a
        diff = fabs(cur - prev)
        floor_ = tol
        if rtol * fabs(cur) > floor_:
            floor_ = rtol * fabs(cur)
        if 64.0 * _EPS * abs_sum > floor_:
            floor_ = 64.0 * _EPS * abs_sum
        if level >= 2 and diff <= floor_:
            value[0] = cur
            err[0] = diff
            return 1
        prev = cur
    value[0] = prev
    err[0] = diff
    return 0


def k_imag_trapz(double nu, double x, double tol, double rtol=0.0, int max_level=16):
    cdef double value, err
    cdef long evals
    cdef int ok = _k_imag(nu, x, tol, rtol, max_level, &value, &err, &evals)
    return value, err, bool(ok), evals


def k_imag_trapz_array(double nu, xs, double tol, double rtol=0.0, int max_level=16):
    arr = np.ascontiguousarray(xs, dtype=np.float64)
    flat = arr.reshape(-1)
    vals = np.empty_like(flat)
    errs = np.empty_like(flat)
    cdef const double[::1] xv = flat
    cdef double[::1] vv = vals
    cdef double[::1] ev = errs
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef long evals
    cdef int ok = 1
    with nogil:
        for i in range(n):
            if not _k_imag(nu, xv[i], tol, rtol, max_level, &vv[i], &ev[i], &evals):
                ok = 0
    return vals.reshape(arr.shape), errs.reshape(arr.shape), bool(ok)


def fourier_sum(freqs, amps, times, int sign=-1):
    f_arr = np.ascontiguousarray(freqs, dtype=np.float64)
    a_arr = np.ascontiguousarray(amps, dtype=np.complex128)
    t_arr = np.ascontiguousarray(np.atleast_1d(times), dtype=np.float64)
    flat_t = t_arr.reshape(-1)
    re = np.empty(flat_t.shape[0], dtype=np.float64)
    im = np.empty(flat_t.shape[0], dtype=np.float64)
    ar = np.ascontiguousarray(a_arr.real)
    ai = np.ascontiguousarray(a_arr.imag)
    cdef const double[::1] fv = f_arr
    cdef const double[::1] arv = ar
    cdef const double[::1] aiv = ai
    cdef const double[::1] tv = flat_t
    cdef double[::1] rv = re
    cdef double[::1] iv = im
    cdef Py_ssize_t i, j, nt = tv.shape[0], nf = fv.shape[0]
    cdef double t, c, s, sr, si, ph
    cdef double sg = <double>sign
    with nogil:
        for i in range(nt):
            t = tv[i]
            sr = 0.0
            si = 0.0
            for j in range(nf):
                ph = sg * fv[j] * t
                c = cos(ph)
                s = sin(ph)
                sr += arv[j] * c - aiv[j] * s
                si += arv[j] * s + aiv[j] * c
            rv[i] = sr
            iv[i] = si
    return (re + 1j * im).reshape(t_arr.shape)
