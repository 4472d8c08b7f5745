# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled correlation hot loops; same contract as ``_core_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()

cdef enum:
    EXP = 0
    MATERN32 = 1
    MATERN52 = 2


cdef inline double _profile(double d, int profile) nogil:
    cdef double s
    if profile == EXP:
        return exp(-d)
    if profile == MATERN32:
        s = sqrt(3.0) * d
        return (1.0 + s) * exp(-s)
    s = sqrt(5.0) * d
    return (1.0 + s + 5.0 / 3.0 * d * d) * exp(-s)


cdef inline double _log_slope(double d, int profile) nogil:
    cdef double s
    if profile == EXP:
        return -1.0
    if profile == MATERN32:
        return -3.0 * d / (1.0 + sqrt(3.0) * d)
    s = sqrt(5.0) * d
    return -5.0 / 3.0 * d * (1.0 + s) / (1.0 + s + 5.0 / 3.0 * d * d)


def corr_product(B, theta, int profile):
    cdef double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t m = b.shape[0], q = b.shape[1], i, j
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] r = out
    cdef double acc
    with nogil:
        for i in range(m):
            if profile == EXP:
                # product of exponentials as one exponential of the sum
                acc = 0.0
                for j in range(q):
                    acc += th[j] * b[i, j]
                r[i] = exp(-acc)
                continue
            acc = 1.0
            for j in range(q):
                acc *= _profile(th[j] * b[i, j], profile)
            r[i] = acc
    return out


def corr_product_grad(B, theta, int profile):
    cdef double[:, ::1] b = np.ascontiguousarray(B, dtype=np.float64)
    cdef double[::1] th = np.ascontiguousarray(theta, dtype=np.float64)
    cdef Py_ssize_t m = b.shape[0], q = b.shape[1], i, j
    out = np.empty(m, dtype=np.float64)
    dout = np.empty((m, q), dtype=np.float64)
    cdef double[::1] r = out
    cdef double[:, ::1] dr = dout
    cdef double acc, d
    with nogil:
        for i in range(m):
            if profile == EXP:
                acc = 0.0
                for j in range(q):
                    acc += th[j] * b[i, j]
                acc = exp(-acc)
                r[i] = acc
                for j in range(q):
                    dr[i, j] = -acc * b[i, j]
                continue
            acc = 1.0
            for j in range(q):
                acc *= _profile(th[j] * b[i, j], profile)
            r[i] = acc
            for j in range(q):
                d = th[j] * b[i, j]
                dr[i, j] = acc * _log_slope(d, profile) * b[i, j]
    return out, dout
