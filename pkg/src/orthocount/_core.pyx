# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled enumeration kernels. Same functions and output contracts as
orthocount._corepy (the pure fallback); see that module for the order spec."""

from libc.math cimport floor, sqrt, ceil
import numpy as np

BACKEND_NAME = "compiled"


cdef inline long long _gcd(long long a, long long b) nogil:
    if a < 0:
        a = -a
    if b < 0:
        b = -b
    cdef long long t
    while b != 0:
        t = a % b
        a = b
        b = t
    return a


cdef inline long long _modinv(long long a, long long c) nogil:
    """Inverse of a mod c (gcd(a, c) = 1 assumed), in [0, c)."""
    cdef long long old_r = a % c, r = c
    cdef long long old_s = 1, s = 0
    cdef long long q, t
    if old_r < 0:
        old_r += c
    if c == 1:
        return 0
    while r != 0:
        q = old_r // r
        t = old_r - q * r
        old_r = r
        r = t
        t = old_s - q * s
        old_s = s
        s = t
    old_s = old_s % c
    if old_s < 0:
        old_s += c
    return old_s


cdef inline double _quad(double A, double Bq, double C, double t) nogil:
    return A * t * t + 2.0 * Bq * t + C


def sl2z_ball(double max_norm2, long long element_cap=10**8):
    """See _corepy.sl2z_ball."""
    cdef double N = max_norm2
    if N < 2.0:
        return np.empty((0, 4), dtype=np.int64)
    cdef long long B = <long long> floor(sqrt(N - 2.0 if N > 2.0 else 0.0))
    cdef long long cmax = <long long> floor(sqrt(N - 1.0))
    cdef long long c, d, Dmax, a0, b0, t, t1, t2
    cdef double A, Bq, C, disc, s
    # counting pass
    cdef long long total = 2 * B + 1
    for c in range(1, cmax + 1):
        Dmax = <long long> floor(sqrt(N - c * c))
        for d in range(-Dmax, Dmax + 1):
            if _gcd(c, d) != 1:
                continue
            a0 = _modinv(d, c)
            b0 = (a0 * d - 1) // c
            A = <double> (c * c) + (<double> d) * (<double> d)
            Bq = (<double> a0) * c + (<double> b0) * d
            C = (<double> a0) * a0 + (<double> b0) * b0 - (N - A)
            disc = Bq * Bq - A * C
            if disc < 0:
                continue
            s = sqrt(disc)
            t1 = <long long> ceil((-Bq - s) / A)
            t2 = <long long> floor((-Bq + s) / A)
            if _quad(A, Bq, C, t1 - 1) <= 0:
                t1 -= 1
            if _quad(A, Bq, C, t1 - 1) <= 0:
                t1 -= 1
            if _quad(A, Bq, C, t2 + 1) <= 0:
                t2 += 1
            if _quad(A, Bq, C, t2 + 1) <= 0:
                t2 += 1
            if _quad(A, Bq, C, t1) > 0:
                t1 += 1
            if _quad(A, Bq, C, t2) > 0:
                t2 -= 1
            if t2 >= t1:
                total += t2 - t1 + 1
    if total > element_cap:
        raise MemoryError(f"sl2z_ball element cap {element_cap} exceeded")
    out = np.empty((total, 4), dtype=np.int64)
    cdef long long[:, ::1] o = out
    cdef long long k = 0
    for t in range(-B, B + 1):
        o[k, 0] = 1
        o[k, 1] = t
        o[k, 2] = 0
        o[k, 3] = 1
        k += 1
    for c in range(1, cmax + 1):
        Dmax = <long long> floor(sqrt(N - c * c))
        for d in range(-Dmax, Dmax + 1):
            if _gcd(c, d) != 1:
                continue
            a0 = _modinv(d, c)
            b0 = (a0 * d - 1) // c
            A = <double> (c * c) + (<double> d) * (<double> d)
            Bq = (<double> a0) * c + (<double> b0) * d
            C = (<double> a0) * a0 + (<double> b0) * b0 - (N - A)
            disc = Bq * Bq - A * C
            if disc < 0:
                continue
            s = sqrt(disc)
            t1 = <long long> ceil((-Bq - s) / A)
            t2 = <long long> floor((-Bq + s) / A)
            if _quad(A, Bq, C, t1 - 1) <= 0:
                t1 -= 1
            if _quad(A, Bq, C, t1 - 1) <= 0:
                t1 -= 1
            if _quad(A, Bq, C, t2 + 1) <= 0:
                t2 += 1
            if _quad(A, Bq, C, t2 + 1) <= 0:
                t2 += 1
            if _quad(A, Bq, C, t1) > 0:
                t1 += 1
            if _quad(A, Bq, C, t2) > 0:
                t2 -= 1
            for t in range(t1, t2 + 1):
                o[k, 0] = a0 + t * c
                o[k, 1] = b0 + t * d
                o[k, 2] = c
                o[k, 3] = d
                k += 1
    return out


def sl2z_cusp_cosets(long long c_max):
    """See _corepy.sl2z_cusp_cosets."""
    cdef long long c, a, total = 0
    for c in range(1, c_max + 1):
        total += 1 if c == 1 else 0
        if c > 1:
            for a in range(1, c):
                if _gcd(a, c) == 1:
                    total += 1
    out = np.empty((total, 4), dtype=np.int64)
    cdef long long[:, ::1] o = out
    cdef long long k = 0
    cdef long long d
    for c in range(1, c_max + 1):
        if c == 1:
            o[k, 0] = 0
            o[k, 1] = -1
            o[k, 2] = 1
            o[k, 3] = 0
            k += 1
            continue
        for a in range(1, c):
            if _gcd(a, c) != 1:
                continue
            d = _modinv(a, c)
            o[k, 0] = a
            o[k, 1] = (a * d - 1) // c
            o[k, 2] = c
            o[k, 3] = d
            k += 1
    return out


def modular_reduce(x, y, int max_iter=256):
    """See _corepy.modular_reduce."""
    xo = np.array(x, dtype=np.float64, copy=True).ravel()
    yo = np.array(y, dtype=np.float64, copy=True).ravel()
    cdef double[::1] xv = xo
    cdef double[::1] yv = yo
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef int it
    cdef double xx, yy, r2
    for i in range(n):
        xx = xv[i]
        yy = yv[i]
        for it in range(max_iter):
            xx -= floor(xx + 0.5)
            r2 = xx * xx + yy * yy
            if r2 >= 1.0:
                break
            xx = -xx / r2
            yy = yy / r2
        xv[i] = xx
        yv[i] = yy
    return xo.reshape(np.shape(x)), yo.reshape(np.shape(y))
