# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled projection kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, ceil, log2, INFINITY

cnp.import_array()

FTOL = 1e-10
XTOL = 1e-10


cdef inline double _clip01(double x) nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


cdef double _capped_sum(const double[::1] v, double tau) nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0
    for i in range(v.shape[0]):
        s += _clip01(v[i] - tau)
    return s


cdef int _steps(double width, double xtol) nogil:
    if width <= xtol:
        return 0
    return <int>ceil(log2(width / xtol))


def max_bisection_steps(double width, double xtol=XTOL):
    return _steps(width, xtol)


def capped_box(v, double k, double ftol=FTOL, double xtol=XTOL):
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = vv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] x = out
    cdef double s = 0.0, lo, hi, tau, r, snapped, r2, free_sum, shifted
    cdef int steps, it = 0, nfree, nup
    if k <= 0:
        x[:] = 0.0
        hi = 0.0
        for i in range(n):
            if vv[i] > hi:
                hi = vv[i]
        return out, hi, 0, 0.0
    for i in range(n):
        x[i] = _clip01(vv[i])
        s += x[i]
    if s <= k:
        return out, 0.0, 0, 0.0
    with nogil:
        lo = 0.0
        hi = vv[0]
        for i in range(n):
            if vv[i] > hi:
                hi = vv[i]
        steps = _steps(hi - lo, xtol)
        tau = 0.5 * (lo + hi)
        r = _capped_sum(vv, tau) - k
        while it < steps:
            it += 1
            tau = 0.5 * (lo + hi)
            r = _capped_sum(vv, tau) - k
            if fabs(r) <= ftol:
                break
            if r > 0:
                lo = tau
            else:
                hi = tau
        nfree = 0
        nup = 0
        free_sum = 0.0
        for i in range(n):
            shifted = vv[i] - tau
            if shifted >= 1.0:
                nup += 1
            elif shifted > 0.0:
                nfree += 1
                free_sum += vv[i]
        if nfree > 0:
            snapped = (nup + free_sum - k) / nfree
            r2 = _capped_sum(vv, snapped) - k
            if fabs(r2) < fabs(r):
                tau = snapped
        s = 0.0
        for i in range(n):
            x[i] = _clip01(vv[i] - tau)
            s += x[i]
    return out, tau, it, fabs(s - k)


cdef double _simplex_sum(const double[::1] v, const cnp.npy_bool[::1] m, double mu) nogil:
    cdef Py_ssize_t j
    cdef double s = 0.0, t
    for j in range(v.shape[0]):
        if m[j]:
            t = v[j] - mu
            if t > 0.0:
                s += t
    return s


def simplex_rows(V, mask, double ftol=FTOL, double xtol=XTOL):
    cdef const double[:, ::1] VV = np.ascontiguousarray(V, dtype=np.float64)
    cdef const cnp.npy_bool[:, ::1] M = np.ascontiguousarray(mask, dtype=bool)
    cdef Py_ssize_t S = VV.shape[0], D = VV.shape[1], a, j
    U_arr = np.zeros((S, D), dtype=np.float64)
    mu_arr = np.empty(S, dtype=np.float64)
    it_arr = np.zeros(S, dtype=np.int64)
    res_arr = np.empty(S, dtype=np.float64)
    cdef double[:, ::1] U = U_arr
    cdef double[::1] mus = mu_arr
    cdef long long[::1] its = it_arr
    cdef double[::1] res = res_arr
    cdef double top, lo, hi, mu, r, snapped, r2, fsum, s, t
    cdef int steps = _steps(1.0, xtol), it, nfree
    with nogil:
        for a in range(S):
            top = -INFINITY
            for j in range(D):
                if M[a, j] and VV[a, j] > top:
                    top = VV[a, j]
            lo = top - 1.0
            hi = top
            mu = 0.5 * (lo + hi)
            r = _simplex_sum(VV[a], M[a], mu) - 1.0
            it = 0
            while it < steps:
                it += 1
                mu = 0.5 * (lo + hi)
                r = _simplex_sum(VV[a], M[a], mu) - 1.0
                if fabs(r) <= ftol:
                    break
                if r > 0:
                    lo = mu
                else:
                    hi = mu
            nfree = 0
            fsum = 0.0
            for j in range(D):
                if M[a, j] and VV[a, j] > mu:
                    nfree += 1
                    fsum += VV[a, j]
            if nfree > 0:
                snapped = (fsum - 1.0) / nfree
                r2 = _simplex_sum(VV[a], M[a], snapped) - 1.0
                if fabs(r2) < fabs(r):
                    mu = snapped
            s = 0.0
            for j in range(D):
                if M[a, j]:
                    t = VV[a, j] - mu
                    if t > 0.0:
                        U[a, j] = t
                        s += t
            mus[a] = mu
            its[a] = it
            res[a] = fabs(s - 1.0)
    return U_arr, mu_arr, it_arr, res_arr
