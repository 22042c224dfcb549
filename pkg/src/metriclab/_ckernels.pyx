# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: weighted l_p distances, first-capture ball carving,
pair-separation counting, and the shifted-Mazur slack grid scan.

Mirrors metriclab._pykernels; metriclab.kernels picks whichever is available.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, INFINITY

cnp.import_array()

IMPL = "cython"


cdef inline double _wpow_sum(const double[:, ::1] a, Py_ssize_t i,
                             const double[:, ::1] b, Py_ssize_t j,
                             const double[::1] w, double p) noexcept nogil:
    cdef Py_ssize_t k, d = a.shape[1]
    cdef double acc = 0.0, t
    if p == 2.0:
        for k in range(d):
            t = a[i, k] - b[j, k]
            acc += w[k] * t * t
    elif p == 4.0:
        for k in range(d):
            t = a[i, k] - b[j, k]
            t = t * t
            acc += w[k] * t * t
    elif p == 3.0:
        for k in range(d):
            t = fabs(a[i, k] - b[j, k])
            acc += w[k] * t * t * t
    elif p == 1.0:
        for k in range(d):
            acc += w[k] * fabs(a[i, k] - b[j, k])
    else:
        for k in range(d):
            t = fabs(a[i, k] - b[j, k])
            if t > 0.0:
                acc += w[k] * pow(t, p)
    return acc


def pairwise_lp(coords, weights, double p):
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] c = coords
    cdef double[::1] w = weights
    cdef Py_ssize_t n = c.shape[0], i, j
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double inv = 1.0 / p, val
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                val = pow(_wpow_sum(c, i, c, j, w, p), inv)
                o[i, j] = val
                o[j, i] = val
    return out


def cross_lp(a, b, weights, double p):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    cdef double[:, ::1] ca = a
    cdef double[:, ::1] cb = b
    cdef double[::1] w = weights
    cdef Py_ssize_t n = ca.shape[0], m = cb.shape[0], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double inv = 1.0 / p
    with nogil:
        for i in range(n):
            for j in range(m):
                o[i, j] = pow(_wpow_sum(ca, i, cb, j, w, p), inv)
    return out


def ckr_assign(dists, order, double rho):
    dists = np.ascontiguousarray(dists, dtype=np.float64)
    order = np.ascontiguousarray(order, dtype=np.int64)
    cdef double[:, ::1] d = dists
    cdef long long[::1] ordv = order
    cdef Py_ssize_t n = d.shape[0], m = ordv.shape[0], i, j
    labels = np.empty(n, dtype=np.int64)
    cdef long long[::1] lab = labels
    with nogil:
        for i in range(n):
            lab[i] = -1
            for j in range(m):
                if d[i, ordv[j]] <= rho:
                    lab[i] = j
                    break
    return labels


def pair_sep_accumulate(labels, counts):
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    cdef long long[::1] lab = labels
    cdef unsigned int[:, ::1] cnt = counts
    cdef Py_ssize_t n = lab.shape[0], i, j
    with nogil:
        for i in range(n):
            for j in range(n):
                if lab[i] != lab[j]:
                    cnt[i, j] += 1


cdef inline double _signed_root(double t, double e) noexcept nogil:
    if t > 0.0:
        return pow(t, e)
    elif t < 0.0:
        return -pow(-t, e)
    return 0.0


def slack_min(u, v, double alpha, double lam, double p):
    u = np.ascontiguousarray(u, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    cdef double[::1] uu = u
    cdef double[::1] vv = v
    cdef Py_ssize_t i, j, nu = uu.shape[0], nv = vv.shape[0]
    cdef double e = 2.0 / p
    cdef double cu = pow(1.0 - lam * alpha, p)
    cdef double cv = 5.0 / ((1.0 - lam) * p * alpha)
    cdef double best = INFINITY, bu = 0.0, bv = 0.0
    cdef double su, lhs, slack
    with nogil:
        for i in range(nu):
            su = alpha * _signed_root(uu[i], e)
            for j in range(nv):
                lhs = pow(fabs(_signed_root(uu[i] + vv[j], e) - su), p)
                slack = cu * uu[i] * uu[i] + cv * vv[j] * vv[j] - lhs
                if slack < best:
                    best = slack
                    bu = uu[i]
                    bv = vv[j]
    return best, bu, bv
