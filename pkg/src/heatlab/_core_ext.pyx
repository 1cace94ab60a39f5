# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled series kernels; see ``_core_py`` for the reference semantics."""

import numpy as np

from libc.math cimport exp, fabs, lgamma, log, INFINITY

cdef double EPS = 2.220446049250313e-16


def bessel_i_series(double nu, double z, double tol, long max_terms):
    cdef double half, log_half, quarter_sq, total, weighted, tail
    cdef double a, g1, g2, term, log_term, log_next, ratio
    cdef long k
    if z == 0.0:
        return (1.0 if nu == 0.0 else 0.0), 1, 0.0, 0.0
    half = 0.5 * z
    log_half = log(z) - log(2.0)
    quarter_sq = half * half
    total = 0.0
    weighted = 0.0
    k = 0
    tail = INFINITY
    while k < max_terms:
        a = (2 * k + nu) * log_half
        g1 = lgamma(k + 1.0)
        g2 = lgamma(nu + k + 1.0)
        log_term = a - g1 - g2
        term = exp(log_term)
        total += term
        weighted += term * (2.0 * fabs(a) + 4.0 * (2 * k + nu) + 4.0 * (fabs(g1) + fabs(g2)) + 2.0 * fabs(log_term) + 2.0)
        k += 1
        log_next = (2 * k + nu) * log_half - lgamma(k + 1.0) - lgamma(nu + k + 1.0)
        ratio = quarter_sq / ((k + 1.0) * (nu + k + 1.0))
        if ratio < 1.0:
            tail = exp(log_next) / (1.0 - ratio)
            # stop once tail plus rounding fits, or once more terms cannot help
            if tail + EPS * (weighted + (k + 1.0) * total) <= tol or tail <= 1e-3 * tol:
                break
    return total, k, tail, EPS * (weighted + (k + 1.0) * total)


def gegenbauer(long l, double lam, double x):
    cdef double prev, cur, nxt
    cdef long j
    if l == 0:
        return 1.0
    prev = 1.0
    cur = 2.0 * lam * x
    for j in range(1, l):
        nxt = (2.0 * (j + lam) * x * cur - (j + 2.0 * lam - 1.0) * prev) / (j + 1.0)
        prev = cur
        cur = nxt
    return cur


def gegenbauer_sum(coeffs, double lam, x):
    cdef double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    xa = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros_like(xa)
    cdef double[::1] xv = xa.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t i, j
    cdef double xi, prev, cur, nxt, cur_norm, nxt_norm, total
    for i in range(xv.shape[0]):
        if n == 0:
            break
        xi = xv[i]
        total = c[0]
        if n > 1:
            prev = 1.0
            cur = 2.0 * lam * xi
            cur_norm = 2.0 * lam
            total += c[1] * (cur / cur_norm)
            for j in range(1, n - 1):
                nxt = (2.0 * (j + lam) * xi * cur - (j + 2.0 * lam - 1.0) * prev) / (j + 1.0)
                nxt_norm = cur_norm * (j + 2.0 * lam) / (j + 1.0)
                total += c[j + 1] * (nxt / nxt_norm)
                prev = cur
                cur = nxt
                cur_norm = nxt_norm
        ov[i] = total
    return out
