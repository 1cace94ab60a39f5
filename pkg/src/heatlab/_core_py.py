"""Pure-Python implementations of the hot series kernels.

These mirror ``_core_ext.pyx`` function for function and are used when the
compiled extension is unavailable (or when ``HEATLAB_BACKEND=python``).
"""

import math

import numpy as np

EPS = 2.220446049250313e-16
LN2 = math.log(2.0)


def bessel_i_series(nu, z, tol, max_terms):
    """Sum the ascending series of I_nu(z) until the geometric tail is <= tol.

    Returns ``(value, terms_used, truncation_tail, rounding_bound)``.  The
    tail after ``K`` terms is bounded by ``T_K / (1 - q_K)`` where
    ``q_K = (z/2)^2 / ((K+1)(nu+K+1))`` dominates every later term ratio.
    The rounding bound charges each term for the error of its logarithm
    (proportional to the magnitudes of the pieces being combined) plus the
    error of the running sum.  When ``max_terms`` is hit the current tail is
    returned unchanged.
    """
    if z == 0.0:
        return (1.0 if nu == 0.0 else 0.0), 1, 0.0, 0.0
    half = 0.5 * z
    log_half = math.log(z) - LN2  # z / 2 may underflow for subnormal z
    quarter_sq = half * half
    total = 0.0
    weighted = 0.0
    k = 0
    tail = math.inf
    while k < max_terms:
        a = (2 * k + nu) * log_half
        g1, g2 = math.lgamma(k + 1.0), math.lgamma(nu + k + 1.0)
        log_term = a - g1 - g2
        term = math.exp(log_term)
        total += term
        weighted += term * (2.0 * abs(a) + 4.0 * (2 * k + nu) + 4.0 * (abs(g1) + abs(g2)) + 2.0 * abs(log_term) + 2.0)
        k += 1
        log_next = (2 * k + nu) * log_half - math.lgamma(k + 1.0) - math.lgamma(nu + k + 1.0)
        ratio = quarter_sq / ((k + 1.0) * (nu + k + 1.0))
        if ratio < 1.0:
            tail = math.exp(log_next) / (1.0 - ratio)
            # stop once tail plus rounding fits, or once more terms cannot help
            if tail + EPS * (weighted + (k + 1.0) * total) <= tol or tail <= 1e-3 * tol:
                break
    rounding = EPS * (weighted + (k + 1.0) * total)
    return total, k, tail, rounding


def gegenbauer(l, lam, x):
    """C_l^lam(x) by the three-term recurrence."""
    if l == 0:
        return 1.0
    prev = 1.0
    cur = 2.0 * lam * x
    for j in range(1, l):
        nxt = (2.0 * (j + lam) * x * cur - (j + 2.0 * lam - 1.0) * prev) / (j + 1.0)
        prev, cur = cur, nxt
    return cur


def gegenbauer_sum(coeffs, lam, x):
    """Evaluate sum_l coeffs[l] * C_l^lam(x) / C_l^lam(1) for an array ``x``.

    Terms are accumulated in level order (no Clenshaw) so that appending
    levels only appends terms to the running sum.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    if coeffs.size == 0:
        return total
    prev = np.ones_like(x)
    prev_norm = 1.0
    total += coeffs[0]
    if coeffs.size == 1:
        return total
    cur = 2.0 * lam * x
    cur_norm = 2.0 * lam
    total += coeffs[1] * (cur / cur_norm)
    for j in range(1, coeffs.size - 1):
        nxt = (2.0 * (j + lam) * x * cur - (j + 2.0 * lam - 1.0) * prev) / (j + 1.0)
        nxt_norm = cur_norm * (j + 2.0 * lam) / (j + 1.0)
        total += coeffs[j + 1] * (nxt / nxt_norm)
        prev, cur = cur, nxt
        prev_norm, cur_norm = cur_norm, nxt_norm
    return total
