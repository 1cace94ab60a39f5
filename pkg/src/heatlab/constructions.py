"""Closed-form constructions: the half-space normal component of g_t and the
flat pullback constant.

On the half-space R^n_+ with the Neumann (reflection) kernel, the normal-normal
component of g_t at height x_n is

    c_1 t^{-(n+2)/2} (1 - e^{-u} + 2 u e^{-u}),    u = x_n^2 / (2t),

where c_1 = 1 / (4 (8 pi)^{n/2}) is the whole-space constant.  It equals the
interior value c_1 t^{-(n+2)/2} far from the boundary and vanishes on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError
from .pullback import flat_constant


@dataclass(frozen=True)
class HalfSpaceSample:
    x_n: float
    t: float
    n: int
    value: float


def _check(n, x_n, t):
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n!r}")
    if not x_n > 0:
        raise DomainError(f"x_n must be positive, got {x_n!r}")
    if not t > 0:
        raise DomainError(f"t must be positive, got {t!r}")


def halfspace_profile(u):
    """Bracketed profile 1 - e^{-u} + 2u e^{-u} as a function of u = x_n^2 / 2t.

    It rises from 0 at the boundary, peaks at u = 3/2 and relaxes to 1.
    """
    u = np.asarray(u, dtype=float)
    e = np.exp(-u)
    return -np.expm1(-u) + 2.0 * u * e


def halfspace_gt_normal(n, x_n, t):
    """g_t(d/dx_n, d/dx_n) on R^n_+ with the Neumann heat kernel.

    Parameters
    ----------
    n : int
        Dimension of the half-space.
    x_n : float
        Distance to the boundary, ``> 0``.
    t : float
        Time, ``> 0``.

    Returns
    -------
    HalfSpaceSample
    """
    _check(n, x_n, t)
    u = x_n * x_n / (2.0 * t)
    value = flat_constant(n) * t ** (-0.5 * (n + 2)) * float(halfspace_profile(u))
    return HalfSpaceSample(float(x_n), float(t), int(n), value)


def halfspace_gt_normal_quadrature(n, x_n, t, epsabs=1e-14, epsrel=1e-12):
    """The same component by direct quadrature of ``int_{R^n_+} (d_{x_n} rho)^2 dy``.

    The integrand depends on the height ``y_n`` and on the tangential distance
    ``|x' - y'|`` only, so the integral is two-dimensional (one-dimensional
    for ``n = 1``).
    """
    _check(n, x_n, t)
    x = float(x_n)
    pref = (4.0 * math.pi * t) ** (-float(n)) / (4.0 * t * t)

    def normal(y):
        a = (x - y) * math.exp(-((x - y) ** 2) / (4.0 * t))
        b = (x + y) * math.exp(-((x + y) ** 2) / (4.0 * t))
        return (a + b) ** 2

    reach = x + 40.0 * math.sqrt(t)
    if n == 1:
        val, _ = integrate.quad(normal, 0.0, reach, points=[x], epsabs=epsabs, epsrel=epsrel, limit=200)
        return pref * val
    sphere_area = 2.0 * math.pi ** (0.5 * (n - 1)) / math.gamma(0.5 * (n - 1))

    def tangential(rho):
        return sphere_area * rho ** (n - 2) * math.exp(-rho * rho / (2.0 * t))

    # integrate in (y_n, rho); the integrand factorizes but is treated as a 2-D domain
    val, _ = integrate.dblquad(
        lambda rho, y: normal(y) * tangential(rho),
        0.0,
        reach,
        0.0,
        40.0 * math.sqrt(t),
        epsabs=epsabs,
        epsrel=epsrel,
    )
    return pref * val


def flat_constant_by_quadrature(n, nodes=40):
    """t^{(n+2)/2} int_{R^n} (d_{x_1} rho)^2 dy on R^n, by Gauss-Hermite quadrature.

    The integrand separates into a first-moment factor along ``x_1`` and
    ``n - 1`` copies of ``int g^2`` along the other axes.  Evaluated at t = 1.
    """
    if int(n) != n or not 1 <= n <= 6:
        raise DomainError(f"flat_constant_by_quadrature supports 1 <= n <= 6, got {n!r}")
    u, w = np.polynomial.hermite.hermgauss(nodes)
    # 1-D Gaussian g(s) = (4 pi)^{-1/2} e^{-s^2/4}; g^2 = e^{-s^2/2} / (4 pi); s = sqrt(2) u
    s = math.sqrt(2.0) * u
    jac = math.sqrt(2.0) / (4.0 * math.pi)
    square = jac * float(np.sum(w))
    moment = jac * float(np.sum(w * (s / 2.0) ** 2))
    return moment * square ** (n - 1)
