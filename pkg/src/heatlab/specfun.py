"""Special functions used by the kernel formulas.

Modified Bessel functions of the first kind are summed from their ascending
series with a certified tail; Gegenbauer polynomials come from the
three-term recurrence.
"""

import math
from dataclasses import dataclass

from . import _core
from .errors import BudgetExceeded, DomainError, RangeError

#: Supported domain of :func:`bessel_i` (ascending series only).
BESSEL_Z_MAX = 50.0
BESSEL_NU_MAX = 200.0
BESSEL_MAX_TERMS = 10_000


@dataclass(frozen=True)
class SeriesEval:
    """A truncated series value with an absolute error bound."""

    value: float
    terms_used: int
    tail_bound: float


def log_gamma(x):
    """Natural log of the Gamma function for ``x > 0``."""
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"log_gamma needs a finite positive argument, got {x!r}")
    return math.lgamma(x)


def _check_bessel_args(nu, z, tol):
    if not (math.isfinite(nu) and math.isfinite(z)):
        raise DomainError("bessel_i needs finite nu and z")
    if nu < 0 or z < 0:
        raise DomainError(f"bessel_i needs nu >= 0 and z >= 0, got nu={nu}, z={z}")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    if z > BESSEL_Z_MAX or nu > BESSEL_NU_MAX:
        raise RangeError(
            f"bessel_i supports z in [0, {BESSEL_Z_MAX}] and nu in [0, {BESSEL_NU_MAX}];"
            f" got nu={nu}, z={z}"
        )


def bessel_i(nu, z, tol=1e-12):
    """Modified Bessel function I_nu(z) with a certified absolute error.

    Parameters
    ----------
    nu, z : float
        Order and argument, ``0 <= z <= 50`` and ``0 <= nu <= 200``.
    tol : float
        Absolute tolerance on the returned value.

    Returns
    -------
    SeriesEval
        ``tail_bound`` covers the discarded series tail plus a floating-point
        accumulation allowance, and is ``<= tol``.
    """
    _check_bessel_args(nu, z, tol)
    value, terms, tail, rounding = _core.bessel_i_series(
        float(nu), float(z), float(tol), BESSEL_MAX_TERMS
    )
    bound = tail + rounding
    if bound > tol:
        raise BudgetExceeded(
            f"I_{nu}({z}) cannot be certified to {tol:g} (best bound {bound:g})",
            SeriesEval(value, terms, bound),
        )
    return SeriesEval(value, terms, bound)


def bessel_i_raw(nu, z, tol):
    """Like :func:`bessel_i` but returns ``(value, terms, bound)`` without raising
    when ``tol`` is below the rounding floor; callers aggregate bounds."""
    _check_bessel_args(nu, z, tol)
    value, terms, tail, rounding = _core.bessel_i_series(
        float(nu), float(z), float(tol), BESSEL_MAX_TERMS
    )
    return value, terms, tail + rounding


def gegenbauer(l, lam, x):
    """Gegenbauer polynomial C_l^lam(x), ``l >= 0``, ``lam > 0``."""
    if l < 0 or int(l) != l:
        raise DomainError(f"degree must be a non-negative integer, got {l!r}")
    if not lam > 0:
        raise DomainError(f"lam must be positive, got {lam!r}")
    return _core.gegenbauer(int(l), float(lam), float(x))


def gegenbauer_at_one(l, lam):
    """C_l^lam(1) = binom(l + 2 lam - 1, l)."""
    return math.exp(math.lgamma(l + 2 * lam) - math.lgamma(l + 1) - math.lgamma(2 * lam))


def gegenbauer_derivative(l, lam, x):
    """d/dx C_l^lam(x) = 2 lam C_{l-1}^{lam+1}(x)."""
    if l == 0:
        return 0.0
    return 2.0 * lam * gegenbauer(l - 1, lam + 1.0, x)
