"""Heat kernels and heat traces on model spaces with certified truncation.

Compact pieces (circles, spheres) are summed level by level through their
addition theorems; the truncation point comes from a geometric bound on the
level terms, valid because the ratio of consecutive terms
``m_{l+1} mu_{l+1}^p e^{-mu_{l+1} t} / (m_l mu_l^p e^{-mu_l t})`` is
non-increasing for ``l >= 1``.  Products factor, rescalings follow
``rho~(x, y, t) = b^{-1} rho(x, y, t / a^2)``, and cones use the Bessel series
over the link spectrum.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _core
from .errors import BudgetExceeded, DomainError, RangeError, UnsupportedSpace
from .spaces import (
    Circle,
    Cone,
    Euclidean,
    HalfSpace,
    Product,
    Rescaled,
    Sphere,
    addition_kernel,
    as_point,
    canonical,
    dimension,
    distance,
    is_compact,
    level,
    unit_ball_volume,
    volume,
)
from .specfun import bessel_i_raw

EPS = _core.EPS
DEFAULT_MAX_LEVELS = 100_000


def max_levels():
    """Series budget, overridable with ``HEATLAB_MAX_LEVELS``."""
    return int(os.environ.get("HEATLAB_MAX_LEVELS", DEFAULT_MAX_LEVELS))


@dataclass(frozen=True)
class TruncationCertificate:
    terms_used: int
    tail_bound: float
    target_tol: float


@dataclass(frozen=True)
class KernelValue:
    value: float
    cert: TruncationCertificate


@dataclass(frozen=True)
class TraceSums:
    """Z(t) = sum m_l e^{-mu_l t} and E(t) = sum m_l mu_l e^{-mu_l t} with bounds."""

    z: float
    z_bound: float
    e: float
    e_bound: float
    terms_used: int


def _check_t(t, tol):
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")


# ---------------------------------------------------------------------------
# level series on circles and spheres


def _level_term(space, l, t, power, shift):
    mu, m = level(space, l)
    if power and mu == 0.0:
        return 0.0
    return m * mu**power * math.exp(-(mu - shift) * t)


def level_series(space, t, tol, power=0, shift=0.0):
    """Certified ``sum_l m_l mu_l^power e^{-(mu_l - shift) t}`` on a circle or sphere.

    Returns ``(total, levels_used, bound)``.  ``shift`` factors a known
    exponential out of the sum so deep large-time tails stay representable.
    """
    budget = max_levels()
    total = 0.0
    l = 0
    cur = _level_term(space, 0, t, power, shift)
    while True:
        total += cur
        l += 1
        nxt = _level_term(space, l, t, power, shift)
        if l >= 1 and nxt > 0.0:
            after = _level_term(space, l + 1, t, power, shift)
            q = after / nxt
            if q < 1.0:
                tail = nxt / (1.0 - q)
                rounding = 2.0 * EPS * (l + 1) * total
                if tail + rounding <= tol:
                    return total, l, tail + rounding
                if rounding > tol:
                    raise BudgetExceeded(
                        f"tolerance {tol:g} is below the rounding floor {rounding:g}",
                        TruncationCertificate(l, tail + rounding, tol),
                    )
        elif l >= 2 and nxt == 0.0:
            # every later term underflows as well
            rounding = 2.0 * EPS * (l + 1) * total
            if rounding <= tol:
                return total, l, rounding
        if l >= budget:
            raise BudgetExceeded(
                f"level series on {space} at t={t} needs more than {budget} levels",
                TruncationCertificate(l, math.inf, tol),
            )
        cur = nxt


def _kernel_levels(space, t, tol):
    """Number of levels so that the kernel tail (<= trace tail / vol) is below tol/2."""
    vol = volume(space)
    z, count, _ = level_series(space, t, 0.5 * tol * vol)
    return count, z / vol


def kernel_profile(space, d, t, tol=1e-12):
    """Heat kernel of a circle or sphere as a function of geodesic distance.

    ``d`` may be an array; returns ``(values, certificate)``.  Rescaled
    circles/spheres are accepted.
    """
    _check_t(t, tol)
    space = canonical(space)
    if isinstance(space, Rescaled):
        vals, cert = kernel_profile(space.base, np.asarray(d) / space.a, t / space.a**2, tol * space.b)
        return vals / space.b, TruncationCertificate(
            cert.terms_used, cert.tail_bound / space.b, tol
        )
    if not isinstance(space, (Circle, Sphere)):
        raise UnsupportedSpace(f"distance profiles need a circle or sphere, got {space}")
    d = np.asarray(d, dtype=float)
    count, diag = _kernel_levels(space, t, tol)
    vol = volume(space)
    rounding = 4.0 * EPS * (count + 1) ** 2 * diag
    if rounding > 0.5 * tol:
        raise BudgetExceeded(
            f"tolerance {tol:g} is below the rounding floor {2 * rounding:g}",
            TruncationCertificate(count, math.inf, tol),
        )
    mus = np.empty(count)
    mults = np.empty(count)
    for l in range(count):
        mus[l], mults[l] = level(space, l)
    if isinstance(space, Circle):
        r = space.radius
        coeffs = np.exp(-mus * t) / (math.pi * r)
        coeffs[0] = 1.0 / (2.0 * math.pi * r)
        js = np.arange(count)
        vals = np.cos(np.multiply.outer(d, js) / r) @ coeffs
    else:
        lam = 0.5 * (space.dim - 1)
        coeffs = np.exp(-mus * t) * mults / vol
        u = np.clip(np.cos(d / space.radius), -1.0, 1.0)
        vals = _core.gegenbauer_sum(coeffs, lam, u.reshape(-1)).reshape(u.shape)
    tail = level_series_tail_for_kernel(space, t, count)
    return vals, TruncationCertificate(count, tail + rounding, tol)


def level_series_tail_for_kernel(space, t, count):
    """Bound on sum_{l >= count} m_l e^{-mu_l t} / vol (sup of the addition kernels)."""
    nxt = _level_term(space, count, t, 0, 0.0)
    if nxt == 0.0:
        return 0.0
    after = _level_term(space, count + 1, t, 0, 0.0)
    q = after / nxt
    if q >= 1.0:
        return math.inf
    return nxt / (1.0 - q) / volume(space)


# ---------------------------------------------------------------------------
# closed forms


def gaussian(n, dist_sq, t):
    return (4.0 * math.pi * t) ** (-0.5 * n) * math.exp(-dist_sq / (4.0 * t))


def _closed(value, tol):
    return KernelValue(value, TruncationCertificate(1, 4.0 * EPS * abs(value), tol))


# ---------------------------------------------------------------------------
# cones


def _cone_kernel(space, x, y, t, tol):
    link = canonical(space.link)
    n = dimension(link) + 1
    alpha = 0.5 * (2 - n)
    (r1, p1), (r2, p2) = x, y
    vol_link = volume(link)
    expo = -(r1 * r1 + r2 * r2) / (4.0 * t)
    z = r1 * r2 / (2.0 * t)
    if z == 0.0:
        # only the constant link mode survives: (r1 r2)^alpha I_{|alpha|}(z) -> (4t)^alpha / Gamma(1 - alpha)
        value = (4.0 * t) ** alpha / math.gamma(1.0 - alpha) * math.exp(expo) / (2.0 * t) / vol_link
        return _closed(value, tol)
    pref = math.exp(alpha * math.log(r1 * r2) + expo) / (2.0 * t)
    if pref == 0.0:
        raise RangeError(f"cone kernel prefactor underflows at r1={r1}, r2={r2}, t={t}")
    d_link = distance(link, p1, p2)
    half_z = 0.5 * z

    def envelope(j):
        # m_j (z/2)^nu_j / Gamma(nu_j + 1): dominates I_{nu_j}(z) up to exp(z^2 / (4(nu_j+1)))
        mu, m = level(link, j)
        nu = math.sqrt(alpha * alpha + mu)
        return m * math.exp(nu * math.log(half_z) - math.lgamma(nu + 1.0)), nu

    total = 0.0
    err = 0.0
    abs_sum = 0.0
    budget = max_levels()
    j = 0
    while True:
        mu, m = level(link, j)
        nu = math.sqrt(alpha * alpha + mu)
        sup_k = m / vol_link
        k_val = float(addition_kernel(link, j, d_link))
        tol_j = 0.5 * tol * (6.0 / math.pi**2) / (j + 1) ** 2 / (pref * sup_k)
        i_val, _, i_bound = bessel_i_raw(nu, z, tol_j)
        term = pref * i_val * k_val
        total += term
        err += pref * i_bound * sup_k
        abs_sum += pref * i_val * sup_k
        j += 1
        c_next, nu_next = envelope(j)
        c_after, _ = envelope(j + 1)
        if c_next == 0.0:
            tail = 0.0
        elif c_after < c_next:
            tail = pref / vol_link * math.exp(z * z / (4.0 * (nu_next + 1.0))) * c_next / (1.0 - c_after / c_next)
        else:
            tail = math.inf
        rounding = 4.0 * EPS * (j + 1) * abs_sum
        bound = tail + err + rounding
        if tail <= 0.5 * tol:
            if bound > tol:
                raise BudgetExceeded(
                    f"cone kernel cannot be certified to {tol:g} (best {bound:g})",
                    TruncationCertificate(j, bound, tol),
                )
            return KernelValue(total, TruncationCertificate(j, bound, tol))
        if j >= budget:
            raise BudgetExceeded(
                f"cone kernel needs more than {budget} link levels",
                TruncationCertificate(j, bound, tol),
            )


# ---------------------------------------------------------------------------
# products


def _product_certified(eval_left, eval_right, tol):
    """Combine two certified factors a, b into a*b with bound <= tol."""
    tl = tr = 0.25 * tol
    for _ in range(8):
        a, da, na = eval_left(tl)
        b, db, nb = eval_right(tr)
        bound = abs(a) * db + abs(b) * da + da * db
        if bound <= tol:
            return a * b, bound, na + nb
        tl = 0.25 * tol / (abs(b) + 1.0)
        tr = 0.25 * tol / (abs(a) + 1.0)
    raise BudgetExceeded(
        f"product kernel cannot be certified to {tol:g}",
        TruncationCertificate(na + nb, bound, tol),
    )


def _as_triplet(kv):
    return kv.value, kv.cert.tail_bound, kv.cert.terms_used


# ---------------------------------------------------------------------------
# public operations


def evaluate(space, x, y, t, tol=1e-10):
    """Heat kernel rho(x, y, t) with an absolute error certificate ``<= tol``."""
    _check_t(t, tol)
    space = canonical(space)
    x, y = as_point(space, x), as_point(space, y)
    return _evaluate(space, x, y, t, tol)


def _evaluate(space, x, y, t, tol):
    if isinstance(space, Euclidean):
        dsq = sum((a - b) ** 2 for a, b in zip(x, y))
        return _closed(gaussian(space.dim, dsq, t), tol)
    if isinstance(space, HalfSpace):
        dsq = sum((a - b) ** 2 for a, b in zip(x, y))
        dsq_ref = sum((a - b) ** 2 for a, b in zip(x[:-1], y[:-1])) + (x[-1] + y[-1]) ** 2
        return _closed(gaussian(space.dim, dsq, t) + gaussian(space.dim, dsq_ref, t), tol)
    if isinstance(space, (Circle, Sphere)):
        d = distance(space, x, y)
        vals, cert = kernel_profile(space, d, t, tol)
        return KernelValue(float(vals), cert)
    if isinstance(space, Product):
        value, bound, terms = _product_certified(
            lambda e: _as_triplet(_evaluate(space.left, x[0], y[0], t, e)),
            lambda e: _as_triplet(_evaluate(space.right, x[1], y[1], t, e)),
            tol,
        )
        return KernelValue(value, TruncationCertificate(terms, bound, tol))
    if isinstance(space, Cone):
        return _cone_kernel(space, x, y, t, tol)
    if isinstance(space, Rescaled):
        base = _evaluate(space.base, x, y, t / space.a**2, tol * space.b)
        return KernelValue(
            base.value / space.b,
            TruncationCertificate(base.cert.terms_used, base.cert.tail_bound / space.b, tol),
        )
    raise UnsupportedSpace(f"not a model space: {space!r}")


def trace_sums(space, t, tol=1e-12):
    """Certified Z(t) and E(t) for a compact space (absolute tolerance on each)."""
    _check_t(t, tol)
    space = canonical(space)
    if not is_compact(space):
        raise UnsupportedSpace(f"heat traces need a compact space, got {space}")
    return _trace_sums(space, t, tol)


def _trace_sums(space, t, tol):
    if isinstance(space, (Circle, Sphere)):
        z, nz, bz = level_series(space, t, tol)
        e, ne, be = level_series(space, t, tol, power=1)
        return TraceSums(z, bz, e, be, max(nz, ne))
    if isinstance(space, Rescaled):
        a2 = space.a**2
        base = _trace_sums(space.base, t / a2, min(tol, tol * a2))
        return TraceSums(base.z, base.z_bound, base.e / a2, base.e_bound / a2, base.terms_used)
    if isinstance(space, Product):
        rough_l = _trace_sums(space.left, t, 1e-3)
        rough_r = _trace_sums(space.right, t, 1e-3)
        scale = 2.0 * max(rough_l.z, rough_l.e, rough_r.z, rough_r.e) + 1.0
        sub = tol / (8.0 * scale)
        L = _trace_sums(space.left, t, sub)
        R = _trace_sums(space.right, t, sub)
        z = L.z * R.z
        zb = abs(L.z) * R.z_bound + abs(R.z) * L.z_bound + L.z_bound * R.z_bound
        e = L.e * R.z + L.z * R.e
        eb = (
            abs(L.e) * R.z_bound + abs(R.z) * L.e_bound + L.e_bound * R.z_bound
            + abs(L.z) * R.e_bound + abs(R.e) * L.z_bound + L.z_bound * R.e_bound
        )
        return TraceSums(z, zb, e, eb, L.terms_used + R.terms_used)
    raise UnsupportedSpace(f"heat traces need a compact space, got {space}")


def heat_trace(space, t, tol=1e-12):
    """Z(t) = sum_l m_l e^{-mu_l t}, certified to ``tol``."""
    sums = trace_sums(space, t, tol)
    if sums.z_bound > tol:
        raise BudgetExceeded(
            f"heat trace bound {sums.z_bound:g} exceeds {tol:g}",
            TruncationCertificate(sums.terms_used, sums.z_bound, tol),
        )
    return sums.z


def heat_trace_certified(space, t, tol=1e-12):
    sums = trace_sums(space, t, tol)
    return KernelValue(sums.z, TruncationCertificate(sums.terms_used, sums.z_bound, tol))


def _has_flat_cone(space):
    link = canonical(space.link)
    return (isinstance(link, Circle) and link.radius == 1.0) or isinstance(link, Sphere)


def diagonal(space, p=None, t=1.0, tol=1e-12):
    """rho(p, p, t).  ``p`` may be omitted where the diagonal is constant."""
    _check_t(t, tol)
    space = canonical(space)
    if is_compact(space):
        return heat_trace(space, t, tol * volume(space)) / volume(space)
    if isinstance(space, Euclidean):
        return (4.0 * math.pi * t) ** (-0.5 * space.dim)
    if isinstance(space, Cone) and _has_flat_cone(space):
        n = dimension(space)
        return n * unit_ball_volume(n) / volume(space.link) * (4.0 * math.pi * t) ** (-0.5 * n)
    if isinstance(space, Rescaled):
        return diagonal(space.base, p, t / space.a**2, tol * space.b) / space.b
    if isinstance(space, Product):
        pl, pr = (None, None) if p is None else p
        return diagonal(space.left, pl, t, tol) * diagonal(space.right, pr, t, tol)
    if p is None:
        raise DomainError(f"the diagonal of {space} depends on the point; pass p")
    return evaluate(space, p, p, t, tol).value


def has_constant_diagonal(space):
    space = canonical(space)
    if is_compact(space) or isinstance(space, Euclidean):
        return True
    if isinstance(space, Cone):
        return _has_flat_cone(space)
    if isinstance(space, Rescaled):
        return has_constant_diagonal(space.base)
    if isinstance(space, Product):
        return has_constant_diagonal(space.left) and has_constant_diagonal(space.right)
    return False


def gaussian_envelope_report(space, t, n_pairs=64, seed=0):
    """Spread of log(rho(x, y, t) vol(B_sqrt(t))) + d^2/(4t) over random pairs on S^2(k).

    Diagnostic only: Gaussian two-sided bounds hold with unspecified
    constants, so nothing here is asserted.
    """
    space = canonical(space)
    if not (isinstance(space, Sphere) and space.dim == 2):
        raise UnsupportedSpace("envelope report is implemented for 2-spheres")
    k = space.radius
    rng = np.random.default_rng(seed)
    d = rng.uniform(0.0, math.pi * k, n_pairs)
    vals, _ = kernel_profile(space, d, t, 1e-12)
    ball = 2.0 * math.pi * k * k * (1.0 - math.cos(min(math.sqrt(t) / k, math.pi)))
    logs = np.log(np.maximum(vals, 1e-300) * ball) + d * d / (4.0 * t)
    return {"t": t, "min": float(logs.min()), "max": float(logs.max()), "spread": float(np.ptp(logs))}
