"""Pullback metrics g_t, the normalisation c(t), and IHKI certification.

On every compact space handled here (products of circles and spheres, possibly
rescaled) the heat-kernel diagonal is constant, so g_t is block-scalar in the
product frame:

    g_t^{A x B} = rho^B_{2t} g_t^A  (+)  rho^A_{2t} g_t^B.

Leaf blocks are g_t = lambda(t) g with lambda(t) = E(2t) / (n vol), where
E(t) = sum_l m_l mu_l e^{-mu_l t}.  Everything is carried as logarithms so that
large-time values (c(t) grows like e^{2 mu_1 t}) stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BudgetExceeded, DomainError, HypothesisViolated, UnsupportedSpace
from .heat_kernel import level_series
from .spaces import (
    Circle,
    Cone,
    Euclidean,
    Product,
    Rescaled,
    Sphere,
    addition_kernel,
    as_point,
    canonical,
    dimension,
    is_compact,
    level,
    sphere_multiplicity,
    volume,
)
from .specfun import gegenbauer, gegenbauer_at_one, gegenbauer_derivative

IHKI_THRESHOLD = 1e-8
DEFAULT_GRID_POINTS = 33
DEFAULT_RTOL = 1e-12

VERDICT_OK = "IHKI-consistent"
VERDICT_SINGLE = "single-time-only"
VERDICT_FAIL = "fails"


def flat_constant(n):
    """c_1 for R^n: g_t = c_1 t^{-(n+2)/2} g, with c_1 = 1 / (4 (8 pi)^{n/2})."""
    return 1.0 / (4.0 * (8.0 * math.pi) ** (0.5 * n))


def flat_lambda(n, t):
    return flat_constant(n) * t ** (-0.5 * (n + 2))


# ---------------------------------------------------------------------------
# log-space trace sums


def _relative_series(space, t, rtol, lower, power=0, shift=0.0):
    # a coarse pass fixes the scale, then the absolute tol is rtol * scale
    rough, _, _ = level_series(space, t, 1e-3 * lower, power, shift)
    value, _, _ = level_series(space, t, rtol * rough, power, shift)
    return value


def _leaf_log_sums(space, t, rtol):
    """log Z(t), log E(t) on a circle or sphere, each to relative accuracy ``rtol``."""
    z = _relative_series(space, t, rtol, 1.0)
    mu1, m1 = level(space, 1)
    # factor e^{-mu_1 t} out of E; the shifted sum is >= m1 mu1
    e_shift = _relative_series(space, t, rtol, m1 * mu1, power=1, shift=mu1)
    return math.log(z), math.log(e_shift) - mu1 * t


def log_trace_sums(space, t, rtol=DEFAULT_RTOL):
    """``(log Z(t), log E(t))`` for a compact space."""
    space = canonical(space)
    if isinstance(space, (Circle, Sphere)):
        return _leaf_log_sums(space, t, rtol)
    if isinstance(space, Rescaled):
        a2 = space.a**2
        lz, le = log_trace_sums(space.base, t / a2, rtol)
        return lz, le - math.log(a2)
    if isinstance(space, Product):
        lzl, lel = log_trace_sums(space.left, t, rtol)
        lzr, ler = log_trace_sums(space.right, t, rtol)
        return lzl + lzr, float(np.logaddexp(lel + lzr, lzl + ler))
    raise UnsupportedSpace(f"heat traces need a compact space, got {space}")


def _require_compact(space, what):
    if not is_compact(space):
        raise UnsupportedSpace(f"{what} needs a compact space, got {space}")


def c_of_t(space, t, tol=DEFAULT_RTOL):
    """c(t) = n vol / E(2t), the normalisation making c(t) g_t trace-free against g.

    ``tol`` is a relative tolerance (c(t) spans many orders of magnitude).
    """
    _require_compact(space, "c(t)")
    if not t > 0:
        raise DomainError("t must be positive")
    return math.exp(log_c_of_t(space, t, tol))


def log_c_of_t(space, t, tol=DEFAULT_RTOL):
    _, le = log_trace_sums(space, 2.0 * t, tol)
    return math.log(dimension(space) * volume(space)) - le


def log_c_rho(space, t, tol=DEFAULT_RTOL):
    """log of c(t) * rho_{2t} = n Z(2t) / E(2t); the volume cancels."""
    lz, le = log_trace_sums(space, 2.0 * t, tol)
    return math.log(dimension(space)) + lz - le


def diagonal_2t(space, t, tol=DEFAULT_RTOL):
    """rho_{2t} = Z(2t) / vol for a compact space."""
    lz, _ = log_trace_sums(space, 2.0 * t, tol)
    return math.exp(lz) / volume(space)


def large_time_ratio(space, t, tol=DEFAULT_RTOL):
    """t / (c(t) rho_{2t}), which tends to 0 as t -> infinity on closed manifolds."""
    return t * math.exp(-log_c_rho(space, t, tol))


# ---------------------------------------------------------------------------
# g_t


@dataclass(frozen=True)
class PullbackSample:
    """g_t at a point, relative to g, in the product orthonormal frame."""

    t: float
    point: object
    matrix: np.ndarray
    frame: tuple
    scalar: Optional[float] = None

    @property
    def blocks(self):
        out = {}
        for label, value in zip(self.frame, np.diag(self.matrix)):
            out.setdefault(label, float(value))
        return out


def _log_blocks(space, t, rtol):
    """``(log rho_{2t}, [(label, dim, log lambda_block)])``."""
    space = canonical(space)
    if isinstance(space, (Circle, Sphere)):
        lz, le = log_trace_sums(space, 2.0 * t, rtol)
        n, vol = dimension(space), volume(space)
        return lz - math.log(vol), [(str(space), n, le - math.log(n * vol))]
    if isinstance(space, Euclidean) or (isinstance(space, Cone) and _flat_cone(space)):
        n = dimension(space)
        return -0.5 * n * math.log(8.0 * math.pi * t), [(str(space), n, math.log(flat_lambda(n, t)))]
    if isinstance(space, Rescaled):
        a2 = space.a**2
        lr, blocks = _log_blocks(space.base, t / a2, rtol)
        shift = math.log(space.b * a2)
        return lr - math.log(space.b), [(f"rescaled({lbl})", d, v - shift) for lbl, d, v in blocks]
    if isinstance(space, Product):
        lra, ba = _log_blocks(space.left, t, rtol)
        lrb, bb = _log_blocks(space.right, t, rtol)
        return lra + lrb, [(l, d, v + lrb) for l, d, v in ba] + [(l, d, v + lra) for l, d, v in bb]
    raise HypothesisViolated(
        f"g_t on products needs factors with constant heat-kernel diagonal; {space} has none"
    )


def _flat_cone(space):
    link = canonical(space.link)
    return isinstance(link, Sphere) or (isinstance(link, Circle) and link.radius == 1.0)


def _expand(blocks, scale_log=0.0):
    labels, values = [], []
    for label, d, v in blocks:
        labels.extend([label] * d)
        values.extend([math.exp(v + scale_log)] * d)
    return np.diag(values), tuple(labels)


def pullback_matrix(space, t, point=None, tol=DEFAULT_RTOL):
    """g_t relative to g as a diagonal matrix in the product frame."""
    if not t > 0:
        raise DomainError("t must be positive")
    space = canonical(space)
    if point is not None:
        point = as_point(space, point)
    _, blocks = _log_blocks(space, t, tol)
    matrix, frame = _expand(blocks)
    diag = np.diag(matrix)
    scalar = float(diag[0]) if np.allclose(diag, diag[0], rtol=1e-12, atol=0.0) else None
    return PullbackSample(t, point, matrix, frame, scalar)


def pullback_scalar(space, t, tol=DEFAULT_RTOL):
    """lambda(t) with g_t = lambda(t) g on a homogeneous space (or R^n)."""
    space = canonical(space)
    if isinstance(space, Euclidean):
        return flat_lambda(space.dim, t)
    _require_compact(space, "pullback_scalar")
    sample = pullback_matrix(space, t, tol=tol)
    if sample.scalar is None:
        raise UnsupportedSpace(f"g_t on {space} is not a multiple of g; use pullback_matrix")
    return sample.scalar


def normalized_pullback(space, t, tol=DEFAULT_RTOL):
    """c(t) g_t relative to g (diagonal matrix), computed without overflow."""
    _, blocks = _log_blocks(space, t, tol)
    matrix, frame = _expand(blocks, log_c_of_t(space, t, tol))
    return matrix, frame


# ---------------------------------------------------------------------------
# IHKI


@dataclass
class ImmersionReport:
    t_grid: list
    c_values: list
    deviations: list
    sup_deviation: float
    verdict: str
    threshold: float
    witness: Optional[tuple] = None
    points: list = field(default_factory=list)


def sample_points(space, count=3, seed=0):
    """Deterministic sample points of a compact space."""
    space = canonical(space)
    rng = np.random.default_rng(seed)
    return [_random_point(space, rng) for _ in range(count)]


def _random_point(space, rng):
    if isinstance(space, Circle):
        return float(rng.uniform(0.0, 2.0 * math.pi))
    if isinstance(space, Sphere):
        v = rng.normal(size=space.dim + 1)
        return v / np.linalg.norm(v) * space.radius
    if isinstance(space, Product):
        return (_random_point(space.left, rng), _random_point(space.right, rng))
    if isinstance(space, Rescaled):
        return _random_point(space.base, rng)
    if isinstance(space, Euclidean):
        return tuple(rng.normal(size=space.dim))
    raise UnsupportedSpace(f"cannot sample points of {space}")


def default_grid(lo=0.05, hi=20.0, count=DEFAULT_GRID_POINTS):
    return list(np.geomspace(lo, hi, count))


def ihki_check(space, t_grid=None, threshold=IHKI_THRESHOLD, n_points=3, tol=DEFAULT_RTOL):
    """Test c(t) g_t = g on a t-grid.

    The deviation at each t is ``|c(t) g_t - g|_HS / sqrt(n)``, maximised over
    sample points.  The verdict is IHKI-consistent when every grid time
    passes, single-time-only when some but not all do, and fails otherwise.
    """
    _require_compact(space, "ihki_check")
    space = canonical(space)
    t_grid = default_grid() if t_grid is None else [float(t) for t in t_grid]
    if not t_grid or any(b < a for a, b in zip(t_grid, t_grid[1:])):
        raise DomainError("t_grid must be non-empty and ascending")
    n = dimension(space)
    points = sample_points(space, n_points)
    c_values, deviations = [], []
    witness = None
    for t in t_grid:
        c_values.append(math.exp(log_c_of_t(space, t, tol)))
        worst, worst_point = -1.0, None
        for p in points:
            # g_t is point-independent here; the loop records where it was sampled
            matrix, _ = normalized_pullback(space, t, tol)
            dev = float(np.linalg.norm(matrix - np.eye(n)) / math.sqrt(n))
            if dev > worst:
                worst, worst_point = dev, p
        deviations.append(worst)
        if worst > threshold and (witness is None or worst > witness[2]):
            witness = (t, worst_point, worst)
    passed = [d <= threshold for d in deviations]
    if all(passed):
        verdict = VERDICT_OK
    elif any(passed):
        verdict = VERDICT_SINGLE
    else:
        verdict = VERDICT_FAIL
    return ImmersionReport(
        t_grid, c_values, deviations, max(deviations), verdict, threshold, witness, points
    )


# ---------------------------------------------------------------------------
# eigenspace immersions


@dataclass(frozen=True)
class EigenmapReport:
    lam: float
    multiplicity: int
    on_sphere_deviation: float
    metric_deviation: float
    fd_metric_deviation: float


def _tangent_frame(x, rng):
    """Orthonormal basis of the tangent space at x on a round sphere."""
    n1 = x.size
    u = x / np.linalg.norm(x)
    basis = np.linalg.qr(np.column_stack([u, rng.normal(size=(n1, n1 - 1))]))[0]
    return basis[:, 1:].T


def _sphere_exp(x, v, s, k):
    """Geodesic from x (radius k) in unit tangent direction v, arclength s."""
    return math.cos(s / k) * x + k * math.sin(s / k) * v


def eigenspace_immersion(space, level_index=1, n_samples=16, seed=0, fd_step=1e-4):
    """Check that a rescaled eigenspace basis is an isometric immersion into a sphere.

    With Phi = sqrt(vol / m) (phi_1, ..., phi_m) over one eigenspace, reports
    sup | |Phi|^2 - 1 | and sup | n Phi^* g - mu g | over sample points.  The
    metric uses the exact derivative of the addition kernel; a central
    finite-difference evaluation of the same quantity is reported as a
    relative deviation alongside.
    """
    space = canonical(space)
    if not isinstance(space, (Circle, Sphere)):
        raise UnsupportedSpace("eigenspace immersions are implemented for circles and spheres")
    if level_index < 1:
        raise DomainError("level must be >= 1")
    mu, m = level(space, level_index)
    vol = volume(space)
    n = dimension(space)
    rng = np.random.default_rng(seed)
    on_sphere = metric = fd = 0.0
    if isinstance(space, Circle):
        r = space.radius
        for _ in range(n_samples):
            theta = rng.uniform(0.0, 2.0 * math.pi)
            diag = float(addition_kernel(space, level_index, 0.0))
            on_sphere = max(on_sphere, abs(vol / m * diag - 1.0))
            # d/ds1 d/ds2 cos(l (s1 - s2) / r) / (pi r) at s1 = s2
            hess = level_index**2 / (r * r) / (math.pi * r)
            metric = max(metric, abs(n * vol / m * hess - mu))
            h = fd_step * r

            def kern(a, b):
                return float(addition_kernel(space, level_index, abs((theta + a / r) - (theta + b / r)) * r))

            fd_hess = (kern(h, h) - kern(h, -h) - kern(-h, h) + kern(-h, -h)) / (4 * h * h)
            fd = max(fd, abs(n * vol / m * fd_hess - mu) / mu)
        return EigenmapReport(mu, m, on_sphere, metric, fd)

    k = space.radius
    lam = 0.5 * (n - 1)
    norm1 = gegenbauer_at_one(level_index, lam)
    scale = m / vol / norm1
    for _ in range(n_samples):
        x = rng.normal(size=n + 1)
        x = x / np.linalg.norm(x) * k
        diag = scale * gegenbauer(level_index, lam, float(np.dot(x, x)) / k**2)
        on_sphere = max(on_sphere, abs(vol / m * diag - 1.0))
        frame = _tangent_frame(x, rng)
        # K(x, y) = scale C(<x,y>/k^2); mixed derivative at y = x in tangent directions
        # = scale (C''(1) <v,x><x,w>/k^4 + C'(1) <v,w>/k^2)
        c1 = gegenbauer_derivative(level_index, lam, 1.0)
        c2 = 2.0 * lam * gegenbauer_derivative(level_index - 1, lam + 1.0, 1.0) if level_index >= 2 else 0.0
        hess = scale * (
            c2 * np.outer(frame @ x, frame @ x) / k**4 + c1 * (frame @ frame.T) / k**2
        )
        metric = max(metric, float(np.abs(n * vol / m * hess - mu * np.eye(n)).max()))
        v = frame[0]
        h = fd_step * k

        def kern(a, b):
            pa, pb = _sphere_exp(x, v, a, k), _sphere_exp(x, v, b, k)
            return scale * gegenbauer(level_index, lam, float(np.dot(pa, pb)) / k**2)

        fd_hess = (kern(h, h) - kern(h, -h) - kern(-h, h) + kern(-h, -h)) / (4 * h * h)
        fd = max(fd, abs(n * vol / m * fd_hess - mu) / mu)
    return EigenmapReport(mu, m, on_sphere, metric, fd)


# ---------------------------------------------------------------------------
# small-time asymptotics and trace identities


@dataclass(frozen=True)
class AsymptoticFit:
    constant: float
    slope: float
    expected_slope: float
    t_values: tuple
    f_values: tuple


def normalized_flat_ratio(space, t, tol=DEFAULT_RTOL):
    """F(t) = 4 (8 pi)^{n/2} t^{(n+2)/2} lambda(t); identically 1 on R^n."""
    space = canonical(space)
    n = dimension(space)
    return pullback_scalar(space, t, tol) / flat_lambda(n, t)


def small_t_asymptotics(space, t_window=None, fit_points=8):
    """Least-squares line through F(t) on a small-time window.

    For a round sphere S^n(k) the intercept should be 1 and the slope
    (n-1)(n-2) / (3 k^2).
    """
    space = canonical(space)
    if fit_points < 4:
        raise DomainError("need at least 4 fit points")
    if isinstance(space, Euclidean):
        scale, expected = 1.0, 0.0
    elif isinstance(space, Sphere):
        n, k = space.dim, space.radius
        scale, expected = k * k, (n - 1) * (n - 2) / (3.0 * k * k)
    else:
        raise UnsupportedSpace("small-time fits are implemented for spheres and R^n")
    lo, hi = (1e-3 * scale, 1e-2 * scale) if t_window is None else t_window
    if isinstance(space, Sphere) and not (1e-3 * scale * (1 - 1e-12) <= lo < hi <= 1e-1 * scale * (1 + 1e-12)):
        raise BudgetExceeded(
            f"t-window [{lo}, {hi}] is outside the supported regime [1e-3, 1e-1] k^2"
        )
    ts = np.linspace(lo, hi, fit_points)
    fs = np.array([normalized_flat_ratio(space, t) for t in ts])
    design = np.column_stack([np.ones_like(ts), ts])
    (constant, slope), *_ = np.linalg.lstsq(design, fs, rcond=None)
    return AsymptoticFit(float(constant), float(slope), expected, tuple(ts), tuple(fs))


def trace_derivative_check(space, t, h=1e-4, tol=DEFAULT_RTOL):
    """|central difference of rho_{2t} in t + 2n / c(t)|.

    The identity d/dt rho_{2t} = -2 n / c(t) holds on any compact space with
    constant diagonal; the defect measures the finite-difference error.
    """
    _require_compact(space, "trace_derivative_check")
    if not t > h > 0:
        raise DomainError("need t > h > 0")
    n = dimension(space)
    up = diagonal_2t(space, t + h, tol)
    down = diagonal_2t(space, t - h, tol)
    return abs((up - down) / (2.0 * h) + 2.0 * n / c_of_t(space, t, tol))
