"""Scripted reproductions: the circle-times-sphere single-time immersion, the
torus/sphere theta comparison, and the scenario runner behind ``heatlab run``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from . import constructions, heat_kernel, pullback
from .errors import CalibrationFailed, DomainError, HeatlabError
from .quadrature import circle_rule
from .spaces import (
    Circle,
    Cone,
    Euclidean,
    Product,
    Sphere,
    canonical,
    dimension,
    level,
    parse_space,
    volume,
)

SCAN_POINTS = 64
CALIBRATION_TOL = 1e-12
WITNESS_THRESHOLD = 1e-3
EXAMPLE_GRID = (0.5, 1.0, 2.0)

SCENARIOS = (
    "ihki-sphere",
    "ihki-product",
    "example-4-5",
    "cone-flatness",
    "asymptotics",
    "trace-identity",
    "takahashi",
    "halfspace",
    "theta-table",
    "s1xr",
)


# ---------------------------------------------------------------------------
# circle x sphere calibration


def _log_diagonal(space, t):
    lz, _ = pullback.log_trace_sums(space, t)
    return lz - math.log(volume(space))


def diagonal_power_defect(left, right, t):
    """Relative gap in (rho^A_t)^{dim B} = (rho^B_t)^{dim A}."""
    a = dimension(right) * _log_diagonal(left, t)
    b = dimension(left) * _log_diagonal(right, t)
    return float(-np.expm1(-abs(a - b)))


@dataclass
class Example45Result:
    r: float
    s: float
    calibration_residual: float
    t_star: float
    product_deviation_at_t_star: float
    witness_t: float
    witness_defect: float
    verdict: str = ""
    grid_deviations: list = field(default_factory=list)
    probes: list = field(default_factory=list)
    control_defect: float = 0.0
    scan: list = field(default_factory=list)


def calibration_gap(r, s, t=1.0):
    """log(c rho_{2t}) on S^2(s) minus the same on S^1(r) (a relative residual)."""
    return pullback.log_c_rho(Sphere(2, s), t) - pullback.log_c_rho(Circle(r), t)


def calibrate_sphere_radius(r, t=1.0, tol=CALIBRATION_TOL):
    """Find s with c^{S^2(s)}(t) rho_{2t} = c^{S^1(r)}(t) rho_{2t}.

    Scans 64 log-spaced radii in [r/10, 10r] for a sign change and bisects.
    Returns ``(s, residual, scan)``.
    """
    target = pullback.log_c_rho(Circle(r), t)
    scan = []
    for s in np.geomspace(r / 10.0, 10.0 * r, SCAN_POINTS):
        try:
            g = pullback.log_c_rho(Sphere(2, float(s)), t) - target
        except HeatlabError:
            g = math.nan
        scan.append((float(s), g))
    bracket = None
    for (s0, g0), (s1, g1) in zip(scan, scan[1:]):
        if math.isfinite(g0) and math.isfinite(g1) and g0 * g1 <= 0.0:
            bracket = (s0, s1)
            break
    if bracket is None:
        raise CalibrationFailed(f"no sign change for r={r} on [{r / 10}, {10 * r}]", scan)

    def gap(s):
        return pullback.log_c_rho(Sphere(2, s), t) - target

    s = optimize.bisect(gap, *bracket, xtol=tol * bracket[0], rtol=4 * np.finfo(float).eps)
    return float(s), abs(gap(s)), scan


def example_4_5(r=0.5, tol=CALIBRATION_TOL, grid=EXAMPLE_GRID):
    """Single-time isometric immersion of S^1(r) x S^2(s) that is not IHKI."""
    if not 0 < r <= 0.8:
        raise DomainError(f"r must lie in (0, 0.8], got {r}")
    s, residual, scan = calibrate_sphere_radius(r, 1.0, tol)
    circle, sphere = Circle(r), Sphere(2, s)
    prod = Product(circle, sphere)

    # c g_1 = g with c = (rho^{S^1}_2 lambda_{S^2}(1))^{-1}; both blocks must equal 1
    sample = pullback.pullback_matrix(prod, 1.0)
    c = 1.0 / (pullback.diagonal_2t(circle, 1.0) * pullback.pullback_scalar(sphere, 1.0))
    n = dimension(prod)
    deviation = float(np.linalg.norm(c * sample.matrix - np.eye(n)) / math.sqrt(n))

    report = pullback.ihki_check(prod, list(grid))
    probes = []
    for t in sorted({f * r * r for f in (0.25, 0.5, 2.0, 4.0)} | {0.25, 0.5, 2.0, 4.0}):
        probes.append((t, diagonal_power_defect(circle, sphere, t)))
    witness_t, witness_defect = max(probes, key=lambda p: p[1])
    control = Product(Sphere(2, 1.0), Sphere(2, 1.0))
    control_defect = max(diagonal_power_defect(control.left, control.right, t) for t, _ in probes)
    return Example45Result(
        r=float(r),
        s=s,
        calibration_residual=residual,
        t_star=1.0,
        product_deviation_at_t_star=deviation,
        witness_t=witness_t,
        witness_defect=witness_defect,
        verdict=report.verdict,
        grid_deviations=list(zip(report.t_grid, report.deviations)),
        probes=probes,
        control_defect=control_defect,
        scan=scan,
    )


def circle_calibration_value(r, t=1.0):
    """c^{S^1(r)}(t) rho_{2t}, which blows up as r -> 0."""
    return math.exp(pullback.log_c_rho(Circle(r), t))


# ---------------------------------------------------------------------------
# theta sums


def _excited_sum(space, t, shift=0.0):
    """sum_{l >= 1} m_l e^{-(mu_l - shift) t}, summed until the geometric tail is negligible."""
    total, l = 0.0, 1
    while True:
        mu, m = level(space, l)
        term = m * math.exp(-(mu - shift) * t)
        total += term
        mu2, m2 = level(space, l + 1)
        nxt = m2 * math.exp(-(mu2 - shift) * t)
        q = nxt / term if term > 0 else 0.0
        if q < 1.0 and nxt / (1.0 - q) <= 1e-17 * total:
            return total
        l += 1


def torus_vs_sphere_theta(r=1.0, t_list=None):
    """Excited-state heat traces of S^1(r) x S^1(r) and S^2(r).

    Each row carries the raw sums over nonzero eigenvalues, the same sums
    multiplied by ``exp(2 t / r^2)`` and the raw sums divided by volume.
    """
    if t_list is None:
        t_list = [tau * r * r for tau in (1e-3, 1e-2, 0.1, 1.0, 2.0, 5.0)]
    circle, sphere = Circle(r), Sphere(2, r)
    vol_torus, vol_sphere = volume(circle) ** 2, volume(sphere)
    rows = []
    for t in t_list:
        tau = t / (r * r)
        xs = _excited_sum(circle, t, shift=1.0 / (r * r))  # e^{tau} (Z_circle - 1)
        x = xs * math.exp(-tau)
        torus = x * (x + 2.0)
        torus_scaled = math.exp(tau) * xs * (x + 2.0)
        sphere_sum = _excited_sum(sphere, t)
        sphere_scaled = _excited_sum(sphere, t, shift=2.0 / (r * r))
        rows.append(
            {
                "t": t,
                "tau": tau,
                "torus_sum": torus,
                "sphere_sum": sphere_sum,
                "torus_scaled": torus_scaled,
                "sphere_scaled": sphere_scaled,
                "torus_per_volume": torus / vol_torus,
                "sphere_per_volume": sphere_sum / vol_sphere,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# S^1 x R by quadrature


def s1xr_blocks_by_quadrature(r, t, nodes=256):
    """g_t blocks on S^1(r) x R from the defining integrals.

    Returns ``(circle_block, line_block)`` where each block is
    ``int (d rho^A)^2 * int (rho^B)^2`` over the product.
    """
    theta, w = circle_rule(r, nodes)
    jmax = int(math.ceil(r * math.sqrt(60.0 / t))) + 2
    j = np.arange(1, jmax + 1)
    coeff = np.exp(-(j * j) * t / (r * r)) / (math.pi * r)
    arg = np.outer(theta, j)
    kern = 1.0 / (2.0 * math.pi * r) + np.cos(arg) @ coeff
    dkern = -(np.sin(arg) @ (coeff * j / r))
    circ_sq = float(np.sum(w * kern * kern))
    circ_grad = float(np.sum(w * dkern * dkern))

    def g(y):
        return math.exp(-y * y / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)

    reach = 40.0 * math.sqrt(t)
    line_sq, _ = integrate.quad(lambda y: g(y) ** 2, -reach, reach, epsabs=0, epsrel=1e-13, limit=200)
    line_grad, _ = integrate.quad(
        lambda y: (y / (2.0 * t) * g(y)) ** 2, -reach, reach, epsabs=0, epsrel=1e-13, limit=200
    )
    return circ_grad * line_sq, line_grad * circ_sq


# ---------------------------------------------------------------------------
# scenario runner


def parse_grid(text):
    """``lo:hi:n`` with an optional ``log``/``lin`` suffix (default log)."""
    parts = text.split(":")
    if len(parts) == 4:
        lo, hi, n, kind = parts
    elif len(parts) == 3:
        lo, hi, n = parts
        kind = "log"
        for suffix in ("log", "lin"):
            if n.endswith(suffix):
                n, kind = n[: -len(suffix)], suffix
    else:
        raise DomainError(f"bad grid {text!r}; expected lo:hi:n[log|lin]")
    lo, hi, n = float(lo), float(hi), int(n)
    if kind not in ("log", "lin") or n < 1 or not 0 < lo <= hi:
        raise DomainError(f"bad grid {text!r}")
    return list(np.geomspace(lo, hi, n) if kind == "log" else np.linspace(lo, hi, n))


def _inv(name, bound, observed, ok):
    return {"name": name, "bound": bound, "observed": observed, "pass": bool(ok)}


def _space_param(params, default):
    spec = params.get("space") or default
    return canonical(parse_space(spec) if isinstance(spec, str) else spec)


def _scenario_ihki(params, default):
    space = _space_param(params, default)
    grid = params.get("t_grid") or pullback.default_grid()
    threshold = params.get("threshold", pullback.IHKI_THRESHOLD)
    rep = pullback.ihki_check(space, grid, threshold)
    invariants = [
        _inv("sup_deviation", threshold, rep.sup_deviation, rep.sup_deviation <= threshold),
        _inv("verdict", pullback.VERDICT_OK, rep.verdict, rep.verdict == pullback.VERDICT_OK),
    ]
    if isinstance(space, Product) and rep.verdict == pullback.VERDICT_OK:
        worst = max(diagonal_power_defect(space.left, space.right, t) for t in rep.t_grid)
        invariants.append(_inv("diagonal_power_identity", 1e-8, worst, worst <= 1e-8))
    rows = [(t, c, d) for t, c, d in zip(rep.t_grid, rep.c_values, rep.deviations)]
    return {
        "params": {"space": str(space), "threshold": threshold},
        "grids": {"t": rep.t_grid},
        "values": {"verdict": rep.verdict, "sup_deviation": rep.sup_deviation, "witness": rep.witness},
        "certificates": {"relative_tol": pullback.DEFAULT_RTOL},
        "invariants": invariants,
        "csv": (("t", "c", "deviation"), rows),
    }


def _scenario_example(params):
    r = float(params.get("r", 0.5))
    res = example_4_5(r)
    probes_r = [0.6, 0.5, 0.4]
    blowup = [circle_calibration_value(x) for x in probes_r]
    invariants = [
        _inv("calibration_residual", 1e-10, res.calibration_residual, res.calibration_residual <= 1e-10),
        _inv(
            "product_deviation_at_t_star",
            1e-8,
            res.product_deviation_at_t_star,
            res.product_deviation_at_t_star <= 1e-8,
        ),
        _inv("witness_defect", WITNESS_THRESHOLD, res.witness_defect, res.witness_defect > WITNESS_THRESHOLD),
        _inv("verdict", pullback.VERDICT_SINGLE, res.verdict, res.verdict == pullback.VERDICT_SINGLE),
        _inv("equal_spheres_control", 1e-10, res.control_defect, res.control_defect <= 1e-10),
        _inv(
            "circle_calibration_increases_as_r_decreases",
            "strict",
            blowup,
            all(b > a for a, b in zip(blowup, blowup[1:])),
        ),
    ]
    rows = [("grid", t, d) for t, d in res.grid_deviations] + [("probe", t, d) for t, d in res.probes]
    return {
        "params": {"r": r},
        "grids": {"ihki": list(EXAMPLE_GRID), "probes": [t for t, _ in res.probes]},
        "values": {
            "s": res.s,
            "calibration_residual": res.calibration_residual,
            "t_star": res.t_star,
            "product_deviation_at_t_star": res.product_deviation_at_t_star,
            "witness_t": res.witness_t,
            "witness_defect": res.witness_defect,
            "verdict": res.verdict,
            "circle_calibration": dict(zip(map(str, probes_r), blowup)),
        },
        "certificates": {"calibration_tol": CALIBRATION_TOL},
        "invariants": invariants,
        "csv": (("kind", "t", "value"), rows),
    }


def _embed(link, p):
    r, q = p
    if isinstance(link, Circle):
        return np.array([math.cos(q), math.sin(q)]) * r
    return np.asarray(q) * r


def _scenario_cone(params):
    space = _space_param(params, "cone(circle(1.0))")
    if not isinstance(space, Cone):
        raise DomainError("cone-flatness needs a cone space")
    link = canonical(space.link)
    n = dimension(space)
    bound = float(params.get("bound", 1e-8 if n == 2 else 1e-7))
    rng = np.random.default_rng(int(params.get("seed", 0)))
    pairs = int(params.get("pairs", 200))
    t_list = params.get("t_grid") or [0.1, 0.5, 1.0, 2.0]
    rows, worst_cert = [], 0.0
    for i in range(pairs):
        pts = []
        for _ in range(2):
            r = float(rng.uniform(0.0, 2.0))
            if isinstance(link, Circle):
                q = float(rng.uniform(0.0, 2.0 * math.pi))
            else:
                v = rng.normal(size=link.dim + 1)
                q = v / np.linalg.norm(v)
            pts.append((r, q))
        dsq = float(np.sum((_embed(link, pts[0]) - _embed(link, pts[1])) ** 2))
        for t in t_list:
            kv = heat_kernel.evaluate(space, pts[0], pts[1], t, tol=min(1e-10, 0.1 * bound))
            ref = heat_kernel.gaussian(n, dsq, t)
            worst_cert = max(worst_cert, kv.cert.tail_bound)
            rows.append((i, pts[0][0], pts[1][0], t, kv.value, ref, abs(kv.value - ref)))
    err = max(row[-1] for row in rows)
    return {
        "params": {"space": str(space), "pairs": pairs, "seed": int(params.get("seed", 0))},
        "grids": {"t": list(t_list)},
        "values": {"max_abs_error": err},
        "certificates": {"max_tail_bound": worst_cert},
        "invariants": [_inv("max_abs_error_vs_gaussian", bound, err, err <= bound)],
        "csv": (("pair", "r1", "r2", "t", "cone", "gaussian", "abs_error"), rows),
    }


def _scenario_asymptotics(params):
    space = _space_param(params, "sphere(3,1.0)")
    fit = pullback.small_t_asymptotics(space, fit_points=int(params.get("fit_points", 8)))
    exp_slope = fit.expected_slope
    slope_err = abs(fit.slope - exp_slope)
    slope_bound = 0.05 * abs(exp_slope) if exp_slope != 0 else 0.05
    return {
        "params": {"space": str(space)},
        "grids": {"t": list(fit.t_values)},
        "values": {"constant": fit.constant, "slope": fit.slope, "expected_slope": exp_slope},
        "certificates": {"relative_tol": pullback.DEFAULT_RTOL},
        "invariants": [
            _inv("intercept_within_1pct", 0.01, abs(fit.constant - 1.0), abs(fit.constant - 1.0) <= 0.01),
            _inv("slope_within_5pct", slope_bound, slope_err, slope_err <= slope_bound),
        ],
        "csv": (("t", "F"), list(zip(fit.t_values, fit.f_values))),
    }


def _scenario_trace(params):
    space = _space_param(params, "sphere(2,1.0)")
    t_list = params.get("t_grid") or [0.5, 1.0, 2.0]
    h = float(params.get("h", 1e-4))
    defects = [pullback.trace_derivative_check(space, t, h) for t in t_list]
    decay_t = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0]
    decay = [pullback.large_time_ratio(space, t) for t in decay_t]
    worst = max(defects)
    return {
        "params": {"space": str(space), "h": h},
        "grids": {"t": list(t_list), "decay_t": decay_t},
        "values": {"defects": defects, "decay": decay},
        "certificates": {"relative_tol": pullback.DEFAULT_RTOL},
        "invariants": [
            _inv("trace_derivative_defect", 1e-6, worst, worst <= 1e-6),
            _inv("decay_strictly_decreasing", "strict", decay, all(b < a for a, b in zip(decay, decay[1:]))),
            _inv("decay_at_t50", 1e-6, decay[-1], decay[-1] < 1e-6),
        ],
        "csv": (("kind", "t", "value"), [("defect", t, d) for t, d in zip(t_list, defects)]
                + [("decay", t, d) for t, d in zip(decay_t, decay)]),
    }


def _scenario_takahashi(params):
    space = _space_param(params, "sphere(2,1.0)")
    lvl = int(params.get("level", 1))
    rep = pullback.eigenspace_immersion(space, lvl)
    mu, _ = level(space, lvl)
    return {
        "params": {"space": str(space), "level": lvl},
        "grids": {},
        "values": {
            "lambda": rep.lam,
            "multiplicity": rep.multiplicity,
            "on_sphere_deviation": rep.on_sphere_deviation,
            "metric_deviation": rep.metric_deviation,
            "fd_metric_deviation": rep.fd_metric_deviation,
        },
        "certificates": {},
        "invariants": [
            _inv("lambda_is_eigenvalue", 0.0, abs(rep.lam - mu), rep.lam == mu),
            _inv("on_sphere_deviation", 1e-9, rep.on_sphere_deviation, rep.on_sphere_deviation <= 1e-9),
            _inv("metric_deviation", 1e-9, rep.metric_deviation, rep.metric_deviation <= 1e-9),
            _inv("fd_metric_relative_deviation", 1e-6, rep.fd_metric_deviation, rep.fd_metric_deviation <= 1e-6),
        ],
        "csv": (("lambda", "multiplicity", "on_sphere", "metric", "fd_metric"),
                [(rep.lam, rep.multiplicity, rep.on_sphere_deviation, rep.metric_deviation,
                  rep.fd_metric_deviation)]),
    }


def _scenario_halfspace(params):
    n = int(params.get("n", 3))
    t = float(params.get("t", 1.0))
    xs = params.get("x_grid") or list(np.geomspace(1e-4, 50.0, 25))
    interior = pullback.flat_lambda(n, t)
    rows = [(x, constructions.halfspace_gt_normal(n, x, t).value) for x in xs]
    boundary = constructions.halfspace_gt_normal(n, 1e-4 * math.sqrt(t), t).value
    far = constructions.halfspace_gt_normal(n, 50.0 * math.sqrt(t), t).value
    closed = constructions.halfspace_gt_normal(n, math.sqrt(t), t).value
    quad = constructions.halfspace_gt_normal_quadrature(n, math.sqrt(t), t)
    qerr = abs(closed - quad) / closed
    return {
        "params": {"n": n, "t": t},
        "grids": {"x_n": list(xs)},
        "values": {
            "interior": interior,
            "boundary": boundary,
            "far": far,
            "closed": closed,
            "quadrature": quad,
            "normalization": "c_1 t^{-(n+2)/2} (1 - e^{-u} + 2u e^{-u}), u = x_n^2/2t; "
                             "c_1 fixed by the interior limit, profile checked against quadrature",
        },
        "certificates": {},
        "invariants": [
            _inv("boundary_degeneration", 1e-7, boundary, boundary <= 1e-7),
            _inv("interior_limit_relative", 1e-10, abs(far / interior - 1), abs(far / interior - 1) <= 1e-10),
            _inv("closed_form_vs_quadrature_relative", 1e-6, qerr, qerr <= 1e-6),
        ],
        "csv": (("x_n", "value"), rows),
    }


def _scenario_theta(params):
    r = float(params.get("r", 1.0))
    t_list = params.get("t_grid")
    table = torus_vs_sphere_theta(r, t_list)
    invariants = []
    for row in table:
        tau = row["tau"]
        if math.isclose(tau, 5.0):
            s = row["sphere_scaled"]
            invariants.append(_inv("sphere_scaled_near_3_at_tau5", [3.0, 3.0 + 1e-6], s, 3.0 < s < 3.0 + 1e-6))
            tor = row["torus_scaled"]
            invariants.append(_inv("torus_scaled_exceeds_e5", math.exp(5.0), tor, tor > math.exp(5.0)))
        if math.isclose(tau, 1e-3):
            a, b = row["torus_per_volume"], row["sphere_per_volume"]
            gap = abs(a - b) / max(a, b)
            invariants.append(_inv("per_volume_sums_close_at_tau1e-3", 0.03, gap, gap < 0.03))
    keys = list(table[0].keys())
    return {
        "params": {"r": r},
        "grids": {"t": [row["t"] for row in table]},
        "values": {"rows": table},
        "certificates": {"series_rtol": 1e-17},
        "invariants": invariants,
        "csv": (tuple(keys), [tuple(row[k] for k in keys) for row in table]),
    }


def _scenario_s1xr(params):
    space = _space_param(params, "product(circle(1.0),euclidean(1))")
    if not (isinstance(space, Product) and isinstance(space.left, Circle) and isinstance(space.right, Euclidean)
            and space.right.dim == 1):
        raise DomainError("s1xr expects product(circle(r),euclidean(1))")
    r = space.left.radius
    t_list = params.get("t_grid") or [0.25, 0.5, 1.0, 2.0]
    rows, worst = [], 0.0
    for t in t_list:
        diag = np.diag(pullback.pullback_matrix(space, t).matrix)
        qc, ql = s1xr_blocks_by_quadrature(r, t)
        err = max(abs(diag[0] / qc - 1.0), abs(diag[1] / ql - 1.0))
        worst = max(worst, err)
        rows.append((t, diag[0], qc, diag[1], ql, err))
    return {
        "params": {"space": str(space)},
        "grids": {"t": list(t_list)},
        "values": {"max_relative_error": worst},
        "certificates": {"quadrature_nodes": 256},
        "invariants": [_inv("blocks_vs_quadrature_relative", 1e-8, worst, worst <= 1e-8)],
        "csv": (("t", "circle_block", "circle_block_quadrature", "line_block", "line_block_quadrature",
                 "relative_error"), rows),
    }


def _dispatch(name, params):
    if name == "ihki-sphere":
        return _scenario_ihki(params, "sphere(2,1.0)")
    if name == "ihki-product":
        return _scenario_ihki(params, "product(sphere(2,1.0),sphere(2,1.0))")
    if name == "example-4-5":
        return _scenario_example(params)
    if name == "cone-flatness":
        return _scenario_cone(params)
    if name == "asymptotics":
        return _scenario_asymptotics(params)
    if name == "trace-identity":
        return _scenario_trace(params)
    if name == "takahashi":
        return _scenario_takahashi(params)
    if name == "halfspace":
        return _scenario_halfspace(params)
    if name == "theta-table":
        return _scenario_theta(params)
    if name == "s1xr":
        return _scenario_s1xr(params)
    raise DomainError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


def _fmt_float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def to_json(obj, indent=2, _level=0):
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{to_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist(), indent, _level)
    return _json_str(str(obj))


def _json_str(s):
    import json

    return json.dumps(s)


def to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_float(v).strip('"') if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def run_scenario(name, params=None, output_path=None, csv_path=None):
    """Run a named scenario; write a JSON report and optionally a CSV grid.

    Returns the report dictionary.  ``report["verdict"]`` is ``"pass"`` when
    every invariant holds, otherwise ``"fail"`` and ``report["witness"]``
    names the first failing invariant.
    """
    params = dict(params or {})
    body = _dispatch(name, params)
    header, rows = body.pop("csv")
    failing = [inv for inv in body["invariants"] if not inv["pass"]]
    report = {
        "scenario": name,
        "params": body["params"],
        "grids": body["grids"],
        "values": body["values"],
        "certificates": body["certificates"],
        "invariants": body["invariants"],
        "verdict": "fail" if failing else "pass",
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if failing:
        report["witness"] = failing[0]
    if output_path:
        with open(output_path, "w", encoding="utf-8") as fh:
            fh.write(to_json(report) + "\n")
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(header, rows))
    report["csv_text"] = to_csv(header, rows)
    return report
