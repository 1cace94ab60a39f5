"""Model spaces with exact geometry and exact Laplace spectra.

A model space is an immutable descriptor.  Compact pieces (circles, round
spheres) carry closed-form spectra; eigenspaces are never materialised and
per-level sums of eigenfunction products go through addition theorems.

Points are plain Python/numpy values:

* ``Circle``: an angle (float)
* ``Sphere(n, k)``: a vector in R^{n+1} of norm ``k``
* ``Euclidean``/``HalfSpace``: a tuple of ``n`` floats (half-space: last > 0)
* ``Product``: a pair ``(left_point, right_point)``
* ``Cone``: a pair ``(r, link_point)`` with ``r >= 0``
* ``Rescaled``: a point of the base space
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError, UnsupportedSpace
from .specfun import gegenbauer, gegenbauer_at_one

MAX_PRODUCT_DEPTH = 4
MAX_TOTAL_DIM = 8
LEVEL_MERGE_RTOL = 1e-12


def _fmt(x):
    return repr(float(x))


@dataclass(frozen=True)
class Circle:
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"circle radius must be positive, got {self.radius}")

    def __str__(self):
        return f"circle({_fmt(self.radius)})"


@dataclass(frozen=True)
class Sphere:
    dim: int
    radius: float = 1.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"sphere dimension must be a positive integer, got {self.dim}")
        if not self.radius > 0:
            raise DomainError(f"sphere radius must be positive, got {self.radius}")

    def __str__(self):
        return f"sphere({self.dim},{_fmt(self.radius)})"


@dataclass(frozen=True)
class Euclidean:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dim}")

    def __str__(self):
        return f"euclidean({self.dim})"


@dataclass(frozen=True)
class HalfSpace:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dim}")

    def __str__(self):
        return f"halfspace({self.dim})"


@dataclass(frozen=True)
class Product:
    left: "ModelSpace"
    right: "ModelSpace"

    def __post_init__(self):
        if _depth(self) > MAX_PRODUCT_DEPTH:
            raise DomainError(f"product depth exceeds {MAX_PRODUCT_DEPTH}")
        if dimension(self) > MAX_TOTAL_DIM:
            raise DomainError(f"total dimension exceeds {MAX_TOTAL_DIM}")

    def __str__(self):
        return f"product({self.left},{self.right})"


@dataclass(frozen=True)
class Cone:
    link: "ModelSpace"

    def __post_init__(self):
        link = canonical(self.link)
        # links must be RCD(N-2, N-1) with diameter <= pi
        if isinstance(link, Circle):
            if link.radius > 1.0:
                raise DomainError("cone over a circle needs radius <= 1 (diameter <= pi)")
        elif isinstance(link, Sphere):
            if link.radius != 1.0:
                raise DomainError("cone over a sphere needs the unit sphere as link")
        else:
            raise DomainError("cone links are restricted to circle(r<=1) and sphere(n,1)")
        if dimension(link) + 1 > MAX_TOTAL_DIM:
            raise DomainError(f"total dimension exceeds {MAX_TOTAL_DIM}")

    def __str__(self):
        return f"cone({self.link})"


@dataclass(frozen=True)
class Rescaled:
    base: "ModelSpace"
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError("rescaling factors a, b must be positive")

    def __str__(self):
        return f"rescaled({self.base},{_fmt(self.a)},{_fmt(self.b)})"


ModelSpace = Union[Circle, Sphere, Euclidean, HalfSpace, Product, Cone, Rescaled]


@dataclass(frozen=True)
class SpectralLevel:
    mu: float
    multiplicity: int
    index: int


def _depth(space):
    if isinstance(space, Product):
        return 1 + max(_depth(space.left), _depth(space.right))
    if isinstance(space, Rescaled):
        return _depth(space.base)
    return 0


def canonical(space):
    """Alias ``Sphere(1, k)`` to ``Circle(k)``, recursively."""
    if isinstance(space, Sphere) and space.dim == 1:
        return Circle(space.radius)
    if isinstance(space, Product):
        left, right = canonical(space.left), canonical(space.right)
        if left is space.left and right is space.right:
            return space
        return Product(left, right)
    if isinstance(space, Rescaled):
        base = canonical(space.base)
        return space if base is space.base else Rescaled(base, space.a, space.b)
    if isinstance(space, Cone):
        link = canonical(space.link)
        return space if link is space.link else Cone(link)
    return space


def dimension(space):
    if isinstance(space, Circle):
        return 1
    if isinstance(space, (Sphere, Euclidean, HalfSpace)):
        return space.dim
    if isinstance(space, Product):
        return dimension(space.left) + dimension(space.right)
    if isinstance(space, Cone):
        return dimension(space.link) + 1
    if isinstance(space, Rescaled):
        return dimension(space.base)
    raise UnsupportedSpace(f"not a model space: {space!r}")


def is_compact(space):
    space = canonical(space)
    if isinstance(space, (Circle, Sphere)):
        return True
    if isinstance(space, Product):
        return is_compact(space.left) and is_compact(space.right)
    if isinstance(space, Rescaled):
        return is_compact(space.base)
    return False


def _require_compact(space, what):
    if not is_compact(space):
        raise UnsupportedSpace(f"{what} needs a compact space, got {space}")


# ---------------------------------------------------------------------------
# spectra


def level(space, l):
    """``(mu_l, m_l)`` for a circle or sphere, in closed form."""
    if isinstance(space, Circle):
        return (l * l) / space.radius**2, (1 if l == 0 else 2)
    if isinstance(space, Sphere):
        n, k = space.dim, space.radius
        return l * (l + n - 1) / k**2, sphere_multiplicity(n, l)
    raise UnsupportedSpace(f"closed-form levels only for circles and spheres, got {space}")


def sphere_multiplicity(n, l):
    """Dimension of the degree-l spherical harmonics on S^n."""
    if n == 1:
        return 1 if l == 0 else 2
    return math.comb(l + n - 1, n - 1) + (math.comb(l + n - 2, n - 1) if l >= 1 else 0)


def level_arrays(space, count):
    """Eigenvalues and multiplicities of the first ``count`` levels (circle/sphere)."""
    mus = np.empty(count)
    mults = np.empty(count)
    for l in range(count):
        mus[l], mults[l] = level(space, l)
    return mus, mults


def _merge(pairs):
    pairs.sort(key=lambda p: p[0])
    merged = []
    for mu, m in pairs:
        if merged and abs(mu - merged[-1][0]) <= LEVEL_MERGE_RTOL * max(1.0, abs(mu)):
            merged[-1][1] += m
        else:
            merged.append([mu, m])
    return merged


def _raw_spectrum(space, max_level):
    """Return (levels, threshold): the first ``max_level+1`` levels and an upper
    bound below which the list is complete."""
    if isinstance(space, (Circle, Sphere)):
        pairs = [level(space, l) for l in range(max_level + 2)]
        return [list(p) for p in pairs[: max_level + 1]], pairs[max_level + 1][0]
    if isinstance(space, Rescaled):
        levels, thresh = _raw_spectrum(space.base, max_level)
        return [[mu / space.a**2, m] for mu, m in levels], thresh / space.a**2
    if isinstance(space, Product):
        count = max_level + 1
        while True:
            left, lt = _raw_spectrum(space.left, count)
            right, rt = _raw_spectrum(space.right, count)
            # any omitted pair has eigenvalue >= min(lt, rt)
            complete_below = min(lt, rt)
            pairs = [(a + b, ma * mb) for a, ma in left for b, mb in right]
            merged = [p for p in _merge(pairs) if p[0] < complete_below]
            if len(merged) > max_level:
                nxt = merged[max_level + 1][0] if len(merged) > max_level + 1 else complete_below
                return merged[: max_level + 1], nxt
            count *= 2
    raise UnsupportedSpace(f"spectrum needs a compact space, got {space}")


def spectrum(space, max_level):
    """Distinct Laplace eigenvalues ``mu_0 < ... < mu_max_level`` with multiplicities."""
    _require_compact(space, "spectrum")
    if max_level < 0:
        raise DomainError("max_level must be >= 0")
    levels, _ = _raw_spectrum(canonical(space), max_level)
    return [SpectralLevel(float(mu), int(m), i) for i, (mu, m) in enumerate(levels)]


def volume(space):
    space = canonical(space)
    if isinstance(space, Circle):
        return 2.0 * math.pi * space.radius
    if isinstance(space, Sphere):
        n, k = space.dim, space.radius
        return k**n * 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)
    if isinstance(space, Product):
        return volume(space.left) * volume(space.right)
    if isinstance(space, Rescaled):
        return volume(space.base) * space.b
    raise UnsupportedSpace(f"volume needs a compact space, got {space}")


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


# ---------------------------------------------------------------------------
# points and distances


def as_point(space, p):
    """Validate and normalise a point of ``space``."""
    space = canonical(space)
    if isinstance(space, Circle):
        if isinstance(p, (list, tuple, np.ndarray)):
            if len(p) != 1:
                raise TypeError("a circle point is a single angle")
            p = p[0]
        return float(p)
    if isinstance(space, Sphere):
        v = np.asarray(p, dtype=float).reshape(-1)
        if v.size != space.dim + 1:
            raise TypeError(f"sphere({space.dim}) points live in R^{space.dim + 1}")
        norm = np.linalg.norm(v)
        if not abs(norm - space.radius) <= 1e-9 * space.radius:
            raise DomainError(f"point norm {norm} differs from sphere radius {space.radius}")
        return v * (space.radius / norm)
    if isinstance(space, (Euclidean, HalfSpace)):
        v = np.atleast_1d(np.asarray(p, dtype=float)).reshape(-1)
        if v.size != space.dim:
            raise TypeError(f"expected {space.dim} coordinates, got {v.size}")
        if isinstance(space, HalfSpace) and not v[-1] > 0:
            raise DomainError("half-space points need a positive last coordinate")
        return tuple(float(c) for c in v)
    if isinstance(space, Product):
        if not (isinstance(p, (list, tuple)) and len(p) == 2):
            raise TypeError("product points are pairs")
        return (as_point(space.left, p[0]), as_point(space.right, p[1]))
    if isinstance(space, Cone):
        if not (isinstance(p, (list, tuple)) and len(p) == 2):
            raise TypeError("cone points are pairs (r, link_point)")
        r = float(p[0])
        if r < 0:
            raise DomainError("cone radial coordinate must be >= 0")
        return (r, as_point(space.link, p[1]))
    if isinstance(space, Rescaled):
        return as_point(space.base, p)
    raise UnsupportedSpace(f"not a model space: {space!r}")


def _wrap_angle(d):
    d = math.fmod(abs(d), 2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def distance(space, x, y):
    space = canonical(space)
    x, y = as_point(space, x), as_point(space, y)
    return _distance(space, x, y)


def _distance(space, x, y):
    if isinstance(space, Circle):
        return space.radius * _wrap_angle(x - y)
    if isinstance(space, Sphere):
        k = space.radius
        c = float(np.dot(x, y)) / (k * k)
        return k * math.acos(min(1.0, max(-1.0, c)))
    if isinstance(space, (Euclidean, HalfSpace)):
        return math.sqrt(sum((a - b) ** 2 for a, b in zip(x, y)))
    if isinstance(space, Product):
        return math.hypot(_distance(space.left, x[0], y[0]), _distance(space.right, x[1], y[1]))
    if isinstance(space, Cone):
        (r, p), (s, q) = x, y
        angle = min(_distance(space.link, p, q), math.pi)
        return math.sqrt(max(0.0, r * r + s * s - 2.0 * r * s * math.cos(angle)))
    if isinstance(space, Rescaled):
        return space.a * _distance(space.base, x, y)
    raise UnsupportedSpace(f"not a model space: {space!r}")


# ---------------------------------------------------------------------------
# addition theorems


def addition_kernel(space, l, d):
    """Per-level sum of eigenfunction products as a function of distance ``d``.

    ``d`` may be an array.  Circles and spheres only.
    """
    d = np.asarray(d, dtype=float)
    if isinstance(space, Circle):
        r = space.radius
        if l == 0:
            return np.full_like(d, 1.0 / (2.0 * math.pi * r))
        return np.cos(l * d / r) / (math.pi * r)
    if isinstance(space, Sphere):
        n, k = space.dim, space.radius
        lam = 0.5 * (n - 1)
        m = sphere_multiplicity(n, l)
        scale = m / volume(space) / gegenbauer_at_one(l, lam)
        u = np.clip(np.cos(d / k), -1.0, 1.0)
        vals = np.vectorize(lambda c: gegenbauer(l, lam, c), otypes=[float])(u)
        return scale * vals
    raise UnsupportedSpace(f"addition theorem only for circles and spheres, got {space}")


def eigenspace_sum(space, l, x, y):
    """sum over the level-l eigenspace of phi_i(x) phi_i(y) (L^2-orthonormal basis)."""
    space = canonical(space)
    if isinstance(space, Rescaled):
        return eigenspace_sum(space.base, l, x, y) / space.b
    if not isinstance(space, (Circle, Sphere)):
        raise UnsupportedSpace(
            f"eigenspace sums are assembled elsewhere for {type(space).__name__}"
        )
    if l < 0:
        raise DomainError("level must be >= 0")
    d = distance(space, x, y)
    return float(addition_kernel(space, l, d))


# ---------------------------------------------------------------------------
# canonical text form

_TOKEN = re.compile(r"\s*(?:(?P<name>[a-z_]+)|(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|(?P<sym>[(),]))")


def _tokenize(text):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ValueError(f"cannot parse model space near {text[pos:]!r}")
        pos = m.end()
        for kind in ("name", "num", "sym"):
            if m.group(kind) is not None:
                out.append((kind, m.group(kind)))
    return out


def parse_space(text):
    """Parse the canonical text form, e.g. ``product(circle(0.5),sphere(2,0.5))``."""
    tokens = _tokenize(text)
    space, pos = _parse(tokens, 0)
    if pos != len(tokens):
        raise ValueError(f"trailing input in model space expression {text!r}")
    return space


def _expect(tokens, pos, sym):
    if pos >= len(tokens) or tokens[pos] != ("sym", sym):
        raise ValueError(f"expected {sym!r} in model space expression")
    return pos + 1


def _parse(tokens, pos):
    if pos >= len(tokens) or tokens[pos][0] != "name":
        raise ValueError("expected a space name")
    name = tokens[pos][1]
    pos = _expect(tokens, pos + 1, "(")
    args = []
    while True:
        if pos < len(tokens) and tokens[pos][0] == "num":
            args.append(float(tokens[pos][1]))
            pos += 1
        else:
            sub, pos = _parse(tokens, pos)
            args.append(sub)
        if pos < len(tokens) and tokens[pos] == ("sym", ","):
            pos += 1
            continue
        pos = _expect(tokens, pos, ")")
        break
    return _build(name, args), pos


def _as_int(v, what):
    if isinstance(v, float) and v.is_integer():
        return int(v)
    raise ValueError(f"{what} must be an integer")


def _build(name, args):
    try:
        if name == "circle":
            return Circle(*(args or [1.0]))
        if name == "sphere":
            n = _as_int(args[0], "sphere dimension")
            k = args[1] if len(args) > 1 else 1.0
            return canonical(Sphere(n, k))
        if name == "euclidean":
            return Euclidean(_as_int(args[0], "dimension"))
        if name == "halfspace":
            return HalfSpace(_as_int(args[0], "dimension"))
        if name == "product":
            left, right = args
            return Product(left, right)
        if name == "cone":
            (link,) = args
            return Cone(link)
        if name == "rescaled":
            base, a, b = args if len(args) == 3 else (*args, 1.0)
            return Rescaled(base, a, b)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise ValueError(f"bad arguments for {name}: {exc}") from None
    raise ValueError(f"unknown model space {name!r}")
