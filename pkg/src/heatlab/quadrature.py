"""Tensor quadrature rules on circles and 2-spheres."""

from __future__ import annotations

import math

import numpy as np


def circle_rule(radius=1.0, nodes=256):
    """Gauss-Legendre nodes (angles) and arclength weights on a circle."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = math.pi * (x + 1.0)
    return theta, w * math.pi * radius


def sphere_rule(radius=1.0, nodes=256, azimuthal=None):
    """Points on S^2(radius) and area weights.

    Gauss-Legendre in cos(polar angle) times the trapezoid rule in the
    azimuth, which is spectrally accurate for periodic integrands.
    """
    azimuthal = 2 * nodes if azimuthal is None else azimuthal
    x, w = np.polynomial.legendre.leggauss(nodes)
    phi = 2.0 * math.pi * np.arange(azimuthal) / azimuthal
    sin = np.sqrt(1.0 - x * x)
    pts = np.stack(
        [
            np.outer(sin, np.cos(phi)),
            np.outer(sin, np.sin(phi)),
            np.outer(x, np.ones_like(phi)),
        ],
        axis=-1,
    ).reshape(-1, 3)
    weights = np.outer(w, np.full(azimuthal, 2.0 * math.pi / azimuthal)).reshape(-1)
    return radius * pts, weights * radius * radius
