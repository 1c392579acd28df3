"""Independent reference values used by the test-suite."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def _lg(v, R, w2):
    # log(v + R) without cancellation for v < 0
    if v >= 0:
        return math.log(v + R)
    return math.log(w2 / (R - v)) if w2 > 0 else -math.inf


def _F(u, v, z):
    R = math.sqrt(u * u + v * v + z * z)
    if R == 0.0:
        return 0.0
    out = 0.0
    if u != 0.0:
        out += u * _lg(v, R, u * u + z * z)
    if v != 0.0:
        out += v * _lg(u, R, v * v + z * z)
    if z != 0.0 and u != 0.0 and v != 0.0:
        out -= z * math.atan(u * v / (z * R))
    return out


def rectangle_potential(x, y, z, a1, a2, b1, b2):
    """``int_{[a1,a2]x[b1,b2]} 1/|p - q| dq`` for ``p = (x, y, z)`` and the rectangle in ``z = 0``."""
    return (_F(a2 - x, b2 - y, z) - _F(a1 - x, b2 - y, z)
            - _F(a2 - x, b1 - y, z) + _F(a1 - x, b1 - y, z))


def rectangle_pair(target, source, gap=0.0, tol=1e-13):
    """``int_T int_S 1/(4 pi |x - y|)`` for axis-aligned rectangles ``(a1, a2, b1, b2)``.

    The inner integral is closed form; the outer one uses adaptive quadrature.
    ``target`` lies in the plane ``z = gap``.
    """
    a1, a2, b1, b2 = target
    f = lambda y, x: rectangle_potential(x, y, gap, *source)  # noqa: E731
    val, _ = integrate.dblquad(f, a1, a2, b1, b2, epsabs=tol, epsrel=tol)
    return val / (4.0 * math.pi)


def unit_square_self():
    """Closed form of ``int int 1/(4 pi |x - y|)`` over the unit square."""
    return (4.0 / 3.0) * ((1 - math.sqrt(2)) + 3 * math.log(1 + math.sqrt(2))) / (4 * math.pi)
