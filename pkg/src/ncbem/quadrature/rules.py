"""Gauss rules and regularising product rules on the unit square pair [0,1]^2 x [0,1]^2.

The singular rules follow the relative-coordinate plus Duffy construction
for quadrilateral panels.  Canonical positions:

* identical: both cells are the same cell;
* edge: the shared edge is ``t = 0`` (corners 0 -> 1) on both cells,
  traversed in the same direction (``x_s = y_s`` on the edge);
* vertex: the shared corner is corner 0 (``(0, 0)``) on both cells.

Every rule is returned as ``(pts, w)`` with ``pts[:, :2]`` the x cell
coordinates, ``pts[:, 2:]`` the y cell coordinates and weights summing to 1.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .. import _numerics as nx


@lru_cache(maxsize=None)
def _gauss(n: int):
    if not 1 <= n <= 30:
        raise ValueError("Gauss rule order must lie in 1..30")
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_rule(n: int):
    """n-point Gauss-Legendre rule on [0, 1]; exact for degree 2n - 1."""
    return _gauss(int(n))


@lru_cache(maxsize=None)
def square_rule(n: int):
    x, w = gauss_rule(n)
    a, b = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([a.ravel(), b.ravel()])
    ww = np.outer(w, w).ravel()
    pts.setflags(write=False)
    ww.setflags(write=False)
    return pts, ww


@lru_cache(maxsize=None)
def element_rule(shape: int, n: int):
    """Reference rule on the unit square or (collapsed) unit triangle."""
    pts, w = square_rule(n)
    if shape == nx.QUAD:
        return pts, w
    a, b = pts[:, 0], pts[:, 1]
    tri = np.column_stack([a * (1.0 - b), b])
    tw = w * (1.0 - b)
    tri.setflags(write=False)
    tw.setflags(write=False)
    return tri, tw


def _grid(n, dim):
    x, w = gauss_rule(n)
    mesh = np.meshgrid(*([x] * dim), indexing="ij")
    wm = np.meshgrid(*([w] * dim), indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    ww = np.prod(np.column_stack([m.ravel() for m in wm]), axis=1)
    return pts, ww


def _freeze(pts, w):
    pts = np.ascontiguousarray(pts)
    w = np.ascontiguousarray(w)
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w


def _relative(zeta, u, sign):
    """Split one coordinate pair (x, y) by z = x - y = sign * zeta; jacobian 1 - zeta."""
    base = (1.0 - zeta) * u
    if sign > 0:
        return base + zeta, base
    return base, base + zeta


@lru_cache(maxsize=None)
def identical_rule(n: int):
    g, gw = _grid(n, 4)
    xi, eta, u1, u2 = g.T
    out_p, out_w = [], []
    for tri in (0, 1):
        z1, z2 = (xi, xi * eta) if tri == 0 else (xi * eta, xi)
        for s1 in (1, -1):
            for s2 in (1, -1):
                x1, y1 = _relative(z1, u1, s1)
                x2, y2 = _relative(z2, u2, s2)
                out_p.append(np.column_stack([x1, x2, y1, y2]))
                out_w.append(gw * xi * (1.0 - z1) * (1.0 - z2))
    return _freeze(np.vstack(out_p), np.concatenate(out_w))


@lru_cache(maxsize=None)
def edge_rule(n: int):
    g, gw = _grid(n, 4)
    xi, a, b, u1 = g.T
    out_p, out_w = [], []
    # pyramids of the (zeta1, x2, y2) cube by which coordinate is largest
    for k in range(3):
        c = [xi * a, xi * b]
        c.insert(k, xi)
        z1, x2, y2 = c
        for s1 in (1, -1):
            x1, y1 = _relative(z1, u1, s1)
            out_p.append(np.column_stack([x1, x2, y1, y2]))
            out_w.append(gw * xi ** 2 * (1.0 - z1))
    return _freeze(np.vstack(out_p), np.concatenate(out_w))


@lru_cache(maxsize=None)
def vertex_rule(n: int):
    g, gw = _grid(n, 4)
    xi, a, b, c = g.T
    out_p, out_w = [], []
    for k in range(4):
        v = [xi * a, xi * b, xi * c]
        v.insert(k, xi)
        out_p.append(np.column_stack(v))
        out_w.append(gw * xi ** 3)
    return _freeze(np.vstack(out_p), np.concatenate(out_w))


def singular_rule(pair_class, n: int):
    """Product rule for a canonical singular configuration (see module docstring)."""
    from .pairs import PairClass, ProductRule

    pc = PairClass(pair_class)
    table = {PairClass.IDENTICAL: identical_rule, PairClass.EDGE: edge_rule,
             PairClass.VERTEX: vertex_rule}
    if pc not in table:
        raise ValueError(f"no singular rule for pair class {pc.value}")
    pts, w = table[pc](int(n))
    return ProductRule(pts[:, :2], pts[:, 2:], w)
