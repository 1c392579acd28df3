"""Numba kernels for Lagrange bases and element maps shared by mesh and assembly.

Shape codes: 0 = quadrilateral (unit square), 1 = triangle (unit triangle
``s, t >= 0, s + t <= 1``).  Node layouts:

* quad, order p: node ``i + (p+1) j`` at ``(i/p, j/p)``
* triangle, order p: nodes ``(i/p, j/p)`` with ``i + j <= p``, ``j``-major
"""
from __future__ import annotations

import numpy as np
from numba import njit

QUAD = 0
TRI = 1


def n_local(shape: int, order: int) -> int:
    if shape == QUAD:
        return (order + 1) ** 2
    return (order + 1) * (order + 2) // 2


@njit(cache=True)
def n_local_nb(shape, order):
    if shape == 0:
        return (order + 1) * (order + 1)
    return (order + 1) * (order + 2) // 2


@njit(cache=True)
def _silvester(p, m, lam):
    """P_m(lam) = prod_{q<m} (p lam - q)/(q+1) and its derivative."""
    u = p * lam
    if m == 0:
        return 1.0, 0.0
    if m == 1:
        return u, float(p)
    if m == 2:
        return 0.5 * u * (u - 1.0), 0.5 * p * (2.0 * u - 1.0)
    if m == 3:
        return u * (u - 1.0) * (u - 2.0) / 6.0, p * (3.0 * u * u - 6.0 * u + 2.0) / 6.0
    v = 1.0
    for q in range(m):
        v *= (u - q) / (q + 1.0)
    d = 0.0
    for r in range(m):
        term = p / (r + 1.0)
        for q in range(m):
            if q != r:
                term *= (u - q) / (q + 1.0)
        d += term
    return v, d


@njit(cache=True)
def _lag1(p, k, x):
    """Value and derivative of the k-th 1D Lagrange polynomial on equispaced nodes."""
    if p == 0:
        return 1.0, 0.0
    xk = k / p
    v = 1.0
    for q in range(p + 1):
        if q != k:
            v *= (x - q / p) / (xk - q / p)
    d = 0.0
    for r in range(p + 1):
        if r == k:
            continue
        term = 1.0 / (xk - r / p)
        for q in range(p + 1):
            if q != k and q != r:
                term *= (x - q / p) / (xk - q / p)
        d += term
    return v, d


@njit(cache=True)
def _lag4(p, x):
    """All 1D Lagrange values and derivatives for p <= 3 (zero padded to four)."""
    if p == 1:
        return (1.0 - x, x, 0.0, 0.0), (-1.0, 1.0, 0.0, 0.0)
    if p == 2:
        u = 2.0 * x
        return ((0.5 * (u - 1.0) * (u - 2.0), -u * (u - 2.0), 0.5 * u * (u - 1.0), 0.0),
                (2.0 * u - 3.0, 4.0 - 4.0 * u, 2.0 * u - 1.0, 0.0))
    u = 3.0 * x
    a, b, c = u - 1.0, u - 2.0, u - 3.0
    return ((-a * b * c / 6.0, 0.5 * u * b * c, -0.5 * u * a * c, u * a * b / 6.0),
            (-0.5 * (b * c + a * c + a * b), 1.5 * (b * c + u * c + u * b),
             -1.5 * (a * c + u * c + u * a), 0.5 * (a * b + u * b + u * a)))


@njit(cache=True, _nrt=False)
def basis(shape, p, s, t, val, ds, dt):
    """Lagrange values and reference derivatives at (s, t); fills the output arrays."""
    if shape == 0:
        if p == 0:
            val[0] = 1.0
            ds[0] = 0.0
            dt[0] = 0.0
            return
        if p == 1:
            a0, a1, b0, b1 = 1.0 - s, s, 1.0 - t, t
            val[0] = a0 * b0; ds[0] = -b0; dt[0] = -a0
            val[1] = a1 * b0; ds[1] = b0; dt[1] = -a1
            val[2] = a0 * b1; ds[2] = -b1; dt[2] = a0
            val[3] = a1 * b1; ds[3] = b1; dt[3] = a1
            return
        if p <= 3:
            vs, dvs = _lag4(p, s)
            vt, dvt = _lag4(p, t)
            for j in range(p + 1):
                for i in range(p + 1):
                    k = i + (p + 1) * j
                    val[k] = vs[i] * vt[j]
                    ds[k] = dvs[i] * vt[j]
                    dt[k] = vs[i] * dvt[j]
            return
        for j in range(p + 1):
            vt_, dvt_ = _lag1(p, j, t)
            for i in range(p + 1):
                vs_, dvs_ = _lag1(p, i, s)
                k = i + (p + 1) * j
                val[k] = vs_ * vt_
                ds[k] = dvs_ * vt_
                dt[k] = vs_ * dvt_
        return
    if p == 0:
        val[0] = 1.0
        ds[0] = 0.0
        dt[0] = 0.0
        return
    l0 = 1.0 - s - t
    k = 0
    for j in range(p + 1):
        for i in range(p + 1 - j):
            m0 = p - i - j
            a, da = _silvester(p, i, s)
            b, db = _silvester(p, j, t)
            c, dc = _silvester(p, m0, l0)
            val[k] = a * b * c
            ds[k] = da * b * c - a * b * dc
            dt[k] = a * db * c - a * b * dc
            k += 1


@njit(cache=True)
def basis_values(shape, p, s, t, val):
    ds = np.empty(val.shape[0])
    dt = np.empty(val.shape[0])
    basis(shape, p, s, t, val, ds, dt)


@njit(cache=True, _nrt=False)
def _add(x, ts, tt, nodes, k, v, ds, dt):
    for c in range(3):
        x[c] += v * nodes[k, c]
        ts[c] += ds * nodes[k, c]
        tt[c] += dt * nodes[k, c]


@njit(cache=True, _nrt=False)
def geom_point(shape, p, nodes, s, t, x, ts, tt):
    """Map (s, t) through an order-p element with node coordinates ``nodes``.

    Writes the point into ``x`` and the tangents into ``ts`` and ``tt``.
    """
    for c in range(3):
        x[c] = 0.0
        ts[c] = 0.0
        tt[c] = 0.0
    if shape == 0:
        if p == 1:
            a0, a1, b0, b1 = 1.0 - s, s, 1.0 - t, t
            _add(x, ts, tt, nodes, 0, a0 * b0, -b0, -a0)
            _add(x, ts, tt, nodes, 1, a1 * b0, b0, -a1)
            _add(x, ts, tt, nodes, 2, a0 * b1, -b1, a0)
            _add(x, ts, tt, nodes, 3, a1 * b1, b1, a1)
            return
        if p <= 3:
            vs, dvs = _lag4(p, s)
            vt, dvt = _lag4(p, t)
            for j in range(p + 1):
                for i in range(p + 1):
                    _add(x, ts, tt, nodes, i + (p + 1) * j, vs[i] * vt[j], dvs[i] * vt[j], vs[i] * dvt[j])
            return
        for j in range(p + 1):
            vt_, dvt_ = _lag1(p, j, t)
            for i in range(p + 1):
                vs_, dvs_ = _lag1(p, i, s)
                _add(x, ts, tt, nodes, i + (p + 1) * j, vs_ * vt_, dvs_ * vt_, vs_ * dvt_)
        return
    l0 = 1.0 - s - t
    k = 0
    for j in range(p + 1):
        for i in range(p + 1 - j):
            a, da = _silvester(p, i, s)
            b, db = _silvester(p, j, t)
            c, dc = _silvester(p, p - i - j, l0)
            _add(x, ts, tt, nodes, k, a * b * c, da * b * c - a * b * dc, a * db * c - a * b * dc)
            k += 1


@njit(cache=True)
def basis_batch(shape, p, pts):
    """Values and derivatives at many reference points: three (npts, nloc) arrays."""
    npts = pts.shape[0]
    nl = n_local_nb(shape, p)
    val = np.empty((npts, nl))
    ds = np.empty((npts, nl))
    dt = np.empty((npts, nl))
    for q in range(npts):
        basis(shape, p, pts[q, 0], pts[q, 1], val[q], ds[q], dt[q])
    return val, ds, dt
