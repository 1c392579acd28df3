"""Numba kernels for off-surface evaluation of the single-layer potential and its field."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .._numerics import geom_point, n_local_nb
from ..assembly._core import FOUR_PI_INV, _child, _ref_cells, _sample_grid, cell_ref, point_data

STATUS_OK = 0
STATUS_ON_SURFACE = 1


@njit(cache=True)
def _project(x, si, pi, gi, s, t, y, ts, tt):
    """Gauss-Newton closest point on the element from start (s, t); returns the distance."""
    for it in range(30):
        geom_point(si, pi, gi, s, t, y, ts, tt)
        a11 = a12 = a22 = b1 = b2 = 0.0
        for q in range(3):
            r = x[q] - y[q]
            a11 += ts[q] * ts[q]
            a12 += ts[q] * tt[q]
            a22 += tt[q] * tt[q]
            b1 += ts[q] * r
            b2 += tt[q] * r
        det = a11 * a22 - a12 * a12
        if det <= 0.0:
            break
        ds_ = (a22 * b1 - a12 * b2) / det
        dt_ = (a11 * b2 - a12 * b1) / det
        s = min(max(s + ds_, 0.0), 1.0)
        t = min(max(t + dt_, 0.0), 1.0)
        if si == 1 and s + t > 1.0:
            e = 0.5 * (s + t - 1.0)
            s -= e
            t -= e
        if abs(ds_) + abs(dt_) < 1e-15:
            break
    geom_point(si, pi, gi, s, t, y, ts, tt)
    d = 0.0
    for q in range(3):
        d += (x[q] - y[q]) ** 2
    return math.sqrt(d)


@njit(cache=True)
def _near_element(x, si, pi, gi, nu, sig, gx, gw, eta, maxlev, tol, acc):
    """Adaptive cell quartering toward ``x``; adds (u, E) into ``acc``; returns a status."""
    ng = gx.shape[0]
    nl = n_local_nb(si, nu)
    cap = 3 * maxlev + 4
    stack = np.empty((cap, 4, 2))
    lev = np.empty(cap, np.int64)
    cells = _ref_cells()
    stack[0] = cells[si]
    lev[0] = 0
    top = 1
    smp = np.empty((9, 3))
    y = np.empty(3)
    ny = np.empty(3)
    phi = np.empty(nl)
    ts = np.empty(3)
    tt = np.empty(3)
    ds = np.empty(nl)
    dt = np.empty(nl)
    c = np.empty((4, 2))
    while top > 0:
        top -= 1
        c[:] = stack[top]
        l = lev[top]
        _sample_grid(si, pi, gi, c, smp, y, ts, tt)
        dmin = 1e300
        for k in range(9):
            d = 0.0
            for q in range(3):
                d += (smp[k, q] - x[q]) ** 2
            dmin = min(dmin, math.sqrt(d))
        d1 = 0.0
        d2 = 0.0
        for q in range(3):
            d1 += (smp[0, q] - smp[8, q]) ** 2
            d2 += (smp[2, q] - smp[6, q]) ** 2
        diam = math.sqrt(max(d1, d2))
        if dmin <= tol:
            return STATUS_ON_SURFACE
        if l >= maxlev and dmin < eta * diam:
            s0, t0, _ = cell_ref(c, 0.5, 0.5)
            if _project(x, si, pi, gi, s0, t0, y, ts, tt) <= tol:
                return STATUS_ON_SURFACE
        if dmin >= eta * diam or l >= maxlev:
            for ia in range(ng):
                for ib in range(ng):
                    s, t, jc = cell_ref(c, gx[ia], gx[ib])
                    meas = point_data(si, pi, gi, 1.0, nu, s, t, y, ny, phi, ts, tt, ds, dt)
                    dens = 0.0
                    for a in range(nl):
                        dens += phi[a] * sig[a]
                    r0 = x[0] - y[0]
                    r1 = x[1] - y[1]
                    r2 = x[2] - y[2]
                    r2s = r0 * r0 + r1 * r1 + r2 * r2
                    if r2s <= tol * tol:
                        return STATUS_ON_SURFACE
                    inv = 1.0 / math.sqrt(r2s)
                    w = gw[ia] * gw[ib] * jc * meas * dens * FOUR_PI_INV * inv
                    acc[0] += w
                    w *= inv * inv
                    acc[1] += w * r0
                    acc[2] += w * r1
                    acc[3] += w * r2
            continue
        for k in range(4):
            _child(c, k, stack[top])
            lev[top] = l + 1
            top += 1
    return STATUS_OK


@njit(cache=True)
def evaluate(P, shape, order, ngeo, geo, nu, sig, offs, cent, rad, X, W, PHI, gx, gw,
             threshold, eta, maxlev, tol, out):
    """``out[k] = (u, E_x, E_y, E_z)`` at points ``P[k]``; returns ``(status, k)``."""
    E = shape.shape[0]
    nq = X.shape[1]
    SQ = np.zeros((E, nq))
    for e in range(E):
        nl = n_local_nb(shape[e], nu)
        for q in range(nq):
            v = 0.0
            for a in range(nl):
                v += PHI[e, q, a] * sig[offs[e] + a]
            SQ[e, q] = v * W[e, q]
    acc = np.zeros(4)
    for k in range(P.shape[0]):
        x = P[k]
        acc[:] = 0.0
        for e in range(E):
            dc = 0.0
            for c in range(3):
                dc += (x[c] - cent[e, c]) ** 2
            dist = math.sqrt(dc) - 1.2 * rad[e]
            if dist >= threshold * 2.0 * rad[e]:
                for q in range(nq):
                    r0 = x[0] - X[e, q, 0]
                    r1 = x[1] - X[e, q, 1]
                    r2 = x[2] - X[e, q, 2]
                    inv = 1.0 / math.sqrt(r0 * r0 + r1 * r1 + r2 * r2)
                    w = SQ[e, q] * FOUR_PI_INV * inv
                    acc[0] += w
                    w *= inv * inv
                    acc[1] += w * r0
                    acc[2] += w * r1
                    acc[3] += w * r2
            else:
                nl = n_local_nb(shape[e], nu)
                st = _near_element(x, shape[e], order[e], geo[e, :ngeo[e]], nu, sig[offs[e]:offs[e] + nl],
                                   gx, gw, eta, maxlev, tol * max(rad[e], 1e-300), acc)
                if st != STATUS_OK:
                    return st, k
        out[k, :] = acc
    return STATUS_OK, -1
