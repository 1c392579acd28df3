"""Numba kernels for Galerkin double-surface integrals of V and K'.

All routines compute, for an element pair (i, j), three local blocks

* ``V[a, b]   = int_i int_j phi_a(x) U(x, y) phi_b(y)``
* ``Kij[a, b] = int_i int_j phi_a(x) dU/dn_x(x, y) phi_b(y)``
* ``Kji[b, a] = int_j int_i phi_b(y) dU/dn_y(y, x) phi_a(x)``

so that one pass over unordered pairs yields both triangles of both matrices.
Cells are sub-domains of the reference element given by four corners
(bilinear; a repeated last corner gives a collapsed triangle).
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .._numerics import basis, geom_point, n_local_nb

FOUR_PI_INV = 1.0 / (4.0 * math.pi)

STATUS_OK = 0
STATUS_DEPTH = 1
STATUS_COINCIDENT = 2


@njit(cache=True, _nrt=False)
def cell_ref(c, a, b):
    """Reference point and area factor of cell ``c`` (4 x 2) at cell coordinates (a, b)."""
    w0 = (1 - a) * (1 - b)
    w1 = a * (1 - b)
    w2 = a * b
    w3 = (1 - a) * b
    s = w0 * c[0, 0] + w1 * c[1, 0] + w2 * c[2, 0] + w3 * c[3, 0]
    t = w0 * c[0, 1] + w1 * c[1, 1] + w2 * c[2, 1] + w3 * c[3, 1]
    sa = -(1 - b) * c[0, 0] + (1 - b) * c[1, 0] + b * c[2, 0] - b * c[3, 0]
    ta = -(1 - b) * c[0, 1] + (1 - b) * c[1, 1] + b * c[2, 1] - b * c[3, 1]
    sb = -(1 - a) * c[0, 0] - a * c[1, 0] + a * c[2, 0] + (1 - a) * c[3, 0]
    tb = -(1 - a) * c[0, 1] - a * c[1, 1] + a * c[2, 1] + (1 - a) * c[3, 1]
    return s, t, abs(sa * tb - sb * ta)


@njit(cache=True, _nrt=False)
def point_data(shape, p, nodes, orient, nu, s, t, x, n, phi, ts, tt, ds, dt):
    """Geometry point, unit normal and density basis at reference (s, t); returns the measure.

    ``ts``, ``tt`` (length 3) and ``ds``, ``dt`` (length n_local) are work arrays.
    """
    geom_point(shape, p, nodes, s, t, x, ts, tt)
    n[0] = ts[1] * tt[2] - ts[2] * tt[1]
    n[1] = ts[2] * tt[0] - ts[0] * tt[2]
    n[2] = ts[0] * tt[1] - ts[1] * tt[0]
    meas = math.sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
    if meas > 0.0:
        for c in range(3):
            n[c] *= orient / meas
    basis(shape, nu, s, t, phi, ds, dt)
    return meas


@njit(cache=True, _nrt=False)
def cell_points(shape, p, nodes, orient, nu, cell, gx, gw, X, W, N, PHI, ts, tt, ds, dt):
    """Tensor Gauss points of a cell; fills X, W (with all jacobians), N, PHI."""
    ng = gx.shape[0]
    q = 0
    for ia in range(ng):
        for ib in range(ng):
            s, t, jc = cell_ref(cell, gx[ia], gx[ib])
            meas = point_data(shape, p, nodes, orient, nu, s, t, X[q], N[q], PHI[q], ts, tt, ds, dt)
            W[q] = gw[ia] * gw[ib] * jc * meas
            q += 1


@njit(cache=True, _nrt=False)
def accumulate(X, W, N, PHI, Y, WY, NY, PHY, V, Kij, Kji, both, sv, sk):
    """Add the contribution of two point sets to the local blocks (``sv``, ``sk``: work arrays)."""
    nqa = X.shape[0]
    nqb = Y.shape[0]
    na = PHI.shape[1]
    nb = PHY.shape[1]
    for qa in range(nqa):
        for b in range(nb):
            sv[b] = 0.0
            sk[b] = 0.0
        x0, x1, x2 = X[qa, 0], X[qa, 1], X[qa, 2]
        n0, n1, n2 = N[qa, 0], N[qa, 1], N[qa, 2]
        for qb in range(nqb):
            r0 = x0 - Y[qb, 0]
            r1 = x1 - Y[qb, 1]
            r2 = x2 - Y[qb, 2]
            inv = 1.0 / math.sqrt(r0 * r0 + r1 * r1 + r2 * r2)
            u = WY[qb] * inv * FOUR_PI_INV
            inv3 = u * inv * inv
            kx = -(r0 * n0 + r1 * n1 + r2 * n2) * inv3
            for b in range(nb):
                sv[b] += u * PHY[qb, b]
                sk[b] += kx * PHY[qb, b]
            if both:
                ky = (r0 * NY[qb, 0] + r1 * NY[qb, 1] + r2 * NY[qb, 2]) * inv3 * W[qa]
                for b in range(nb):
                    for a in range(na):
                        Kji[b, a] += ky * PHY[qb, b] * PHI[qa, a]
        wa = W[qa]
        for a in range(na):
            pa = wa * PHI[qa, a]
            for b in range(nb):
                V[a, b] += pa * sv[b]
                Kij[a, b] += pa * sk[b]


@njit(cache=True, _nrt=False)
def _sample_grid(shape, p, nodes, cell, out, x, ts, tt):
    k = 0
    for ia in range(3):
        for ib in range(3):
            s, t, _ = cell_ref(cell, 0.5 * ia, 0.5 * ib)
            geom_point(shape, p, nodes, s, t, x, ts, tt)
            out[k, 0] = x[0]
            out[k, 1] = x[1]
            out[k, 2] = x[2]
            k += 1


@njit(cache=True, _nrt=False)
def _dist_diam(si, sj):
    dmin = 1e300
    for a in range(9):
        for b in range(9):
            d = 0.0
            for c in range(3):
                e = si[a, c] - sj[b, c]
                d += e * e
            if d < dmin:
                dmin = d
    di = 0.0
    dj = 0.0
    for (u, v) in ((0, 8), (2, 6)):
        a = 0.0
        b = 0.0
        for c in range(3):
            a += (si[u, c] - si[v, c]) ** 2
            b += (sj[u, c] - sj[v, c]) ** 2
        di = max(di, a)
        dj = max(dj, b)
    return math.sqrt(dmin), math.sqrt(di), math.sqrt(dj)


@njit(cache=True, _nrt=False)
def _child(cell, k, out):
    a0 = 0.5 * (k % 2)
    b0 = 0.5 * (k // 2)
    for q in range(4):
        da = 0.5 if (q == 1 or q == 2) else 0.0
        db = 0.5 if q >= 2 else 0.0
        s, t, _ = cell_ref(cell, a0 + da, b0 + db)
        out[q, 0] = s
        out[q, 1] = t


@njit(cache=True)
def near_pair(si, pi, gi, oi, sj, pj, gj, oj, nu, ci, cj, gx, gw, ratio, maxdepth,
              V, Kij, Kji, both):
    """Regular pair with recursive quartering until the distance ratio is met.

    Only the larger cell of a failing pair is quartered; each side may be
    refined at most ``maxdepth`` times.
    """
    ng = gx.shape[0]
    nq = ng * ng
    nli = n_local_nb(si, nu)
    nlj = n_local_nb(sj, nu)
    X = np.empty((nq, 3))
    W = np.empty(nq)
    N = np.empty((nq, 3))
    P = np.empty((nq, nli))
    Y = np.empty((nq, 3))
    WY = np.empty(nq)
    NY = np.empty((nq, 3))
    PY = np.empty((nq, nlj))
    ts = np.empty(3)
    tt = np.empty(3)
    nlm = max(nli, nlj)
    ds = np.empty(nlm)
    dt = np.empty(nlm)
    sv = np.empty(nlm)
    sk = np.empty(nlm)
    cap = 4 * (2 * maxdepth + 3)
    st_i = np.empty((cap, 4, 2))
    st_j = np.empty((cap, 4, 2))
    st_d = np.empty((cap, 2), np.int64)
    st_i[0] = ci
    st_j[0] = cj
    st_d[0, 0] = 0
    st_d[0, 1] = 0
    top = 1
    smp_i = np.empty((9, 3))
    smp_j = np.empty((9, 3))
    xw = np.empty(3)
    tsw = np.empty(3)
    ttw = np.empty(3)
    a = np.empty((4, 2))
    b = np.empty((4, 2))
    while top > 0:
        top -= 1
        a[:] = st_i[top]
        b[:] = st_j[top]
        di = st_d[top, 0]
        dj = st_d[top, 1]
        _sample_grid(si, pi, gi, a, smp_i, xw, tsw, ttw)
        _sample_grid(sj, pj, gj, b, smp_j, xw, tsw, ttw)
        dist, diam_i, diam_j = _dist_diam(smp_i, smp_j)
        if dist >= ratio * max(diam_i, diam_j):
            cell_points(si, pi, gi, oi, nu, a, gx, gw, X, W, N, P, ts, tt, ds[:nli], dt[:nli])
            cell_points(sj, pj, gj, oj, nu, b, gx, gw, Y, WY, NY, PY, ts, tt, ds[:nlj], dt[:nlj])
            accumulate(X, W, N, P, Y, WY, NY, PY, V, Kij, Kji, both, sv[:nlj], sk[:nlj])
            continue
        split_i = diam_i >= diam_j
        if (split_i and di >= maxdepth) or ((not split_i) and dj >= maxdepth):
            return STATUS_DEPTH
        for k in range(4):
            if split_i:
                _child(a, k, st_i[top])
                st_j[top] = b
                st_d[top, 0] = di + 1
                st_d[top, 1] = dj
            else:
                st_i[top] = a
                _child(b, k, st_j[top])
                st_d[top, 0] = di
                st_d[top, 1] = dj + 1
            top += 1
    return STATUS_OK


@njit(cache=True)
def singular_cells(si, pi, gi, oi, sj, pj, gj, oj, nu, ci, cj, rp, rw, V, Kij, Kji, both):
    """Apply a 4D product rule given in cell coordinates of a canonical cell pair."""
    nli = n_local_nb(si, nu)
    nlj = n_local_nb(sj, nu)
    _singular_kernel(si, pi, gi, oi, sj, pj, gj, oj, nu, ci, cj, rp, rw, V, Kij, Kji, both,
                     np.empty((6, 3)), np.empty((6, max(nli, nlj))))


@njit(cache=True, _nrt=False)
def _singular_kernel(si, pi, gi, oi, sj, pj, gj, oj, nu, ci, cj, rp, rw, V, Kij, Kji, both, w3, wl):
    R = rw.shape[0]
    nli = n_local_nb(si, nu)
    nlj = n_local_nb(sj, nu)
    x = w3[0]
    nx_ = w3[1]
    y = w3[2]
    ny = w3[3]
    ts = w3[4]
    tt = w3[5]
    phx = wl[0, :nli]
    phy = wl[1, :nlj]
    dsi = wl[2, :nli]
    dti = wl[3, :nli]
    dsj = wl[4, :nlj]
    dtj = wl[5, :nlj]
    for q in range(R):
        s1, t1, j1 = cell_ref(ci, rp[q, 0], rp[q, 1])
        s2, t2, j2 = cell_ref(cj, rp[q, 2], rp[q, 3])
        mx = point_data(si, pi, gi, oi, nu, s1, t1, x, nx_, phx, ts, tt, dsi, dti)
        my = point_data(sj, pj, gj, oj, nu, s2, t2, y, ny, phy, ts, tt, dsj, dtj)
        r0 = x[0] - y[0]
        r1 = x[1] - y[1]
        r2 = x[2] - y[2]
        d2 = r0 * r0 + r1 * r1 + r2 * r2
        if d2 == 0.0:
            continue
        inv = 1.0 / math.sqrt(d2)
        w = rw[q] * j1 * j2 * mx * my
        u = w * inv * FOUR_PI_INV
        inv3 = u * inv * inv
        kx = -(r0 * nx_[0] + r1 * nx_[1] + r2 * nx_[2]) * inv3
        ky = (r0 * ny[0] + r1 * ny[1] + r2 * ny[2]) * inv3
        for a in range(nli):
            for b in range(nlj):
                pp = phx[a] * phy[b]
                V[a, b] += u * pp
                Kij[a, b] += kx * pp
                if both:
                    Kji[b, a] += ky * pp


@njit(cache=True)
def run_tasks(t_elem, t_cells, t_kind, t_pair, t_both, shape, order, ngeo, geo, orient, nu,
              r0p, r0w, r1p, r1w, r2p, r2w, gx, gw, ratio, maxdepth, BV, BKij, BKji):
    """Process special cell-pair tasks into per-pair block arrays; returns (status, task)."""
    for k in range(t_kind.shape[0]):
        i = t_elem[k, 0]
        j = t_elem[k, 1]
        pid = t_pair[k]
        nli = n_local_nb(shape[i], nu)
        nlj = n_local_nb(shape[j], nu)
        V = BV[pid, :nli, :nlj]
        Kij = BKij[pid, :nli, :nlj]
        Kji = BKji[pid, :nlj, :nli]
        gi = geo[i, :ngeo[i]]
        gj = geo[j, :ngeo[j]]
        kind = t_kind[k]
        both = t_both[k] != 0
        if kind == 3:
            st = near_pair(shape[i], order[i], gi, orient[i], shape[j], order[j], gj, orient[j], nu,
                           t_cells[k, 0], t_cells[k, 1], gx, gw, ratio, maxdepth, V, Kij, Kji, both)
            if st != STATUS_OK:
                return st, k
        else:
            if kind == 0:
                rp, rw = r0p, r0w
            elif kind == 1:
                rp, rw = r1p, r1w
            else:
                rp, rw = r2p, r2w
            singular_cells(shape[i], order[i], gi, orient[i], shape[j], order[j], gj, orient[j], nu,
                           t_cells[k, 0], t_cells[k, 1], rp, rw, V, Kij, Kji, both)
    return STATUS_OK, -1


@njit(cache=True)
def precompute_points(shape, order, ngeo, geo, orient, nu, gx, gw, maxnl):
    """Per-element regular quadrature data on the full reference element."""
    E = shape.shape[0]
    ng = gx.shape[0]
    nq = ng * ng
    X = np.zeros((E, nq, 3))
    W = np.zeros((E, nq))
    N = np.zeros((E, nq, 3))
    PHI = np.zeros((E, nq, maxnl))
    ts = np.empty(3)
    tt = np.empty(3)
    ds = np.empty(maxnl)
    dt = np.empty(maxnl)
    cells = _ref_cells()
    for e in range(E):
        nl = n_local_nb(shape[e], nu)
        cell_points(shape[e], order[e], geo[e, :ngeo[e]], orient[e], nu, cells[shape[e]], gx, gw,
                    X[e], W[e], N[e], PHI[e, :, :nl], ts, tt, ds[:nl], dt[:nl])
    return X, W, N, PHI


@njit(cache=True)
def _ref_cells():
    c = np.zeros((2, 4, 2))
    c[0, 1, 0] = 1.0
    c[0, 2, 0] = 1.0
    c[0, 2, 1] = 1.0
    c[0, 3, 1] = 1.0
    c[1, 1, 0] = 1.0
    c[1, 2, 1] = 1.0
    c[1, 3, 1] = 1.0
    return c


@njit(cache=True, _nrt=False)
def _is_special(sp_ptr, sp_idx, i, j):
    lo = sp_ptr[i]
    hi = sp_ptr[i + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        v = sp_idx[mid]
        if v == j:
            return True
        if v < j:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True, _nrt=False)
def _separated(i, j, cent, rad, ratio):
    """Conservative bounding-sphere test for the plain tensor rule."""
    dc = 0.0
    for c in range(3):
        dc += (cent[i, c] - cent[j, c]) ** 2
    dist = math.sqrt(dc) - 1.2 * (rad[i] + rad[j])
    return dist >= ratio * 2.0 * max(rad[i], rad[j])


@njit(cache=True)
def regular_pair(i, j, X, W, N, PHI, shape, order, ngeo, geo, orient, nu, cent, rad,
                 gx, gw, ratio, maxdepth, V, Kij, Kji, cells, sv, sk):
    nli = n_local_nb(shape[i], nu)
    nlj = n_local_nb(shape[j], nu)
    if _separated(i, j, cent, rad, ratio):
        accumulate(X[i], W[i], N[i], PHI[i, :, :nli], X[j], W[j], N[j], PHI[j, :, :nlj],
                   V, Kij, Kji, True, sv[:nlj], sk[:nlj])
        return STATUS_OK
    return near_pair(shape[i], order[i], geo[i, :ngeo[i]], orient[i], shape[j], order[j],
                     geo[j, :ngeo[j]], orient[j], nu, cells[shape[i]], cells[shape[j]], gx, gw,
                     ratio, maxdepth, V, Kij, Kji, True)


@njit(cache=True)
def dense_regular(X, W, N, PHI, shape, order, ngeo, geo, orient, nu, cent, rad, offs,
                  sp_ptr, sp_idx, gx, gw, ratio, maxdepth, VM, KM):
    """Fill dense V and K with all non-special pairs; returns (status, i, j)."""
    E = shape.shape[0]
    maxnl = PHI.shape[2]
    V = np.empty((maxnl, maxnl))
    Kij = np.empty((maxnl, maxnl))
    Kji = np.empty((maxnl, maxnl))
    sv = np.empty(maxnl)
    sk = np.empty(maxnl)
    cells = _ref_cells()
    for i in range(E):
        nli = n_local_nb(shape[i], nu)
        oi = offs[i]
        for j in range(i + 1, E):
            if _is_special(sp_ptr, sp_idx, i, j):
                continue
            nlj = n_local_nb(shape[j], nu)
            V[:nli, :nlj] = 0.0
            Kij[:nli, :nlj] = 0.0
            Kji[:nlj, :nli] = 0.0
            st = regular_pair(i, j, X, W, N, PHI, shape, order, ngeo, geo, orient, nu, cent, rad,
                              gx, gw, ratio, maxdepth, V[:nli, :nlj], Kij[:nli, :nlj], Kji[:nlj, :nli],
                              cells, sv, sk)
            if st != STATUS_OK:
                return st, i, j
            oj = offs[j]
            for a in range(nli):
                for b in range(nlj):
                    VM[oi + a, oj + b] = V[a, b]
                    VM[oj + b, oi + a] = V[a, b]
                    KM[oi + a, oj + b] = Kij[a, b]
                    KM[oj + b, oi + a] = Kji[b, a]
    return STATUS_OK, -1, -1


@njit(cache=True)
def list_regular(pairs, X, W, N, PHI, shape, order, ngeo, geo, orient, nu, cent, rad,
                 gx, gw, ratio, maxdepth, BV, BKij, BKji):
    """Regular (possibly near) pairs from a list into block arrays; returns (status, index)."""
    maxnl = PHI.shape[2]
    sv = np.empty(maxnl)
    sk = np.empty(maxnl)
    cells = _ref_cells()
    for k in range(pairs.shape[0]):
        i = pairs[k, 0]
        j = pairs[k, 1]
        nli = n_local_nb(shape[i], nu)
        nlj = n_local_nb(shape[j], nu)
        st = regular_pair(i, j, X, W, N, PHI, shape, order, ngeo, geo, orient, nu, cent, rad,
                          gx, gw, ratio, maxdepth, BV[k, :nli, :nlj], BKij[k, :nli, :nlj],
                          BKji[k, :nlj, :nli], cells, sv, sk)
        if st != STATUS_OK:
            return st, k
    return STATUS_OK, -1
