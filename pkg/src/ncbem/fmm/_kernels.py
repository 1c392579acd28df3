"""Numba kernels for Laplace solid-harmonic expansions.

Coefficients of degree ``n`` and order ``m`` sit at ``n*n + n + m``.
Regular harmonics ``R_n^m = r^n P_n^m e^{i m phi} / (n+m)!`` and irregular
``I_n^m = (n-m)! P_n^m e^{i m phi} / r^{n+1}`` (Ferrers functions with the
Condon-Shortley phase, ``X_n^{-m} = (-1)^m conj(X_n^m)``), so that
``1/|x - y| = sum conj(R_n^m(y)) I_n^m(x)`` for ``|y| < |x|``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, _nrt=False)
def regular(L, x, y, z, out):
    out[0] = 1.0
    r2 = x * x + y * y + z * z
    w = complex(x, y)
    for n in range(1, L + 1):
        out[n * n + 2 * n] = -w / (2.0 * n) * out[(n - 1) * (n - 1) + 2 * (n - 1)]
        for m in range(n):
            v = (2 * n - 1) * z * out[(n - 1) * (n - 1) + (n - 1) + m]
            if m <= n - 2:
                v -= r2 * out[(n - 2) * (n - 2) + (n - 2) + m]
            out[n * n + n + m] = v / ((n + m) * (n - m))
        sgn = -1.0
        for m in range(1, n + 1):
            out[n * n + n - m] = sgn * out[n * n + n + m].conjugate()
            sgn = -sgn


@njit(cache=True, _nrt=False)
def irregular(L, x, y, z, out):
    r2 = x * x + y * y + z * z
    inv2 = 1.0 / r2
    out[0] = math.sqrt(inv2)
    w = complex(x, y)
    for n in range(1, L + 1):
        out[n * n + 2 * n] = -(2 * n - 1) * w * inv2 * out[(n - 1) * (n - 1) + 2 * (n - 1)]
        for m in range(n):
            v = (2 * n - 1) * z * out[(n - 1) * (n - 1) + (n - 1) + m]
            if m <= n - 2:
                v -= ((n - 1) * (n - 1) - m * m) * out[(n - 2) * (n - 2) + (n - 2) + m]
            out[n * n + n + m] = v * inv2
        sgn = -1.0
        for m in range(1, n + 1):
            out[n * n + n - m] = sgn * out[n * n + n + m].conjugate()
            sgn = -sgn


@njit(cache=True, _nrt=False)
def p2m_add(L, c, pts, q, M, R):
    """``M += sum_k q_k conj(R(pts_k - c))``."""
    nc = (L + 1) * (L + 1)
    for k in range(pts.shape[0]):
        regular(L, pts[k, 0] - c[0], pts[k, 1] - c[1], pts[k, 2] - c[2], R)
        for a in range(nc):
            M[a] += q[k] * R[a].conjugate()


@njit(cache=True, _nrt=False)
def m2m_add(L, Mc, d, Mp, R):
    """Shift a multipole about ``c`` to ``c'`` with ``d = c - c'``; adds into ``Mp``."""
    regular(L, d[0], d[1], d[2], R)
    for n in range(L + 1):
        for m in range(0, n + 1):
            acc = 0j
            for k in range(n + 1):
                for l in range(-k, k + 1):
                    mm = m - l
                    if mm < -(n - k) or mm > n - k:
                        continue
                    acc += R[k * k + k + l].conjugate() * Mc[(n - k) * (n - k) + (n - k) + mm]
            Mp[n * n + n + m] += acc
            if m > 0:
                Mp[n * n + n - m] += (-1.0 if m % 2 else 1.0) * acc.conjugate()


@njit(cache=True, _nrt=False)
def m2l_add(L, Ms, d, Lt, I):
    """Multipole at ``c_s`` to local at ``c_t`` with ``d = c_t - c_s`` (``I`` sized for degree 2L)."""
    irregular(2 * L, d[0], d[1], d[2], I)
    for k in range(L + 1):
        sk = 1.0 if k % 2 == 0 else -1.0
        for l in range(0, k + 1):
            acc = 0j
            for n in range(L + 1):
                nk = n + k
                for m in range(-n, n + 1):
                    acc += Ms[n * n + n + m] * I[nk * nk + nk + m + l]
            v = sk * acc.conjugate()
            Lt[k * k + k + l] += v
            if l > 0:
                Lt[k * k + k - l] += (-1.0 if l % 2 else 1.0) * v.conjugate()


@njit(cache=True, _nrt=False)
def l2l_add(L, Lp, d, Lc, R):
    """Shift a local expansion from ``c`` to ``c'`` with ``d = c' - c``; adds into ``Lc``."""
    regular(L, d[0], d[1], d[2], R)
    for k in range(L + 1):
        for l in range(0, k + 1):
            acc = 0j
            for n in range(k, L + 1):
                for m in range(-n, n + 1):
                    mm = m - l
                    if mm < -(n - k) or mm > n - k:
                        continue
                    acc += Lp[n * n + n + m] * R[(n - k) * (n - k) + (n - k) + mm]
            Lc[k * k + k + l] += acc
            if l > 0:
                Lc[k * k + k - l] += (-1.0 if l % 2 else 1.0) * acc.conjugate()


@njit(cache=True, _nrt=False)
def l2p(L, Lc, c, x, R, out):
    """Writes ``(phi, dphi/dx, dphi/dy, dphi/dz)`` of ``phi = sum L R(x - c)`` into ``out``."""
    regular(L, x[0] - c[0], x[1] - c[1], x[2] - c[2], R)
    phi = 0.0
    gx = 0.0
    gy = 0.0
    gz = 0.0
    for n in range(L + 1):
        for m in range(-n, n + 1):
            a = Lc[n * n + n + m]
            phi += (a * R[n * n + n + m]).real
            if n == 0:
                continue
            n1 = n - 1
            b = n1 * n1 + n1
            up = R[b + m + 1] if m + 1 <= n1 else 0j
            dn = R[b + m - 1] if m - 1 >= -n1 else 0j
            zc = R[b + m] if -n1 <= m <= n1 else 0j
            gx += (a * 0.5 * (up - dn)).real
            gy += (a * (-0.5j) * (up + dn)).real
            gz += (a * zc).real
    out[0] = phi
    out[1] = gx
    out[2] = gy
    out[3] = gz


@njit(cache=True, _nrt=False)
def m2p(L, Mc, c, x, I):
    irregular(L, x[0] - c[0], x[1] - c[1], x[2] - c[2], I)
    phi = 0.0
    for a in range((L + 1) * (L + 1)):
        phi += (Mc[a] * I[a]).real
    return phi


# ---------------------------------------------------------------------------
# real packing of symmetric coefficient vectors (X^{-m} = (-1)^m conj X^m)
# packed index: n*n for m = 0, n*n + 2m - 1 (real part) and n*n + 2m (imaginary part)
# ---------------------------------------------------------------------------


@njit(cache=True, _nrt=False)
def unpack(L, r, c):
    for n in range(L + 1):
        b = n * n
        c[b + n] = r[b]
        sgn = -1.0
        for m in range(1, n + 1):
            v = complex(r[b + 2 * m - 1], r[b + 2 * m])
            c[b + n + m] = v
            c[b + n - m] = sgn * v.conjugate()
            sgn = -sgn


@njit(cache=True, _nrt=False)
def pack(L, c, r):
    for n in range(L + 1):
        b = n * n
        r[b] = c[b + n].real
        for m in range(1, n + 1):
            r[b + 2 * m - 1] = c[b + n + m].real
            r[b + 2 * m] = c[b + n + m].imag


@njit(cache=True)
def translation_matrix(kind, L, d):
    """Real ``(nc, nc)`` matrix of M2M (kind 0), M2L (1) or L2L (2) for shift vector ``d``."""
    nc = (L + 1) * (L + 1)
    T = np.zeros((nc, nc))
    e = np.zeros(nc)
    cin = np.zeros(nc, np.complex128)
    cout = np.zeros(nc, np.complex128)
    R = np.zeros(nc, np.complex128)
    I = np.zeros((2 * L + 1) * (2 * L + 1), np.complex128)
    col = np.zeros(nc)
    for j in range(nc):
        e[:] = 0.0
        e[j] = 1.0
        unpack(L, e, cin)
        cout[:] = 0.0
        if kind == 0:
            m2m_add(L, cin, d, cout, R)
        elif kind == 1:
            m2l_add(L, cin, d, cout, I)
        else:
            l2l_add(L, cin, d, cout, R)
        pack(L, cout, col)
        T[:, j] = col
    return T


@njit(cache=True)
def source_blocks(L, center, leaf_of_el, X, W, PHI, nloc):
    """Per element the real ``(nc, nloc)`` block mapping its dofs to the packed multipole of its leaf."""
    E, nq = X.shape[0], X.shape[1]
    nc = (L + 1) * (L + 1)
    out = np.zeros((E, nc, PHI.shape[2]))
    R = np.zeros(nc, np.complex128)
    for e in range(E):
        c = center[leaf_of_el[e]]
        for q in range(nq):
            regular(L, X[e, q, 0] - c[0], X[e, q, 1] - c[1], X[e, q, 2] - c[2], R)
            for n in range(L + 1):
                b = n * n
                for m in range(n + 1):
                    z = R[b + n + m]
                    for a in range(nloc[e]):
                        w = W[e, q] * PHI[e, q, a]
                        if m == 0:
                            out[e, b, a] += w * z.real
                        else:
                            out[e, b + 2 * m - 1, a] += w * z.real
                            out[e, b + 2 * m, a] -= w * z.imag
    return out


@njit(cache=True)
def target_blocks(L, center, leaf_of_el, X, W, N, PHI, nloc):
    """Per element the real ``(nloc, nc)`` blocks mapping the packed local expansion of its leaf
    to the tested potential and tested normal derivative (both scaled by 1/(4 pi))."""
    E, nq = X.shape[0], X.shape[1]
    nc = (L + 1) * (L + 1)
    BV = np.zeros((E, PHI.shape[2], nc))
    BK = np.zeros((E, PHI.shape[2], nc))
    R = np.zeros(nc, np.complex128)
    rv = np.zeros(nc)
    rk = np.zeros(nc)
    s4 = 1.0 / (4.0 * np.pi)
    for e in range(E):
        c = center[leaf_of_el[e]]
        for q in range(nq):
            regular(L, X[e, q, 0] - c[0], X[e, q, 1] - c[1], X[e, q, 2] - c[2], R)
            n0, n1, n2 = N[e, q, 0], N[e, q, 1], N[e, q, 2]
            for n in range(L + 1):
                b = n * n
                n1_ = n - 1
                bb = n1_ * n1_ + n1_
                for m in range(n + 1):
                    z = R[b + n + m]
                    g = 0j
                    if n > 0:
                        up = R[bb + m + 1] if m + 1 <= n1_ else 0j
                        dn = R[bb + m - 1] if m - 1 >= -n1_ else 0j
                        zc = R[bb + m] if m <= n1_ else 0j
                        g = n0 * 0.5 * (up - dn) + n1 * (-0.5j) * (up + dn) + n2 * zc
                    if m == 0:
                        rv[b] = z.real
                        rk[b] = g.real
                    else:
                        rv[b + 2 * m - 1] = 2.0 * z.real
                        rv[b + 2 * m] = -2.0 * z.imag
                        rk[b + 2 * m - 1] = 2.0 * g.real
                        rk[b + 2 * m] = -2.0 * g.imag
            for a in range(nloc[e]):
                w = W[e, q] * PHI[e, q, a] * s4
                for j in range(nc):
                    BV[e, a, j] += w * rv[j]
                    BK[e, a, j] += w * rk[j]
    return BV, BK
