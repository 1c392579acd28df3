"""Parametric surface patches: B-spline/NURBS and exact analytic shapes.

A :class:`SurfacePatch` maps a parameter rectangle ``[u0, u1] x [v0, v1]``
into model space.  B-spline patches use the tensor-product form with
optional rational weights (evaluated through homogeneous control points
and a perspective division).  Spheres, cylinders and planes are exact and
are used wherever solver validation must not be polluted by spline-fitting
error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, SingularParameterizationError

KINDS = ("bspline", "sphere", "cylinder", "plane")

_DOMAIN_SLACK = 1e-12
_DEGENERATE = 1e-14


def _frame(axis, ref=None):
    e3 = np.asarray(axis, dtype=float)
    e3 = e3 / np.linalg.norm(e3)
    if ref is None:
        ref = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    ref = np.asarray(ref, dtype=float)
    e1 = ref - np.dot(ref, e3) * e3
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return e1, e2, e3


@dataclass(frozen=True)
class ProjectionResult:
    uv: Tuple[float, float]
    point: np.ndarray
    distance: float
    converged: bool
    iterations: int


@dataclass(frozen=True, eq=False)
class SurfacePatch:
    """A parametric surface patch.

    Use the classmethod constructors (:meth:`bspline`, :meth:`sphere`,
    :meth:`cylinder`, :meth:`plane`) rather than the raw initializer.
    """

    kind: str
    domain: Tuple[float, float, float, float]
    degrees: Tuple[int, int] = (0, 0)
    knots_u: Optional[np.ndarray] = None
    knots_v: Optional[np.ndarray] = None
    control: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    center: Optional[np.ndarray] = None
    axis: Optional[np.ndarray] = None
    radius: float = 0.0
    frame: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]] = field(default=None, repr=False)

    # -- constructors -------------------------------------------------------

    @classmethod
    def bspline(cls, degrees, knots_u, knots_v, control, weights=None):
        pu, pv = int(degrees[0]), int(degrees[1])
        ku = np.asarray(knots_u, dtype=float)
        kv = np.asarray(knots_v, dtype=float)
        ctrl = np.asarray(control, dtype=float)
        if pu < 0 or pv < 0:
            raise ValueError("degrees must be non-negative")
        if ctrl.ndim != 3 or ctrl.shape[2] != 3:
            raise ValueError("control net must have shape (n_u, n_v, 3)")
        nu, nv = ctrl.shape[:2]
        if np.any(np.diff(ku) < 0) or np.any(np.diff(kv) < 0):
            raise ValueError("knot vectors must be non-decreasing")
        if ku.size != nu + pu + 1 or kv.size != nv + pv + 1:
            raise ValueError(
                f"knot counts ({ku.size}, {kv.size}) inconsistent with control net "
                f"{nu}x{nv} and degrees ({pu}, {pv})"
            )
        w = None
        if weights is not None:
            w = np.asarray(weights, dtype=float)
            if w.shape != (nu, nv):
                raise ValueError("weights must match the control net shape")
            if np.any(w <= 0):
                raise ValueError("weights must be strictly positive")
        domain = (ku[pu], ku[nu], kv[pv], kv[nv])
        return cls("bspline", domain, (pu, pv), ku, kv, ctrl, w)

    @classmethod
    def sphere(cls, center=(0.0, 0.0, 0.0), radius=1.0, axis=(0.0, 0.0, 1.0), domain=None):
        """Sphere with ``u`` = polar angle from ``axis`` and ``v`` = azimuth."""
        _check_radius_axis(radius, axis)
        dom = (0.0, math.pi, 0.0, 2.0 * math.pi) if domain is None else tuple(map(float, domain))
        return cls("sphere", dom, center=np.asarray(center, float), axis=_unit(axis),
                   radius=float(radius), frame=_frame(axis))

    @classmethod
    def cylinder(cls, center=(0.0, 0.0, 0.0), radius=1.0, axis=(0.0, 0.0, 1.0),
                 height=(0.0, 1.0), domain=None):
        """Cylinder with ``u`` = azimuth and ``v`` = height along ``axis``."""
        _check_radius_axis(radius, axis)
        dom = (0.0, 2.0 * math.pi, float(height[0]), float(height[1])) if domain is None \
            else tuple(map(float, domain))
        return cls("cylinder", dom, center=np.asarray(center, float), axis=_unit(axis),
                   radius=float(radius), frame=_frame(axis))

    @classmethod
    def plane(cls, origin=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0), u_direction=None,
              domain=(0.0, 1.0, 0.0, 1.0)):
        _check_radius_axis(1.0, normal)
        fr = _frame(normal, u_direction)
        return cls("plane", tuple(map(float, domain)), center=np.asarray(origin, float),
                   axis=_unit(normal), frame=fr)

    # -- basic properties ---------------------------------------------------

    @property
    def rational(self) -> bool:
        return self.weights is not None

    @property
    def diameter(self) -> float:
        """Characteristic size used to scale projection tolerances."""
        if self.kind == "bspline":
            pts = self.control.reshape(-1, 3)
            return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
        if self.kind == "sphere":
            return 2.0 * self.radius
        u0, u1, v0, v1 = self.domain
        if self.kind == "cylinder":
            return float(math.hypot(2.0 * self.radius, v1 - v0))
        return float(math.hypot(u1 - u0, v1 - v0))

    def contains(self, u, v, slack=_DOMAIN_SLACK) -> bool:
        u0, u1, v0, v1 = self.domain
        su = slack * max(1.0, u1 - u0)
        sv = slack * max(1.0, v1 - v0)
        return (u0 - su <= u <= u1 + su) and (v0 - sv <= v <= v1 + sv)

    def clamp(self, u, v):
        u0, u1, v0, v1 = self.domain
        return min(max(u, u0), u1), min(max(v, v0), v1)

    # -- evaluation ---------------------------------------------------------

    def _check(self, u, v):
        if not self.contains(u, v):
            raise DomainError(f"parameter ({u}, {v}) outside patch domain {self.domain}")

    def derivatives(self, u, v, order=1):
        """Return ``[S, S_u, S_v]`` (order 1) or additionally ``S_uu, S_uv, S_vv``."""
        self._check(u, v)
        u, v = self.clamp(u, v)
        if self.kind == "bspline":
            return _bspline_derivatives(self, u, v, order)
        return _analytic_derivatives(self, u, v, order)

    def evaluate_grid(self, us, vs):
        """Vectorised evaluation on the tensor grid ``us x vs``; shape (nu, nv, 3)."""
        us = np.asarray(us, float)
        vs = np.asarray(vs, float)
        if self.kind == "bspline":
            su, bu = basis_functions(self.knots_u, self.degrees[0], us, 0)
            sv, bv = basis_functions(self.knots_v, self.degrees[1], vs, 0)
            pu, pv = self.degrees
            iu = su[:, None] - pu + np.arange(pu + 1)[None, :]
            iv = sv[:, None] - pv + np.arange(pv + 1)[None, :]
            ctrl = self.control
            if self.rational:
                hom = np.concatenate([ctrl * self.weights[..., None], self.weights[..., None]], axis=2)
            else:
                hom = ctrl
            sub = hom[iu[:, None, :, None], iv[None, :, None, :]]
            out = np.einsum("ia,jb,ijabk->ijk", bu[:, 0], bv[:, 0], sub)
            if self.rational:
                out = out[..., :3] / out[..., 3:]
            return out
        uu, vv = np.meshgrid(us, vs, indexing="ij")
        return _analytic_points(self, uu, vv)


def _unit(a):
    a = np.asarray(a, dtype=float)
    return a / np.linalg.norm(a)


def _check_radius_axis(radius, axis):
    if not radius > 0:
        raise ValueError("radius must be positive")
    n = np.linalg.norm(np.asarray(axis, dtype=float))
    if not n > 0:
        raise ValueError("axis must be non-zero")


# ---------------------------------------------------------------------------
# B-spline basis (Cox-de Boor with derivatives), vectorised over parameters
# ---------------------------------------------------------------------------


def find_span(knots, p, t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = knots.size - p - 1
    span = np.searchsorted(knots, t, side="right") - 1
    return np.clip(span, p, n - 1)


def basis_functions(knots, p, t, nder=0):
    """Non-zero basis functions and derivatives at parameters ``t``.

    Returns ``(span, ders)`` with ``ders[k, d, r]`` the ``d``-th derivative of
    basis function ``span - p + r`` at ``t[k]``.  Derivatives above ``p`` are 0.
    """
    knots = np.asarray(knots, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    m = t.size
    span = find_span(knots, p, t)
    ndu = np.zeros((m, p + 1, p + 1))
    ndu[:, 0, 0] = 1.0
    left = np.zeros((m, p + 1))
    right = np.zeros((m, p + 1))
    for j in range(1, p + 1):
        left[:, j] = t - knots[span + 1 - j]
        right[:, j] = knots[span + j] - t
        saved = np.zeros(m)
        for r in range(j):
            ndu[:, j, r] = right[:, r + 1] + left[:, j - r]
            temp = ndu[:, r, j - 1] / ndu[:, j, r]
            ndu[:, r, j] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        ndu[:, j, j] = saved
    ders = np.zeros((m, nder + 1, p + 1))
    ders[:, 0, :] = ndu[:, :, p]
    nd = min(nder, p)
    for r in range(p + 1):
        a = np.zeros((m, 2, p + 1))
        a[:, 0, 0] = 1.0
        s1, s2 = 0, 1
        for k in range(1, nd + 1):
            d = np.zeros(m)
            rk = r - k
            pk = p - k
            if r >= k:
                a[:, s2, 0] = a[:, s1, 0] / ndu[:, pk + 1, rk]
                d = a[:, s2, 0] * ndu[:, rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[:, s2, j] = (a[:, s1, j] - a[:, s1, j - 1]) / ndu[:, pk + 1, rk + j]
                d = d + a[:, s2, j] * ndu[:, rk + j, pk]
            if r <= pk:
                a[:, s2, k] = -a[:, s1, k - 1] / ndu[:, pk + 1, r]
                d = d + a[:, s2, k] * ndu[:, r, pk]
            ders[:, k, r] = d
            s1, s2 = s2, s1
    fac = float(p)
    for k in range(1, nd + 1):
        ders[:, k, :] *= fac
        fac *= p - k
    return span, ders


def _bspline_derivatives(patch, u, v, order):
    pu, pv = patch.degrees
    su, bu = basis_functions(patch.knots_u, pu, [u], order)
    sv, bv = basis_functions(patch.knots_v, pv, [v], order)
    su, sv = int(su[0]), int(sv[0])
    bu, bv = bu[0], bv[0]
    ctrl = patch.control[su - pu:su + 1, sv - pv:sv + 1]
    if patch.rational:
        w = patch.weights[su - pu:su + 1, sv - pv:sv + 1]
        hom = np.concatenate([ctrl * w[..., None], w[..., None]], axis=2)
    else:
        hom = ctrl

    def d(a, b):
        return np.einsum("i,j,ijk->k", bu[a], bv[b], hom)

    pairs = [(0, 0), (1, 0), (0, 1)]
    if order >= 2:
        pairs += [(2, 0), (1, 1), (0, 2)]
    h = {ab: d(*ab) for ab in pairs}
    if not patch.rational:
        return [h[ab] for ab in pairs]
    w = {ab: h[ab][3] for ab in pairs}
    a = {ab: h[ab][:3] for ab in pairs}
    s = a[0, 0] / w[0, 0]
    su_ = (a[1, 0] - w[1, 0] * s) / w[0, 0]
    sv_ = (a[0, 1] - w[0, 1] * s) / w[0, 0]
    out = [s, su_, sv_]
    if order >= 2:
        suu = (a[2, 0] - 2 * w[1, 0] * su_ - w[2, 0] * s) / w[0, 0]
        suv = (a[1, 1] - w[1, 0] * sv_ - w[0, 1] * su_ - w[1, 1] * s) / w[0, 0]
        svv = (a[0, 2] - 2 * w[0, 1] * sv_ - w[0, 2] * s) / w[0, 0]
        out += [suu, suv, svv]
    return out


# ---------------------------------------------------------------------------
# analytic shapes
# ---------------------------------------------------------------------------


def _analytic_points(patch, u, v):
    e1, e2, e3 = patch.frame
    c = patch.center
    u = np.asarray(u, float)[..., None]
    v = np.asarray(v, float)[..., None]
    if patch.kind == "sphere":
        r = patch.radius
        return c + r * (np.sin(u) * np.cos(v) * e1 + np.sin(u) * np.sin(v) * e2 + np.cos(u) * e3)
    if patch.kind == "cylinder":
        r = patch.radius
        return c + r * (np.cos(u) * e1 + np.sin(u) * e2) + v * e3
    return c + u * e1 + v * e2


def _analytic_derivatives(patch, u, v, order):
    e1, e2, e3 = patch.frame
    c = patch.center
    r = patch.radius
    if patch.kind == "sphere":
        su, cu, sv, cv = math.sin(u), math.cos(u), math.sin(v), math.cos(v)
        s = c + r * (su * cv * e1 + su * sv * e2 + cu * e3)
        s_u = r * (cu * cv * e1 + cu * sv * e2 - su * e3)
        s_v = r * (-su * sv * e1 + su * cv * e2)
        out = [s, s_u, s_v]
        if order >= 2:
            out += [r * (-su * cv * e1 - su * sv * e2 - cu * e3),
                    r * (-cu * sv * e1 + cu * cv * e2),
                    r * (-su * cv * e1 - su * sv * e2)]
        return out
    if patch.kind == "cylinder":
        su, cu = math.sin(u), math.cos(u)
        s = c + r * (cu * e1 + su * e2) + v * e3
        out = [s, r * (-su * e1 + cu * e2), e3.copy()]
        if order >= 2:
            z = np.zeros(3)
            out += [r * (-cu * e1 - su * e2), z, z.copy()]
        return out
    out = [c + u * e1 + v * e2, e1.copy(), e2.copy()]
    if order >= 2:
        out += [np.zeros(3), np.zeros(3), np.zeros(3)]
    return out


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def eval_patch(patch: SurfacePatch, u: float, v: float) -> np.ndarray:
    """Point ``S(u, v)`` on the patch."""
    return patch.derivatives(u, v, order=1)[0]


def eval_patch_derivatives(patch: SurfacePatch, u: float, v: float):
    """Return ``(point, tangent_u, tangent_v, unit_normal)``.

    Raises :class:`SingularParameterizationError` where the tangents are
    parallel or vanish (sphere poles, collapsed spline edges).
    """
    s, su, sv = patch.derivatives(u, v, order=1)
    n = np.cross(su, sv)
    nn = np.linalg.norm(n)
    if nn < _DEGENERATE * np.linalg.norm(su) * np.linalg.norm(sv) or nn == 0.0:
        raise SingularParameterizationError(f"degenerate parameterization at ({u}, {v})")
    return s, su, sv, n / nn


def closest_point(patch: SurfacePatch, x, guess: Optional[Sequence[float]] = None,
                  grid: int = 16, max_iter: int = 50) -> ProjectionResult:
    """Closest point on ``patch`` to ``x`` (a local minimiser of the distance).

    Analytic kinds are projected in closed form.  B-spline patches use a
    clamped Newton iteration on the stationarity conditions, seeded either by
    ``guess`` or by a ``grid x grid`` scan of the parameter domain; if Newton
    does not converge a refined scan is tried before giving up.
    """
    x = np.asarray(x, dtype=float)
    if patch.kind != "bspline":
        return _closest_analytic(patch, x)
    tol = 1e-12 * patch.diameter
    if guess is None:
        guess = _grid_seed(patch, x, grid)
    uv, ok, it = _newton_project(patch, x, guess, tol, max_iter)
    total = it
    if not ok:
        uv2, ok2, it2 = _newton_project(patch, x, _grid_seed(patch, x, 4 * grid), tol, max_iter)
        total += it2
        if ok2 or _dist(patch, x, uv2) < _dist(patch, x, uv):
            uv, ok = uv2, ok2
    pt = eval_patch(patch, *uv)
    return ProjectionResult((float(uv[0]), float(uv[1])), pt, float(np.linalg.norm(pt - x)), ok, total)


def _dist(patch, x, uv):
    return float(np.linalg.norm(eval_patch(patch, *uv) - x))


def _grid_seed(patch, x, n):
    u0, u1, v0, v1 = patch.domain
    us = np.linspace(u0, u1, n)
    vs = np.linspace(v0, v1, n)
    pts = patch.evaluate_grid(us, vs)
    d2 = np.sum((pts - x) ** 2, axis=2)
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    return us[i], vs[j]


def _newton_project(patch, x, guess, tol, max_iter):
    u, v = patch.clamp(float(guess[0]), float(guess[1]))
    u0, u1, v0, v1 = patch.domain
    for it in range(1, max_iter + 1):
        s, su, sv, suu, suv, svv = patch.derivatives(u, v, order=2)
        r = s - x
        g = np.array([r @ su, r @ sv])
        nu_, nv_ = np.linalg.norm(su), np.linalg.norm(sv)
        # active bounds: gradient pushes outward at a clamped coordinate
        free_u = not ((u <= u0 and g[0] > 0) or (u >= u1 and g[0] < 0))
        free_v = not ((v <= v0 and g[1] > 0) or (v >= v1 and g[1] < 0))
        res_u = abs(g[0]) / nu_ if (free_u and nu_ > 0) else 0.0
        res_v = abs(g[1]) / nv_ if (free_v and nv_ > 0) else 0.0
        if max(res_u, res_v) <= tol or np.linalg.norm(r) <= tol:
            return (u, v), True, it
        J = np.array([[su @ su + r @ suu, su @ sv + r @ suv],
                      [su @ sv + r @ suv, sv @ sv + r @ svv]])
        if not free_u:
            J[0, 1] = J[1, 0] = 0.0
            g[0] = 0.0
            J[0, 0] = 1.0
        if not free_v:
            J[0, 1] = J[1, 0] = 0.0
            g[1] = 0.0
            J[1, 1] = 1.0
        try:
            step = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            step = -g / max(J[0, 0] + J[1, 1], 1e-300)
        if J[0, 0] <= 0 or np.linalg.det(J) <= 0:
            # indefinite Hessian: fall back to a gradient step
            step = -g / max(su @ su + sv @ sv, 1e-300)
        u, v = patch.clamp(u + step[0], v + step[1])
    return (u, v), False, max_iter


def _wrap_interval(a, lo, hi):
    """Map angle ``a`` into ``[lo, hi]`` modulo 2 pi where possible, else clamp."""
    two_pi = 2.0 * math.pi
    k = math.floor((a - lo) / two_pi)
    a = a - k * two_pi
    if a <= hi:
        return a
    # outside an angular sub-range: clamp to the nearest end (modulo 2 pi)
    d_hi = a - hi
    d_lo = lo + two_pi - a
    return hi if d_hi <= d_lo else lo


def _closest_analytic(patch, x):
    e1, e2, e3 = patch.frame
    d = x - patch.center
    u0, u1, v0, v1 = patch.domain
    if patch.kind == "plane":
        u, v = patch.clamp(float(d @ e1), float(d @ e2))
    elif patch.kind == "sphere":
        nd = np.linalg.norm(d)
        if nd == 0.0:
            u, v = patch.clamp(0.0, 0.0)
        else:
            u = math.acos(max(-1.0, min(1.0, float(d @ e3) / nd)))
            v = math.atan2(float(d @ e2), float(d @ e1))
            u = min(max(u, u0), u1)
            v = _wrap_interval(v, v0, v1)
    else:
        dp = d - (d @ e3) * e3
        if np.linalg.norm(dp) == 0.0:
            u = u0
        else:
            u = _wrap_interval(math.atan2(float(d @ e2), float(d @ e1)), u0, u1)
        v = min(max(float(d @ e3), v0), v1)
    pt = eval_patch(patch, u, v)
    return ProjectionResult((float(u), float(v)), pt, float(np.linalg.norm(pt - x)), True, 0)
