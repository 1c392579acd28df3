"""Multipole and local expansions of ``sum q / |x - y|`` (no 1/(4 pi) factor)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, ContractViolation
from . import _kernels as kx


def n_coefficients(L: int) -> int:
    return (L + 1) ** 2


def index(n: int, m: int) -> int:
    return n * n + n + m


@dataclass
class Expansion:
    """``kind`` is ``"multipole"`` (valid for ``|x - c| > radius``) or ``"local"`` (valid inside)."""

    center: np.ndarray
    order: int
    coeffs: np.ndarray
    kind: str
    radius: float = 0.0

    def __post_init__(self):
        if self.coeffs.shape != (n_coefficients(self.order),):
            raise ConfigurationError("coefficient count must be (L + 1)^2")

    def coefficient(self, n: int, m: int) -> complex:
        return complex(self.coeffs[index(n, m)])


def _check_order(L):
    if L < 0:
        raise ConfigurationError("expansion order must be non-negative")


def p2m(points, charges, center, L: int) -> Expansion:
    _check_order(L)
    pts = np.ascontiguousarray(np.atleast_2d(points), float)
    q = np.ascontiguousarray(np.broadcast_to(np.asarray(charges, float), len(pts)))
    c = np.asarray(center, float)
    M = np.zeros(n_coefficients(L), complex)
    kx.p2m_add(L, c, pts, q, M, np.zeros_like(M))
    rad = float(np.max(np.linalg.norm(pts - c, axis=1))) if len(pts) else 0.0
    return Expansion(c, L, M, "multipole", rad)


def m2m(exp: Expansion, new_center) -> Expansion:
    _require(exp, "multipole")
    c = np.asarray(new_center, float)
    M = np.zeros_like(exp.coeffs)
    kx.m2m_add(exp.order, exp.coeffs, exp.center - c, M, np.zeros_like(M))
    return Expansion(c, exp.order, M, "multipole", exp.radius + float(np.linalg.norm(exp.center - c)))


def m2l(exp: Expansion, center, radius: float = 0.0) -> Expansion:
    """Local expansion about ``center`` valid in the ball of ``radius`` (must not meet the sources)."""
    _require(exp, "multipole")
    c = np.asarray(center, float)
    d = c - exp.center
    if float(np.linalg.norm(d)) <= exp.radius + radius:
        raise ContractViolation("m2l target ball intersects the multipole's source ball")
    L = exp.order
    out = np.zeros_like(exp.coeffs)
    kx.m2l_add(L, exp.coeffs, d, out, np.zeros(n_coefficients(2 * L), complex))
    return Expansion(c, L, out, "local", float(np.linalg.norm(d)) - exp.radius)


def l2l(exp: Expansion, new_center) -> Expansion:
    _require(exp, "local")
    c = np.asarray(new_center, float)
    shift = float(np.linalg.norm(c - exp.center))
    if shift >= exp.radius:
        raise ContractViolation("l2l target center lies outside the local expansion's convergence ball")
    out = np.zeros_like(exp.coeffs)
    kx.l2l_add(exp.order, exp.coeffs, c - exp.center, out, np.zeros_like(out))
    return Expansion(c, exp.order, out, "local", exp.radius - shift)


def evaluate(exp: Expansion, points, gradient: bool = False):
    """Potential (and gradient) of the expansion; raises outside its convergence region."""
    pts = np.ascontiguousarray(np.atleast_2d(points), float)
    dist = np.linalg.norm(pts - exp.center, axis=1)
    L = exp.order
    if exp.kind == "multipole":
        if np.any(dist <= exp.radius):
            raise ContractViolation("multipole evaluated inside its convergence sphere")
        if gradient:
            raise ConfigurationError("gradients are provided for local expansions only")
        I = np.zeros(n_coefficients(L), complex)
        return np.array([kx.m2p(L, exp.coeffs, exp.center, x, I) for x in pts])
    if np.any(dist >= exp.radius):
        raise ContractViolation("local expansion evaluated outside its convergence sphere")
    R = np.zeros(n_coefficients(L), complex)
    out = np.zeros((len(pts), 4))
    for k, x in enumerate(pts):
        kx.l2p(L, exp.coeffs, exp.center, x, R, out[k])
    return (out[:, 0], out[:, 1:]) if gradient else out[:, 0]


def l2p(exp: Expansion, points, gradient: bool = False):
    _require(exp, "local")
    return evaluate(exp, points, gradient)


def _require(exp, kind):
    if exp.kind != kind:
        raise ConfigurationError(f"expected a {kind} expansion, got {exp.kind}")
