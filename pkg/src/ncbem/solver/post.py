"""Post-processing: element-wise trace recovery, off-surface potential and field, total charges."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..errors import ConfigurationError, DegenerateElementError, NcbemError
from ..quadrature.rules import gauss_rule
from . import _evalcore


class OnSurfaceError(NcbemError, ValueError):
    """Potential requested on the boundary itself; use the recovered traces instead."""

    def __init__(self, message, index=0):
        super().__init__(message)
        self.index = index


@dataclass
class Traces:
    """Per-dof traces: Dirichlet ``u`` and Neumann ``q_plus`` / ``q_minus`` (side the normal points to = plus)."""

    u: np.ndarray
    q_plus: np.ndarray
    q_minus: np.ndarray


@dataclass
class SolutionFields:
    sigma: np.ndarray
    alpha: Dict[int, float]
    traces: Optional[Traces] = None
    charges: Dict[int, float] = field(default_factory=dict)


def _blockwise_solve(disc, rhs: np.ndarray) -> np.ndarray:
    out = np.empty_like(rhs)
    MB = disc.mass_blocks
    for e, (o, c) in enumerate(zip(disc.offs, disc.counts)):
        Me = MB[e, :c, :c]
        if c == 1:
            if not Me[0, 0] > 0:
                raise DegenerateElementError(f"element {e} has a non-positive mass entry")
            out[o] = rhs[o] / Me[0, 0]
            continue
        if np.linalg.cond(Me) > 1e12:
            raise DegenerateElementError(f"element {e} has a singular mass block")
        out[o:o + c] = np.linalg.solve(Me, rhs[o:o + c])
    return out


def recover_traces(system, sigma: np.ndarray) -> Traces:
    """Solve ``M u = V sigma`` and ``M q = (-+ 1/2 M + K) sigma`` element by element."""
    sigma = np.asarray(sigma, float)[:system.n_sigma]
    Vs, Ks = system.layer.apply(sigma)
    Ms = system.M @ sigma
    disc = system.model.disc
    u = _blockwise_solve(disc, Vs)
    qp = _blockwise_solve(disc, -0.5 * Ms + Ks)
    qm = _blockwise_solve(disc, 0.5 * Ms + Ks)
    return Traces(u, qp, qm)


def total_charge(system, n: int, traces: Traces) -> float:
    """``Q_n = -eps0 sum_a sign_n(a) eps_opp int gamma_N^sign u`` from the recovered Neumann traces."""
    sk = system.model.skeleton
    if n not in sk.domains or not sk.domains[n].is_conductor:
        raise ConfigurationError(f"domain {n} is not a conductor")
    ints = system.model.disc.basis_integrals
    tot = 0.0
    for s in sk.charge_sides(n):
        idx = system.model.region_dofs(s.region)
        q = traces.q_plus if s.sign > 0 else traces.q_minus
        tot += s.sign * s.eps_opp * float(ints[idx] @ q[idx])
    return -system.eps0 * tot


def _evaluate(model, sigma, points, threshold=4.0, max_levels=6, order=None):
    disc = model.disc
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, float)))
    t = disc.table
    gx, gw = gauss_rule(order or disc.quad.regular_order)
    X, W, _, PHI = disc.points
    out = np.zeros((len(pts), 4))
    st, k = _evalcore.evaluate(pts, t.shape, t.order, t.ngeo, t.geo, disc.nu,
                               np.ascontiguousarray(sigma[:disc.n], dtype=float), disc.offs,
                               t.centroid, t.radius, X, W, PHI, gx, gw, float(threshold), float(threshold),
                               int(max_levels), 1e-12, out)
    if st != _evalcore.STATUS_OK:
        raise OnSurfaceError(f"evaluation point {pts[k].tolist()} lies on the boundary", int(k))
    return out


def eval_potential(model, sigma, points, **kw) -> np.ndarray:
    """Single-layer potential ``u(x)`` (volts) at points off the boundary."""
    return _evaluate(model, sigma, points, **kw)[:, 0]


def eval_field(model, sigma, points, **kw) -> np.ndarray:
    """Electric field ``E = -grad u`` (V/m)."""
    return _evaluate(model, sigma, points, **kw)[:, 1:]


def eval_potential_and_field(model, sigma, points, **kw):
    out = _evaluate(model, sigma, points, **kw)
    return out[:, 0], out[:, 1:]
