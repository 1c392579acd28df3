"""Galerkin discretisation of V, K' and M on a density space."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .. import _numerics as nx
from ..errors import ConfigurationError, NearContactError
from ..mesh.elements import DensitySpace, SurfaceMesh
from ..mesh.table import ElementTable
from ..quadrature.pairs import PairClass, build_plan
from ..quadrature.rules import gauss_rule, singular_rule
from . import _core

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureConfig:
    """Quadrature orders (points per direction) and the near-field distance ratio."""

    regular_order: int = 4
    singular_order: int = 6
    near_ratio: float = 1.5
    max_depth: int = 10

    def __post_init__(self):
        if not 1 <= self.regular_order <= 30 or not 1 <= self.singular_order <= 30:
            raise ConfigurationError("quadrature orders must lie in [1, 30]")
        if self.near_ratio <= 0:
            raise ConfigurationError("near_ratio must be positive")


class Discretization:
    """Element table, pair plan and quadrature data for one density space.

    ``orientation`` maps mesh index to +1/-1 (whether the region normal
    agrees with the meshed normal).
    """

    def __init__(self, meshes: Sequence[SurfaceMesh], space: DensitySpace, orientation=None,
                 interfaces=(), quadrature: Optional[QuadratureConfig] = None):
        self.meshes = list(meshes)
        self.space = space
        self.nu = space.nu
        self.quad = quadrature or QuadratureConfig()
        self.interfaces = list(interfaces)
        orient = None if orientation is None else [orientation[k] for k in range(len(self.meshes))]
        self.table = ElementTable.build(self.meshes, space.elements, orient)
        self.offs = np.asarray(space.offsets, np.int64)
        self.counts = np.asarray(space.local_counts, np.int64)
        self.maxnl = int(self.counts.max())
        self.n = space.n_dofs

    # -- plan and special blocks -------------------------------------------

    @cached_property
    def plan(self):
        p = build_plan(self.table, self.interfaces)
        log.debug("pair plan: %d special pairs, tasks %s", len(p.pairs), p.counts)
        return p

    @cached_property
    def special_csr(self):
        return self.plan.special_csr(self.table.n)

    def _args(self):
        t = self.table
        return t.shape, t.order, t.ngeo, t.geo, t.orient, self.nu

    @cached_property
    def special_blocks(self):
        """``(BV, BKij, BKji)`` per special pair of ``plan.pairs``."""
        plan = self.plan
        P = len(plan.pairs)
        m = self.maxnl
        BV = np.zeros((P, m, m))
        BKij = np.zeros((P, m, m))
        BKji = np.zeros((P, m, m))
        n = self.quad.singular_order
        rules = [singular_rule(c, n) for c in (PairClass.IDENTICAL, PairClass.EDGE, PairClass.VERTEX)]
        rr = []
        for r in rules:
            rr += [np.ascontiguousarray(np.hstack([r.x, r.y])), np.ascontiguousarray(r.w)]
        gx, gw = gauss_rule(self.quad.regular_order)
        st, k = _core.run_tasks(plan.t_elem, plan.t_cells, plan.t_kind, plan.t_pair, plan.t_both,
                                *self._args(), *rr, gx, gw, self.quad.near_ratio, self.quad.max_depth,
                                BV, BKij, BKji)
        if st != _core.STATUS_OK:
            raise NearContactError(self._contact_message(*plan.t_elem[k]))
        for p, (i, j) in enumerate(plan.pairs):
            if i == j:
                nl = self.counts[i]
                BV[p, :nl, :nl] = 0.5 * (BV[p, :nl, :nl] + BV[p, :nl, :nl].T)
        return BV, BKij, BKji

    def _contact_message(self, i, j):
        t = self.table
        a = (t.meshes[t.mesh_index[i]].id, int(t.local_index[i]))
        b = (t.meshes[t.mesh_index[j]].id, int(t.local_index[j]))
        return (f"near-field subdivision of elements {a} and {b} exceeded depth "
                f"{self.quad.max_depth}; the surfaces may touch or overlap without an interface")

    @cached_property
    def points(self):
        """Regular quadrature points ``(X, W, N, PHI)`` per element."""
        gx, gw = gauss_rule(self.quad.regular_order)
        return _core.precompute_points(*self._args(), gx, gw, self.maxnl)

    # -- assembled matrices ------------------------------------------------

    def dense(self):
        """Dense ``(V, K)`` with ``K`` the adjoint double-layer matrix."""
        N = self.n
        V = np.zeros((N, N))
        K = np.zeros((N, N))
        X, W, Nn, PHI = self.points
        t = self.table
        gx, gw = gauss_rule(self.quad.regular_order)
        ptr, idx = self.special_csr
        st, i, j = _core.dense_regular(X, W, Nn, PHI, *self._args(), t.centroid, t.radius, self.offs,
                                       ptr, idx, gx, gw, self.quad.near_ratio, self.quad.max_depth, V, K)
        if st != _core.STATUS_OK:
            raise NearContactError(self._contact_message(i, j))
        self._scatter_special(V, K)
        return V, K

    def _scatter_special(self, V, K):
        BV, BKij, BKji = self.special_blocks
        for p, (i, j) in enumerate(self.plan.pairs):
            oi, oj = self.offs[i], self.offs[j]
            ni, nj = self.counts[i], self.counts[j]
            si, sj = slice(oi, oi + ni), slice(oj, oj + nj)
            V[si, sj] = BV[p, :ni, :nj]
            K[si, sj] = BKij[p, :ni, :nj]
            if i != j:
                V[sj, si] = BV[p, :ni, :nj].T
                K[sj, si] = BKji[p, :nj, :ni]

    def special_sparse(self):
        """Sparse ``(V, K)`` holding only the special-pair entries."""
        rows, cols, vv, kk = [], [], [], []
        BV, BKij, BKji = self.special_blocks
        for p, (i, j) in enumerate(self.plan.pairs):
            oi, oj = self.offs[i], self.offs[j]
            ni, nj = self.counts[i], self.counts[j]
            r, c = np.meshgrid(np.arange(oi, oi + ni), np.arange(oj, oj + nj), indexing="ij")
            rows.append(r.ravel()); cols.append(c.ravel())
            vv.append(BV[p, :ni, :nj].ravel()); kk.append(BKij[p, :ni, :nj].ravel())
            if i != j:
                rows.append(c.ravel()); cols.append(r.ravel())
                vv.append(BV[p, :ni, :nj].ravel()); kk.append(BKji[p, :nj, :ni].T.ravel())
        return self._coo(rows, cols, vv, kk)

    def regular_sparse(self, pairs: np.ndarray):
        """Sparse ``(V, K)`` for a list of regular element pairs ``(i, j)``, i != j, both directions."""
        pairs = np.ascontiguousarray(pairs, np.int64).reshape(-1, 2)
        P = len(pairs)
        m = self.maxnl
        BV = np.zeros((P, m, m))
        BKij = np.zeros((P, m, m))
        BKji = np.zeros((P, m, m))
        X, W, Nn, PHI = self.points
        t = self.table
        gx, gw = gauss_rule(self.quad.regular_order)
        st, k = _core.list_regular(pairs, X, W, Nn, PHI, *self._args(), t.centroid, t.radius, gx, gw,
                                   self.quad.near_ratio, self.quad.max_depth, BV, BKij, BKji)
        if st != _core.STATUS_OK:
            raise NearContactError(self._contact_message(*pairs[k]))
        if self.counts.min() == m:
            # uniform local size: vectorised scatter
            loc = np.arange(m)
            ri = (self.offs[pairs[:, 0]][:, None] + loc)[:, :, None] + np.zeros((1, 1, m), np.int64)
            cj = (self.offs[pairs[:, 1]][:, None] + loc)[:, None, :] + np.zeros((1, m, 1), np.int64)
            rows = [ri.ravel(), cj.ravel()]
            cols = [cj.ravel(), ri.ravel()]
            vv = [BV.ravel(), BV.ravel()]
            kk = [BKij.ravel(), BKji.transpose(0, 2, 1).ravel()]
            return self._coo(rows, cols, vv, kk)
        rows, cols, vv, kk = [], [], [], []
        for p, (i, j) in enumerate(pairs):
            oi, oj = self.offs[i], self.offs[j]
            ni, nj = self.counts[i], self.counts[j]
            r, c = np.meshgrid(np.arange(oi, oi + ni), np.arange(oj, oj + nj), indexing="ij")
            rows += [r.ravel(), c.ravel()]
            cols += [c.ravel(), r.ravel()]
            vv += [BV[p, :ni, :nj].ravel()] * 2
            kk += [BKij[p, :ni, :nj].ravel(), BKji[p, :nj, :ni].T.ravel()]
        return self._coo(rows, cols, vv, kk)

    def _coo(self, rows, cols, vv, kk):
        N = self.n
        if not rows:
            z = sp.csr_matrix((N, N))
            return z, z.copy()
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        V = sp.csr_matrix((np.concatenate(vv), (r, c)), shape=(N, N))
        K = sp.csr_matrix((np.concatenate(kk), (r, c)), shape=(N, N))
        return V, K

    # -- single-surface quantities -----------------------------------------

    @cached_property
    def mass_blocks(self) -> np.ndarray:
        """Local mass matrices ``(E, maxnl, maxnl)`` (zero padded)."""
        t = self.table
        n = max(self.quad.regular_order, self.nu + int(t.order.max()) + 1)
        gx, gw = gauss_rule(n)
        _, W, _, PHI = _core.precompute_points(*self._args(), gx, gw, self.maxnl)
        return np.einsum("eq,eqa,eqb->eab", W, PHI, PHI)

    def mass(self) -> sp.csr_matrix:
        """Block-diagonal Gram matrix ``M[i, j] = int phi_i phi_j``."""
        blocks = [self.mass_blocks[e, :c, :c] for e, c in enumerate(self.counts)]
        return sp.block_diag(blocks, format="csr") if blocks else sp.csr_matrix((0, 0))

    @cached_property
    def basis_integrals(self) -> np.ndarray:
        """``int phi_i ds`` per dof."""
        out = np.zeros(self.n)
        for e, c in enumerate(self.counts):
            out[self.offs[e]:self.offs[e] + c] = self.mass_blocks[e, :c, :c].sum(axis=1)
        return out

    @cached_property
    def element_areas(self) -> np.ndarray:
        t = self.table
        n = max(self.quad.regular_order, int(t.order.max()) + 1)
        gx, gw = gauss_rule(n)
        _, W, _, _ = _core.precompute_points(*self._args(), gx, gw, self.maxnl)
        return W.sum(axis=1)

    def dof_element(self) -> np.ndarray:
        """Global element index of every dof."""
        return np.repeat(np.arange(self.table.n), self.counts)


def assemble_operator_block(kind, region_a, region_b, space: DensitySpace, disc: Discretization,
                            dense=None) -> np.ndarray:
    """Rows of ``region_a`` and columns of ``region_b`` of the V or K' matrix."""
    from .kernels import KernelKind

    kind = KernelKind(kind)
    ra = space.dofs_of_region(region_a)
    rb = space.dofs_of_region(region_b)
    if ra.size == 0 or rb.size == 0:
        raise ConfigurationError(f"regions {region_a} / {region_b} have no dofs in this space")
    V, K = dense if dense is not None else disc.dense()
    M = V if kind is KernelKind.SINGLE_LAYER else K
    return M[np.ix_(ra, rb)]
