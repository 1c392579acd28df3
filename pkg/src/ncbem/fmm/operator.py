"""FMM-accelerated application of V and K' (sparse near field plus expansions)."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from ..assembly.kernels import KernelKind
from ..errors import ConfigurationError, ContractViolation
from . import _kernels as kx
from .octree import Octree, build_octree

log = logging.getLogger(__name__)

FOUR_PI_INV = 1.0 / (4.0 * np.pi)


@dataclass(frozen=True)
class FmmConfig:
    """``theta`` bounds ``(r_A + r_B) / |c_A - c_B|`` for an accepted M2L pair."""

    expansion_order: int = 10
    leaf_capacity: int = 32
    theta: float = 0.6
    max_depth: int = 20

    def __post_init__(self):
        if self.expansion_order < 2:
            raise ConfigurationError("FMM expansion order must be at least 2")
        if self.leaf_capacity < 1:
            raise ConfigurationError("leaf_capacity must be at least 1")
        if not 0.0 < self.theta < 1.0:
            raise ConfigurationError("theta must lie in (0, 1)")


@dataclass
class InteractionLists:
    near: List[Tuple[int, int]]     # leaf pairs, unordered, self pairs included once
    far: List[Tuple[int, int]]      # ordered (target node, source node)


def node_extents(tree: Octree, centroid, radius, pad: float = 1.2):
    """Per node: radius of the ball about the cube center holding all its elements, and the
    largest element radius.  ``pad`` covers curved elements bulging past their node hull."""
    n = tree.n_nodes
    R = np.zeros(n)
    mr = np.zeros(n)
    for k in range(n):
        e = tree.elements(k)
        if len(e):
            R[k] = np.max(np.linalg.norm(centroid[e] - tree.center[k], axis=1) + pad * radius[e])
            mr[k] = np.max(radius[e])
    return R, mr


def interaction_lists(tree: Octree, R, mr, theta: float, near_ratio: float) -> InteractionLists:
    """Dual-tree traversal with a sphere acceptance test on actual element extents."""
    near, far = [], []
    ch = tree.children
    cnt = tree.count
    C = tree.center
    stack = [(0, 0)]
    while stack:
        a, b = stack.pop()
        if cnt[a] == 0 or cnt[b] == 0:
            continue
        la, lb = ch[a, 0] < 0, ch[b, 0] < 0
        if a == b:
            if la:
                near.append((a, a))
            else:
                kids = [k for k in ch[a] if cnt[k] > 0]
                for i, ki in enumerate(kids):
                    for kj in kids[i:]:
                        stack.append((ki, kj))
            continue
        d = float(np.linalg.norm(C[a] - C[b]))
        if theta * d >= R[a] + R[b] and d - R[a] - R[b] >= near_ratio * 2.0 * max(mr[a], mr[b]):
            far.append((a, b))
            far.append((b, a))
        elif la and lb:
            near.append((a, b))
        elif la or (not lb and R[b] > R[a]):
            stack.extend((a, k) for k in ch[b])
        else:
            stack.extend((k, b) for k in ch[a])
    return InteractionLists(sorted(near), sorted(far))


@dataclass
class _Group:
    """One shared translation matrix and the (destination, source) node pairs using it."""

    T: np.ndarray
    dst: np.ndarray
    src: np.ndarray


def _groups(kind, L, tree, dst, src, vec):
    """Bucket node pairs by the lattice vector ``vec`` (in units of the finest half-width)."""
    out = []
    if len(dst) == 0:
        return out
    h = float(tree.half.min())
    key = np.round(vec / h).astype(np.int64)
    _, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.ravel()
    order = np.argsort(inv, kind="stable")
    bounds = np.flatnonzero(np.diff(inv[order])) + 1
    for idx in np.split(order, bounds):
        d = np.ascontiguousarray(vec[idx[0]])
        out.append(_Group(kx.translation_matrix(kind, L, d).T.copy(), dst[idx], src[idx]))
    return out


class FmmLayerOperator:
    """Drop-in replacement for the dense layer operator: ``apply(x) -> (V x, K' x)``.

    Expansions sit at cube centers, so shift vectors repeat over the tree and
    every M2M / M2L / L2L translation is a shared real matrix applied to all
    node pairs with the same vector at once.  Quadrature-point sources and
    targets are folded into per-leaf sparse maps at setup.
    """

    def __init__(self, disc, config: FmmConfig = FmmConfig()):
        t0 = time.perf_counter()
        self.disc = disc
        self.config = config
        L = config.expansion_order
        t = disc.table
        tr = self.tree = build_octree(t.centroid, config.leaf_capacity, t.radius, config.max_depth)
        self.R, self.mr = node_extents(tr, t.centroid, t.radius)
        self.lists = interaction_lists(tr, self.R, self.mr, config.theta, disc.quad.near_ratio)
        self._far = np.array(self.lists.far, np.int64).reshape(-1, 2)
        self.Vn, self.Kn = self._near_matrices()
        self.shape = (disc.n, disc.n)
        self.nc = (L + 1) ** 2
        self._setup_far()
        self.n_applies = 0
        self.setup_time = time.perf_counter() - t0
        self.apply_times: List[float] = []
        log.info("FMM: %s, near nnz %d, %d M2L pairs in %d groups, setup %.2f s", tr.stats(), self.Vn.nnz,
                 len(self._far), len(self._m2l), self.setup_time)

    # -- setup ---------------------------------------------------------------

    def _near_element_pairs(self) -> np.ndarray:
        tr = self.tree
        out = []
        for a, b in self.lists.near:
            ea, eb = tr.elements(a), tr.elements(b)
            if a == b:
                i, j = np.triu_indices(len(ea), 1)
                out.append(np.column_stack([ea[i], ea[j]]))
            else:
                out.append(np.column_stack([np.repeat(ea, len(eb)), np.tile(eb, len(ea))]))
        if not out:
            return np.zeros((0, 2), np.int64)
        # (min, max) order: same quadrature decisions as the dense assembly
        p = np.concatenate(out)
        return np.column_stack([p.min(axis=1), p.max(axis=1)])

    def _near_matrices(self):
        disc = self.disc
        E = disc.table.n
        pairs = self._near_element_pairs()
        key = np.minimum(pairs[:, 0], pairs[:, 1]) * E + np.maximum(pairs[:, 0], pairs[:, 1])
        sp_pairs = np.array(disc.plan.pairs, np.int64).reshape(-1, 2)
        skey = np.minimum(sp_pairs[:, 0], sp_pairs[:, 1]) * E + np.maximum(sp_pairs[:, 0], sp_pairs[:, 1])
        off = sp_pairs[:, 0] != sp_pairs[:, 1]
        missing = np.setdiff1d(skey[off], key)
        if len(missing):
            raise ContractViolation(f"{len(missing)} singular element pairs fell outside the FMM near field")
        reg = pairs[~np.isin(key, skey)]
        Vs, Ks = disc.special_sparse()
        Vr, Kr = disc.regular_sparse(reg)
        return (Vs + Vr).tocsr(), (Ks + Kr).tocsr()

    def _setup_far(self):
        tr, disc, L, nc = self.tree, self.disc, self.config.expansion_order, self.nc
        self._m2l = []
        if len(self._far) == 0:
            return
        leaves = np.array([k for k in tr.leaves if tr.count[k] > 0], np.int64)
        self._leaves = leaves
        slot = -np.ones(tr.n_nodes, np.int64)
        slot[leaves] = np.arange(len(leaves))
        leaf_of = tr.leaf_of()
        X, W, N, PHI = disc.points
        S = kx.source_blocks(L, tr.center, leaf_of, X, W, PHI, disc.counts)
        BV, BK = kx.target_blocks(L, tr.center, leaf_of, X, W, N, PHI, disc.counts)
        rows, cols, sv, tv, tk = [], [], [], [], []
        for e in range(disc.table.n):
            c = disc.counts[e]
            r = slot[leaf_of[e]] * nc + np.arange(nc)
            d = disc.offs[e] + np.arange(c)
            rows.append(np.repeat(r, c))
            cols.append(np.tile(d, nc))
            sv.append(S[e, :, :c].ravel())
            tv.append(BV[e, :c, :].T.ravel())
            tk.append(BK[e, :c, :].T.ravel())
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        shp = (len(leaves) * nc, disc.n)
        self._S = sp.csr_matrix((np.concatenate(sv), (rows, cols)), shape=shp)
        self._TV = sp.csr_matrix((np.concatenate(tv), (cols, rows)), shape=shp[::-1])
        self._TK = sp.csr_matrix((np.concatenate(tk), (cols, rows)), shape=shp[::-1])

        nodes = np.flatnonzero((tr.count > 0) & (tr.parent >= 0))
        par = tr.parent[nodes]
        self._m2m, self._l2l = [], []
        for lev in range(tr.depth, 0, -1):
            sel = tr.level[nodes] == lev
            k, p = nodes[sel], par[sel]
            self._m2m.append(_groups(0, L, tr, p, k, tr.center[k] - tr.center[p]))
        self._m2l = _groups(1, L, tr, self._far[:, 0], self._far[:, 1],
                            tr.center[self._far[:, 0]] - tr.center[self._far[:, 1]])
        has = np.zeros(tr.n_nodes, bool)
        has[self._far[:, 0]] = True
        for lev in range(1, tr.depth + 1):
            sel = (tr.level[nodes] == lev) & has[par]
            k, p = nodes[sel], par[sel]
            has[k] = True
            self._l2l.append(_groups(2, L, tr, k, p, tr.center[k] - tr.center[p]))
        self._leaf_has = has[leaves]

    # -- apply ---------------------------------------------------------------

    def apply(self, x):
        t0 = time.perf_counter()
        self.n_applies += 1
        x = np.ascontiguousarray(x, float)
        outV = self.Vn @ x
        outK = self.Kn @ x
        if len(self._m2l):
            tr = self.tree
            M = np.zeros((tr.n_nodes, self.nc))
            M[self._leaves] = (self._S @ x).reshape(-1, self.nc)
            for level in self._m2m:
                for g in level:
                    M[g.dst] += M[g.src] @ g.T
            Lc = np.zeros_like(M)
            for g in self._m2l:
                Lc[g.dst] += M[g.src] @ g.T
            for level in self._l2l:
                for g in level:
                    Lc[g.dst] += Lc[g.src] @ g.T
            loc = Lc[self._leaves].ravel()
            outV += self._TV @ loc
            outK += self._TK @ loc
        self.apply_times.append(time.perf_counter() - t0)
        return outV, outK

    def diagonal(self):
        return self.Vn.diagonal(), self.Kn.diagonal()

    def stats(self) -> dict:
        s = self.tree.stats()
        s.update(near_nnz=int(self.Vn.nnz), m2l_pairs=int(len(self._far)), m2l_groups=len(self._m2l),
                 setup_s=self.setup_time,
                 apply_ms=1e3 * float(np.mean(self.apply_times)) if self.apply_times else None)
        return s

    def coverage(self) -> np.ndarray:
        """``(E, E)`` count of how often each (target, source) element pair is visited (audit aid)."""
        tr = self.tree
        E = self.disc.table.n
        C = np.zeros((E, E), np.int64)
        for a, b in self.lists.near:
            ea, eb = tr.elements(a), tr.elements(b)
            C[np.ix_(ea, eb)] += 1
            if a != b:
                C[np.ix_(eb, ea)] += 1
        for t, s in self.lists.far:
            C[np.ix_(tr.elements(t), tr.elements(s))] += 1
        return C


def fmm_operator(kind, disc, L: int = 10, leaf_capacity: int = 32, theta: float = 0.6,
                 layer: FmmLayerOperator = None) -> LinearOperator:
    """Matrix-free V or K' as a scipy LinearOperator."""
    kind = KernelKind(kind)
    if layer is None:
        layer = FmmLayerOperator(disc, FmmConfig(L, leaf_capacity, theta))
    k = 0 if kind is KernelKind.SINGLE_LAYER else 1
    return LinearOperator(layer.shape, matvec=lambda x: layer.apply(np.ravel(x))[k], dtype=float)
