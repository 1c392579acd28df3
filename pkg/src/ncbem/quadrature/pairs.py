"""Element-pair classification, non-conforming subdivision and the quadrature plan.

A *cell* is a sub-domain of an element's reference element described by
its distinct corners in reference coordinates (four for a quadrilateral,
three for a triangle, which is later stored collapsed as ``[a, b, c, c]``).
Singular pairs are reduced to canonical cell pairs (see ``rules``) by
rotating or reversing corner lists.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import _numerics as nx
from ..errors import ContractViolation, InterfaceDataError, NearContactError, TopologyError
from ..mesh.elements import REF_CORNERS, SurfaceMesh, edge_reference_point, element_geometry
from ..mesh.interfaces import SNAP, contact_map
from .rules import gauss_rule


class PairClass(Enum):
    IDENTICAL = "identical"
    EDGE = "edge_adjacent"
    VERTEX = "vertex_adjacent"
    REGULAR = "regular"
    NONCONFORMING = "nonconforming"


KIND_CODE = {PairClass.IDENTICAL: 0, PairClass.EDGE: 1, PairClass.VERTEX: 2, PairClass.REGULAR: 3}


@dataclass(frozen=True)
class ProductRule:
    """Points ``x`` on element i, ``y`` on element j (parent reference coordinates) and weights."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray

    def __len__(self):
        return len(self.w)


@dataclass(frozen=True)
class Classification:
    kind: PairClass
    shared_i: Tuple[int, ...] = ()
    shared_j: Tuple[int, ...] = ()


# ---------------------------------------------------------------------------
# cells
# ---------------------------------------------------------------------------


def to4(corners: np.ndarray) -> np.ndarray:
    """Distinct corner list -> 4-corner cell (triangles collapsed on the last corner)."""
    c = np.asarray(corners, float)
    if len(c) == 4:
        return c
    return np.vstack([c, c[2:3]])


def _breaks(vals):
    b = sorted({0.0, 1.0} | {float(v) for v in vals})
    out = [b[0]]
    for v in b[1:]:
        if v - out[-1] > 1e-12:
            out.append(v)
    out[-1] = 1.0
    return out


def split_element(shape: int, splits: Optional[Dict[int, Sequence[float]]] = None) -> List[np.ndarray]:
    """Split an element's reference domain at hanging edge parameters.

    Quadrilaterals are cut by the iso-lines through each parameter;
    triangles are fanned from the vertex opposite each split edge.
    """
    splits = splits or {}
    for e, ts in splits.items():
        for t in ts:
            if not (SNAP < t < 1.0 - SNAP):
                raise InterfaceDataError(f"hanging parameter {t} on edge {e} is not inside (0, 1)")
    if shape == nx.QUAD:
        sb, tb = [], []
        for e, ts in splits.items():
            for t in ts:
                if e == 0:
                    sb.append(t)
                elif e == 2:
                    sb.append(1.0 - t)
                elif e == 1:
                    tb.append(t)
                else:
                    tb.append(1.0 - t)
        S, T = _breaks(sb), _breaks(tb)
        cells = []
        for j in range(len(T) - 1):
            for i in range(len(S) - 1):
                cells.append(np.array([[S[i], T[j]], [S[i + 1], T[j]], [S[i + 1], T[j + 1]], [S[i], T[j + 1]]]))
        return cells
    pts = [edge_reference_point(nx.TRI, e, t) for e, ts in splits.items() for t in ts]
    return _fan(REF_CORNERS[nx.TRI].copy(), pts)


def _on_segment(a, b, p, tol=1e-12):
    d = b - a
    L2 = d @ d
    t = (p - a) @ d / L2
    q = a + t * d
    return 1e-10 < t < 1 - 1e-10 and np.linalg.norm(p - q) <= tol * np.sqrt(L2) + 1e-14


def _fan(tri, pts):
    for p in pts:
        for k in range(3):
            a, b, c = tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]
            if _on_segment(a, b, p):
                rest = [q for q in pts if q is not p]
                return _fan(np.array([a, p, c]), rest) + _fan(np.array([p, b, c]), rest)
    return [tri]


def identical_cells(shape: int) -> List[np.ndarray]:
    if shape == nx.QUAD:
        return [REF_CORNERS[nx.QUAD].copy()]
    v = REF_CORNERS[nx.TRI]
    g = v.mean(axis=0)
    m = [(v[k] + v[(k + 1) % 3]) / 2 for k in range(3)]
    return [np.array([v[0], m[0], g, m[2]]), np.array([v[1], m[1], g, m[0]]),
            np.array([v[2], m[2], g, m[1]])]


def align(mi: int, mj: int, C: np.ndarray):
    """Canonical relabelling from a corner coincidence matrix.

    Returns ``(PairClass, perm_i, perm_j)`` with permutations of the distinct
    corners: shared vertex at position 0, or shared edge at positions 0 -> 1
    in the same direction on both cells.
    """
    shared = list(zip(*np.nonzero(C)))
    if not shared:
        return PairClass.REGULAR, list(range(mi)), list(range(mj))
    if len(shared) == 1:
        k, l = shared[0]
        return (PairClass.VERTEX, [(k + q) % mi for q in range(mi)], [(l + q) % mj for q in range(mj)])
    if len(shared) == 2:
        (k1, l1), (k2, l2) = shared
        if (k1 + 1) % mi == k2:
            ka, la, lb = k1, l1, l2
        elif (k2 + 1) % mi == k1:
            ka, la, lb = k2, l2, l1
        else:
            raise TopologyError("cells share two non-adjacent corners")
        pi = [(ka + q) % mi for q in range(mi)]
        if (la + 1) % mj == lb:
            pj = [(la + q) % mj for q in range(mj)]
        elif (la - 1) % mj == lb:
            pj = [(la - q) % mj for q in range(mj)]
        else:
            raise TopologyError("cells share two non-adjacent corners")
        return PairClass.EDGE, pi, pj
    return PairClass.IDENTICAL, list(range(mi)), list(range(mj))


def _phys(shape, order, geo, cells):
    """Physical positions of cell corners."""
    val, _, _ = nx.basis_batch(shape, order, np.ascontiguousarray(np.vstack(cells)))
    pos = val @ geo
    out = []
    k = 0
    for c in cells:
        out.append(pos[k:k + len(c)])
        k += len(c)
    return out


def _diam(P):
    return max(np.linalg.norm(P[a] - P[b]) for a in range(len(P)) for b in range(a + 1, len(P)))


def cell_pairs(shape_i, order_i, geo_i, cells_i, shape_j, order_j, geo_j, cells_j, same_element=False):
    """Classify every cell pair; returns list of (cell_i4, cell_j4, PairClass)."""
    Pi = _phys(shape_i, order_i, geo_i, cells_i)
    Pj = _phys(shape_j, order_j, geo_j, cells_j)
    di = [_diam(p) for p in Pi]
    dj = [_diam(p) for p in Pj]
    out = []
    for a, (ca, pa) in enumerate(zip(cells_i, Pi)):
        for b, (cb, pb) in enumerate(zip(cells_j, Pj)):
            if same_element and a == b:
                out.append((to4(ca), to4(cb), PairClass.IDENTICAL))
                continue
            tol = 1e-6 * min(di[a], dj[b])
            C = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=2) <= tol
            kind, pi, pj = align(len(ca), len(cb), C)
            if kind is PairClass.IDENTICAL:
                raise TopologyError("distinct elements overlap (three or more coincident corners)")
            out.append((to4(ca[pi]), to4(cb[pj]), kind))
    return out


# ---------------------------------------------------------------------------
# public single-pair API
# ---------------------------------------------------------------------------


def _elem(ref):
    mesh, k = ref
    e = mesh.elements[k]
    return mesh, k, e, mesh.nodes[list(e.nodes)]


def _contact(ref_i, ref_j, interfaces):
    mi, ki, _, _ = _elem(ref_i)
    mj, kj, _, _ = _elem(ref_j)
    if not interfaces:
        return None
    return contact_map(interfaces).get((mi.id, ki, mj.id, kj))


def classify_pair(elem_i, elem_j, interfaces=()) -> Classification:
    """Classify a pair given as ``(SurfaceMesh, element_index)`` tuples."""
    mi, ki, ei, _ = _elem(elem_i)
    mj, kj, ej, _ = _elem(elem_j)
    if mi is mj:
        if ki == kj:
            return Classification(PairClass.IDENTICAL)
        ci, cj = ei.corners, ej.corners
        C = np.array([[a == b for b in cj] for a in ci])
        kind, _, _ = align(len(ci), len(cj), C)
        si, sj = np.nonzero(C)
        return Classification(kind, tuple(int(v) for v in si), tuple(int(v) for v in sj))
    c = _contact(elem_i, elem_j, interfaces)
    if c is None:
        return Classification(PairClass.REGULAR)
    pa, pb = c
    if any(pa.values()) or any(pb.values()):
        return Classification(PairClass.NONCONFORMING)
    Pi = mi.nodes[list(ei.corners)]
    Pj = mj.nodes[list(ej.corners)]
    tol = 1e-6 * min(_diam(Pi), _diam(Pj))
    C = np.linalg.norm(Pi[:, None] - Pj[None], axis=2) <= tol
    kind, _, _ = align(len(Pi), len(Pj), C)
    si, sj = np.nonzero(C)
    return Classification(kind, tuple(int(v) for v in si), tuple(int(v) for v in sj))


def subdivide_nonconforming(elem_i, elem_j, interface) -> List[Tuple[np.ndarray, np.ndarray, PairClass]]:
    """Quadrature-only subdivision of a touching cross-mesh pair."""
    mi, ki, ei, gi = _elem(elem_i)
    mj, kj, ej, gj = _elem(elem_j)
    recs = interface if isinstance(interface, (list, tuple)) else [interface]
    c = contact_map(recs).get((mi.id, ki, mj.id, kj))
    pa, pb = c if c is not None else ({}, {})
    cells_i = split_element(ei.code, {e: v for e, v in pa.items() if v})
    cells_j = split_element(ej.code, {e: v for e, v in pb.items() if v})
    return cell_pairs(ei.code, ei.order, gi, cells_i, ej.code, ej.order, gj, cells_j)


def nearfield_subdivide(elem_i, elem_j, ratio_tolerance: float = 1.5, n: int = 4,
                        max_depth: int = 10, cells=None) -> ProductRule:
    """Recursive quartering of a regular pair into well-separated sub-pairs.

    The larger cell of a failing sub-pair is quartered.  Returns a rule
    whose weights include both surface measures.
    """
    from ..assembly._core import _child, _dist_diam, _sample_grid, cell_ref

    mi, ki, ei, gi = _elem(elem_i)
    mj, kj, ej, gj = _elem(elem_j)
    if mi is mj and ki == kj:
        raise ContractViolation("near-field subdivision requires two distinct elements")
    if cells is None:
        ci = to4(REF_CORNERS[ei.code])
        cj = to4(REF_CORNERS[ej.code])
    else:
        ci, cj = cells
    gx, gw = gauss_rule(n)
    gx = np.ascontiguousarray(gx)
    xs, ys, ws = [], [], []
    stack = [(ci, cj, (0, 0))]
    si = np.empty((9, 3))
    sj = np.empty((9, 3))
    wk = [np.empty(3) for _ in range(3)]
    ch = np.empty((4, 2))
    while stack:
        a, b, d = stack.pop()
        _sample_grid(ei.code, ei.order, gi, a, si, *wk)
        _sample_grid(ej.code, ej.order, gj, b, sj, *wk)
        dist, diam_i, diam_j = _dist_diam(si, sj)
        if dist >= ratio_tolerance * max(diam_i, diam_j):
            px, wx = _cell_rule(ei, mi.nodes, a, gx, gw, cell_ref)
            py, wy = _cell_rule(ej, mj.nodes, b, gx, gw, cell_ref)
            xs.append(np.repeat(px, len(py), axis=0))
            ys.append(np.tile(py, (len(px), 1)))
            ws.append(np.outer(wx, wy).ravel())
            continue
        split_i = diam_i >= diam_j
        if d[0 if split_i else 1] >= max_depth:
            raise NearContactError(
                f"near-field subdivision exceeded depth {max_depth}; elements may overlap")
        for k in range(4):
            if split_i:
                _child(a, k, ch)
                stack.append((ch.copy(), b, (d[0] + 1, d[1])))
            else:
                _child(b, k, ch)
                stack.append((a, ch.copy(), (d[0], d[1] + 1)))
    return ProductRule(np.vstack(xs), np.vstack(ys), np.concatenate(ws))


def _cell_rule(e, nodes, cell, gx, gw, cell_ref):
    pts, w = [], []
    for ia, a in enumerate(gx):
        for ib, b in enumerate(gx):
            s, t, jc = cell_ref(cell, a, b)
            pts.append((s, t))
            w.append(gw[ia] * gw[ib] * jc)
    pts = np.array(pts)
    _, meas, _ = element_geometry(e, nodes, pts)
    return pts, np.array(w) * meas


# ---------------------------------------------------------------------------
# assembly plan
# ---------------------------------------------------------------------------


@dataclass
class PairPlan:
    """Special (singular or touching) element pairs and their cell tasks."""

    pairs: np.ndarray        # (P, 2) with i <= j
    t_elem: np.ndarray       # (T, 2)
    t_cells: np.ndarray      # (T, 2, 4, 2)
    t_kind: np.ndarray       # (T,)
    t_pair: np.ndarray       # (T,)
    t_both: np.ndarray       # (T,)
    counts: Dict[str, int]

    def special_csr(self, n_elements: int):
        """Sorted CSR lookup of special partners j > i for each i."""
        p = self.pairs[self.pairs[:, 0] != self.pairs[:, 1]]
        order = np.lexsort((p[:, 1], p[:, 0]))
        p = p[order]
        ptr = np.zeros(n_elements + 1, np.int64)
        np.add.at(ptr, p[:, 0] + 1, 1)
        ptr = np.cumsum(ptr)
        return ptr, np.ascontiguousarray(p[:, 1])


def global_contacts(table, interfaces) -> Dict[Tuple[int, int], Tuple[dict, dict]]:
    gidx = table.global_index()
    out = {}
    for (ma, ea, mb, eb), v in contact_map(interfaces).items():
        ga, gb = gidx.get((ma, ea)), gidx.get((mb, eb))
        if ga is None or gb is None:
            continue
        out[(ga, gb)] = v
    return out


def build_plan(table, interfaces=()) -> PairPlan:
    """Enumerate singular / touching pairs of a global element table."""
    E = table.n
    contacts = global_contacts(table, interfaces)
    node_elems: Dict[int, List[int]] = {}
    for g in range(E):
        for c in table.corner_ids[g]:
            if c >= 0:
                node_elems.setdefault(int(c), []).append(g)
    pair_set = set((g, g) for g in range(E))
    for els in node_elems.values():
        for a in els:
            for b in els:
                if a < b:
                    pair_set.add((a, b))
    for (a, b) in contacts:
        if a < b:
            pair_set.add((a, b))
    pairs = np.array(sorted(pair_set), dtype=np.int64).reshape(-1, 2)

    t_elem, t_cells, t_kind, t_pair, t_both = [], [], [], [], []
    counts = {c.value: 0 for c in PairClass}
    full = {nx.QUAD: REF_CORNERS[nx.QUAD], nx.TRI: REF_CORNERS[nx.TRI]}

    def push(i, j, ci, cj, kind, pid, both):
        t_elem.append((i, j))
        t_cells.append((ci, cj))
        t_kind.append(KIND_CODE[kind])
        t_pair.append(pid)
        t_both.append(1 if both else 0)
        counts[kind.value] += 1

    for pid, (i, j) in enumerate(pairs):
        si, sj = int(table.shape[i]), int(table.shape[j])
        gi = table.geo[i, :table.ngeo[i]]
        gj = table.geo[j, :table.ngeo[j]]
        if i == j:
            if si == nx.QUAD:
                push(i, j, to4(full[si]), to4(full[si]), PairClass.IDENTICAL, pid, False)
            else:
                cells = identical_cells(si)
                for ca, cb, k in cell_pairs(si, table.order[i], gi, cells, si, table.order[i], gi, cells,
                                            same_element=True):
                    push(i, j, ca, cb, k, pid, False)
            continue
        c = contacts.get((i, j))
        if c is None:
            mi_, mj_ = len(full[si]), len(full[sj])
            ids_i = table.corner_ids[i][:mi_]
            ids_j = table.corner_ids[j][:mj_]
            C = ids_i[:, None] == ids_j[None, :]
            kind, pi, pj = align(mi_, mj_, C)
            push(i, j, to4(full[si][pi]), to4(full[sj][pj]), kind, pid, True)
            continue
        pa, pb = c
        cells_i = split_element(si, {e: v for e, v in pa.items() if v})
        cells_j = split_element(sj, {e: v for e, v in pb.items() if v})
        for ca, cb, k in cell_pairs(si, table.order[i], gi, cells_i, sj, table.order[j], gj, cells_j):
            push(i, j, ca, cb, k, pid, True)

    T = len(t_kind)
    return PairPlan(pairs,
                    np.array(t_elem, np.int64).reshape(T, 2),
                    np.array(t_cells, float).reshape(T, 2, 4, 2),
                    np.array(t_kind, np.int64),
                    np.array(t_pair, np.int64),
                    np.array(t_both, np.int64),
                    counts)
