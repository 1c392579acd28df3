"""Detection of (possibly non-conforming) interfaces between patch meshes.

Every patch mesh is conforming on its own.  Along patch boundaries the
meshes of neighbouring patches may disagree; the data needed downstream are
the locations of each naked-edge vertex on the opposing element edges.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .. import _numerics as nx
from ..errors import TopologyError
from .elements import SurfaceMesh, edge_node_indices

log = logging.getLogger(__name__)

SNAP = 1e-10


@dataclass(frozen=True)
class EdgeContact:
    """Two element edges from different meshes that touch.

    ``kind`` is ``"edge"`` for an overlap of positive length and
    ``"vertex"`` for a single touching point.  ``params_a`` holds the
    reference-edge parameters of the other element's corners that fall
    strictly inside edge ``edge_a`` (and vice versa for ``params_b``).
    """

    mesh_a: object
    element_a: int
    edge_a: int
    mesh_b: object
    element_b: int
    edge_b: int
    kind: str
    params_a: Tuple[float, ...]
    params_b: Tuple[float, ...]
    same_direction: Optional[bool]
    distance: float

    def swapped(self) -> "EdgeContact":
        return EdgeContact(self.mesh_b, self.element_b, self.edge_b, self.mesh_a, self.element_a,
                           self.edge_a, self.kind, self.params_b, self.params_a, self.same_direction,
                           self.distance)


@dataclass(frozen=True)
class HangingVertex:
    mesh: object
    node: int
    target_mesh: object
    target_element: int
    target_edge: int
    tau: float
    distance: float


@dataclass(frozen=True)
class InterfaceRecord:
    meshes: Tuple
    contacts: Tuple[EdgeContact, ...]
    hanging: Tuple[HangingVertex, ...]
    join_distance: float
    non_manifold: bool = False

    def swapped(self) -> "InterfaceRecord":
        return InterfaceRecord(self.meshes, tuple(sorted((c.swapped() for c in self.contacts), key=_ckey)),
                               self.hanging, self.join_distance, self.non_manifold)


class InterfaceList(list):
    """List of :class:`InterfaceRecord` carrying non-fatal ``diagnostics``."""

    def __init__(self, records=(), diagnostics=()):
        super().__init__(records)
        self.diagnostics = list(diagnostics)


def _ckey(c: EdgeContact):
    return (str(c.mesh_a), c.element_a, c.edge_a, str(c.mesh_b), c.element_b, c.edge_b)


@dataclass
class _NakedEdge:
    element: int
    edge: int
    nodes: Tuple[int, ...]   # mesh node indices along the edge, start -> end
    points: np.ndarray       # (p+1, 3)


def naked_edges(mesh: SurfaceMesh) -> List[_NakedEdge]:
    """Element edges used by exactly one element of the mesh."""
    count: Dict[frozenset, int] = {}
    for e in mesh.elements:
        for k in range(e.n_edges):
            key = frozenset(e.edge_corners(k))
            count[key] = count.get(key, 0) + 1
    out = []
    for ei, e in enumerate(mesh.elements):
        for k in range(e.n_edges):
            if count[frozenset(e.edge_corners(k))] == 1:
                loc = edge_node_indices(e.shape, e.order, k)
                ids = tuple(e.nodes[q] for q in loc)
                out.append(_NakedEdge(ei, k, ids, mesh.nodes[list(ids)]))
    return out


def _lagrange(p, tau):
    vd = np.array([nx._lag1(p, k, tau) for k in range(p + 1)])
    return vd[:, 0], vd[:, 1]


def project_to_edge(points: np.ndarray, x: np.ndarray, iters: int = 30):
    """Closest point on an equispaced Lagrange edge curve; returns (tau, distance)."""
    p = len(points) - 1
    a, b = points[0], points[-1]
    d = b - a
    tau = float(np.clip((x - a) @ d / max(d @ d, 1e-300), 0.0, 1.0))
    if p > 1:
        for _ in range(iters):
            val, der = _lagrange(p, tau)
            c = val @ points
            dc = der @ points
            g = (c - x) @ dc
            h = dc @ dc
            if h <= 0:
                break
            step = -g / h
            new = float(np.clip(tau + step, 0.0, 1.0))
            if abs(new - tau) < 1e-15:
                tau = new
                break
            tau = new
        val, _ = _lagrange(p, tau)
        c = val @ points
    else:
        c = a + tau * d
    return tau, float(np.linalg.norm(c - x))


def _snap(t):
    if t < SNAP:
        return 0.0
    if t > 1.0 - SNAP:
        return 1.0
    return t


def _hits(ea: List[_NakedEdge], eb: List[_NakedEdge], join, search):
    """Project every naked-edge endpoint of ``ea`` onto nearby naked edges of ``eb``."""
    if not ea or not eb:
        return [], 0, np.inf
    mids = np.array([0.5 * (e.points[0] + e.points[-1]) for e in eb])
    reach = max(np.max(np.linalg.norm(e.points - m, axis=1)) for e, m in zip(eb, mids))
    tree = cKDTree(mids)
    hits = []
    n_amb = 0
    dmin_amb = np.inf
    for ia, e in enumerate(ea):
        for end in (0, 1):
            x = e.points[0] if end == 0 else e.points[-1]
            for ib in tree.query_ball_point(x, reach + search):
                tau, dist = project_to_edge(eb[ib].points, x)
                if dist <= join:
                    hits.append((ia, end, ib, _snap(tau), dist))
                elif dist <= search:
                    n_amb += 1
                    dmin_amb = min(dmin_amb, dist)
    return hits, n_amb, dmin_amb


def _pair_contacts(ma, mb, ea, eb, join, search):
    hab, na, da = _hits(ea, eb, join, search)
    hba, nb, db = _hits(eb, ea, join, search)
    groups: Dict[Tuple[int, int], Dict[str, list]] = {}
    for ia, end, ib, tau, dist in hab:
        groups.setdefault((ia, ib), {"a_on_b": [], "b_on_a": []})["a_on_b"].append((end, tau, dist))
    for ib, end, ia, tau, dist in hba:
        groups.setdefault((ia, ib), {"a_on_b": [], "b_on_a": []})["b_on_a"].append((end, tau, dist))
    contacts = []
    hanging = []
    for (ia, ib), g in sorted(groups.items()):
        A, B = ea[ia], eb[ib]
        # contact points as (tau on A, tau on B)
        pts = [(float(end), tau) for end, tau, _ in g["a_on_b"]]
        pts += [(tau, float(end)) for end, tau, _ in g["b_on_a"]]
        uniq = []
        for ta, tb in pts:
            if not any(abs(ta - u[0]) < 1e-9 for u in uniq):
                uniq.append((ta, tb))
        uniq.sort()
        dist = max([d for _, _, d in g["a_on_b"]] + [d for _, _, d in g["b_on_a"]])
        params_a = tuple(sorted({tau for _, tau, _ in g["b_on_a"] if 0.0 < tau < 1.0}))
        params_b = tuple(sorted({tau for _, tau, _ in g["a_on_b"] if 0.0 < tau < 1.0}))
        if len(uniq) >= 2:
            kind = "edge"
            same = bool(uniq[-1][1] > uniq[0][1])
        else:
            kind = "vertex"
            same = None
        contacts.append(EdgeContact(ma.id, A.element, A.edge, mb.id, B.element, B.edge, kind,
                                    params_a, params_b, same, dist))
        for end, tau, d in g["a_on_b"]:
            if 0.0 < tau < 1.0:
                node = A.nodes[0] if end == 0 else A.nodes[-1]
                hanging.append(HangingVertex(ma.id, node, mb.id, B.element, B.edge, tau, d))
        for end, tau, d in g["b_on_a"]:
            if 0.0 < tau < 1.0:
                node = B.nodes[0] if end == 0 else B.nodes[-1]
                hanging.append(HangingVertex(mb.id, node, ma.id, A.element, A.edge, tau, d))
    amb = None
    if na + nb:
        amb = {"kind": "ambiguous", "meshes": (ma.id, mb.id), "count": na + nb,
               "min_distance": float(min(da, db)), "join_tolerance": join}
    return contacts, hanging, amb


def default_join_tolerance(meshes: Sequence[SurfaceMesh]) -> float:
    lo = np.min([m.nodes.min(axis=0) for m in meshes], axis=0)
    hi = np.max([m.nodes.max(axis=0) for m in meshes], axis=0)
    return 1e-8 * float(np.linalg.norm(hi - lo))


def detect_interfaces(patch_meshes: Sequence[SurfaceMesh], join_tolerance: Optional[float] = None,
                      search_tolerance: Optional[float] = None) -> InterfaceList:
    """Find interfaces between the naked edges of different patch meshes.

    Returns an :class:`InterfaceList`; near misses (within the search
    tolerance but outside the join tolerance) are listed as diagnostics.
    """
    meshes = list(patch_meshes)
    if join_tolerance is None:
        join_tolerance = default_join_tolerance(meshes)
    if search_tolerance is None:
        search_tolerance = 10.0 * join_tolerance
    if not (search_tolerance >= join_tolerance > 0):
        raise ValueError("need search_tolerance >= join_tolerance > 0")
    edges = [naked_edges(m) for m in meshes]
    all_contacts: List[EdgeContact] = []
    all_hanging: List[HangingVertex] = []
    diagnostics = []
    for i in range(len(meshes)):
        for j in range(i + 1, len(meshes)):
            c, h, amb = _pair_contacts(meshes[i], meshes[j], edges[i], edges[j],
                                       join_tolerance, search_tolerance)
            all_contacts += c
            all_hanging += h
            if amb is not None:
                diagnostics.append(amb)
                log.warning("ambiguous near-miss between meshes %s and %s (%d vertices, min distance %.3g)",
                            amb["meshes"][0], amb["meshes"][1], amb["count"], amb["min_distance"])

    # group contacts into connected interfaces
    parent: Dict[Tuple, Tuple] = {}

    def find(k):
        while parent.setdefault(k, k) != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    order = {m.id: k for k, m in enumerate(meshes)}
    for c in all_contacts:
        ka = (order[c.mesh_a], c.element_a, c.edge_a)
        kb = (order[c.mesh_b], c.element_b, c.edge_b)
        parent[find(ka)] = find(kb)
    comps: Dict[Tuple, List[EdgeContact]] = {}
    for c in all_contacts:
        comps.setdefault(find((order[c.mesh_a], c.element_a, c.edge_a)), []).append(c)

    records = []
    for cs in comps.values():
        mids = sorted({c.mesh_a for c in cs} | {c.mesh_b for c in cs}, key=lambda m: order[m])
        dirs: Dict[Tuple, set] = {}
        for c in cs:
            if c.kind == "edge":
                dirs.setdefault((c.mesh_a, c.mesh_b), set()).add(c.same_direction)
        for pair, s in dirs.items():
            if len(s) > 1:
                raise TopologyError(
                    f"interface between meshes {pair[0]} and {pair[1]} has inconsistent edge orientations")
        hs = [h for h in all_hanging
              if any((h.target_mesh == c.mesh_b and h.target_element == c.element_b and h.target_edge == c.edge_b)
                     or (h.target_mesh == c.mesh_a and h.target_element == c.element_a
                         and h.target_edge == c.edge_a) for c in cs)]
        hs = sorted(set(hs), key=lambda h: (order[h.mesh], h.node, order[h.target_mesh], h.target_element,
                                             h.target_edge))
        cs = sorted(cs, key=_ckey)
        records.append(InterfaceRecord(tuple(mids), tuple(cs), tuple(hs),
                                       max(c.distance for c in cs), len(mids) >= 3))
    records.sort(key=lambda r: ([order[m] for m in r.meshes], _ckey(r.contacts[0])))
    return InterfaceList(records, diagnostics)


def contact_map(records: Sequence[InterfaceRecord]):
    """Map ``(mesh_a, elem_a, mesh_b, elem_b)`` to per-edge hanging parameters of both elements.

    The value is ``(params_a, params_b)`` where each is a dict ``edge -> list``
    of reference-edge parameters; both key orders are present.
    """
    out: Dict[Tuple, Tuple[Dict[int, list], Dict[int, list]]] = {}
    for r in records:
        for c in r.contacts:
            for cc in (c, c.swapped()):
                key = (cc.mesh_a, cc.element_a, cc.mesh_b, cc.element_b)
                pa, pb = out.setdefault(key, ({}, {}))
                if cc.params_a:
                    pa.setdefault(cc.edge_a, set()).update(cc.params_a)
                else:
                    pa.setdefault(cc.edge_a, set())
                if cc.params_b:
                    pb.setdefault(cc.edge_b, set()).update(cc.params_b)
                else:
                    pb.setdefault(cc.edge_b, set())
    return {k: ({e: sorted(v) for e, v in pa.items()}, {e: sorted(v) for e, v in pb.items()})
            for k, (pa, pb) in out.items()}
