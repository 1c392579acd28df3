"""Raise the geometric order of a linear mesh by projection onto its surface patch."""
from __future__ import annotations

from typing import Dict, List, Tuple

import numpy as np

from ..errors import ProjectionError
from ..geometry import SurfacePatch, closest_point
from .elements import MeshElement, SurfaceMesh, reference_nodes


def _project(patch, x, guess, diag, tag):
    res = closest_point(patch, x, guess=guess)
    if not res.converged:
        diag.append({"node": tag, "distance": res.distance, "iterations": res.iterations})
    return res


def elevate_order(linear_mesh: SurfaceMesh, patch: SurfacePatch, p: int,
                  corner_tolerance: float = 1e-6) -> SurfaceMesh:
    """Return an order-``p`` copy of ``linear_mesh`` with every node on ``patch``.

    Edge nodes are placed by linear interpolation between the (projected)
    corners and then projected; quadrilateral interior nodes are seeded by
    Coons interpolation of the projected edge nodes and projected again.
    Shared edges produce shared nodes.
    """
    p = int(p)
    if p < 1:
        raise ValueError("target order must be at least 1")
    for e in linear_mesh.elements:
        if e.order != 1:
            raise ValueError("elevate_order expects a linear mesh")
        if e.shape == "triangle" and p > 2:
            raise ValueError("triangle elevation is limited to order 2")
    diam = patch.diameter
    diag: List[dict] = []
    bad_elements = set()

    nodes: List[np.ndarray] = []
    uvs: List[Tuple[float, float]] = []
    corner_map: Dict[int, int] = {}
    for ei, e in enumerate(linear_mesh.elements):
        for c in e.nodes:
            if c in corner_map:
                continue
            res = _project(patch, linear_mesh.nodes[c], None, diag, ("corner", c))
            if not res.converged:
                bad_elements.add(ei)
            if res.distance > corner_tolerance * diam:
                diag.append({"node": ("corner", c), "distance": res.distance,
                             "reason": "linear node not on patch"})
                bad_elements.add(ei)
            corner_map[c] = len(nodes)
            nodes.append(res.point)
            uvs.append(res.uv)

    edge_map: Dict[Tuple[int, int], List[int]] = {}

    def edge_nodes(a, b, ei):
        """Node indices from corner a to corner b (p + 1 entries)."""
        key = (min(a, b), max(a, b))
        if key not in edge_map:
            ia, ib = corner_map[key[0]], corner_map[key[1]]
            ids = [ia]
            for k in range(1, p):
                t = k / p
                x = (1 - t) * nodes[ia] + t * nodes[ib]
                g = ((1 - t) * uvs[ia][0] + t * uvs[ib][0], (1 - t) * uvs[ia][1] + t * uvs[ib][1])
                res = _project(patch, x, g, diag, ("edge", key, k))
                if not res.converged:
                    bad_elements.add(ei)
                ids.append(len(nodes))
                nodes.append(res.point)
                uvs.append(res.uv)
            ids.append(ib)
            edge_map[key] = ids
        ids = edge_map[key]
        return ids if a == key[0] else ids[::-1]

    elements = []
    for ei, e in enumerate(linear_mesh.elements):
        ref = reference_nodes(e.shape, p)
        local = [-1] * len(ref)
        loc_of = {(round(r[0] * p), round(r[1] * p)): k for k, r in enumerate(ref)}
        c = e.corners
        if e.shape == "quad":
            c0, c1, c2, c3 = c
            bottom = edge_nodes(c0, c1, ei)
            right = edge_nodes(c1, c2, ei)
            top = edge_nodes(c3, c2, ei)
            left = edge_nodes(c0, c3, ei)
            for i in range(p + 1):
                local[loc_of[(i, 0)]] = bottom[i]
                local[loc_of[(i, p)]] = top[i]
                local[loc_of[(0, i)]] = left[i]
                local[loc_of[(p, i)]] = right[i]
            P = lambda k: nodes[k]  # noqa: E731
            U = lambda k: np.asarray(uvs[k])  # noqa: E731
            for j in range(1, p):
                for i in range(1, p):
                    s, t = i / p, j / p
                    x = ((1 - t) * P(bottom[i]) + t * P(top[i]) + (1 - s) * P(left[j]) + s * P(right[j])
                         - ((1 - s) * (1 - t) * P(bottom[0]) + s * (1 - t) * P(bottom[p])
                            + s * t * P(top[p]) + (1 - s) * t * P(top[0])))
                    g = ((1 - s) * (1 - t) * U(bottom[0]) + s * (1 - t) * U(bottom[p])
                         + s * t * U(top[p]) + (1 - s) * t * U(top[0]))
                    res = _project(patch, x, g, diag, ("interior", ei, i, j))
                    if not res.converged:
                        bad_elements.add(ei)
                    local[loc_of[(i, j)]] = len(nodes)
                    nodes.append(res.point)
                    uvs.append(res.uv)
        else:
            c0, c1, c2 = c
            e01 = edge_nodes(c0, c1, ei)
            e12 = edge_nodes(c1, c2, ei)
            e02 = edge_nodes(c0, c2, ei)
            for i in range(p + 1):
                local[loc_of[(i, 0)]] = e01[i]
                local[loc_of[(0, i)]] = e02[i]
                local[loc_of[(p - i, i)]] = e12[i]
        elements.append(MeshElement(e.id, e.shape, p, tuple(local), e.patch, e.region))

    if bad_elements:
        raise ProjectionError(
            f"order elevation failed on {len(bad_elements)} element(s) of mesh {linear_mesh.id}",
            diagnostics=[{"elements": sorted(bad_elements)}] + diag)
    return SurfaceMesh(linear_mesh.id, np.array(nodes), elements, patch)
