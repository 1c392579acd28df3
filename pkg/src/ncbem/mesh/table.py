"""Flat per-element arrays over all patch meshes, in density-space order."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .elements import SurfaceMesh, corner_indices


@dataclass
class ElementTable:
    """Global element arrays consumed by the numba kernels.

    Element ``g`` is ``meshes[mesh_index[g]].elements[local_index[g]]``.
    Node ids in ``corner_ids`` are made global by offsetting per mesh.
    """

    meshes: List[SurfaceMesh]
    mesh_index: np.ndarray
    local_index: np.ndarray
    shape: np.ndarray
    order: np.ndarray
    ngeo: np.ndarray
    geo: np.ndarray          # (E, G, 3)
    orient: np.ndarray       # (E,) +1 / -1
    corner_ids: np.ndarray   # (E, 4), -1 padded for triangles
    corner_pos: np.ndarray   # (E, 4, 3)
    centroid: np.ndarray
    radius: np.ndarray

    @property
    def n(self) -> int:
        return len(self.shape)

    @classmethod
    def build(cls, meshes: Sequence[SurfaceMesh], order: Sequence[Tuple[int, int]], orientation=None):
        meshes = list(meshes)
        E = len(order)
        offs = np.concatenate([[0], np.cumsum([len(m.nodes) for m in meshes])])
        G = max(len(meshes[mi].elements[ei].nodes) for mi, ei in order)
        geo = np.zeros((E, G, 3))
        shape = np.zeros(E, np.int64)
        eord = np.zeros(E, np.int64)
        ngeo = np.zeros(E, np.int64)
        orient = np.ones(E)
        cid = -np.ones((E, 4), np.int64)
        cpos = np.zeros((E, 4, 3))
        mesh_index = np.array([o[0] for o in order], np.int64)
        local_index = np.array([o[1] for o in order], np.int64)
        for g, (mi, ei) in enumerate(order):
            m = meshes[mi]
            e = m.elements[ei]
            xe = m.nodes[list(e.nodes)]
            geo[g, :len(xe)] = xe
            ngeo[g] = len(xe)
            shape[g] = e.code
            eord[g] = e.order
            if orientation is not None:
                orient[g] = orientation[mi]
            ci = corner_indices(e.shape, e.order)
            for k, q in enumerate(ci):
                cid[g, k] = offs[mi] + e.nodes[q]
                cpos[g, k] = xe[q]
        cent = np.array([geo[g, :ngeo[g]].mean(axis=0) for g in range(E)])
        rad = np.array([np.max(np.linalg.norm(geo[g, :ngeo[g]] - cent[g], axis=1)) for g in range(E)])
        return cls(meshes, mesh_index, local_index, shape, eord, ngeo, geo, orient, cid, cpos, cent, rad)

    def global_index(self) -> Dict[Tuple[object, int], int]:
        """Map ``(mesh id, local element index)`` to the global index."""
        return {(self.meshes[mi].id, int(ei)): g
                for g, (mi, ei) in enumerate(zip(self.mesh_index, self.local_index))}
