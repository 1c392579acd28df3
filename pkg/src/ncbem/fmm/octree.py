"""Adaptive octree over surface elements (assignment by centroid)."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..errors import ConfigurationError

log = logging.getLogger(__name__)


@dataclass
class Octree:
    """Nodes in breadth-first order; node 0 is the root cube.

    Elements are permuted so that every node owns the contiguous range
    ``perm[start[k]:start[k] + count[k]]``.  ``children[k]`` is all -1 for a
    leaf and otherwise holds eight node ids (octant bit 0 = x, 1 = y, 2 = z).
    """

    center: np.ndarray       # (n, 3)
    half: np.ndarray         # (n,)
    level: np.ndarray
    parent: np.ndarray
    children: np.ndarray     # (n, 8)
    start: np.ndarray
    count: np.ndarray
    perm: np.ndarray
    leaf_capacity: int
    max_depth: int
    diagnostics: List[str] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.half)

    def is_leaf(self, k: int) -> bool:
        return self.children[k, 0] < 0

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.children[:, 0] < 0)

    @property
    def depth(self) -> int:
        return int(self.level.max())

    def elements(self, k: int) -> np.ndarray:
        return self.perm[self.start[k]:self.start[k] + self.count[k]]

    def leaf_of(self) -> np.ndarray:
        """Leaf node id of every element."""
        out = np.empty(len(self.perm), np.int64)
        for k in self.leaves:
            out[self.elements(k)] = k
        return out

    def stats(self) -> dict:
        lv = self.leaves
        return {"nodes": self.n_nodes, "leaves": int(len(lv)), "levels": self.depth + 1,
                "max_leaf": int(self.count[lv].max()) if len(lv) else 0}


def build_octree(centroids, leaf_capacity: int = 32, radii=None, max_depth: int = 20) -> Octree:
    """Split cubes until each leaf holds at most ``leaf_capacity`` element centroids.

    ``centroids`` may also be an element table (anything with ``centroid`` and
    ``radius`` attributes).  The root cube covers every element's bounding
    sphere.  At ``max_depth`` an over-full leaf is kept and a diagnostic is
    recorded.
    """
    if hasattr(centroids, "centroid"):
        radii = centroids.radius if radii is None else radii
        centroids = centroids.centroid
    C = np.atleast_2d(np.asarray(centroids, float))
    n = len(C)
    if n == 0:
        raise ConfigurationError("the octree needs at least one element")
    if leaf_capacity < 1:
        raise ConfigurationError("leaf_capacity must be at least 1")
    r = np.zeros(n) if radii is None else np.asarray(radii, float)
    lo = (C - r[:, None]).min(axis=0)
    hi = (C + r[:, None]).max(axis=0)
    c0 = 0.5 * (lo + hi)
    h0 = max(0.5 * float(np.max(hi - lo)), 1e-300) * (1.0 + 1e-12)

    center, half, level, parent, children, start, count = [c0], [h0], [0], [-1], [[-1] * 8], [0], [n]
    perm = np.arange(n)
    diags: List[str] = []
    k = 0
    while k < len(half):
        s, m = start[k], count[k]
        if m > leaf_capacity:
            if level[k] >= max_depth:
                diags.append(f"node {k} at max depth {max_depth} keeps {m} elements (capacity {leaf_capacity})")
            else:
                idx = perm[s:s + m]
                code = ((C[idx] >= center[k]) * np.array([1, 2, 4])).sum(axis=1)
                order = np.argsort(code, kind="stable")
                perm[s:s + m] = idx[order]
                code = code[order]
                h = 0.5 * half[k]
                kids = []
                for o in range(8):
                    sel = np.flatnonzero(code == o)
                    off = np.array([(o & 1) * 2 - 1, ((o >> 1) & 1) * 2 - 1, ((o >> 2) & 1) * 2 - 1])
                    kids.append(len(half))
                    center.append(center[k] + h * off)
                    half.append(h)
                    level.append(level[k] + 1)
                    parent.append(k)
                    children.append([-1] * 8)
                    start.append(s + (int(sel[0]) if len(sel) else 0))
                    count.append(len(sel))
                children[k] = kids
        k += 1
    for d in diags:
        log.warning("octree: %s", d)
    return Octree(np.array(center), np.array(half), np.array(level), np.array(parent),
                  np.array(children, np.int64), np.array(start, np.int64), np.array(count, np.int64),
                  perm, int(leaf_capacity), int(max_depth), diags)
