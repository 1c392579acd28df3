"""Small structured mesh generators used by tests, demos and the CLI."""
from __future__ import annotations

import math

import numpy as np

from ..geometry import SurfacePatch
from .elements import MeshElement, SurfaceMesh
from .elevation import elevate_order

# (normal, u axis, v axis) with u x v = normal
_FACES = (
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    ((0, 0, -1), (0, 1, 0), (1, 0, 0)),
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
    ((0, 1, 0), (0, 0, 1), (1, 0, 0)),
    ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
)


def cube_sphere(n: int, radius: float = 1.0, center=(0.0, 0.0, 0.0), mesh_id="sphere",
                order: int = 1, triangles: bool = False, inward: bool = False) -> SurfaceMesh:
    """Equiangular cube-sphere with ``6 n^2`` quads (or twice as many triangles).

    Normals point outward unless ``inward`` is set.  ``order > 1`` elevates
    the mesh onto the exact sphere.
    """
    center = np.asarray(center, dtype=float)
    keys = {}
    nodes = []
    elements = []
    a = np.linspace(-math.pi / 4, math.pi / 4, n + 1)
    for nrm, eu, ev in _FACES:
        nrm, eu, ev = (np.array(v, float) for v in (nrm, eu, ev))
        ids = np.empty((n + 1, n + 1), dtype=int)
        for i in range(n + 1):
            for j in range(n + 1):
                d = nrm + math.tan(a[i]) * eu + math.tan(a[j]) * ev
                d /= np.linalg.norm(d)
                k = tuple(np.round(d, 12))
                if k not in keys:
                    keys[k] = len(nodes)
                    nodes.append(center + radius * d)
                ids[i, j] = keys[k]
        for i in range(n):
            for j in range(n):
                # counter-clockwise corners seen from outside
                q = [ids[i, j], ids[i + 1, j], ids[i + 1, j + 1], ids[i, j + 1]]
                if inward:
                    q = [q[0], q[3], q[2], q[1]]
                if triangles:
                    elements.append(MeshElement(len(elements), "triangle", 1, (q[0], q[1], q[2])))
                    elements.append(MeshElement(len(elements), "triangle", 1, (q[0], q[2], q[3])))
                else:
                    # tensor Lagrange layout: (0,0), (1,0), (0,1), (1,1)
                    elements.append(MeshElement(len(elements), "quad", 1, (q[0], q[1], q[3], q[2])))
    patch = SurfacePatch.sphere(center=center, radius=radius)
    mesh = SurfaceMesh(mesh_id, np.array(nodes), elements, patch)
    if order > 1:
        mesh = elevate_order(mesh, patch, order)
    return mesh


def rectangle(origin, u_vec, v_vec, nu: int, nv: int, mesh_id="plate", order: int = 1,
              u_breaks=None, v_breaks=None) -> SurfaceMesh:
    """Structured quad mesh of the parallelogram ``origin + a u_vec + b v_vec``.

    The normal is ``u_vec x v_vec``.  ``u_breaks`` / ``v_breaks`` override the
    uniform parameter breakpoints (values in [0, 1]).
    """
    origin = np.asarray(origin, float)
    u_vec = np.asarray(u_vec, float)
    v_vec = np.asarray(v_vec, float)
    us = np.linspace(0, 1, nu + 1) if u_breaks is None else np.asarray(u_breaks, float)
    vs = np.linspace(0, 1, nv + 1) if v_breaks is None else np.asarray(v_breaks, float)
    nu, nv = len(us) - 1, len(vs) - 1
    nodes = np.array([origin + a * u_vec + b * v_vec for b in vs for a in us])
    idx = lambda i, j: j * (nu + 1) + i  # noqa: E731
    elements = []
    for j in range(nv):
        for i in range(nu):
            elements.append(MeshElement(len(elements), "quad", 1,
                                        (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1))))
    lu, lv = np.linalg.norm(u_vec), np.linalg.norm(v_vec)
    nrm = np.cross(u_vec, v_vec)
    patch = SurfacePatch.plane(origin=origin, normal=nrm, u_direction=u_vec,
                               domain=(0.0, lu, 0.0, lv))
    mesh = SurfaceMesh(mesh_id, nodes, elements, patch)
    if order > 1:
        mesh = elevate_order(mesh, patch, order)
    return mesh


def disk_plate(radius: float, z: float, n: int, mesh_id="disk", normal_up: bool = True) -> SurfaceMesh:
    """Square plate of half-width ``radius`` at height ``z`` meshed ``n x n``."""
    if normal_up:
        return rectangle((-radius, -radius, z), (2 * radius, 0, 0), (0, 2 * radius, 0), n, n, mesh_id)
    return rectangle((-radius, -radius, z), (0, 2 * radius, 0), (2 * radius, 0, 0), n, n, mesh_id)
