"""Lagrange surface elements, patch meshes and the discontinuous density space."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .. import _numerics as nx
from ..errors import DegenerateElementError, DomainError

SHAPES = {"quad": nx.QUAD, "triangle": nx.TRI}
SHAPE_NAMES = {nx.QUAD: "quad", nx.TRI: "triangle"}


def shape_code(shape) -> int:
    if isinstance(shape, str):
        try:
            return SHAPES[shape]
        except KeyError:
            raise ValueError(f"unknown element shape {shape!r}") from None
    return int(shape)


def n_nodes(shape, order: int) -> int:
    return nx.n_local(shape_code(shape), order)


def reference_nodes(shape, order: int) -> np.ndarray:
    """Reference coordinates of the canonical Lagrange node layout."""
    code = shape_code(shape)
    if order == 0:
        return np.array([[0.5, 0.5]]) if code == nx.QUAD else np.array([[1.0 / 3.0, 1.0 / 3.0]])
    pts = []
    if code == nx.QUAD:
        for j in range(order + 1):
            for i in range(order + 1):
                pts.append((i / order, j / order))
    else:
        for j in range(order + 1):
            for i in range(order + 1 - j):
                pts.append((i / order, j / order))
    return np.array(pts, dtype=float)


def corner_indices(shape, order: int) -> Tuple[int, ...]:
    """Local node indices of the element corners, counter-clockwise in reference space."""
    code = shape_code(shape)
    if code == nx.QUAD:
        return (0, order, (order + 1) ** 2 - 1, order * (order + 1))
    return (0, order, (order + 1) * (order + 2) // 2 - 1)


REF_CORNERS = {
    nx.QUAD: np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
    nx.TRI: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
}


def edge_reference_point(shape, edge: int, tau):
    """Reference coordinates of parameter ``tau`` along local edge ``edge``.

    Edge ``k`` runs from corner ``k`` to corner ``k + 1`` (cyclically).
    """
    c = REF_CORNERS[shape_code(shape)]
    a = c[edge]
    b = c[(edge + 1) % len(c)]
    tau = np.asarray(tau, dtype=float)
    return a + tau[..., None] * (b - a)


def edge_node_indices(shape, order: int, edge: int) -> List[int]:
    """Local node indices along an edge, ordered from its start corner to its end corner."""
    ref = reference_nodes(shape, order)
    pts = edge_reference_point(shape, edge, np.linspace(0.0, 1.0, order + 1))
    out = []
    for q in pts:
        k = int(np.argmin(np.sum((ref - q) ** 2, axis=1)))
        out.append(k)
    return out


def flip_permutation(shape, order: int) -> np.ndarray:
    """Node permutation that swaps the reference axes and thereby reverses the normal."""
    ref = reference_nodes(shape, order)
    swapped = ref[:, ::-1]
    perm = np.empty(len(ref), dtype=int)
    for k, q in enumerate(swapped):
        perm[k] = int(np.argmin(np.sum((ref - q) ** 2, axis=1)))
    return perm


def _check_reference(code, ref, slack=1e-12):
    s, t = ref[:, 0], ref[:, 1]
    if code == nx.QUAD:
        ok = (s >= -slack) & (s <= 1 + slack) & (t >= -slack) & (t <= 1 + slack)
    else:
        ok = (s >= -slack) & (t >= -slack) & (s + t <= 1 + slack)
    if not np.all(ok):
        raise DomainError("reference coordinates outside the reference element")


def shape_functions(shape, nu: int, reference_coords) -> np.ndarray:
    """Lagrange shape-function values, shape ``(n_points, n_local)``.

    A single point given as a length-2 sequence returns a 1D array.
    """
    code = shape_code(shape)
    ref = np.asarray(reference_coords, dtype=float)
    single = ref.ndim == 1
    ref = np.atleast_2d(ref)
    _check_reference(code, ref)
    val, _, _ = nx.basis_batch(code, int(nu), np.ascontiguousarray(ref))
    return val[0] if single else val


def shape_function_derivatives(shape, nu: int, reference_coords):
    code = shape_code(shape)
    ref = np.atleast_2d(np.asarray(reference_coords, dtype=float))
    _, ds, dt = nx.basis_batch(code, int(nu), np.ascontiguousarray(ref))
    return ds, dt


@dataclass(frozen=True)
class MeshElement:
    """One Lagrange element; ``nodes`` index into the owning mesh's node array."""

    id: int
    shape: str
    order: int
    nodes: Tuple[int, ...]
    patch: Optional[object] = None
    region: Optional[int] = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown element shape {self.shape!r}")
        if self.order < 1:
            raise ValueError("geometric order must be at least 1")
        if len(self.nodes) != n_nodes(self.shape, self.order):
            raise ValueError(
                f"element {self.id}: {len(self.nodes)} nodes given, "
                f"{n_nodes(self.shape, self.order)} required for {self.shape} order {self.order}"
            )

    @property
    def code(self) -> int:
        return SHAPES[self.shape]

    @property
    def corners(self) -> Tuple[int, ...]:
        return tuple(self.nodes[k] for k in corner_indices(self.shape, self.order))

    @property
    def n_edges(self) -> int:
        return 4 if self.shape == "quad" else 3

    def edge_corners(self, edge: int) -> Tuple[int, int]:
        c = self.corners
        return c[edge], c[(edge + 1) % len(c)]


def element_geometry(element: MeshElement, nodes, reference_coords, orientation: int = 1):
    """Map reference points through an element.

    Parameters
    ----------
    element : MeshElement
    nodes : array (n_mesh_nodes, 3)
        Node coordinates of the owning mesh, indexed by ``element.nodes``.
    reference_coords : array (n_points, 2) or (2,)
    orientation : +1 or -1
        Extra sign applied to the node-ordering normal (region convention).

    Returns
    -------
    points, measure, unit_normal
    """
    nodes = np.asarray(nodes, dtype=float)
    xe = nodes[list(element.nodes)]
    ref = np.asarray(reference_coords, dtype=float)
    single = ref.ndim == 1
    ref = np.atleast_2d(ref)
    _check_reference(element.code, ref)
    val, ds, dt = nx.basis_batch(element.code, element.order, np.ascontiguousarray(ref))
    x = val @ xe
    ts = ds @ xe
    tt = dt @ xe
    cr = np.cross(ts, tt)
    meas = np.linalg.norm(cr, axis=1)
    scale = np.linalg.norm(ts, axis=1) * np.linalg.norm(tt, axis=1)
    if np.any(meas <= 1e-14 * np.maximum(scale, 1e-300)):
        raise DegenerateElementError(f"element {element.id} has vanishing surface measure")
    normal = orientation * cr / meas[:, None]
    if single:
        return x[0], float(meas[0]), normal[0]
    return x, meas, normal


@dataclass(eq=False)
class SurfaceMesh:
    """A conforming Lagrange mesh of one surface patch."""

    id: object
    nodes: np.ndarray
    elements: List[MeshElement]
    patch: Optional[object] = None
    node_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 3)
        if self.node_ids is None:
            self.node_ids = np.arange(len(self.nodes))
        for e in self.elements:
            if max(e.nodes) >= len(self.nodes) or min(e.nodes) < 0:
                raise ValueError(f"mesh {self.id}: element {e.id} references a missing node")

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_nodes(self, k: int) -> np.ndarray:
        return self.nodes[list(self.elements[k].nodes)]

    def with_region(self, region) -> "SurfaceMesh":
        els = [MeshElement(e.id, e.shape, e.order, e.nodes, e.patch if e.patch is not None else self.patch,
                           region) for e in self.elements]
        return SurfaceMesh(self.id, self.nodes, els, self.patch, self.node_ids)

    def flipped(self) -> "SurfaceMesh":
        """The same mesh with every element's orientation reversed."""
        els = []
        for e in self.elements:
            perm = flip_permutation(e.shape, e.order)
            els.append(MeshElement(e.id, e.shape, e.order, tuple(e.nodes[k] for k in perm), e.patch, e.region))
        return SurfaceMesh(self.id, self.nodes, els, self.patch, self.node_ids)

    def area(self, n: int = 4) -> float:
        from ..quadrature.rules import element_rule
        tot = 0.0
        for e in self.elements:
            pts, w = element_rule(e.code, n)
            _, meas, _ = element_geometry(e, self.nodes, pts)
            tot += float(w @ meas)
        return tot

    def vector_area(self, n: int = 4) -> np.ndarray:
        from ..quadrature.rules import element_rule
        tot = np.zeros(3)
        for e in self.elements:
            pts, w = element_rule(e.code, n)
            _, meas, nrm = element_geometry(e, self.nodes, pts)
            tot += (w * meas) @ nrm
        return tot

    def bbox(self):
        return self.nodes.min(axis=0), self.nodes.max(axis=0)


@dataclass
class DensitySpace:
    """Discontinuous order-``nu`` Lagrange space on a set of elements.

    ``elements`` lists ``(mesh_index, element_index)`` in dof order; dofs of
    element ``k`` occupy ``offsets[k] : offsets[k] + local_counts[k]``.
    """

    nu: int
    elements: List[Tuple[int, int]]
    local_counts: np.ndarray
    offsets: np.ndarray
    classes: np.ndarray = field(default=None)
    regions: np.ndarray = field(default=None)

    @property
    def n_dofs(self) -> int:
        return int(self.offsets[-1] + self.local_counts[-1]) if len(self.offsets) else 0

    @classmethod
    def build(cls, meshes: Sequence[SurfaceMesh], nu: int, region_of_mesh=None, class_of_region=None):
        """Order elements by class (D, E, F), then region, then mesh, then element."""
        if nu < 0:
            raise ValueError("density order must be non-negative")
        keys = []
        for mi, m in enumerate(meshes):
            reg = region_of_mesh[mi] if region_of_mesh is not None else 0
            cls_ = class_of_region[reg] if class_of_region is not None else "D"
            rank = "DEF".index(cls_)
            for ei, e in enumerate(m.elements):
                if e.shape == "triangle" and nu > 3:
                    raise ValueError("triangle density order limited to 3")
                keys.append((rank, reg, mi, ei, cls_, e.shape))
        keys.sort(key=lambda k: (k[0], k[1], k[2], k[3]))
        counts = np.array([nx.n_local(SHAPES[k[5]], nu) for k in keys], dtype=np.int64)
        offsets = np.zeros(len(keys), dtype=np.int64)
        if len(keys):
            offsets[1:] = np.cumsum(counts)[:-1]
        return cls(nu, [(k[2], k[3]) for k in keys], counts, offsets,
                   np.array([k[4] for k in keys]), np.array([k[1] for k in keys]))

    def class_slices(self) -> Dict[str, slice]:
        out = {}
        for c in "DEF":
            idx = np.flatnonzero(self.classes == c)
            if idx.size == 0:
                start = self._class_start(c)
                out[c] = slice(start, start)
            else:
                out[c] = slice(int(self.offsets[idx[0]]), int(self.offsets[idx[-1]] + self.local_counts[idx[-1]]))
        return out

    def _class_start(self, c):
        before = "DEF"[: "DEF".index(c)]
        idx = np.flatnonzero(np.isin(self.classes, list(before)))
        if idx.size == 0:
            return 0
        return int(self.offsets[idx[-1]] + self.local_counts[idx[-1]])

    def dofs_of_region(self, region) -> np.ndarray:
        idx = np.flatnonzero(self.regions == region)
        if idx.size == 0:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([np.arange(self.offsets[k], self.offsets[k] + self.local_counts[k]) for k in idx])
