"""Legacy ASCII VTK export of surface fields and evaluation grids."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .. import _numerics as nx
from ..errors import NcbemError

VTK_TRIANGLE = 5
VTK_QUAD = 9


class ExportError(NcbemError, OSError):
    """Writing an output file failed."""


def _subgrid(code: int, k: int):
    """Reference points and linear sub-cells of a ``k x k`` subdivision."""
    if code == nx.QUAD:
        pts = np.array([(i / k, j / k) for j in range(k + 1) for i in range(k + 1)])
        idx = lambda i, j: j * (k + 1) + i  # noqa: E731
        cells = [(idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)) for j in range(k) for i in range(k)]
        return pts, cells, VTK_QUAD
    pts, lookup = [], {}
    for j in range(k + 1):
        for i in range(k + 1 - j):
            lookup[i, j] = len(pts)
            pts.append((i / k, j / k))
    cells = []
    for j in range(k):
        for i in range(k - j):
            cells.append((lookup[i, j], lookup[i + 1, j], lookup[i, j + 1]))
            if i + j < k - 1:
                cells.append((lookup[i + 1, j], lookup[i + 1, j + 1], lookup[i, j + 1]))
    return np.array(pts), cells, VTK_TRIANGLE


def surface_arrays(disc, fields: Dict[str, np.ndarray], subdivisions: int = 3):
    """Subdivided points, cells and per-point (or per-cell for nu = 0) field values.

    Every element gets its own points so discontinuous densities stay discontinuous.
    """
    t = disc.table
    nu = disc.nu
    P, C, T, region, elem = [], [], [], [], []
    vals = {k: [] for k in fields}
    off = 0
    grids = {c: _subgrid(c, subdivisions) for c in (nx.QUAD, nx.TRI)}
    for g in range(t.n):
        code = int(t.shape[g])
        ref, cells, ctype = grids[code]
        geo, _, _ = nx.basis_batch(code, int(t.order[g]), np.ascontiguousarray(ref))
        P.append(geo @ t.geo[g, :t.ngeo[g]])
        C += [tuple(off + c for c in cell) for cell in cells]
        T += [ctype] * len(cells)
        m = t.meshes[t.mesh_index[g]]
        reg = m.elements[t.local_index[g]].region
        region += [-1 if reg is None else int(reg)] * len(cells)
        elem += [g] * len(cells)
        o, c = disc.offs[g], disc.counts[g]
        if nu == 0:
            for k, f in fields.items():
                vals[k].append(np.full(len(cells), f[o]))
        else:
            phi, _, _ = nx.basis_batch(code, nu, np.ascontiguousarray(ref))
            for k, f in fields.items():
                vals[k].append(phi @ f[o:o + c])
        off += len(ref)
    return (np.vstack(P), C, np.array(T), np.array(region), np.array(elem),
            {k: np.concatenate(v) for k, v in vals.items()}, nu == 0)


def _fmt(a) -> str:
    return "\n".join(" ".join(format(float(v), ".10g") for v in row) for row in np.atleast_2d(a))


def write_surface_vtk(path, disc, fields: Optional[Dict[str, np.ndarray]] = None, subdivisions: int = 3,
                      title: str = "ncbem surface") -> Path:
    """Unstructured grid of curved elements drawn as ``subdivisions^2`` linear cells each."""
    fields = fields or {}
    P, C, T, region, elem, vals, per_cell = surface_arrays(disc, fields, subdivisions)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(P)} double", _fmt(P),
             f"CELLS {len(C)} {sum(len(c) + 1 for c in C)}"]
    lines += [" ".join(map(str, (len(c),) + tuple(c))) for c in C]
    lines += [f"CELL_TYPES {len(C)}"] + [str(v) for v in T]
    lines += [f"CELL_DATA {len(C)}", "SCALARS region int 1", "LOOKUP_TABLE default"]
    lines += [str(v) for v in region]
    lines += ["SCALARS element int 1", "LOOKUP_TABLE default"] + [str(v) for v in elem]
    if per_cell:
        for k, v in vals.items():
            lines += [f"SCALARS {k} double 1", "LOOKUP_TABLE default", _fmt(v[:, None])]
    elif vals:
        lines += [f"POINT_DATA {len(P)}"]
        for k, v in vals.items():
            lines += [f"SCALARS {k} double 1", "LOOKUP_TABLE default", _fmt(v[:, None])]
    return _write(path, lines)


def grid_points(origin, spacing, dims) -> np.ndarray:
    """Points of a structured grid, x fastest (VTK order)."""
    nxp, nyp, nzp = (int(d) for d in dims)
    o, s = np.asarray(origin, float), np.asarray(spacing, float)
    k, j, i = np.meshgrid(np.arange(nzp), np.arange(nyp), np.arange(nxp), indexing="ij")
    return o + np.column_stack([i.ravel(), j.ravel(), k.ravel()]) * s


def write_grid_vtk(path, origin, spacing, dims, u: np.ndarray, E: np.ndarray,
                   title: str = "ncbem grid") -> Path:
    n = int(np.prod(dims))
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET STRUCTURED_POINTS",
             "DIMENSIONS " + " ".join(str(int(d)) for d in dims),
             "ORIGIN " + " ".join(format(float(v), ".10g") for v in origin),
             "SPACING " + " ".join(format(float(v), ".10g") for v in spacing),
             f"POINT_DATA {n}", "SCALARS u double 1", "LOOKUP_TABLE default", _fmt(u[:, None]),
             "VECTORS E double", _fmt(E)]
    return _write(path, lines)


def _write(path, lines) -> Path:
    path = Path(path)
    try:
        path.write_text("\n".join(lines).replace("nan", "NaN") + "\n")
    except OSError as exc:
        raise ExportError(f"cannot write {path}: {exc}") from exc
    return path
