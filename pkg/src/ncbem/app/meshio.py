"""JSON ingestion and export of patches and surface meshes.

Floats are written with 17 significant digits so a write/read cycle
reproduces every coordinate bit for bit.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict

import numpy as np

from ..errors import ConfigurationError
from ..geometry import SurfacePatch
from ..mesh.elements import MeshElement, SurfaceMesh


def _num(x: float) -> float:
    return float(format(float(x), ".17g"))


def _arr(a):
    return None if a is None else np.vectorize(_num, otypes=[float])(np.asarray(a, float)).tolist()


def patch_to_dict(patch: SurfacePatch) -> Dict[str, Any]:
    d: Dict[str, Any] = {"kind": patch.kind, "domain": [_num(v) for v in patch.domain]}
    if patch.kind == "bspline":
        d.update(degrees=list(patch.degrees), knots_u=_arr(patch.knots_u), knots_v=_arr(patch.knots_v),
                 control=_arr(patch.control), weights=_arr(patch.weights))
    elif patch.kind in ("sphere", "cylinder"):
        d.update(center=_arr(patch.center), radius=_num(patch.radius), axis=_arr(patch.axis))
    elif patch.kind == "plane":
        d.update(origin=_arr(patch.center), normal=_arr(patch.axis), u_direction=_arr(patch.frame[0]))
    return d


def patch_from_dict(d: Dict[str, Any]) -> SurfacePatch:
    kind = d.get("kind")
    dom = d.get("domain")
    try:
        if kind == "bspline":
            return SurfacePatch.bspline(d["degrees"], d["knots_u"], d["knots_v"], d["control"], d.get("weights"))
        if kind == "sphere":
            return SurfacePatch.sphere(d.get("center", (0, 0, 0)), d.get("radius", 1.0), d.get("axis", (0, 0, 1)), dom)
        if kind == "cylinder":
            if dom is None:
                return SurfacePatch.cylinder(d.get("center", (0, 0, 0)), d.get("radius", 1.0),
                                             d.get("axis", (0, 0, 1)), d.get("height", (0.0, 1.0)))
            return SurfacePatch.cylinder(d.get("center", (0, 0, 0)), d.get("radius", 1.0),
                                         d.get("axis", (0, 0, 1)), domain=dom)
        if kind == "plane":
            return SurfacePatch.plane(d.get("origin", (0, 0, 0)), d.get("normal", (0, 0, 1)), d.get("u_direction"),
                                      dom if dom is not None else (0.0, 1.0, 0.0, 1.0))
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"invalid {kind} patch: {exc}") from exc
    raise ConfigurationError(f"unknown patch kind {kind!r}")


def mesh_to_dict(mesh: SurfaceMesh) -> Dict[str, Any]:
    return {
        "id": mesh.id,
        "nodes": _arr(mesh.nodes),
        "elements": [{"id": e.id, "shape": e.shape, "order": e.order, "nodes": [int(k) for k in e.nodes]}
                     for e in mesh.elements],
        "patch": None if mesh.patch is None else patch_to_dict(mesh.patch),
    }


def mesh_from_dict(d: Dict[str, Any], patch=None) -> SurfaceMesh:
    try:
        nodes = np.asarray(d["nodes"], float).reshape(-1, 3)
        els = [MeshElement(int(e.get("id", k)), e["shape"], int(e.get("order", 1)), tuple(int(v) for v in e["nodes"]))
               for k, e in enumerate(d["elements"])]
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigurationError(f"mesh {d.get('id')!r}: {exc}") from exc
    if patch is None and d.get("patch"):
        patch = patch_from_dict(d["patch"])
    return SurfaceMesh(d.get("id", "mesh"), nodes, els, patch)


def dumps_mesh(mesh: SurfaceMesh) -> str:
    return json.dumps(mesh_to_dict(mesh), indent=1, sort_keys=True)


def write_mesh(mesh: SurfaceMesh, path) -> Path:
    path = Path(path)
    path.write_text(dumps_mesh(mesh))
    return path


def read_mesh(path, patch=None) -> SurfaceMesh:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read mesh file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"mesh file {path} is not valid JSON: {exc}") from exc
    return mesh_from_dict(d, patch)
