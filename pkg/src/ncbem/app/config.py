"""Problem configuration: JSON schema, defaults and loading."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import jsonschema

from ..errors import ConfigurationError

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_num_or_null = {"type": ["number", "null"]}

SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["meshes", "skeleton"],
    "additionalProperties": False,
    "properties": {
        "case": {"type": "string"},
        "output_dir": {"type": "string"},
        "eps0": {"type": "number", "exclusiveMinimum": 0},
        "geometry": {"type": "array", "items": {"type": "object", "required": ["id", "kind"]}},
        "meshes": {"type": "array", "minItems": 1, "items": {
            "type": "object", "required": ["id"],
            "properties": {"id": {"type": ["string", "integer"]},
                           "generator": {"enum": ["cube_sphere", "rectangle", "disk_plate"]},
                           "file": {"type": "string"},
                           "patch": {"type": ["string", "object"]},
                           "flip": {"type": "boolean"},
                           "order": {"type": "integer", "minimum": 1}}}},
        "skeleton": {"type": "object", "required": ["domains", "regions"], "additionalProperties": False,
                     "properties": {
                         "domains": {"type": "array", "minItems": 1, "items": {
                             "type": "object", "required": ["id", "kind"], "additionalProperties": False,
                             "properties": {"id": {"type": "integer", "minimum": 0},
                                            "kind": {"enum": ["air", "dielectric", "electrode", "floating"]},
                                            "eps_r": _num_or_null, "potential": _num_or_null,
                                            "charge": _num_or_null, "name": {"type": "string"}}}},
                         "regions": {"type": "array", "minItems": 1, "items": {
                             "type": "object", "required": ["id", "meshes", "front", "back"],
                             "additionalProperties": False,
                             "properties": {"id": {"type": "integer"},
                                            "meshes": {"type": "array", "items": {"type": ["string", "integer"]}},
                                            "front": {"type": "integer"}, "back": {"type": "integer"},
                                            "conductor": {"type": ["integer", "null"]},
                                            "name": {"type": "string"}}}},
                         "closure_tolerance": {"type": "number", "exclusiveMinimum": 0}}},
        "discretization": {"type": "object", "additionalProperties": False,
                           "properties": {"nu": {"type": "integer", "minimum": 0, "maximum": 4},
                                          "elevate_order": {"type": ["integer", "null"], "minimum": 1}}},
        "interfaces": {"type": "object", "additionalProperties": False,
                       "properties": {"detect": {"type": "boolean"}, "join_tolerance": _num_or_null,
                                      "search_tolerance": _num_or_null}},
        "quadrature": {"type": "object", "additionalProperties": False,
                       "properties": {"regular_order": {"type": "integer", "minimum": 1, "maximum": 30},
                                      "singular_order": {"type": "integer", "minimum": 1, "maximum": 30},
                                      "near_ratio": {"type": "number", "exclusiveMinimum": 0},
                                      "max_depth": {"type": "integer", "minimum": 1}}},
        "fmm": {"type": "object", "additionalProperties": False,
                "properties": {"enabled": {"type": "boolean"}, "leaf_capacity": {"type": "integer", "minimum": 1},
                               "expansion_order": {"type": "integer"},
                               "theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}}},
        "solver": {"type": "object", "additionalProperties": False,
                   "properties": {"tol": {"type": "number", "exclusiveMinimum": 0},
                                  "restart": {"type": "integer", "minimum": 1},
                                  "max_iters": {"type": "integer", "minimum": 1},
                                  "precondition": {"type": "boolean"}}},
        "outputs": {"type": "object", "additionalProperties": False,
                    "properties": {"vtk": {"type": "boolean"}, "traces": {"type": "boolean"},
                                   "subdivisions": {"type": "integer", "minimum": 1, "maximum": 16},
                                   "points": {"type": "array", "items": _vec3},
                                   "grids": {"type": "array", "items": {
                                       "type": "object", "required": ["origin", "spacing", "dims"],
                                       "properties": {"origin": _vec3, "spacing": _vec3,
                                                      "dims": {"type": "array", "items": {"type": "integer",
                                                                                           "minimum": 0},
                                                               "minItems": 3, "maxItems": 3}}}}}},
    },
}

DEFAULTS: Dict[str, Any] = {
    "case": "case",
    "eps0": 8.8541878128e-12,
    "geometry": [],
    "discretization": {"nu": 1, "elevate_order": None},
    "interfaces": {"detect": False, "join_tolerance": None, "search_tolerance": None},
    "quadrature": {"regular_order": 4, "singular_order": 6, "near_ratio": 1.5, "max_depth": 10},
    "fmm": {"enabled": False, "leaf_capacity": 32, "expansion_order": 10, "theta": 0.6},
    "solver": {"tol": 1e-8, "restart": 200, "max_iters": 1000, "precondition": True},
    "outputs": {"vtk": True, "traces": True, "subdivisions": 3, "points": [], "grids": []},
}


@dataclass
class ProblemConfig:
    raw: Dict[str, Any]
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def case(self) -> str:
        return self.raw["case"]

    @property
    def output_dir(self) -> Path:
        out = self.raw.get("output_dir") or f"{self.case}_out"
        p = Path(out)
        return p if p.is_absolute() else self.base_dir / p

    def section(self, name: str) -> Dict[str, Any]:
        return self.raw[name]


def _merge(defaults, user):
    out = copy.deepcopy(defaults)
    for k, v in user.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _cross_check(cfg: Dict[str, Any]):
    mesh_ids = [m["id"] for m in cfg["meshes"]]
    if len(set(mesh_ids)) != len(mesh_ids):
        raise ConfigurationError("duplicate mesh ids")
    patch_ids = {g["id"] for g in cfg["geometry"]}
    for m in cfg["meshes"]:
        src = [k for k in ("generator", "file", "nodes") if k in m]
        if len(src) != 1:
            raise ConfigurationError(f"mesh {m['id']!r} needs exactly one of generator / file / nodes")
        if isinstance(m.get("patch"), str) and m["patch"] not in patch_ids:
            raise ConfigurationError(f"mesh {m['id']!r} references unknown patch {m['patch']!r}")
    doms = [d["id"] for d in cfg["skeleton"]["domains"]]
    if doms.count(0) != 1:
        raise ConfigurationError("exactly one domain 0 (the unbounded air) is required")
    for r in cfg["skeleton"]["regions"]:
        for mid in r["meshes"]:
            if mid not in mesh_ids:
                raise ConfigurationError(f"region {r['id']} references unknown mesh {mid!r}")
        for key in ("front", "back", "conductor"):
            if r.get(key) is not None and r[key] not in doms:
                raise ConfigurationError(f"region {r['id']}: {key} domain {r[key]} is not declared")


def load_config(source, base_dir=None) -> ProblemConfig:
    """Load and validate a config from a path, a JSON string or a dict."""
    if isinstance(source, dict):
        user, base = source, Path(base_dir or Path.cwd())
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
        base = Path(base_dir) if base_dir else path.resolve().parent
        user.setdefault("case", path.stem)
    try:
        jsonschema.validate(user, SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config error at {loc}: {exc.message}") from exc
    cfg = _merge(DEFAULTS, user)
    if cfg["fmm"]["expansion_order"] < 2:
        raise ConfigurationError("fmm.expansion_order must be at least 2")
    _cross_check(cfg)
    return ProblemConfig(cfg, base)
