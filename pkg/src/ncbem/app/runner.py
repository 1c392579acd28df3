"""Scenario orchestration: meshes -> skeleton -> assembly -> solve -> post-processing -> files."""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..assembly import DenseLayerOperator, Model, QuadratureConfig, build_block_system
from ..errors import ConfigurationError, NcbemError
from ..fmm import FmmConfig, FmmLayerOperator
from ..mesh import build_skeleton, detect_interfaces, elevate_order, reference_nodes
from ..mesh.generators import cube_sphere, disk_plate, rectangle
from ..solver import OnSurfaceError, eval_potential_and_field, solve_system
from .config import ProblemConfig, load_config
from .meshio import mesh_from_dict, patch_from_dict, read_mesh
from .vtk import grid_points, write_grid_vtk, write_surface_vtk

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    case: str
    dims: Dict[str, int]
    timings: Dict[str, float]
    solve: Optional[Dict[str, Any]] = None
    charges: Dict[str, float] = field(default_factory=dict)
    floating_potentials: Dict[str, float] = field(default_factory=dict)
    interfaces: List[Dict[str, Any]] = field(default_factory=list)
    fmm: Optional[Dict[str, Any]] = None
    points: List[Dict[str, Any]] = field(default_factory=list)
    manifest: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    dry_run: bool = False

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


# -- meshes ------------------------------------------------------------------


def _generate(spec: Dict[str, Any]):
    g = spec["generator"]
    mid = spec["id"]
    order = int(spec.get("order", 1))
    if g == "cube_sphere":
        return cube_sphere(int(spec.get("n", 4)), float(spec.get("radius", 1.0)), spec.get("center", (0, 0, 0)),
                           mid, order, bool(spec.get("triangles", False)), bool(spec.get("inward", False)))
    if g == "rectangle":
        return rectangle(spec.get("origin", (0, 0, 0)), spec.get("u", (1, 0, 0)), spec.get("v", (0, 1, 0)),
                         int(spec.get("nu", 4)), int(spec.get("nv", spec.get("nu", 4))), mid, order,
                         spec.get("u_breaks"), spec.get("v_breaks"))
    m = disk_plate(float(spec.get("radius", 1.0)), float(spec.get("z", 0.0)), int(spec.get("n", 4)), mid,
                   bool(spec.get("normal_up", True)))
    if order > 1:
        m = elevate_order(m, m.patch, order)
    return m


def build_meshes(cfg: ProblemConfig, elevate: Optional[int] = None):
    patches = {g["id"]: patch_from_dict(g) for g in cfg["geometry"]}
    out = []
    for spec in cfg["meshes"]:
        patch = spec.get("patch")
        patch = patches[patch] if isinstance(patch, str) else (patch_from_dict(patch) if patch else None)
        if "generator" in spec:
            m = _generate(spec)
        elif "file" in spec:
            m = read_mesh(cfg.base_dir / spec["file"], patch)
            m.id = spec["id"]
        else:
            m = mesh_from_dict(spec, patch)
        if patch is not None:
            m.patch = patch
        if "generator" not in spec and int(spec.get("order", 1)) > 1:
            m = _elevate(m, int(spec["order"]))
        if spec.get("flip"):
            m = m.flipped()
        out.append(m)
    target = elevate if elevate is not None else cfg["discretization"].get("elevate_order")
    if target:
        out = [_elevate(m, int(target)) if all(e.order == 1 for e in m.elements) else m for m in out]
    return out


def _elevate(m, p):
    if m.patch is None:
        raise ConfigurationError(f"mesh {m.id!r} has no patch to elevate onto")
    return elevate_order(m, m.patch, p)


def _interface_summary(itf) -> List[Dict[str, Any]]:
    out = []
    for r in itf:
        out.append({"meshes": [str(v) for v in r.meshes], "contacts": len(r.contacts), "hanging": len(r.hanging),
                    "conforming": len(r.hanging) == 0 and all(not c.params_a and not c.params_b for c in r.contacts),
                    "join_distance": float(r.join_distance), "non_manifold": bool(r.non_manifold)})
    for d in getattr(itf, "diagnostics", ()):
        out.append({"diagnostic": str(d)})
    return out


# -- run -----------------------------------------------------------------------


def run(config, detect: Optional[bool] = None, elevate: Optional[int] = None, dry_run: bool = False,
        dump_system: Optional[str] = None, threads: Optional[int] = None) -> RunReport:
    """Execute the full pipeline for a config (path, dict or ProblemConfig) and write the outputs."""
    cfg = config if isinstance(config, ProblemConfig) else load_config(config)
    if threads:
        import numba
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    timings: Dict[str, float] = {}
    t0 = time.perf_counter()
    meshes = build_meshes(cfg, elevate)
    by_id = {m.id: m for m in meshes}
    itf_cfg = cfg["interfaces"]
    itf = []
    if detect if detect is not None else itf_cfg["detect"]:
        itf = detect_interfaces(meshes, itf_cfg["join_tolerance"], itf_cfg["search_tolerance"])
    sk_cfg = cfg["skeleton"]
    sk = build_skeleton(sk_cfg["domains"], sk_cfg["regions"], by_id, sk_cfg.get("closure_tolerance", 1e-3))
    q = cfg["quadrature"]
    quad = QuadratureConfig(q["regular_order"], q["singular_order"], q["near_ratio"], q["max_depth"])
    model = Model.build(sk, meshes, cfg["discretization"]["nu"], itf, quad)
    timings["setup"] = time.perf_counter() - t0
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    slices = model.space.class_slices()
    dims = {k: s.stop - s.start for k, s in
            (("N_D", slices["D"]), ("N_E", slices["E"]), ("N_F", slices["F"]))}
    dims.update(N_f=len(sk.floating), N=model.n_dofs + len(sk.floating))
    rep = RunReport(cfg.case, dims, timings, interfaces=_interface_summary(itf))
    if dry_run:
        rep.dry_run = True
        rep.notes.append("dry run: no assembly or solve")
        return _finish(rep, out_dir)

    t0 = time.perf_counter()
    f = cfg["fmm"]
    if f["enabled"]:
        layer = FmmLayerOperator(model.disc, FmmConfig(f["expansion_order"], f["leaf_capacity"], f["theta"]))
        rep.fmm = layer.stats()
    else:
        layer = DenseLayerOperator.assemble(model)
    system = build_block_system(model, layer, eps0=cfg["eps0"])
    timings["assembly"] = time.perf_counter() - t0
    if dump_system:
        rep.manifest.append(str(_dump(system, dump_system, layer)))

    t0 = time.perf_counter()
    s = cfg["solver"]
    fields, sreport = solve_system(system, s["tol"], s["restart"], s["max_iters"], s["precondition"])
    timings["solve"] = time.perf_counter() - t0
    rep.solve = sreport.as_dict()
    if rep.fmm is not None:
        rep.fmm = layer.stats()
    if not sreport.converged:
        rep.notes.append("GMRES did not reach the requested tolerance")
    rep.charges = {str(n): float(v) for n, v in fields.charges.items()}
    rep.floating_potentials = {str(n): float(v) for n, v in fields.alpha.items()}

    t0 = time.perf_counter()
    o = cfg["outputs"]
    tr = fields.traces
    if o["vtk"]:
        rep.manifest.append(str(write_surface_vtk(
            out_dir / "surface.vtk", model.disc,
            {"u": tr.u, "q_plus": tr.q_plus, "q_minus": tr.q_minus, "sigma": fields.sigma}, o["subdivisions"],
            title=f"{cfg.case} surface")))
    if o["traces"]:
        rep.manifest.append(str(write_traces_csv(out_dir / "traces.csv", model, fields)))
    if o["points"]:
        u, E = _safe_eval(model, fields.sigma, np.asarray(o["points"], float))
        rep.points = [{"x": list(map(float, p)), "u": _f(a), "E": [_f(v) for v in e]}
                      for p, a, e in zip(o["points"], u, E)]
    for k, g in enumerate(o["grids"]):
        if int(np.prod(g["dims"])) == 0:
            rep.notes.append(f"grid {k} is empty; no file written")
            continue
        P = grid_points(g["origin"], g["spacing"], g["dims"])
        u, E = _safe_eval(model, fields.sigma, P)
        rep.manifest.append(str(write_grid_vtk(out_dir / f"grid_{k}.vtk", g["origin"], g["spacing"], g["dims"],
                                               u, E, title=f"{cfg.case} grid {k}")))
    timings["post"] = time.perf_counter() - t0
    return _finish(rep, out_dir)


def _f(v):
    return None if not np.isfinite(v) else float(v)


def _safe_eval(model, sigma, P):
    """Potential and field; points on the boundary get NaN instead of aborting the export."""
    u = np.full(len(P), np.nan)
    E = np.full((len(P), 3), np.nan)
    start = 0
    while start < len(P):
        try:
            u[start:], E[start:] = eval_potential_and_field(model, sigma, P[start:])
            break
        except OnSurfaceError as exc:
            bad = start + exc.index
            if bad > start:
                u[start:bad], E[start:bad] = eval_potential_and_field(model, sigma, P[start:bad])
            start = bad + 1
    return u, E


def write_traces_csv(path, model, fields) -> Path:
    """One row per dof: location, density and recovered traces."""
    disc = model.disc
    t = disc.table
    tr = fields.traces
    path = Path(path)
    rows = []
    from .. import _numerics as nx
    for g in range(t.n):
        code = int(t.shape[g])
        ref = reference_nodes("quad" if code == nx.QUAD else "triangle", disc.nu)
        geo, _, _ = nx.basis_batch(code, int(t.order[g]), np.ascontiguousarray(ref))
        X = geo @ t.geo[g, :t.ngeo[g]]
        m = t.meshes[t.mesh_index[g]]
        reg = m.elements[t.local_index[g]].region
        for a in range(disc.counts[g]):
            i = disc.offs[g] + a
            rows.append([reg, m.id, int(t.local_index[g]), a, i, *(format(v, ".17g") for v in X[a]),
                         *(format(float(v[i]), ".17g") for v in (fields.sigma, tr.u, tr.q_plus, tr.q_minus))])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["region", "mesh", "element", "local_dof", "dof", "x", "y", "z", "sigma", "u", "q_plus",
                    "q_minus"])
        w.writerows(rows)
    return path


def _dump(system, path, layer) -> Path:
    path = Path(path)
    data = {"rhs": system.rhs, "diagonal": system.diagonal(),
            "dims": np.array([system.dims[k] for k in ("N_D", "N_E", "N_F", "N_f", "N")])}
    if isinstance(layer, DenseLayerOperator):
        data["matrix"] = system.dense_matrix()
    np.savez_compressed(path, **data)
    return path if path.suffix == ".npz" else path.with_suffix(path.suffix + ".npz")


def _finish(rep: RunReport, out_dir: Path) -> RunReport:
    path = out_dir / "report.json"
    rep.manifest.append(str(path))
    missing = [p for p in rep.manifest if p != str(path) and not Path(p).exists()]
    if missing:
        raise NcbemError(f"outputs missing after run: {missing}")
    path.write_text(json.dumps(rep.as_dict(), indent=2, sort_keys=True, default=_json_default))
    return rep


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))
