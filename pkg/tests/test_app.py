from __future__ import annotations

import json
import math

import numpy as np
import pytest

from ncbem.app import dumps_mesh, load_config, mesh_from_dict, read_mesh, run, write_mesh, write_surface_vtk
from ncbem.app.cli import main
from ncbem.assembly import Model
from ncbem.errors import ConfigurationError
from ncbem.mesh import build_skeleton, cube_sphere, elevate_order, rectangle


def sphere_config(out, n=4, **extra):
    cfg = {"case": "sphere", "eps0": 1.0, "output_dir": str(out),
           "meshes": [{"id": "s", "generator": "cube_sphere", "n": n, "order": 2}],
           "skeleton": {"domains": [{"id": 0, "kind": "air"}, {"id": 1, "kind": "electrode", "potential": 1.0}],
                        "regions": [{"id": 1, "meshes": ["s"], "front": 0, "back": 1}]},
           "solver": {"tol": 1e-10},
           "outputs": {"points": [[2.0, 0.0, 0.0]]}}
    cfg.update(extra)
    return cfg


def plate_config(out):
    return {"case": "plates", "eps0": 1.0, "output_dir": str(out),
            "meshes": [{"id": "A", "generator": "rectangle", "origin": [0, 0, 0], "nu": 2},
                       {"id": "B", "generator": "rectangle", "origin": [1, 0, 0], "nu": 4}],
            "skeleton": {"domains": [{"id": 0, "kind": "air"}, {"id": 1, "kind": "electrode", "potential": 1.0}],
                         "regions": [{"id": 1, "meshes": ["A", "B"], "front": 0, "back": 0, "conductor": 1}]}}


def read_vtk_scalar(path, name):
    lines = path.read_text().splitlines()
    i = lines.index(f"SCALARS {name} double 1") + 2
    n = int(next(ln for ln in lines if ln.startswith("POINT_DATA")).split()[1])
    return np.array([float(v) for v in lines[i:i + n]])


class TestMeshJson:
    def test_round_trip_bit_exact(self, tmp_path):
        m = cube_sphere(3, 1.3, center=(0.1, -0.2, 1 / 3), order=2)
        m2 = read_mesh(write_mesh(m, tmp_path / "m.json"))
        assert np.array_equal(m.nodes, m2.nodes)
        assert [(e.shape, e.order, e.nodes) for e in m.elements] == [(e.shape, e.order, e.nodes)
                                                                     for e in m2.elements]
        assert m2.patch is not None and m2.patch.kind == m.patch.kind
        assert dumps_mesh(m2) == dumps_mesh(m)

    def test_inline_mesh_in_config(self, tmp_path):
        d = json.loads(dumps_mesh(rectangle((0, 0, 0), (1, 0, 0), (0, 1, 0), 2, 2, mesh_id="r")))
        cfg = plate_config(tmp_path)
        cfg["meshes"] = [d]
        cfg["skeleton"]["regions"][0]["meshes"] = ["r"]
        rep = run(cfg)
        assert rep.dims["N_E"] == 4 * 4
        assert rep.charges["1"] > 0

    def test_bad_mesh(self):
        with pytest.raises(ConfigurationError):
            mesh_from_dict({"id": "x", "nodes": [[0, 0, 0]], "elements": [{"shape": "quad"}]})


class TestConfig:
    def test_defaults_merged(self, tmp_path):
        cfg = load_config(sphere_config(tmp_path))
        assert cfg["quadrature"]["singular_order"] == 6 and cfg["solver"]["tol"] == 1e-10
        assert cfg["fmm"]["enabled"] is False

    def test_schema_error_has_location(self, tmp_path):
        cfg = sphere_config(tmp_path)
        cfg["solver"]["tol"] = -1.0
        with pytest.raises(ConfigurationError, match="solver/tol"):
            load_config(cfg)

    @pytest.mark.parametrize("mutate", [
        lambda c: c["skeleton"]["domains"].pop(0),
        lambda c: c["skeleton"]["regions"][0]["meshes"].append("missing"),
        lambda c: c["skeleton"]["regions"][0].update(front=7),
        lambda c: c["meshes"].append(dict(c["meshes"][0])),
        lambda c: c["fmm"].update(expansion_order=1) if "fmm" in c else c.update(fmm={"expansion_order": 1}),
    ])
    def test_cross_references(self, tmp_path, mutate):
        cfg = sphere_config(tmp_path)
        mutate(cfg)
        with pytest.raises(ConfigurationError):
            load_config(cfg)

    def test_equal_permittivity_across_dielectric_region(self, tmp_path):
        cfg = sphere_config(tmp_path)
        cfg["meshes"].append({"id": "d", "generator": "cube_sphere", "n": 2, "radius": 0.3, "center": [3, 0, 0]})
        cfg["skeleton"]["domains"].append({"id": 2, "kind": "dielectric", "eps_r": 1.0})
        cfg["skeleton"]["regions"].append({"id": 2, "meshes": ["d"], "front": 0, "back": 2})
        with pytest.raises(ConfigurationError, match="eps|permittiv"):
            run(cfg)
        assert main(["run", _dump(tmp_path, cfg), "--log-level", "ERROR"]) == 2


def _dump(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


@pytest.fixture(scope="module")
def sphere_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sphere")
    return run(sphere_config(out)), out


class TestRun:
    def test_capacitance(self, sphere_run):
        rep, _ = sphere_run
        assert abs(rep.charges["1"] - 4 * math.pi) <= 0.01 * 4 * math.pi
        assert rep.solve["converged"]
        assert rep.points[0]["u"] == pytest.approx(0.5, abs=0.01)

    def test_manifest_exists(self, sphere_run):
        rep, out = sphere_run
        names = sorted(p.rsplit("/", 1)[-1] for p in rep.manifest)
        assert names == ["report.json", "surface.vtk", "traces.csv"]
        saved = json.loads((out / "report.json").read_text())
        assert saved["dims"] == rep.dims and saved["charges"] == rep.charges

    def test_surface_vtk_range(self, sphere_run):
        _, out = sphere_run
        u = read_vtk_scalar(out / "surface.vtk", "u")
        assert np.abs(u - 1.0).max() <= 0.02

    def test_traces_csv(self, sphere_run):
        rep, out = sphere_run
        rows = (out / "traces.csv").read_text().splitlines()
        assert rows[0].startswith("region,mesh,element")
        assert len(rows) - 1 == rep.dims["N"]

    def test_deterministic(self, sphere_run, tmp_path):
        rep, out = sphere_run
        rep2 = run(sphere_config(tmp_path))
        strip = lambda s: {k: v for k, v in s.items() if k != "wall_time"}  # noqa: E731
        assert rep2.charges == rep.charges and rep2.points == rep.points
        assert strip(rep2.solve) == strip(rep.solve)
        assert (tmp_path / "traces.csv").read_bytes() == (out / "traces.csv").read_bytes()
        assert (tmp_path / "surface.vtk").read_bytes() == (out / "surface.vtk").read_bytes()

    def test_empty_grid(self, tmp_path):
        cfg = sphere_config(tmp_path, n=2)
        cfg["outputs"] = {"grids": [{"origin": [0, 0, 3], "spacing": [1, 1, 1], "dims": [0, 4, 1]},
                                    {"origin": [2, 2, 2], "spacing": [0.5, 0.5, 1], "dims": [2, 2, 1]}]}
        rep = run(cfg)
        assert not (tmp_path / "grid_0.vtk").exists() and (tmp_path / "grid_1.vtk").exists()
        assert any("grid 0" in n for n in rep.notes)

    def test_dry_run_with_detection(self, tmp_path, capsys):
        path = _dump(tmp_path, plate_config(tmp_path / "out"))
        assert main(["run", path, "--detect-interfaces", "--dry-run", "--log-level", "ERROR"]) == 0
        summary = json.loads(capsys.readouterr().out)
        itf = summary["interfaces"]
        assert len(itf) == 1 and itf[0]["hanging"] == 2 and not itf[0]["conforming"]
        assert summary["charges"] == {}
        assert not (tmp_path / "out" / "surface.vtk").exists()

    def test_dump_system(self, tmp_path):
        path = _dump(tmp_path, sphere_config(tmp_path / "out", n=2))
        assert main(["run", path, "--dump-system", str(tmp_path / "sys.npz"), "--log-level", "ERROR"]) == 0
        d = np.load(tmp_path / "sys.npz")
        n = int(d["dims"][-1])
        assert d["matrix"].shape == (n, n) and d["rhs"].shape == (n,)
        np.testing.assert_array_equal(np.diag(d["matrix"]), d["diagonal"])

    def test_elevate_flag(self, tmp_path):
        cfg = sphere_config(tmp_path, n=3)
        cfg["meshes"][0]["order"] = 1
        lin = run(cfg).charges["1"]
        cfg["output_dir"] = str(tmp_path / "p2")
        quad = run(load_config(cfg), elevate=2).charges["1"]
        assert abs(quad - 4 * math.pi) < abs(lin - 4 * math.pi)

    def test_fmm_matches_dense(self, tmp_path):
        dense = run(sphere_config(tmp_path / "d", n=6)).charges["1"]
        fmm = run(sphere_config(tmp_path / "f", n=6, fmm={"enabled": True, "leaf_capacity": 16}))
        assert fmm.fmm is not None and fmm.fmm["m2l_pairs"] > 0
        assert fmm.charges["1"] == pytest.approx(dense, rel=1e-6)

    def test_missing_config_exit_code(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json"), "--log-level", "ERROR"]) == 2


class TestVtk:
    def test_geometry_only_subcells(self, tmp_path):
        m = elevate_order(cube_sphere(2, order=1), cube_sphere(2).patch, 2)
        sk = build_skeleton([{"id": 0, "kind": "air"}, {"id": 1, "kind": "electrode", "potential": 1.0}],
                            [{"id": 1, "meshes": [m.id], "front": 0, "back": 1}])
        model = Model.build(sk, [m], nu=0)
        text = write_surface_vtk(tmp_path / "g.vtk", model.disc).read_text().splitlines()
        ncell = int(next(ln for ln in text if ln.startswith("CELLS")).split()[1])
        assert ncell == 9 * m.n_elements
        i = text.index(f"CELL_TYPES {ncell}")
        assert set(text[i + 1:i + 1 + ncell]) == {"9"}
        npts = int(next(ln for ln in text if ln.startswith("POINTS")).split()[1])
        P = np.array([[float(v) for v in ln.split()] for ln in text[5:5 + npts]])
        assert npts == 16 * m.n_elements
        assert np.abs(np.linalg.norm(P, axis=1) - 1.0).max() < 0.02

    def test_unwritable_path(self, tmp_path):
        from ncbem.app import ExportError
        m = cube_sphere(2)
        sk = build_skeleton([{"id": 0, "kind": "air"}, {"id": 1, "kind": "electrode", "potential": 1.0}],
                            [{"id": 1, "meshes": [m.id], "front": 0, "back": 1}])
        model = Model.build(sk, [m], nu=0)
        with pytest.raises(ExportError, match="nodir"):
            write_surface_vtk(tmp_path / "nodir" / "x.vtk", model.disc)
