from __future__ import annotations

import math

import numpy as np
import pytest

from ncbem.errors import ConfigurationError, DegenerateElementError, TopologyError
from ncbem.geometry import SurfacePatch, closest_point
from ncbem.mesh import (DensitySpace, MeshElement, SurfaceMesh, build_skeleton, cube_sphere,
                        detect_interfaces, element_geometry, elevate_order, rectangle, reference_nodes,
                        shape_functions)
from ncbem.quadrature import element_rule


def seven_region_constellation():
    """Two electrodes (1, 2), a dielectric (3) holding a floating conductor (4), all in air (0)."""
    doms = [dict(id=0, kind="air"), dict(id=1, kind="electrode", potential=1.0),
            dict(id=2, kind="electrode", potential=-1.0), dict(id=3, kind="dielectric", eps_r=3.0),
            dict(id=4, kind="floating", charge=0.0)]
    regs = [dict(id=1, front=0, back=1), dict(id=2, front=0, back=2), dict(id=3, front=1, back=3),
            dict(id=4, front=2, back=3), dict(id=5, front=1, back=3), dict(id=6, front=0, back=3),
            dict(id=7, front=3, back=4)]
    return build_skeleton(doms, regs)


class TestSkeleton:
    def test_worked_example(self):
        sk = seven_region_constellation()
        assert sk.A(3) == (3, 4, 5, 6, 7)
        assert sk.sign(3, 5) == 1 and sk.sign(3, 7) == -1
        assert set(sk.dom(6)) == {0, 3}
        assert sk.opp(3, 3) == 1 and sk.opp(3, 7) == 4

    def test_single_sphere(self):
        sk = build_skeleton([dict(id=0, kind="air"), dict(id=1, kind="electrode", potential=1.0)],
                            [dict(id=1, front=0, back=1)])
        assert sk.A(0) == (1,)
        assert set(sk.dom(1)) == {0, 1}
        assert sk.region_class(1) == "E"

    def test_consistency(self):
        sk = seven_region_constellation()
        for n in sk.domains:
            for a in sk.regions:
                assert (a in sk.A(n)) == (n in sk.dom(a))
        for a in sk.regions:
            plus, minus = sk.dom(a)
            assert sk.opp(plus, a) == minus and sk.opp(minus, a) == plus
            assert sk.opp(sk.opp(plus, a), a) == plus
            assert sk.sign(plus, a) == -sk.sign(minus, a)
        assert {a: sk.region_class(a) for a in sk.regions} == {1: "E", 2: "E", 3: "E", 4: "E", 5: "E",
                                                              6: "D", 7: "F"}

    def test_equal_permittivity_rejected(self):
        with pytest.raises(ConfigurationError, match="permittivity"):
            build_skeleton([dict(id=0, kind="air"), dict(id=1, kind="dielectric", eps_r=1.0),
                            dict(id=2, kind="electrode", potential=1.0)],
                           [dict(id=1, front=0, back=1), dict(id=2, front=0, back=2)])

    def test_domain_zero_required(self):
        with pytest.raises(ConfigurationError):
            build_skeleton([dict(id=1, kind="electrode", potential=1.0)], [dict(id=1, front=0, back=1)])

    def test_open_bounded_domain_rejected(self):
        half = rectangle((0, 0, 0), (1, 0, 0), (0, 1, 0), 2, 2, mesh_id="h")
        with pytest.raises(TopologyError):
            build_skeleton([dict(id=0, kind="air"), dict(id=1, kind="dielectric", eps_r=2.0),
                            dict(id=2, kind="electrode", potential=1.0)],
                           [dict(id=1, meshes=["h"], front=0, back=1), dict(id=2, front=0, back=2)],
                           {"h": half})


class TestShapeFunctions:
    def test_constant(self):
        np.testing.assert_allclose(shape_functions("quad", 0, [0.3, 0.8]), [1.0])

    def test_cardinality(self):
        for shape in ("quad", "triangle"):
            for nu in (1, 2, 3):
                nodes = reference_nodes(shape, nu)
                np.testing.assert_allclose(shape_functions(shape, nu, nodes), np.eye(len(nodes)),
                                           atol=1e-13)

    def test_counts(self):
        assert shape_functions("quad", 2, [0.1, 0.1]).shape[-1] == 9
        assert shape_functions("triangle", 2, [0.1, 0.1]).shape[-1] == 6

    def test_partition_of_unity(self):
        rng = np.random.default_rng(5)
        sq = rng.random((100, 2))
        tri = sq[sq.sum(axis=1) <= 1.0]
        for nu in range(4):
            assert np.abs(shape_functions("quad", nu, sq).sum(axis=1) - 1).max() <= 1e-13
            assert np.abs(shape_functions("triangle", nu, tri).sum(axis=1) - 1).max() <= 1e-13


class TestElementGeometry:
    def unit_quad(self, nodes=(0, 1, 2, 3)):
        P = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], float)
        return MeshElement(0, "quad", 1, nodes), P

    def test_flat_center(self):
        e, P = self.unit_quad()
        x, meas, n = element_geometry(e, P, [0.5, 0.5])
        np.testing.assert_allclose(x, [0.5, 0.5, 0])
        assert meas == pytest.approx(1.0)
        np.testing.assert_allclose(n, [0, 0, 1])

    def test_reversed_ordering_flips(self):
        e, P = self.unit_quad((0, 2, 1, 3))
        _, _, n = element_geometry(e, P, [0.5, 0.5])
        np.testing.assert_allclose(n, [0, 0, -1])

    def test_degenerate(self):
        e, P = self.unit_quad()
        P[:] = 0.0
        with pytest.raises(DegenerateElementError):
            element_geometry(e, P, [0.5, 0.5])

    def test_quadratic_sphere_area(self):
        m = cube_sphere(6, order=2)       # h ~ 0.26
        pts, w = element_rule(0, 6)
        for e in m.elements[:12]:
            xs = m.nodes[list(e.nodes)]
            _, meas, _ = element_geometry(e, m.nodes, pts)
            area = float(w @ meas)
            # exact spherical area of the quad with these corners (two spherical triangles)
            c = xs[[0, 2, 8, 6]]
            exact = _sph_tri(c[0], c[1], c[2]) + _sph_tri(c[0], c[2], c[3])
            assert abs(area - exact) <= 0.02 * exact


def _sph_tri(a, b, c):
    num = abs(a @ np.cross(b, c))
    den = 1 + a @ b + b @ c + c @ a
    return 2 * math.atan2(num, den)


class TestInterfaces:
    def squares(self, na=1, nb=2, gap=0.0):
        A = rectangle((0, 0, 0), (1, 0, 0), (0, 1, 0), na, na, mesh_id="A")
        B = rectangle((1 + gap, 0, 0), (1, 0, 0), (0, 1, 0), nb, nb, mesh_id="B")
        return A, B

    def test_hanging_midpoint(self):
        recs = detect_interfaces(self.squares())
        assert len(recs) == 1
        (h,) = recs[0].hanging
        assert h.mesh == "B" and h.target_mesh == "A" and h.tau == pytest.approx(0.5)
        assert recs[0].join_distance <= 1e-12
        edges = [c for c in recs[0].contacts if c.kind == "edge"]
        assert len(edges) == 2 and all(c.params_a == (0.5,) for c in edges)
        assert all(0 <= t <= 1 for c in edges for t in c.params_a + c.params_b)

    def test_gap_gives_diagnostic(self):
        jt = 1e-8
        recs = detect_interfaces(self.squares(gap=10 * jt), jt, 100 * jt)
        assert len(recs) == 0
        assert len(recs.diagnostics) == 1 and recs.diagnostics[0]["kind"] == "ambiguous"

    def test_t_junction(self):
        P = rectangle((-1, 0, 0), (1, 0, 0), (0, 1, 0), 2, 2, mesh_id="P")
        Q = rectangle((0, 0, 0), (1, 0, 0), (0, 1, 0), 2, 2, mesh_id="Q")
        R = rectangle((0, 0, 0), (0, 1, 0), (0, 0, 1), 2, 2, mesh_id="R")
        recs = detect_interfaces([P, Q, R])
        assert len(recs) == 1
        assert recs[0].non_manifold and set(recs[0].meshes) == {"P", "Q", "R"}

    def test_symmetry(self):
        A, B = self.squares(2, 3)
        ab = detect_interfaces([A, B])
        ba = detect_interfaces([B, A])
        assert len(ab) == len(ba) == 1
        assert ab[0].swapped().contacts == ba[0].contacts
        assert set(ab[0].hanging) == set(ba[0].hanging)

    def test_bad_tolerances(self):
        with pytest.raises(ValueError):
            detect_interfaces(self.squares(), 1e-6, 1e-8)


class TestElevation:
    def test_flat_midpoints(self):
        m = rectangle((0, 0, 0), (1, 0, 0), (0, 1, 0), 2, 2)
        e2 = elevate_order(m, m.patch, 2)
        for lin, quad in zip(m.elements, e2.elements):
            c = m.nodes[list(lin.nodes)]
            q = e2.nodes[list(quad.nodes)]
            np.testing.assert_allclose(q[1], 0.5 * (c[0] + c[1]), atol=1e-15)
            np.testing.assert_allclose(q[4], c.mean(axis=0), atol=1e-15)

    def test_sphere_nodes_on_surface(self):
        lin = cube_sphere(4)
        e2 = elevate_order(lin, lin.patch, 2)
        r = np.linalg.norm(e2.nodes, axis=1)
        assert np.abs(r - 1.0).max() <= 1e-12 * lin.patch.diameter
        assert all(len(e.nodes) == 9 for e in e2.elements)

    def test_bspline_nodes_on_patch(self):
        g = np.linspace(0, 1, 4)
        ctrl = np.zeros((4, 4, 3))
        ctrl[..., 0], ctrl[..., 1] = np.meshgrid(g, g, indexing="ij")
        ctrl[..., 2] = 0.2 * np.sin(3 * ctrl[..., 0]) * np.cos(2 * ctrl[..., 1])
        k = [0, 0, 0, 0, 1, 1, 1, 1]
        patch = SurfacePatch.bspline((3, 3), k, k, ctrl)
        uv = np.linspace(0, 1, 4)
        pts = patch.evaluate_grid(uv, uv)
        nodes = np.array([pts[i, j] for j in range(4) for i in range(4)])
        corners = [(j * 4 + i, j * 4 + i + 1, (j + 1) * 4 + i, (j + 1) * 4 + i + 1)
                   for j in range(3) for i in range(3)]
        els = [MeshElement(k_, "quad", 1, c) for k_, c in enumerate(corners)]
        m2 = elevate_order(SurfaceMesh("b", nodes, els, patch), patch, 2)
        d = max(closest_point(patch, x).distance for x in m2.nodes)
        assert d <= 1e-12 * patch.diameter

    def test_geometric_error_improves(self):
        def radial_error(m):
            pts, w = element_rule(0, 5)
            err = 0.0
            for e in m.elements:
                x, meas, _ = element_geometry(e, m.nodes, pts)
                err += float(w @ (meas * (np.linalg.norm(x, axis=1) - 1) ** 2))
            return math.sqrt(err)

        ratios = []
        for n in (3, 6):
            lin = cube_sphere(n)
            ratios.append(radial_error(lin) / radial_error(elevate_order(lin, lin.patch, 2)))
        assert ratios[0] > 1 and ratios[1] > 1.5 * ratios[0]


class TestDensitySpace:
    def test_counts_and_offsets(self):
        m = cube_sphere(2, triangles=True)
        q = rectangle((3, 0, 0), (1, 0, 0), (0, 1, 0), 2, 1, mesh_id="q")
        sp = DensitySpace.build([m, q], 2)
        assert set(sp.local_counts) == {6, 9}
        assert sp.n_dofs == 48 * 6 + 2 * 9
        np.testing.assert_array_equal(sp.offsets[1:], np.cumsum(sp.local_counts)[:-1])


def test_skeleton_spec_names_and_unknown_keys():
    sk = build_skeleton([dict(id=0, kind="air", name="outside"), dict(id=1, kind="electrode", potential=1.0)],
                        [dict(id=1, meshes=["s"], front=0, back=1, name="shell")])
    assert sk.domains[0].name == "outside" and sk.regions[1].name == "shell"
    with pytest.raises(ConfigurationError, match="domain 1"):
        build_skeleton([dict(id=0, kind="air"), dict(id=1, kind="electrode", volts=1.0)],
                       [dict(id=1, meshes=["s"], front=0, back=1)])
