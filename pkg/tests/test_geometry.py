from __future__ import annotations

import math

import numpy as np
import pytest

from ncbem.errors import DomainError, SingularParameterizationError
from ncbem.geometry import (SurfacePatch, basis_functions, closest_point, eval_patch,
                            eval_patch_derivatives)


def bilinear():
    ctrl = np.array([[[0, 0, 0], [0, 1, 0]], [[1, 0, 0], [1, 1, 0]]], float)
    return SurfacePatch.bspline((1, 1), [0, 0, 1, 1], [0, 0, 1, 1], ctrl)


def bicubic():
    rng = np.random.default_rng(7)
    g = np.linspace(0, 1, 4)
    ctrl = np.zeros((4, 4, 3))
    ctrl[..., 0], ctrl[..., 1] = np.meshgrid(g, g, indexing="ij")
    ctrl[..., 2] = 0.3 * rng.standard_normal((4, 4))
    k = [0, 0, 0, 0, 1, 1, 1, 1]
    return SurfacePatch.bspline((3, 3), k, k, ctrl)


def quarter_cylinder():
    w = 1 / math.sqrt(2)
    arc = np.array([[1, 0], [1, 1], [0, 1]], float)
    ctrl = np.zeros((3, 2, 3))
    for j, z in enumerate((0.0, 2.0)):
        ctrl[:, j, :2] = arc
        ctrl[:, j, 2] = z
    weights = np.array([[1, 1], [w, w], [1, 1]])
    return SurfacePatch.bspline((2, 1), [0, 0, 0, 1, 1, 1], [0, 0, 1, 1], ctrl, weights)


class TestEvalPatch:
    def test_bilinear_midpoint(self):
        np.testing.assert_allclose(eval_patch(bilinear(), 0.5, 0.5), [0.5, 0.5, 0.0], atol=1e-15)

    def test_bilinear_equals_corner_interpolation(self):
        p = bilinear()
        rng = np.random.default_rng(0)
        for u, v in rng.random((20, 2)):
            ref = np.array([u, v, 0.0])
            np.testing.assert_allclose(eval_patch(p, u, v), ref, atol=1e-15)

    def test_sphere_pole_on_surface(self):
        x = eval_patch(SurfacePatch.sphere(), 0.0, 0.0)
        assert abs(np.linalg.norm(x) - 1.0) < 1e-15

    def test_nurbs_quarter_circle(self):
        p = quarter_cylinder()
        for u in (0.5, 0.1, 0.77):
            x = eval_patch(p, u, 0.3)
            assert abs(math.hypot(x[0], x[1]) - 1.0) < 1e-14

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            eval_patch(bilinear(), 1.5, 0.2)

    def test_invalid_construction(self):
        ctrl = np.zeros((2, 2, 3))
        with pytest.raises(ValueError):
            SurfacePatch.bspline((1, 1), [0, 1, 0, 1], [0, 0, 1, 1], ctrl)
        with pytest.raises(ValueError):
            SurfacePatch.bspline((1, 1), [0, 0, 1], [0, 0, 1, 1], ctrl)
        with pytest.raises(ValueError):
            SurfacePatch.bspline((1, 1), [0, 0, 1, 1], [0, 0, 1, 1], ctrl, weights=-np.ones((2, 2)))
        with pytest.raises(ValueError):
            SurfacePatch.sphere(radius=0.0)


class TestDerivatives:
    def test_plane_normal(self):
        _, _, _, n = eval_patch_derivatives(SurfacePatch.plane(), 0.3, 0.6)
        assert abs(abs(n[2]) - 1.0) < 1e-15

    def test_sphere_normal_radial(self):
        p = SurfacePatch.sphere(center=(1, 2, 3), radius=2.0)
        for u, v in ((0.4, 1.0), (1.7, 4.0), (2.5, 0.2)):
            x, _, _, n = eval_patch_derivatives(p, u, v)
            r = (x - p.center) / np.linalg.norm(x - p.center)
            assert abs(abs(n @ r) - 1.0) < 1e-12

    def test_sphere_pole_is_singular(self):
        with pytest.raises(SingularParameterizationError):
            eval_patch_derivatives(SurfacePatch.sphere(), 0.0, 1.0)

    @pytest.mark.parametrize("patch", [bicubic(), quarter_cylinder()], ids=["bicubic", "nurbs"])
    def test_tangents_match_finite_differences(self, patch):
        h = 1e-5
        for u, v in ((0.3, 0.4), (0.71, 0.52)):
            _, su, sv, _ = eval_patch_derivatives(patch, u, v)
            fu = (eval_patch(patch, u + h, v) - eval_patch(patch, u - h, v)) / (2 * h)
            fv = (eval_patch(patch, u, v + h) - eval_patch(patch, u, v - h)) / (2 * h)
            assert np.linalg.norm(su - fu) <= 1e-8 * np.linalg.norm(su)
            assert np.linalg.norm(sv - fv) <= 1e-8 * np.linalg.norm(sv)


class TestBasis:
    def test_partition_of_unity_and_positivity(self):
        knots = np.array([0, 0, 0, 0, 0.2, 0.5, 0.5, 0.8, 1, 1, 1, 1])
        t = np.random.default_rng(3).random(200)
        _, B = basis_functions(knots, 3, t, 0)
        vals = B[:, 0, :]
        assert vals.min() >= -1e-15
        np.testing.assert_allclose(vals.sum(axis=1), 1.0, atol=1e-14)


class TestClosestPoint:
    def test_plane_foot(self):
        p = SurfacePatch.plane()
        r = closest_point(p, [0.3, 0.4, 1.0])
        np.testing.assert_allclose(r.point, [0.3, 0.4, 0.0], atol=1e-15)
        assert abs(r.distance - 1.0) < 1e-15 and r.converged

    def test_sphere_radial(self):
        p = SurfacePatch.sphere()
        x = np.array([1.2, -0.4, 1.4])
        x = 2.0 * x / np.linalg.norm(x)
        r = closest_point(p, x)
        assert abs(r.distance - 1.0) < 1e-14
        np.testing.assert_allclose(r.point, x / 2.0, atol=1e-14)

    def test_bicubic_beats_dense_grid(self):
        p = bicubic()
        g = np.linspace(0, 1, 513)
        S = p.evaluate_grid(g, g)
        rng = np.random.default_rng(11)
        for _ in range(4):
            x = np.array([*rng.uniform(0.15, 0.85, 2), rng.uniform(-0.3, 0.3)])
            r = closest_point(p, x)
            dmin = np.sqrt(np.min(np.sum((S - x) ** 2, axis=2)))
            assert r.distance <= dmin + 1e-15

    def test_on_surface_and_idempotent(self):
        p = bicubic()
        for u, v in ((0.2, 0.3), (0.9, 0.6), (0.5, 0.05)):
            x = eval_patch(p, u, v)
            r = closest_point(p, x)
            assert r.distance <= 1e-12 * p.diameter
            r2 = closest_point(p, r.point)
            assert np.linalg.norm(r2.point - r.point) <= 1e-12 * p.diameter

    def test_foot_matches_evaluation(self):
        p = quarter_cylinder()
        r = closest_point(p, [1.5, 1.1, 0.7])
        np.testing.assert_allclose(r.point, eval_patch(p, *r.uv), rtol=1e-12, atol=1e-14)
        assert abs(math.hypot(*r.point[:2]) - 1.0) < 1e-12

    def test_exterior_minimiser_clamped(self):
        p = bicubic()
        r = closest_point(p, [2.0, 0.5, 0.0])
        assert r.uv[0] == pytest.approx(1.0)
        assert 0.0 <= r.uv[1] <= 1.0
