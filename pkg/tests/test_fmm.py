from __future__ import annotations

import math

import numpy as np
import pytest

from ncbem.assembly import Discretization
from ncbem.errors import ConfigurationError, ContractViolation
from ncbem.fmm import (FmmConfig, FmmLayerOperator, build_octree, evaluate, fmm_operator, l2l, l2p, m2l, m2m,
                       n_coefficients, p2m)
from ncbem.mesh import DensitySpace, MeshElement, SurfaceMesh, cube_sphere


def torus_mesh(nu_=24, nv=12, R=2.0, r=0.6):
    nodes = []
    for j in range(nv):
        for i in range(nu_):
            a, b = 2 * math.pi * i / nu_, 2 * math.pi * j / nv
            nodes.append([(R + r * math.cos(b)) * math.cos(a), (R + r * math.cos(b)) * math.sin(a), r * math.sin(b)])
    idx = lambda i, j: (j % nv) * nu_ + (i % nu_)  # noqa: E731
    els = [MeshElement(i + nu_ * j, "quad", 1, (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)))
           for j in range(nv) for i in range(nu_)]
    return SurfaceMesh("torus", np.array(nodes), els)


def sphere_disc(n, nu=0):
    m = cube_sphere(n, order=2)
    space = DensitySpace.build([m], nu, [1], {1: "E"})
    return Discretization([m.with_region(1)], space, [1])


@pytest.fixture(scope="module")
def medium():
    """864 elements, three tree levels at capacity 16: far field present."""
    d = sphere_disc(12)
    V, K = d.dense()
    return d, V, K


class TestOctree:
    def test_octant_centers(self):
        c = np.array([[x, y, z] for z in (-0.5, 0.5) for y in (-0.5, 0.5) for x in (-0.5, 0.5)])
        t = build_octree(c, 1, radii=np.full(8, 0.5))
        assert t.depth == 1 and len(t.leaves) == 8
        assert sorted(int(t.count[k]) for k in t.leaves) == [1] * 8

    def test_coincident_centroids(self):
        t = build_octree(np.ones((5, 3)), 1, max_depth=6)
        assert t.depth == 6 and t.diagnostics
        assert max(int(t.count[k]) for k in t.leaves) == 5

    def test_torus_audit(self):
        m = torus_mesh()
        cent = np.array([m.element_nodes(k).mean(axis=0) for k in range(m.n_elements)])
        t = build_octree(cent, 8)
        leaves = t.leaves
        assert all(t.count[k] <= 8 for k in leaves)
        owned = np.concatenate([t.elements(k) for k in leaves])
        assert np.array_equal(np.sort(owned), np.arange(m.n_elements))
        for k in range(t.n_nodes):
            if t.is_leaf(k):
                continue
            ch = t.children[k]
            assert np.allclose(t.half[ch], t.half[k] / 2)
            offs = (t.center[ch] - t.center[k]) / (t.half[k] / 2)
            assert np.allclose(np.abs(offs), 1.0)
            assert t.count[ch].sum() == t.count[k]
            local = np.concatenate([[0], np.cumsum(t.count[ch])[:-1]]) + t.start[k]
            full = t.count[ch] > 0
            assert np.array_equal(t.start[ch][full], local[full])
        for e, k in enumerate(t.leaf_of()):
            assert np.all(np.abs(cent[e] - t.center[k]) <= t.half[k] * (1 + 1e-12))

    def test_deterministic(self):
        c = np.random.default_rng(0).random((300, 3))
        a, b = build_octree(c, 4), build_octree(c, 4)
        assert np.array_equal(a.perm, b.perm) and np.array_equal(a.center, b.center)

    def test_bad_inputs(self):
        with pytest.raises(ConfigurationError):
            build_octree(np.zeros((0, 3)))
        with pytest.raises(ConfigurationError):
            build_octree(np.zeros((3, 3)), 0)


class TestExpansions:
    def sources(self, n=20, radius=0.3, seed=0):
        rng = np.random.default_rng(seed)
        d = rng.normal(size=(n, 3))
        d *= (radius * rng.random(n) ** (1 / 3) / np.linalg.norm(d, axis=1))[:, None]
        return d, rng.normal(size=n)

    @staticmethod
    def direct(pts, q, x):
        return np.array([np.sum(q / np.linalg.norm(pts - y, axis=1)) for y in np.atleast_2d(x)])

    def test_monopole(self):
        e = p2m(np.zeros((1, 3)), [1.0], np.zeros(3), 6)
        assert len(e.coeffs) == n_coefficients(6)
        assert e.coefficient(0, 0) == pytest.approx(1.0)
        assert np.abs(e.coeffs[1:]).max() == 0.0

    def test_truncation_decreases(self):
        d = 0.4
        src = np.array([[d, 0, 0]])
        R = 1.5
        x = R * np.array([[0.6, 0.0, 0.8], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        ref = self.direct(src, [1.0], x)
        errs = []
        for L in (2, 4, 8):
            err = np.abs(evaluate(p2m(src, [1.0], np.zeros(3), L), x) - ref).max()
            assert err <= 1.0 / (R - d) * (d / R) ** (L + 1) * 1.01
            errs.append(err)
        assert errs[0] > errs[1] > errs[2]

    def test_m2m_preserves_far_field(self):
        pts, q = self.sources()
        e = p2m(pts, q, np.zeros(3), 10)
        e2 = m2m(e, [0.2, -0.1, 0.15])
        x = np.array([[8.0, 1.0, -2.0], [-6.0, 5.0, 4.0], [0.0, 0.0, -9.0]])
        a, b = evaluate(e, x), evaluate(e2, x)
        assert np.abs(a - b).max() <= 1e-12 * np.abs(a).max()

    def test_m2l_l2l_l2p(self):
        pts, q = self.sources()
        e = p2m(pts, q, np.zeros(3), 12)
        loc = m2l(e, [3.0, 1.0, -0.5], radius=1.0)
        loc2 = l2l(loc, [3.2, 0.8, -0.4])
        x = np.array([[3.3, 0.7, -0.3], [3.1, 0.9, -0.5]])
        ref = self.direct(pts, q, x)
        assert np.abs(l2p(loc, x) - ref).max() <= 1e-6 * np.abs(ref).max()
        assert np.abs(l2p(loc2, x) - ref).max() <= 1e-6 * np.abs(ref).max()
        phi, grad = l2p(loc, x, gradient=True)
        h = 1e-5
        fd = (self.direct(pts, q, x[0] + [h, 0, 0]) - self.direct(pts, q, x[0] - [h, 0, 0])) / (2 * h)
        assert abs(grad[0, 0] - fd[0]) <= 1e-5 * np.linalg.norm(grad[0])

    def test_contract_violations(self):
        pts, q = self.sources()
        e = p2m(pts, q, np.zeros(3), 6)
        with pytest.raises(ContractViolation):
            evaluate(e, [[0.1, 0.0, 0.0]])
        with pytest.raises(ContractViolation):
            m2l(e, [0.5, 0, 0], radius=0.5)
        loc = m2l(e, [3.0, 0, 0], radius=1.0)
        with pytest.raises(ContractViolation):
            l2l(loc, [0.0, 0, 0])
        with pytest.raises(ContractViolation):
            l2p(loc, [[0.0, 0.0, 0.0]])


class TestOperator:
    def test_order_too_low(self):
        with pytest.raises(ConfigurationError):
            FmmConfig(expansion_order=1)

    def test_pure_near_field(self):
        d = sphere_disc(4, nu=1)
        V, K = d.dense()
        op = FmmLayerOperator(d)
        assert op.stats()["m2l_pairs"] == 0
        x = np.random.default_rng(1).normal(size=d.n)
        a, b = op.apply(x)
        assert np.linalg.norm(a - V @ x) <= 1e-13 * np.linalg.norm(V @ x)
        assert np.linalg.norm(b - K @ x) <= 1e-13 * np.linalg.norm(K @ x)

    def test_error_decreases_with_order(self, medium):
        d, V, _ = medium
        x = np.random.default_rng(2).normal(size=d.n)
        ref = V @ x
        errs = []
        for L in (4, 6, 8, 10):
            A = fmm_operator("single_layer", d, L=L, leaf_capacity=16)
            errs.append(np.linalg.norm(A @ x - ref) / np.linalg.norm(ref))
        assert all(b <= 2 * a for a, b in zip(errs, errs[1:]))
        assert errs[-1] < errs[0]

    def test_symmetry_and_coverage(self, medium):
        d, V, _ = medium
        op = FmmLayerOperator(d, FmmConfig(10, 16))
        assert op.tree.depth <= 3 and op.stats()["m2l_pairs"] > 0
        C = op.coverage()
        assert C.min() == 1 and C.max() == 1
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=d.n), rng.normal(size=d.n)
        Ax, Ay = op.apply(x)[0], op.apply(y)[0]
        norm = np.linalg.norm(V, 2)
        assert abs(x @ Ay - y @ Ax) <= 1e-8 * np.linalg.norm(x) * np.linalg.norm(y) * norm
        assert np.linalg.norm(Ax - V @ x) <= 1e-6 * np.linalg.norm(V @ x)

    def test_diagonal_matches_dense(self, medium):
        d, V, K = medium
        op = FmmLayerOperator(d, FmmConfig(10, 16))
        dv, dk = op.diagonal()
        np.testing.assert_allclose(dv, np.diag(V), rtol=1e-13)
        np.testing.assert_allclose(dk, np.diag(K), rtol=1e-12, atol=1e-15)
