from __future__ import annotations

import math

import numpy as np
import pytest

import cases
from ncbem.assembly import (KernelKind, Model, assemble_operator_block, assemble_vectors, build_block_system,
                            charge_functional, eval_kernel, lambda_param)
from ncbem.errors import ConfigurationError, IllPosedProblemError, SingularityError
from ncbem.mesh import build_skeleton, cube_sphere, rectangle
from ncbem.solver import gmres, recover_traces, total_charge
from ncbem.solver.post import _blockwise_solve
from oracles import unit_square_self


class TestKernel:
    def test_values(self):
        assert eval_kernel("single_layer", [1, 0, 0], [0, 0, 0]) == pytest.approx(0.0795775, abs=1e-7)
        assert eval_kernel(KernelKind.SINGLE_LAYER, [0, 2, 0], [0, 0, 0]) == pytest.approx(1 / (8 * math.pi))
        val = eval_kernel("adjoint_double_layer", [1, 0, 0], [0, 0, 0], [1, 0, 0])
        assert val == pytest.approx(-1 / (4 * math.pi))

    def test_coincident(self):
        with pytest.raises(SingularityError):
            eval_kernel("single_layer", [1, 2, 3], [1, 2, 3])


class TestLambda:
    def test_values(self):
        assert lambda_param(2, 1) == pytest.approx(1.5)
        assert lambda_param(1, 2) == pytest.approx(-1.5)
        assert lambda_param(3, 1) == pytest.approx(1.0)

    def test_equal(self):
        with pytest.raises(ConfigurationError):
            lambda_param(2.0, 2.0)


def single_square_model(nu=0, potential=1.0):
    m = rectangle((0, 0, 0), (1, 0, 0), (0, 1, 0), 1, 1, mesh_id="sq")
    sk = build_skeleton([cases.AIR, dict(id=1, kind="electrode", potential=potential)],
                        [dict(id=1, meshes=["sq"], front=0, back=0, conductor=1)])
    return Model.build(sk, [m], nu=nu)


class TestBlocks:
    def test_single_element_v(self):
        model = single_square_model()
        V = assemble_operator_block("single_layer", 1, 1, model.space, model.disc)
        assert V.shape == (1, 1)
        assert abs(V[0, 0] - unit_square_self()) <= 1e-8

    def test_single_element_mass(self):
        model = single_square_model()
        assert model.disc.mass().toarray() == pytest.approx(np.array([[1.0]]))

    def test_unknown_region(self):
        model = single_square_model()
        with pytest.raises(ConfigurationError):
            assemble_operator_block("single_layer", 1, 9, model.space, model.disc)

    def test_sphere_v_symmetric_positive_definite(self):
        model, system = cases.build(*cases.sphere_electrode(n=2))
        assert model.n_dofs <= 200
        V = system.layer.V
        assert np.abs(V - V.T).max() <= 1e-10 * np.abs(V).max()
        assert np.linalg.eigvalsh(0.5 * (V + V.T)).min() > 0

    def test_v_symmetry_500(self):
        model, system = cases.build(*cases.sphere_electrode(n=4))
        assert model.n_dofs <= 500
        V = system.layer.V
        assert np.abs(V - V.T).max() <= 1e-10 * np.abs(V).max()

    def test_mass_partition_of_unity(self):
        model, system = cases.build(*cases.sphere_electrode(n=3))
        M = system.M.toarray()
        d = model.disc
        for e in range(d.table.n):
            s = slice(d.offs[e], d.offs[e] + d.counts[e])
            assert abs(M[s, s].sum() - d.element_areas[e]) <= 1e-12 * max(1.0, d.element_areas[e])

    def test_transmission_rows(self):
        # sigma = cos(theta) on the unit sphere: K' sigma = -sigma / 6, V sigma = sigma / 3
        m = cube_sphere(4, order=2)
        tab = rectangle((5, 5, 5), (1, 0, 0), (0, 1, 0), 1, 1, mesh_id="e")
        sk = build_skeleton([cases.AIR, dict(id=1, kind="dielectric", eps_r=2.0),
                             dict(id=2, kind="electrode", potential=1.0)],
                            [dict(id=1, meshes=[m.id], front=0, back=1), dict(id=2, meshes=["e"], front=0, back=0,
                                                                           conductor=2)])
        model = Model.build(sk, [m, tab], nu=1)
        system = build_block_system(model, eps0=1.0)
        X, W, _, PHI = model.disc.points
        rhs = np.zeros(model.n_dofs)
        for k in range(model.disc.table.n):
            o, c = model.disc.offs[k], model.disc.counts[k]
            rhs[o:o + c] = (W[k] * X[k, :, 2]) @ PHI[k, :, :c]
        sig = _blockwise_solve(model.disc, rhs)
        sig[system.slices["E"]] = 0.0
        x = np.concatenate([sig, np.zeros(system.n_total - system.n_sigma)])
        D = system.slices["D"]
        lam = sk.lambda_(1)
        Ms = (system.M @ sig)[D]
        expected = (-lam - 1.0 / 6.0) * Ms
        got = system.apply(x)[D]
        assert np.linalg.norm(got - expected) <= 1e-3 * np.linalg.norm(expected)


class TestVectors:
    def test_h_is_area(self):
        model = single_square_model()
        vec = assemble_vectors(model)[1]
        assert vec.h == pytest.approx([1.0])

    def test_rhs_scales_with_potential(self):
        model = single_square_model(potential=2.0)
        system = build_block_system(model)
        np.testing.assert_allclose(system.rhs, 2.0 * system.vectors[1].h, rtol=0, atol=0)

    def test_floating_charge_two_paths(self):
        model, system = cases.build(*cases.floating_sphere())
        sigma = np.ones(model.n_dofs)
        f = charge_functional(model, system.vectors[1], system.M, system.layer.K)
        q = total_charge(system, 1, recover_traces(system, sigma))
        assert abs(f @ sigma - q / system.eps0) <= 1e-8 * abs(q / system.eps0)


class TestBlockSystem:
    def test_single_electrode_reduces_to_v(self):
        model, system = cases.build(*cases.sphere_electrode(n=2))
        assert system.dims == {"N_D": 0, "N_E": model.n_dofs, "N_F": 0, "N_f": 0, "N": model.n_dofs}
        np.testing.assert_array_equal(system.dense_matrix(), system.layer.V)
        np.testing.assert_allclose(system.rhs, system.vectors[1].h)

    def test_uncharged_floating_trivial(self):
        model, system = cases.build(*cases.floating_sphere(charge=0.0))
        assert np.all(system.rhs == 0)
        x, rep = gmres(system.apply, system.rhs)
        assert rep.converged and np.all(x == 0)
        assert np.abs(system.apply(np.zeros(system.n_total))).max() == 0

    def test_seven_region_dims(self):
        from test_mesh import seven_region_constellation
        sk0 = seven_region_constellation()
        meshes = [rectangle((3.0 * a, 0, 0), (1, 0, 0), (0, 1, 0), 1, a % 2 + 1, mesh_id=f"r{a}")
                  for a in range(1, 8)]
        regs = [dict(id=a, meshes=[f"r{a}"], front=r.front, back=r.back) for a, r in sk0.regions.items()]
        doms = list(sk0.domains.values())
        model = Model.build(build_skeleton(doms, regs), meshes, nu=0)
        dims = build_block_system(model).dims
        per = {a: meshes[a - 1].n_elements for a in range(1, 8)}
        assert dims == {"N_D": per[6], "N_E": sum(per[a] for a in range(1, 6)), "N_F": per[7], "N_f": 1,
                        "N": model.n_dofs + 1}

    def test_matrix_free_equals_stored(self):
        model, system = cases.build(*cases.floating_shell(n=2))
        assert model.n_dofs <= 300
        x = np.random.default_rng(4).normal(size=system.n_total)
        a, b = system.apply(x), system.dense_matrix() @ x
        assert np.abs(a - b).max() <= 1e-13 * np.abs(b).max()

    def test_named_blocks(self):
        model, system = cases.build(*cases.floating_shell(n=2))
        B = system.blocks()
        s = system.slices
        assert B["V_EE"].shape == (s["E"].stop - s["E"].start,) * 2
        assert B["H_F"].shape == (s["F"].stop - s["F"].start, 1)
        np.testing.assert_allclose(B["H_F"][:, 0], system.vectors[4].h[s["F"]])

    def test_no_excitation(self):
        m = cube_sphere(2)
        sk = build_skeleton([cases.AIR, dict(id=1, kind="dielectric", eps_r=2.0)],
                            [dict(id=1, meshes=[m.id], front=0, back=1)])
        with pytest.raises(IllPosedProblemError):
            build_block_system(Model.build(sk, [m], nu=0))
