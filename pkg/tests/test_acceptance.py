"""Acceptance criteria 1-9 against analytic electrostatics oracles.

Every test records one ``criterion N: PASS|FAIL`` line; the lines are printed
as a block at the end of the pytest run (see ``conftest.py``).
"""
from __future__ import annotations

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import cases
from ncbem.assembly import Discretization, Model, QuadratureConfig, build_block_system
from ncbem.fmm import FmmConfig, FmmLayerOperator
from ncbem.mesh import DensitySpace, build_skeleton, cube_sphere, detect_interfaces, elevate_order
from ncbem.quadrature import PairClass
from ncbem.solver import eval_field, solve_system
from oracles import rectangle_pair
from test_quadrature import ORACLE, rule_value, square, v_matrix

RESULTS: dict = {}
FOUR_PI = 4.0 * math.pi


def record(n: int, ok: bool, detail: str):
    RESULTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[n]


def test_criterion_1_elevation_residual():
    t0 = time.perf_counter()
    lin = cube_sphere(6)
    e2 = elevate_order(lin, lin.patch, 2)
    dt = time.perf_counter() - t0
    res = float(np.abs(np.linalg.norm(e2.nodes, axis=1) - 1.0).max())
    bound = 1e-12 * lin.patch.diameter
    record(1, res <= bound and dt < 1.0, f"max node residual {res:.2e} (bound {bound:.0e}), {dt:.2f} s")


def test_criterion_2_sphere_capacitance():
    t0 = time.perf_counter()
    ns, dofs, errs = (3, 4, 6, 8), [], []
    for n in ns:
        _, _, f, _ = cases.solve(*cases.sphere_electrode(n=n))
        dofs.append(24 * n * n)
        errs.append(abs(f.charges[1] - FOUR_PI) / FOUR_PI)
    dt = time.perf_counter() - t0
    order = np.polyfit(np.log(1.0 / np.array(ns)), np.log(errs), 1)[0]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    at_1000 = errs[ns.index(6)]
    ok = at_1000 <= 0.01 and monotone and order >= 1.8 and dt < 60
    record(2, ok, f"rel. errors {['%.2e' % e for e in errs]} at dofs {dofs}, order {order:.2f}, {dt:.1f} s")


def test_criterion_3_concentric_spheres():
    t0 = time.perf_counter()
    _, _, f, _ = cases.solve(*cases.concentric(n=6))
    dt = time.perf_counter() - t0
    ref = 8 * math.pi
    err = abs(abs(f.charges[1]) - ref) / ref
    record(3, err <= 0.015 and dt < 120, f"|Q| = {abs(f.charges[1]):.5f} vs 8 pi, rel. error {err:.2e}, {dt:.1f} s")


def test_criterion_4_floating_shell():
    t0 = time.perf_counter()
    _, _, f, _ = cases.solve(*cases.floating_shell(n=6))
    dt = time.perf_counter() - t0
    alpha = f.alpha[4]
    err = abs(alpha - 1 / 3) / (1 / 3)
    record(4, err <= 0.01 and dt < 120, f"alpha = {alpha:.6f} vs 1/3, rel. error {err:.2e}, {dt:.1f} s")


def test_criterion_5_dielectric_sphere():
    probes = np.array([[0.0, 0.0, 0.0], [0.3, 0.0, 0.2], [0.0, 0.0, -0.4]])
    model, _, f, _ = cases.solve(*cases.dielectric_between_plates(eps_r=2.0))
    E_in = np.linalg.norm(eval_field(model, f.sigma, probes), axis=1)
    pm, _, f0, _ = cases.solve(*cases.plates())
    E0 = np.linalg.norm(eval_field(pm, f0.sigma, probes), axis=1)
    ratio = E_in / E0
    err = float(np.abs(ratio / 0.75 - 1).max())
    record(5, err <= 0.03, f"E_in / E0 = {np.round(ratio, 4).tolist()} vs 0.75, max rel. error {err:.2e}")


def test_criterion_6_nonconforming_equivalence():
    g = (np.arange(64) + 0.5) / 64
    pts = [(2 * a, b) for a in g for b in g]
    dens = {}
    for na, nb in ((4, 4), (8, 8), (4, 8)):
        doms, regs, ms, itf = cases.two_patch_plate(na, nb)
        model, _, f, _ = cases.solve(doms, regs, ms, interfaces=itf)
        dens[na, nb] = cases.sample_plate_density(model, f.sigma, (na, nb), pts)
    l2 = lambda v: math.sqrt(2.0 * np.mean(v ** 2))  # noqa: E731  (plate area 2)
    delta = l2(dens[4, 4] - dens[8, 8])
    diff = l2(dens[4, 8] - dens[4, 4])
    record(6, diff <= 2 * delta, f"L2 |nc - conforming| = {diff:.3e}, self-convergence delta {delta:.3e}, "
                                 f"ratio {diff / delta:.2f} (limit 2)")


def _sphere_disc(n, nu, **quad):
    m = cube_sphere(n, order=2)
    space = DensitySpace.build([m], nu, [1], {1: "E"})
    return Discretization([m.with_region(1)], space, [1], quadrature=QuadratureConfig(**quad))


def test_criterion_7_fmm_fidelity_and_scaling():
    t0 = time.perf_counter()
    # fidelity: 1944 dofs, nu = 1
    doms, regs, ms = cases.sphere_electrode(n=9)
    sk = build_skeleton(doms, regs, {m.id: m for m in ms})
    model = Model.build(sk, ms, nu=1)
    dense = build_block_system(model, eps0=1.0)
    fmm_layer = FmmLayerOperator(model.disc, FmmConfig(10, 32, 0.6))
    x = np.random.default_rng(7).normal(size=model.n_dofs)
    ref = dense.layer.V @ x
    fid = np.linalg.norm(fmm_layer.apply(x)[0] - ref) / np.linalg.norm(ref)
    fd, _ = solve_system(dense, tol=1e-10)
    ff, rep = solve_system(build_block_system(model, fmm_layer, eps0=1.0), tol=1e-10)
    sig = np.linalg.norm(ff.sigma - fd.sigma) / np.linalg.norm(fd.sigma)
    # scaling: nu = 0, N = 486 / 1944 / 7776
    Ns, ts = [], []
    for n in (9, 18, 36):
        d = _sphere_disc(n, 0, singular_order=4)
        op = FmmLayerOperator(d, FmmConfig(10, 32, 0.6))
        y = np.ones(d.n)
        op.apply(y)
        best = min(_timed(op.apply, y) for _ in range(5))
        Ns.append(d.n)
        ts.append(best)
    slope = np.polyfit(np.log(Ns), np.log(ts), 1)[0]
    dt = time.perf_counter() - t0
    ok = fid <= 1e-6 and slope <= 1.3 and sig <= 1e-5 and dt < 600
    record(7, ok, f"V matvec rel. error {fid:.1e} at N={model.n_dofs}; apply times "
                  f"{['%.3g s' % t for t in ts]} at N={Ns}, slope {slope:.2f}; "
                  f"GMRES sigma rel. diff {sig:.1e} ({rep.iterations} its); {dt:.0f} s")


def _timed(fn, *a):
    t = time.perf_counter()
    fn(*a)
    return time.perf_counter() - t


def test_criterion_8_quadrature_oracles():
    errs = {}
    for cls in (PairClass.IDENTICAL, PairClass.EDGE, PairClass.VERTEX):
        errs[f"rule {cls.name.lower()}"] = abs(rule_value(cls, 8) - ORACLE[cls]())
    a, b, c = square("a"), square("b", 1.0, 0.0), square("c", 1.0, 1.0)
    V = v_matrix([a, b, c], detect_interfaces([a, b, c]), singular_order=8)
    errs["assembled identical"] = abs(V[0, 0] - ORACLE[PairClass.IDENTICAL]())
    errs["assembled edge"] = abs(V[0, 1] - ORACLE[PairClass.EDGE]())
    errs["assembled vertex"] = abs(V[0, 2] - ORACLE[PairClass.VERTEX]())
    near = abs(v_matrix([square("p"), square("q", z=0.05)])[0, 1]
               - rectangle_pair((0, 1, 0, 1), (0, 1, 0, 1), gap=0.05))
    ok = max(errs.values()) <= 1e-8 and near <= 1e-7
    worst = max(errs, key=errs.get)
    record(8, ok, f"worst singular error {errs[worst]:.1e} ({worst}), gap-0.05 near-field error {near:.1e}")


SUITES = {
    "skeleton consistency": ["test_mesh.py::TestSkeleton"],
    "partition of unity": ["test_mesh.py::TestShapeFunctions::test_partition_of_unity",
                           "test_assembly.py::TestBlocks::test_mass_partition_of_unity"],
    "V symmetry / positive definiteness": ["test_assembly.py::TestBlocks::test_sphere_v_symmetric_positive_definite",
                                           "test_assembly.py::TestBlocks::test_v_symmetry_500",
                                           "test_quadrature.py::TestAssembledSymmetry"],
    "linearity in g": ["test_solver.py::TestCharge::test_linearity"],
    "floating-charge self-consistency": ["test_assembly.py::TestVectors::test_floating_charge_two_paths",
                                         "test_solver.py::TestCharge::test_floating_constraint"],
}


def test_criterion_9_invariant_suites():
    here = Path(__file__).parent
    parts, ok = [], True
    for name, ids in SUITES.items():
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *ids],
                              cwd=here, capture_output=True, text=True)
        dt = time.perf_counter() - t0
        good = proc.returncode == 0 and dt < 30
        ok &= good
        parts.append(f"{name} {'ok' if good else 'FAILED'} ({dt:.1f} s)")
    record(9, ok, "; ".join(parts))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(pytest.main([__file__, "-q"]))
