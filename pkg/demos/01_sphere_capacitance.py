# %% [markdown]
# # Capacitance of the unit sphere
#
# An isolated conducting sphere of radius 1 held at 1 V carries the charge
# Q = 4 pi eps0.  We solve the single-layer problem on a sequence of curved
# (p = 2) cube-sphere meshes with bilinear densities (nu = 1) and watch the
# charge converge.

# %%
from __future__ import annotations

import math
import time

import numpy as np

from ncbem.assembly import Model, build_block_system
from ncbem.mesh import build_skeleton, cube_sphere
from ncbem.solver import eval_potential, solve_system


def sphere_problem(n: int, nu: int = 1):
    mesh = cube_sphere(n, 1.0, order=2)
    sk = build_skeleton([dict(id=0, kind="air"), dict(id=1, kind="electrode", potential=1.0)],
                        [dict(id=1, meshes=[mesh.id], front=0, back=1)], {mesh.id: mesh})
    model = Model.build(sk, [mesh], nu=nu)
    return model, build_block_system(model, eps0=1.0)


# %% [markdown]
# ## Refinement study

# %%
rows = []
for n in (2, 3, 4, 6, 8):
    t0 = time.perf_counter()
    model, system = sphere_problem(n)
    fields, report = solve_system(system, tol=1e-10)
    err = abs(fields.charges[1] - 4 * math.pi) / (4 * math.pi)
    rows.append((n, model.n_dofs, err))
    print(f"n={n:2d}  dofs={model.n_dofs:5d}  Q={fields.charges[1]:.8f}  rel.err={err:.2e}  "
          f"gmres={report.iterations:3d}  {time.perf_counter() - t0:.1f} s")

h = np.array([1.0 / r[0] for r in rows])
e = np.array([r[2] for r in rows])
print("observed order in Q:", np.round(np.diff(np.log(e)) / np.diff(np.log(h)), 2))

# %% [markdown]
# ## Potential in space
#
# Outside the sphere u(r) = 1/r; inside it is constant.

# %%
model, system = sphere_problem(6)
fields, _ = solve_system(system, tol=1e-10)
r = np.array([0.5, 1.5, 2.0, 4.0, 10.0])
u = eval_potential(model, fields.sigma, np.column_stack([r, 0 * r, 0 * r]))
for ri, ui in zip(r, u):
    print(f"r={ri:5.1f}  u={ui:.6f}  exact={min(1.0, 1.0 / ri):.6f}")
