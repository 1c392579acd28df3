# %% [markdown]
# # Dielectric sphere in a nearly uniform field
#
# A sphere with eps_r = 2 sits midway between two large plates at +1 V and
# -1 V.  For a uniform external field E0 the interior field is uniform with
# magnitude 3 / (eps_r + 2) E0.  We take E0 from the same plates solved
# without the sphere, so the finite plate size cancels out of the ratio.

# %%
from __future__ import annotations

from pathlib import Path

import numpy as np

from ncbem.app import load_config, run
from ncbem.app.runner import build_meshes
from ncbem.assembly import Model, build_block_system
from ncbem.mesh import build_skeleton
from ncbem.solver import eval_field, solve_system

configs = Path(__file__).resolve().parent / "configs"

# %%
rep = run(configs / "dielectric_sphere.json")
print("dims", rep.dims, "GMRES iterations", rep.solve["iterations"])
E_center = np.array(rep.points[0]["E"])

# %% [markdown]
# Reference field of the plates alone, from the same configuration with the
# sphere removed.

# %%
cfg = load_config(configs / "dielectric_sphere.json")
meshes = [m for m in build_meshes(cfg) if m.id != "ball"]
doms = [d for d in cfg["skeleton"]["domains"] if d["kind"] != "dielectric"]
regs = [r for r in cfg["skeleton"]["regions"] if "ball" not in r["meshes"]]
model = Model.build(build_skeleton(doms, regs, {m.id: m for m in meshes}), meshes, nu=1)
fields, _ = solve_system(build_block_system(model, eps0=1.0), tol=1e-10)
E0 = eval_field(model, fields.sigma, [[0.0, 0.0, 0.0]])[0]

ratio = np.linalg.norm(E_center) / np.linalg.norm(E0)
print(f"|E_in| / |E0| = {ratio:.5f}   analytic 3/(eps_r+2) = {3 / 4:.5f}")
print("field map written to", [p for p in rep.manifest if "grid" in p])
