# %% [markdown]
# # Non-conforming patch interface
#
# A charged plate [0, 2] x [0, 1] is built from two patches.  Meshing the
# right patch twice as finely leaves hanging nodes along x = 1; the
# interface detector finds them and the quadrature splits the affected
# element pairs at the hanging vertices.  Densities from the conforming and
# the non-conforming meshes should differ by no more than the conforming
# mesh's own refinement change.

# %%
from __future__ import annotations

import math

import numpy as np

from ncbem._numerics import basis_values
from ncbem.assembly import Model, build_block_system
from ncbem.mesh import build_skeleton, detect_interfaces, rectangle
from ncbem.solver import solve_system


def plate(na: int, nb: int):
    A = rectangle((0, 0, 0), (1, 0, 0), (0, 1, 0), na, na, mesh_id="A")
    B = rectangle((1, 0, 0), (1, 0, 0), (0, 1, 0), nb, nb, mesh_id="B")
    itf = detect_interfaces([A, B])
    sk = build_skeleton([dict(id=0, kind="air"), dict(id=1, kind="electrode", potential=1.0)],
                        [dict(id=1, meshes=["A", "B"], front=0, back=0, conductor=1)])
    model = Model.build(sk, [A, B], nu=1, interfaces=itf)
    fields, _ = solve_system(build_block_system(model, eps0=1.0), tol=1e-10)
    return model, fields, itf


def density(model, sigma, ns, pts):
    gi = model.disc.table.global_index()
    out = []
    for x, y in pts:
        mi = 0 if x < 1 else 1
        n, xl = ns[mi], x - mi
        i, j = min(int(xl * n), n - 1), min(int(y * n), n - 1)
        g = gi[(model.meshes[mi].id, i + n * j)]
        o, c = model.disc.offs[g], model.disc.counts[g]
        v = np.zeros(c)
        basis_values(0, 1, xl * n - i, y * n - j, v)
        out.append(v @ sigma[o:o + c])
    return np.array(out)


# %%
g = (np.arange(64) + 0.5) / 64
pts = [(2 * a, b) for a in g for b in g]
dens = {}
for ns in ((4, 4), (8, 8), (4, 8)):
    model, fields, itf = plate(*ns)
    dens[ns] = density(model, fields.sigma, ns, pts)
    hang = sum(len(r.hanging) for r in itf)
    print(f"meshes {ns}: dofs {model.n_dofs:4d}  hanging nodes {hang}  Q = {fields.charges[1]:.6f}")

l2 = lambda v: math.sqrt(2.0 * np.mean(v ** 2))  # noqa: E731
delta = l2(dens[4, 4] - dens[8, 8])
diff = l2(dens[4, 8] - dens[4, 4])
print(f"conforming self-convergence delta {delta:.4f}; non-conforming vs conforming {diff:.4f}")
