# %% [markdown]
# # Fast multipole matvec: accuracy and cost
#
# The FMM operator replaces the dense V and K' products.  We compare it with
# the dense matrices on a medium mesh and time it on growing meshes.

# %%
from __future__ import annotations

import time

import numpy as np

from ncbem.assembly import Discretization, QuadratureConfig
from ncbem.fmm import FmmConfig, FmmLayerOperator
from ncbem.mesh import DensitySpace, cube_sphere


def disc(n: int, nu: int, **quad):
    m = cube_sphere(n, order=2)
    space = DensitySpace.build([m], nu, [1], {1: "E"})
    return Discretization([m.with_region(1)], space, [1], quadrature=QuadratureConfig(**quad))


# %% [markdown]
# ## Accuracy against the expansion order L

# %%
d = disc(12, 0)
V, K = d.dense()
x = np.random.default_rng(0).normal(size=d.n)
for L in (4, 6, 8, 10):
    op = FmmLayerOperator(d, FmmConfig(L, 16))
    v, k = op.apply(x)
    print(f"L={L:2d}  V error {np.linalg.norm(v - V @ x) / np.linalg.norm(V @ x):.1e}  "
          f"K' error {np.linalg.norm(k - K @ x) / np.linalg.norm(K @ x):.1e}  M2L pairs {op.stats()['m2l_pairs']}")

# %% [markdown]
# ## Apply time against N

# %%
Ns, ts = [], []
for n in (9, 18, 36):
    d = disc(n, 0, singular_order=4)
    op = FmmLayerOperator(d, FmmConfig(10, 32))
    y = np.ones(d.n)
    op.apply(y)
    best = np.inf
    for _ in range(5):
        t0 = time.perf_counter()
        op.apply(y)
        best = min(best, time.perf_counter() - t0)
    Ns.append(d.n)
    ts.append(best)
    print(f"N={d.n:5d}  setup {op.setup_time:.1f} s  apply {1e3 * best:.1f} ms")
print("log-log slope", round(float(np.polyfit(np.log(Ns), np.log(ts), 1)[0]), 2))
