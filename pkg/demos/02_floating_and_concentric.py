# %% [markdown]
# # Concentric electrodes and a floating screen
#
# Both cases run through the declarative configuration layer, the same path
# the ``ncbem run`` command takes.
#
# * Spheres R1 = 1 (1 V) and R2 = 2 (0 V): C = 4 pi / (1/R1 - 1/R2) = 8 pi.
# * An uncharged thin floating shell at R = 2 between electrodes R1 = 1 (1 V)
#   and R2 = 4 (0 V) must settle at the unperturbed potential
#   u(2) = (1/2 - 1/4) / (3/4) = 1/3.

# %%
from __future__ import annotations

import math
from pathlib import Path

from ncbem.app import run

configs = Path(__file__).resolve().parent / "configs"

# %%
rep = run(configs / "concentric.json")
print("concentric: dims", rep.dims)
print(f"  Q_inner = {rep.charges['1']:.6f}   8 pi = {8 * math.pi:.6f}")
print(f"  u(1.5)  = {rep.points[0]['u']:.6f}   exact = {(1 / 1.5 - 0.5) / 0.5:.6f}")

# %%
rep = run(configs / "floating_shell.json")
print("floating shell: dims", rep.dims)
print(f"  alpha   = {rep.floating_potentials['4']:.8f}   exact = {1 / 3:.8f}")
print(f"  Q_shell = {rep.charges['4']:.2e} (prescribed 0)")
print("  outputs:", *rep.manifest, sep="\n    ")
