"""Block system for the indirect single-layer formulation.

Unknowns are ordered ``(sigma_D, sigma_E, sigma_F, alpha)`` and rows
``(D, E, F, charge constraints)``:

* D rows (dielectric interfaces): ``(-lambda_a M + K) sigma = 0``
* E rows (electrodes): ``V sigma = g_n h_n``
* F rows (floating conductors): ``V sigma - H_F alpha = 0``
* one constraint row per floating conductor: ``f_n . sigma = Q_n / eps0``
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from ..errors import ConfigurationError, IllPosedProblemError
from ..mesh.elements import DensitySpace, SurfaceMesh
from ..mesh.skeleton import Skeleton
from .operators import Discretization, QuadratureConfig

log = logging.getLogger(__name__)

EPS0 = 8.8541878128e-12


@dataclass
class Model:
    """Skeleton, meshes and the discretisation that ties them together."""

    skeleton: Skeleton
    meshes: List[SurfaceMesh]
    region_of_mesh: List[int]
    space: DensitySpace
    disc: Discretization
    interfaces: list = field(default_factory=list)

    @classmethod
    def build(cls, skeleton: Skeleton, meshes, nu: int = 0, interfaces=(),
              quadrature: Optional[QuadratureConfig] = None) -> "Model":
        """``meshes`` maps mesh id to SurfaceMesh (or is a list); every mesh must belong to one region."""
        if isinstance(meshes, dict):
            meshes = list(meshes.values())
        meshes = list(meshes)
        owner = {}
        for a, r in skeleton.regions.items():
            for mid in r.meshes:
                if mid in owner:
                    raise ConfigurationError(f"mesh {mid!r} is listed in regions {owner[mid]} and {a}")
                owner[mid] = a
        region_of_mesh = []
        for m in meshes:
            if m.id not in owner:
                raise ConfigurationError(f"mesh {m.id!r} is not assigned to any region")
            region_of_mesh.append(owner[m.id])
        classes = {a: skeleton.region_class(a) for a in skeleton.regions}
        meshes = [m.with_region(a) for m, a in zip(meshes, region_of_mesh)]
        space = DensitySpace.build(meshes, nu, region_of_mesh, classes)
        orient = [skeleton.orientation(a) for a in region_of_mesh]
        disc = Discretization(meshes, space, orient, interfaces, quadrature)
        return cls(skeleton, meshes, region_of_mesh, space, disc, list(interfaces))

    @property
    def n_dofs(self) -> int:
        return self.space.n_dofs

    def region_dofs(self, a) -> np.ndarray:
        return self.space.dofs_of_region(a)

    def dof_regions(self) -> np.ndarray:
        return np.repeat(self.space.regions, self.space.local_counts)


# ---------------------------------------------------------------------------
# layer operators (dense reference implementation)
# ---------------------------------------------------------------------------


class DenseLayerOperator:
    """Stored V and K' matrices; ``apply`` returns both products."""

    def __init__(self, V: np.ndarray, K: np.ndarray):
        self.V = V
        self.K = K
        self.shape = V.shape
        self.n_applies = 0

    @classmethod
    def assemble(cls, model: Model) -> "DenseLayerOperator":
        V, K = model.disc.dense()
        return cls(V, K)

    def apply(self, x):
        self.n_applies += 1
        return self.V @ x, self.K @ x

    def diagonal(self):
        return np.diag(self.V).copy(), np.diag(self.K).copy()


# ---------------------------------------------------------------------------
# vectors
# ---------------------------------------------------------------------------


@dataclass
class ConductorVectors:
    """``h_n`` (basis integrals over the conductor's regions), ``g`` its potential, sides for ``f_n``."""

    domain: int
    h: np.ndarray
    potential: Optional[float]
    charge: Optional[float]
    sides: list


def assemble_vectors(model: Model) -> Dict[int, ConductorVectors]:
    """``h_n`` and the charge-side bookkeeping for every conductor."""
    sk = model.skeleton
    ints = model.disc.basis_integrals
    out = {}
    for n in sk.conductors():
        sides = sk.charge_sides(n)
        h = np.zeros(model.n_dofs)
        for a in {s.region for s in sides}:
            idx = model.region_dofs(a)
            h[idx] = ints[idx]
        d = sk.domains[n]
        out[n] = ConductorVectors(n, h, d.potential, d.charge, sides)
    return out


def charge_functional(model: Model, vec: ConductorVectors, M=None, K=None) -> np.ndarray:
    """Dense ``f_n`` with ``f_n . sigma = Q_n / eps0`` (needs the K matrix)."""
    M = model.disc.mass() if M is None else M
    if K is None:
        raise ConfigurationError("charge_functional needs the assembled K matrix")
    f = np.zeros(model.n_dofs)
    for s in vec.sides:
        idx = model.region_dofs(s.region)
        rows = -s.sign * 0.5 * np.asarray(M[idx].sum(axis=0)).ravel() + K[idx].sum(axis=0)
        f -= s.sign * s.eps_opp * rows
    return f


def charge_from_products(model: Model, vec: ConductorVectors, Msig, Ksig) -> float:
    """``f_n . sigma`` evaluated from ``M sigma`` and ``K sigma``."""
    tot = 0.0
    for s in vec.sides:
        idx = model.region_dofs(s.region)
        tot -= s.sign * s.eps_opp * float(np.sum(-s.sign * 0.5 * Msig[idx] + Ksig[idx]))
    return tot


# ---------------------------------------------------------------------------
# block system
# ---------------------------------------------------------------------------


@dataclass
class BlockSystem:
    model: Model
    layer: object
    eps0: float
    slices: Dict[str, slice]
    floating: List[int]
    electrodes: List[int]
    vectors: Dict[int, ConductorVectors]
    lam: np.ndarray          # per dof; nan outside D
    rhs: np.ndarray
    M: sp.csr_matrix
    H: np.ndarray            # (N, N_f), rows restricted to F
    n_sigma: int
    n_total: int
    apply_count: int = 0

    @property
    def dims(self) -> Dict[str, int]:
        s = self.slices
        return {"N_D": s["D"].stop - s["D"].start, "N_E": s["E"].stop - s["E"].start,
                "N_F": s["F"].stop - s["F"].start, "N_f": len(self.floating), "N": self.n_total}

    def split(self, x):
        return x[:self.n_sigma], x[self.n_sigma:]

    def apply(self, x: np.ndarray) -> np.ndarray:
        self.apply_count += 1
        sig, alpha = self.split(np.asarray(x, float))
        Vs, Ks = self.layer.apply(sig)
        Ms = self.M @ sig
        y = np.empty(self.n_total)
        D, E, F = self.slices["D"], self.slices["E"], self.slices["F"]
        y[D] = -self.lam[D] * Ms[D] + Ks[D]
        y[E] = Vs[E]
        y[F] = Vs[F] - self.H[F] @ alpha
        for k, n in enumerate(self.floating):
            y[self.n_sigma + k] = charge_from_products(self.model, self.vectors[n], Ms, Ks)
        return y

    def linear_operator(self) -> LinearOperator:
        return LinearOperator((self.n_total, self.n_total), matvec=self.apply, dtype=float)

    def diagonal(self) -> np.ndarray:
        """Jacobi diagonal; alpha entries use the column norm of H_F."""
        dV, dK = self.layer.diagonal()
        dM = self.M.diagonal()
        d = np.empty(self.n_total)
        D, E, F = self.slices["D"], self.slices["E"], self.slices["F"]
        d[D] = -self.lam[D] * dM[D] + dK[D]
        d[E] = dV[E]
        d[F] = dV[F]
        for k in range(len(self.floating)):
            d[self.n_sigma + k] = np.linalg.norm(self.H[:, k])
        return d

    def dense_matrix(self) -> np.ndarray:
        """Explicit system matrix (dense layer operators only)."""
        if not isinstance(self.layer, DenseLayerOperator):
            raise ConfigurationError("dense_matrix needs a dense layer operator")
        V, K = self.layer.V, self.layer.K
        Md = self.M.toarray()
        N, Ns = self.n_total, self.n_sigma
        A = np.zeros((N, N))
        D, E, F = self.slices["D"], self.slices["E"], self.slices["F"]
        A[D, :Ns] = -self.lam[D, None] * Md[D] + K[D]
        A[E, :Ns] = V[E]
        A[F, :Ns] = V[F]
        A[F, Ns:] = -self.H[F]
        for k, n in enumerate(self.floating):
            A[Ns + k, :Ns] = charge_functional(self.model, self.vectors[n], self.M, K)
        return A

    def blocks(self) -> Dict[str, np.ndarray]:
        """Named sub-blocks of the dense system (``Kt_DD``, ``V_EE``, ``H_F``, ``F_D`` ...)."""
        A = self.dense_matrix()
        s = self.slices
        Ns = self.n_sigma
        rows = {"D": s["D"], "E": s["E"], "F": s["F"]}
        out = {}
        for r, rs in rows.items():
            for c, cs in rows.items():
                name = ("Kt_" if r == "D" else "V_") + r + c
                if r == "D" and c != "D":
                    name = "K_" + r + c
                out[name] = A[rs, cs]
        out["H_F"] = -A[s["F"], Ns:]
        for c, cs in rows.items():
            out["F_" + c] = A[Ns:, cs]
        return out


def build_block_system(model: Model, layer=None, eps0: float = EPS0) -> BlockSystem:
    """Assemble vectors and wrap the layer operator into the block system."""
    sk = model.skeleton
    if layer is None:
        layer = DenseLayerOperator.assemble(model)
    slices = model.space.class_slices()
    nE = slices["E"].stop - slices["E"].start
    nF = slices["F"].stop - slices["F"].start
    if nE == 0 and nF == 0:
        raise IllPosedProblemError("no electrode or floating conductor regions: the problem has no excitation")
    floating = sk.floating
    electrodes = sk.electrodes
    vecs = assemble_vectors(model)
    Ns = model.n_dofs
    M = model.disc.mass()
    lam = np.full(Ns, np.nan)
    regs = model.dof_regions()
    for a in sk.regions_of_class("D"):
        lam[regs == a] = sk.lambda_(a)
    rhs = np.zeros(Ns + len(floating))
    Erows = np.zeros(Ns, bool)
    Erows[slices["E"]] = True
    for n in electrodes:
        rhs[:Ns] += np.where(Erows, vecs[n].potential * vecs[n].h, 0.0)
    H = np.zeros((Ns, len(floating)))
    Frows = np.zeros(Ns, bool)
    Frows[slices["F"]] = True
    for k, n in enumerate(floating):
        H[:, k] = np.where(Frows, vecs[n].h, 0.0)
        rhs[Ns + k] = vecs[n].charge / eps0
    bs = BlockSystem(model, layer, eps0, slices, floating, electrodes, vecs, lam, rhs, M, H,
                     Ns, Ns + len(floating))
    log.info("block system: %s", bs.dims)
    return bs
