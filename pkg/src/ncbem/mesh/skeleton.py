"""Domain decomposition: domains, surface regions and their orientation maps.

Conventions
-----------
``dom(a) = (n_plus, n_minus)`` with ``n_plus < n_minus``; the region normal
points from ``n_minus`` into ``n_plus`` so ``n_plus`` is the exterior (+)
side.  ``sign_n(a)`` is ``+1`` when the normal points away from ``n``
(``n == n_minus``) and ``-1`` otherwise.

Screens (conducting sheets) are regions with a ``conductor`` entry; both
sides belong to dielectric domains and the sheet itself is the conductor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError, TopologyError

DOMAIN_KINDS = ("air", "dielectric", "electrode", "floating")


@dataclass(frozen=True)
class DomainSpec:
    id: int
    kind: str
    eps_r: Optional[float] = None
    potential: Optional[float] = None
    charge: Optional[float] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise ConfigurationError(f"domain {self.id}: unknown kind {self.kind!r}")
        if self.kind in ("air", "dielectric"):
            eps = 1.0 if (self.kind == "air" and self.eps_r is None) else self.eps_r
            if eps is None or not eps > 0:
                raise ConfigurationError(f"domain {self.id}: relative permittivity must be positive")
            object.__setattr__(self, "eps_r", float(eps))
        elif self.kind == "electrode":
            if self.potential is None:
                raise ConfigurationError(f"electrode domain {self.id} needs a potential")
        else:
            object.__setattr__(self, "charge", 0.0 if self.charge is None else float(self.charge))

    @property
    def is_conductor(self) -> bool:
        return self.kind in ("electrode", "floating")


@dataclass(frozen=True)
class RegionSpec:
    """A surface region.

    ``front`` is the domain the meshed normal points into and ``back`` the
    domain behind it.  ``conductor`` names the screen domain for sheets.
    """

    id: int
    meshes: Tuple = ()
    front: int = 0
    back: int = 0
    conductor: Optional[int] = None
    name: Optional[str] = None


@dataclass(frozen=True)
class ChargeSide:
    region: int
    sign: int
    eps_opp: float


@dataclass
class Skeleton:
    domains: Dict[int, DomainSpec]
    regions: Dict[int, RegionSpec]
    _dom: Dict[int, Tuple[int, int]] = field(default_factory=dict)
    _flip: Dict[int, bool] = field(default_factory=dict)
    _class: Dict[int, str] = field(default_factory=dict)
    _conductor: Dict[int, Optional[int]] = field(default_factory=dict)
    _adjacent: Dict[int, Tuple[int, ...]] = field(default_factory=dict)

    # -- topology functions -------------------------------------------------

    def A(self, n: int) -> Tuple[int, ...]:
        """Regions bounding domain ``n`` (including screens owned by ``n``)."""
        if n not in self.domains:
            raise KeyError(f"unknown domain {n}")
        return self._adjacent.get(n, ())

    def dom(self, a: int) -> Tuple[int, int]:
        return self._dom[a]

    def sign(self, n: int, a: int) -> int:
        plus, minus = self._dom[a]
        if n not in (plus, minus):
            raise KeyError(f"region {a} does not bound domain {n}")
        if plus == minus:
            raise ValueError(f"region {a} has domain {n} on both sides")
        return 1 if n == minus else -1

    def opp(self, n: int, a: int) -> int:
        plus, minus = self._dom[a]
        if n == plus:
            return minus
        if n == minus:
            return plus
        raise KeyError(f"region {a} does not bound domain {n}")

    def flipped(self, a: int) -> bool:
        """True if the meshes of region ``a`` were reversed to meet the convention."""
        return self._flip[a]

    def orientation(self, a: int) -> int:
        return -1 if self._flip[a] else 1

    def region_class(self, a: int) -> str:
        return self._class[a]

    def conductor_of(self, a: int) -> Optional[int]:
        return self._conductor[a]

    def eps(self, n: int) -> float:
        d = self.domains[n]
        if d.is_conductor:
            raise ConfigurationError(f"domain {n} is a conductor and has no permittivity")
        return d.eps_r

    def lambda_(self, a: int) -> float:
        from ..assembly.kernels import lambda_param
        plus, minus = self._dom[a]
        return lambda_param(self.eps(plus), self.eps(minus))

    def conductors(self, kind: Optional[str] = None) -> List[int]:
        return sorted(n for n, d in self.domains.items()
                      if d.is_conductor and (kind is None or d.kind == kind))

    @property
    def floating(self) -> List[int]:
        return self.conductors("floating")

    @property
    def electrodes(self) -> List[int]:
        return self.conductors("electrode")

    def regions_of_class(self, c: str) -> List[int]:
        return sorted(a for a in self.regions if self._class[a] == c)

    def charge_sides(self, n: int) -> List[ChargeSide]:
        """Signed sides through which flux leaves conductor ``n``."""
        if n not in self.domains or not self.domains[n].is_conductor:
            raise ConfigurationError(f"domain {n} is not a conductor")
        out = []
        for a in self.A(n):
            plus, minus = self._dom[a]
            if self._conductor[a] == n and n not in (plus, minus):
                out.append(ChargeSide(a, 1, self.eps(plus)))
                out.append(ChargeSide(a, -1, self.eps(minus)))
            else:
                out.append(ChargeSide(a, self.sign(n, a), self.eps(self.opp(n, a))))
        if not out:
            raise ConfigurationError(f"conductor {n} has no bounding regions")
        return out


def _from_dict(cls, d, what):
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigurationError(f"{what} {d.get('id')!r}: {exc}") from exc


def build_skeleton(domain_specs: Sequence, region_specs: Sequence, meshes: Optional[Dict] = None,
                   closure_tolerance: float = 1e-3) -> Skeleton:
    """Build and validate the skeleton.

    ``domain_specs`` and ``region_specs`` are :class:`DomainSpec` /
    :class:`RegionSpec` instances or plain dicts with the same keys.  If
    ``meshes`` (mapping mesh id -> SurfaceMesh) is given, every bounded
    non-conductor-sheet domain is checked for closedness via its total
    oriented vector area.
    """
    doms = {}
    for d in domain_specs:
        d = d if isinstance(d, DomainSpec) else _from_dict(DomainSpec, d, "domain")
        if d.id in doms:
            raise ConfigurationError(f"duplicate domain id {d.id}")
        doms[d.id] = d
    if 0 not in doms:
        raise ConfigurationError("domain 0 (unbounded air) must be declared")
    if doms[0].kind != "air" or doms[0].eps_r != 1.0:
        raise ConfigurationError("domain 0 must be air with relative permittivity 1")
    regs = {}
    for r in region_specs:
        if not isinstance(r, RegionSpec):
            r = dict(r)
            r["meshes"] = tuple(r.get("meshes", ()))
            r = _from_dict(RegionSpec, r, "region")
        if r.id in regs:
            raise ConfigurationError(f"duplicate region id {r.id}")
        regs[r.id] = r

    sk = Skeleton(doms, regs)
    adj: Dict[int, set] = {n: set() for n in doms}
    for a, r in regs.items():
        for n in (r.front, r.back) + ((r.conductor,) if r.conductor is not None else ()):
            if n not in doms:
                raise ConfigurationError(f"region {a} references unknown domain {n}")
        plus, minus = min(r.front, r.back), max(r.front, r.back)
        sk._dom[a] = (plus, minus)
        sk._flip[a] = r.front > r.back
        cond_sides = [n for n in (plus, minus) if doms[n].is_conductor]
        if r.conductor is not None:
            if not doms[r.conductor].is_conductor:
                raise ConfigurationError(f"region {a}: screen domain {r.conductor} is not a conductor")
            if cond_sides:
                raise ConfigurationError(f"region {a}: a screen must separate non-conducting domains")
            cond = r.conductor
        elif len(cond_sides) == 2:
            raise ConfigurationError(f"region {a} separates two conductors")
        elif cond_sides:
            cond = cond_sides[0]
        else:
            cond = None
            if plus == minus:
                raise ConfigurationError(f"region {a} has domain {plus} on both sides and is not a screen")
            if doms[plus].eps_r == doms[minus].eps_r:
                raise ConfigurationError(
                    f"region {a}: domains {plus} and {minus} have equal permittivity "
                    f"{doms[plus].eps_r}; dielectric interfaces need distinct values")
        sk._conductor[a] = cond
        sk._class[a] = "D" if cond is None else ("E" if doms[cond].kind == "electrode" else "F")
        for n in {plus, minus}:
            adj[n].add(a)
        if cond is not None:
            adj[cond].add(a)
    sk._adjacent = {n: tuple(sorted(s)) for n, s in adj.items()}

    for n, d in doms.items():
        if d.is_conductor and not sk._adjacent[n]:
            raise ConfigurationError(f"conductor {n} has no bounding regions")

    if meshes is not None:
        _check_closed(sk, meshes, closure_tolerance)
    _self_check(sk)
    return sk


def _check_closed(sk: Skeleton, meshes, tol):
    for n in sk.domains:
        if n == 0:
            continue
        vec = np.zeros(3)
        total = 0.0
        bounded = False
        for a in sk.A(n):
            plus, minus = sk.dom(a)
            if n not in (plus, minus) or plus == minus:
                continue  # screens contribute no enclosed volume
            bounded = True
            s = sk.sign(n, a) * sk.orientation(a)
            for mid in sk.regions[a].meshes:
                m = meshes[mid]
                vec += s * m.vector_area()
                total += m.area()
        if bounded and total > 0 and np.linalg.norm(vec) > tol * total:
            raise TopologyError(
                f"domain {n}: bounding regions {sk.A(n)} do not form a closed surface "
                f"(net vector area {np.linalg.norm(vec):.3g} of total {total:.3g})")


def _self_check(sk: Skeleton):
    for a in sk.regions:
        plus, minus = sk.dom(a)
        for n in {plus, minus}:
            if a not in sk.A(n):
                raise TopologyError(f"inconsistent adjacency for region {a}")
            if plus != minus and sk.opp(sk.opp(n, a), a) != n:
                raise TopologyError(f"opposite map does not round-trip for region {a}")
