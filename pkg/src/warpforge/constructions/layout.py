"""Which fiber carries which profile role.

The local models only know three roles: the cone-like ``phi``, the
collapsing ``psi`` and the auxiliary ``rho``.  A layout assigns a role to
every fiber, so the same builders serve the triple product, its swapped
version and the N-fold products with several ``psi`` fibers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..curvature import FiberDescriptor, triple_fibers
from ..specs import MultiWarpSpec, TripleWarpSpec

ROLES = ("phi", "psi", "rho")
INF = math.inf


@dataclass(frozen=True)
class Layout:
    fibers: tuple[FiberDescriptor, ...]
    roles: tuple[str, ...]
    triple: bool = False

    def __post_init__(self):
        if len(self.fibers) != len(self.roles):
            raise ValueError("one role per fiber required")
        for r in self.roles:
            if r not in ROLES:
                raise ValueError(f"unknown role {r!r}")
        for r in ROLES:
            if r not in self.roles:
                raise ValueError(f"layout lacks a {r!r} fiber")
        if sum(f.dim for f, r in zip(self.fibers, self.roles) if r == "phi") < 2:
            raise ValueError("the phi role needs total dimension >= 2")

    @property
    def m(self) -> int:
        return sum(f.dim for f, r in zip(self.fibers, self.roles) if r == "phi")

    @property
    def n(self) -> int:
        return sum(f.dim for f, r in zip(self.fibers, self.roles) if r == "psi")

    def make(self, phi, psi, rho, origin: float = -INF):
        by_role = {"phi": phi, "psi": psi, "rho": rho}
        return self.from_fiber_profiles([by_role[r] for r in self.roles], origin)

    def from_fiber_profiles(self, profiles, origin: float = -INF):
        profiles = list(profiles)
        if self.triple:
            names = ("phi", "psi", "rho")
            p = [pr.renamed(nm) for pr, nm in zip(profiles, names)]
            return TripleWarpSpec(self.fibers[0].dim, self.fibers[1].dim, p[0], p[1], p[2], origin)
        p = [pr.renamed(f"f{j + 1}") for j, pr in enumerate(profiles)]
        return MultiWarpSpec(self.fibers, tuple(p), origin)

    def role_profiles(self, spec) -> dict:
        out = {}
        for r, p in zip(self.roles, spec.profiles):
            out.setdefault(r, p)
        return out

    def with_roles(self, roles) -> "Layout":
        return Layout(self.fibers, tuple(roles), self.triple)


def triple_layout(m: int, n: int, swap: bool = False) -> Layout:
    roles = ("psi", "phi", "rho") if swap else ("phi", "psi", "rho")
    return Layout(triple_fibers(m, n), roles, triple=True)


def multi_layouts(fibers, i0: int) -> tuple[Layout, Layout]:
    """Outer and inner block layouts of the N-fold connector.

    ``fibers`` are the user fibers; two round ``S^2`` factors are appended,
    the first being the auxiliary cone fiber and the last carrying ``rho``.
    Outside, fiber ``i0`` is the cone and everything else collapses; inside,
    the auxiliary fiber is the cone.
    """
    fibers = tuple(fibers)
    if not 0 <= i0 < len(fibers):
        raise ValueError(f"i0 out of range: {i0}")
    full = fibers + (FiberDescriptor.sphere(2), FiberDescriptor.sphere(2))
    outer = tuple("phi" if j == i0 else "psi" for j in range(len(fibers))) + ("psi", "rho")
    inner = tuple("psi" for _ in fibers) + ("phi", "rho")
    return Layout(full, outer), Layout(full, inner)
