"""Warped-product specifications: fibers plus one profile per fiber."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .curvature import FiberDescriptor, RicciEval, scaled_ricci, triple_fibers, unscale_r2
from .profiles import PiecewiseProfile

INF = math.inf


@dataclass(frozen=True)
class TripleWarpSpec:
    """``dr^2 + phi^2 g_{S^m} + psi^2 g_{S^n} + rho^2 g_{S^2}`` on ``r > origin``.

    ``origin`` is a log-radius: ``-inf`` for a cone apex at ``r = 0``.
    """

    m: int
    n: int
    phi: PiecewiseProfile
    psi: PiecewiseProfile
    rho: PiecewiseProfile
    origin: float = -INF

    @property
    def fibers(self) -> tuple[FiberDescriptor, ...]:
        return triple_fibers(self.m, self.n)

    @property
    def profiles(self) -> tuple[PiecewiseProfile, ...]:
        return (self.phi, self.psi, self.rho)

    @property
    def names(self) -> tuple[str, ...]:
        return ("phi", "psi", "rho")

    def with_profiles(self, profiles, origin: float | None = None) -> "TripleWarpSpec":
        phi, psi, rho = profiles
        return replace(self, phi=phi, psi=psi, rho=rho, origin=self.origin if origin is None else origin)

    def rescale_log(self, ln_a: float) -> "TripleWarpSpec":
        return self.with_profiles([p.rescale_log(ln_a) for p in self.profiles], self.origin - ln_a)

    def rescale(self, a: float) -> "TripleWarpSpec":
        return self.rescale_log(math.log(a))

    def swapped(self) -> "TripleWarpSpec":
        """Exchange the roles of the two sphere factors."""
        return TripleWarpSpec(self.n, self.m, self.psi.renamed("phi"), self.phi.renamed("psi"), self.rho, self.origin)

    def scaled_ricci_at(self, t: float):
        return scaled_ricci(self.fibers, [p.log_jet(t) for p in self.profiles])

    def ricci_at(self, r: float):
        """Ricci eigenvalues in real units (may overflow to inf)."""
        t = math.log(r)
        ev = self.scaled_ricci_at(t)
        return RicciEval(unscale_r2(ev.ric_radial, t), tuple(unscale_r2(x, t) for x in ev.ric_fiber))

    @property
    def dims_dict(self) -> dict:
        return {"m": self.m, "n": self.n}


@dataclass(frozen=True)
class MultiWarpSpec:
    """``dr^2 + sum f_i^2 g_i`` with fibers given by :class:`FiberDescriptor`."""

    fibers: tuple[FiberDescriptor, ...]
    profiles: tuple[PiecewiseProfile, ...]
    origin: float = -INF

    def __post_init__(self):
        if len(self.fibers) != len(self.profiles):
            raise ValueError("one profile per fiber required")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name or f"f{i + 1}" for i, p in enumerate(self.profiles))

    def with_profiles(self, profiles, origin: float | None = None) -> "MultiWarpSpec":
        return replace(self, profiles=tuple(profiles), origin=self.origin if origin is None else origin)

    def rescale_log(self, ln_a: float) -> "MultiWarpSpec":
        return self.with_profiles([p.rescale_log(ln_a) for p in self.profiles], self.origin - ln_a)

    def rescale(self, a: float) -> "MultiWarpSpec":
        return self.rescale_log(math.log(a))

    def scaled_ricci_at(self, t: float):
        return scaled_ricci(self.fibers, [p.log_jet(t) for p in self.profiles])

    @property
    def dims_dict(self) -> dict:
        return {"fibers": [{"dim": f.dim, "ricci_lower": f.ricci_lower} for f in self.fibers]}
