"""Interval certification of nonnegative Ricci curvature.

Bounds are computed for ``r^2 Ric`` in each eigen-direction (radial first,
then one entry per fiber), which has the sign of ``Ric`` and stays finite
where the profiles span hundreds of orders of magnitude.  Cells live in
log-radius; unbounded end cells are handled through the IEEE limits of the
closed-form segment enclosures.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from ..curvature import FiberDescriptor
from ..interval import Interval, TRANSCENDENTAL_SLACK_ULPS
from ..profiles import Enclosure, ProfileDomainError

INF = math.inf
LN10 = math.log(10.0)
NEG = Interval(-INF, INF)


@dataclass(frozen=True)
class CertifyPolicy:
    per_decade: float = 1.0
    max_initial_per_region: int = 16
    max_depth: int = 20
    tail_step: float = 4.0  # log-width peeled off an unbounded cell when it fails
    max_cells_per_region: int = 512

    def to_dict(self) -> dict:
        return {"per_decade": self.per_decade, "max_initial_per_region": self.max_initial_per_region,
                "max_depth": self.max_depth, "tail_step": self.tail_step,
                "max_cells_per_region": self.max_cells_per_region}


@dataclass(frozen=True)
class Cell:
    t_lo: float
    t_hi: float
    lower: tuple[float, ...]
    depth: int

    @property
    def min(self) -> float:
        return min(self.lower)


@dataclass
class CurvatureCertificate:
    """Per-cell lower bounds of ``r^2 Ric`` over a log-radius range.

    ``status`` is ``"pass"`` exactly when ``margin >= 0``.  Components are
    ordered radial, then fibers in spec order.
    """

    t_lo: float
    t_hi: float
    cells: list[Cell]
    components: tuple[str, ...]
    policy: CertifyPolicy = field(default_factory=CertifyPolicy)

    @property
    def margin(self) -> float:
        return min((c.min for c in self.cells), default=-INF)

    @property
    def status(self) -> str:
        return "pass" if self.margin >= 0 else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def refinement_depth(self) -> int:
        return max((c.depth for c in self.cells), default=0)

    @property
    def grid(self) -> list[tuple[float, float]]:
        return [(c.t_lo, c.t_hi) for c in self.cells]

    def worst(self) -> tuple[Cell, str]:
        cell = min(self.cells, key=lambda c: c.min)
        return cell, self.components[cell.lower.index(cell.min)]

    def cell_containing(self, t: float) -> Cell:
        import bisect

        i = bisect.bisect_right([c.t_lo for c in self.cells], t) - 1
        return self.cells[max(i, 0)]

    def to_dict(self) -> dict:
        return {
            "kind": "curvature_certificate",
            "units": "r^2 Ric",
            "log_radius": "ln",
            "interval": [self.t_lo, self.t_hi],
            "components": list(self.components),
            "policy": self.policy.to_dict(),
            "transcendental_slack_ulps": TRANSCENDENTAL_SLACK_ULPS,
            "margin": self.margin,
            "status": self.status,
            "refinement_depth": self.refinement_depth,
            "cells": [[c.t_lo, c.t_hi, c.depth, list(c.lower)] for c in self.cells],
        }

    def to_json(self) -> str:
        from ..io import dumps

        return dumps(self.to_dict())

    def summary(self) -> str:
        if not self.cells:
            return "empty certificate"
        cell, comp = self.worst()
        return (f"{self.status}: margin {self.margin:.6g} over {len(self.cells)} cells, "
                f"depth {self.refinement_depth}; worst {comp} on ln r in [{cell.t_lo:.6g}, {cell.t_hi:.6g}]")


# ---------------------------------------------------------------------------
# cell bounds


def _mul(a: Interval, b: Interval) -> Interval:
    return a * b


def _fiber_bound(i: int, fibers: Sequence[FiberDescriptor], encs: Sequence[Enclosure]) -> float:
    fib = fibers[i]
    e = encs[i]
    cross = Interval(0.0)
    for l, other in enumerate(encs):
        if l != i:
            cross = cross + _mul(e.p, other.p) * float(fibers[l].dim)
    rest = -e.q - cross
    kappa = Interval(fib.ricci_lower)
    inv2 = (e.lnu * -2.0).exp()
    best = -INF
    try:
        a = kappa * inv2 - e.p.sqr() * float(fib.dim - 1) + rest
        best = max(best, a.lo)
    except (ValueError, ZeroDivisionError):
        pass
    try:
        b = (kappa - e.d1.sqr() * float(fib.dim - 1)) * inv2 + rest
        best = max(best, b.lo)
    except (ValueError, ZeroDivisionError):
        pass
    return best


def cell_lower_bounds(fibers: Sequence[FiberDescriptor], profiles, t0: float, t1: float) -> tuple[float, ...]:
    try:
        encs = [p.enclose(t0, t1) for p in profiles]
    except (ProfileDomainError, ValueError, ZeroDivisionError, OverflowError):
        return tuple([-INF] * (len(fibers) + 1))
    try:
        radial = Interval(0.0)
        for fib, e in zip(fibers, encs):
            radial = radial - e.q * float(fib.dim)
        out = [radial.lo]
    except (ValueError, ZeroDivisionError):
        out = [-INF]
    for i in range(len(fibers)):
        try:
            out.append(_fiber_bound(i, fibers, encs))
        except (ValueError, ZeroDivisionError):
            out.append(-INF)
    return tuple(out)


# ---------------------------------------------------------------------------
# grid and refinement


def _split(t0: float, t1: float, policy: CertifyPolicy) -> tuple[tuple[float, float], tuple[float, float]]:
    if t0 == -INF and t1 == INF:
        return (-INF, 0.0), (0.0, INF)
    if t0 == -INF:
        m = t1 - policy.tail_step
        return (-INF, m), (m, t1)
    if t1 == INF:
        m = t0 + policy.tail_step
        return (t0, m), (m, INF)
    m = 0.5 * (t0 + t1)
    if not t0 < m < t1:
        return (t0, t1), (t1, t1)
    return (t0, m), (m, t1)


def initial_cells(breaks: Sequence[float], t_lo: float, t_hi: float, policy: CertifyPolicy) -> list[tuple[float, float]]:
    pts = sorted({t_lo, t_hi, *[b for b in breaks if t_lo < b < t_hi]})
    cells = []
    for a, b in zip(pts, pts[1:]):
        if math.isinf(a) or math.isinf(b):
            cells.append((a, b))
            continue
        k = int(min(policy.max_initial_per_region, max(1, math.ceil((b - a) / LN10 * policy.per_decade))))
        for j in range(k):
            lo = a + (b - a) * j / k
            hi = b if j == k - 1 else a + (b - a) * (j + 1) / k
            cells.append((lo, hi))
    return cells


def _certify_region(args) -> list[Cell]:
    fibers, profiles, t0, t1, policy = args
    out: list[Cell] = []
    stack = [(t0, t1, 0)]
    while stack:
        a, b, d = stack.pop()
        lb = cell_lower_bounds(fibers, profiles, a, b)
        budget_left = len(out) + len(stack) < policy.max_cells_per_region
        if min(lb) >= 0 or d >= policy.max_depth or not budget_left:
            out.append(Cell(a, b, lb, d))
            continue
        (l0, l1), (r0, r1) = _split(a, b, policy)
        if not l0 < l1 or not r0 < r1:
            out.append(Cell(a, b, lb, d))
            continue
        stack.append((r0, r1, d + 1))
        stack.append((l0, l1, d + 1))
    return out


def worker_count() -> int:
    env = os.environ.get("WARPFORGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return 1


def certify(spec, t_lo: float | None = None, t_hi: float = INF, policy: CertifyPolicy | None = None,
            workers: int | None = None) -> CurvatureCertificate:
    """Certify ``Ric >= 0`` for ``spec`` on log-radii ``(t_lo, t_hi]``."""
    policy = policy or CertifyPolicy()
    t_lo = spec.origin if t_lo is None else max(t_lo, spec.origin)
    breaks = sorted({b for p in spec.profiles for b in p.breakpoints})
    regions = initial_cells(breaks, t_lo, t_hi, policy)
    fibers = tuple(spec.fibers)
    profiles = tuple(spec.profiles)
    jobs = [(fibers, profiles, a, b, policy) for a, b in regions]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 8:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_certify_region, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        parts = [_certify_region(j) for j in jobs]
    cells = [c for part in parts for c in part]
    comps = ("ric00",) + tuple(f"ric{i + 1}{i + 1}" for i in range(len(fibers)))
    return CurvatureCertificate(t_lo, t_hi, cells, comps, policy)


def verify_nonneg_ricci(spec, interval: tuple[float, float] | None = None, policy: CertifyPolicy | None = None,
                        workers: int | None = None) -> CurvatureCertificate:
    """Certificate over ``interval`` given as natural-log radii (whole spec by default)."""
    if interval is None:
        return certify(spec, policy=policy, workers=workers)
    t_lo, t_hi = interval
    if not t_lo < t_hi:
        raise ValueError("empty certification interval")
    return certify(spec, t_lo, t_hi, policy, workers)
