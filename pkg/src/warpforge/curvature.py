"""Ricci curvature of triple and N-fold warped products over a ray.

The metrics are ``dr^2 + sum_i f_i(r)^2 g_i``.  Ricci is diagonal in the
adapted frame: one radial eigenvalue plus one eigenvalue per fiber factor.

Two evaluation paths are provided:

* real units, from profile jets ``(f, f', f'')`` at a radius ``r``;
* scale-free units ``r^2 * Ric`` from log-jets ``(ln(f/r), r f'/f, r^2 f''/f)``,
  which stay finite at radii far outside double range and are what the
  certifier works with.

``ricci_fd_oracle`` recomputes the same quantities from the coordinate metric
on round-sphere factors by finite differences, independently of the closed
forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Jet = tuple[float, float, float]


class CurvatureDomainError(ValueError):
    """A profile is nonpositive, or a formula is evaluated at a singular point."""


@dataclass(frozen=True)
class RicciEval:
    """Ricci eigenvalues: radial first, then one per fiber factor."""

    ric_radial: float
    ric_fiber: tuple[float, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def components(self) -> tuple[float, ...]:
        return (self.ric_radial, *self.ric_fiber)

    def __iter__(self):
        return iter(self.components)

    def __len__(self) -> int:
        return 1 + len(self.ric_fiber)

    def __getitem__(self, i: int) -> float:
        return self.components[i]

    def min(self) -> float:
        return min(self.components)


@dataclass(frozen=True)
class FiberDescriptor:
    """A fiber factor known only through its dimension and a Ricci lower bound."""

    dim: int
    ricci_lower: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"fiber dimension must be >= 1, got {self.dim}")

    @classmethod
    def sphere(cls, dim: int) -> "FiberDescriptor":
        return cls(dim, float(dim - 1))


@dataclass(frozen=True)
class LinearProfilePair:
    """``phi = a1 r + b1`` on the m-sphere, ``psi = rho = a2 r + b2``."""

    a1: float
    b1: float
    a2: float
    b2: float

    def jets(self, r: float) -> tuple[Jet, Jet, Jet]:
        p = (self.a1 * r + self.b1, self.a1, 0.0)
        q = (self.a2 * r + self.b2, self.a2, 0.0)
        return p, q, q


def triple_fibers(m: int, n: int) -> tuple[FiberDescriptor, ...]:
    return (FiberDescriptor.sphere(m), FiberDescriptor.sphere(n), FiberDescriptor.sphere(2))


def _check_positive(jets: Sequence[Jet]) -> None:
    for j, (v, _, _) in enumerate(jets):
        if not v > 0.0:
            raise CurvatureDomainError(f"profile {j} is nonpositive ({v!r})")


def ricci_multi(fibers: Sequence[FiberDescriptor], jets: Sequence[Jet], r: float | None = None) -> RicciEval:
    """Ricci eigenvalues with each fiber's Ricci replaced by its lower bound.

    For round spheres (``ricci_lower = dim - 1``) the result is exact.  ``r`` is
    accepted for signature symmetry; the formulas do not depend on it.
    """
    if not fibers:
        raise ValueError("at least one fiber is required")
    if len(fibers) != len(jets):
        raise ValueError("one jet per fiber is required")
    _check_positive(jets)
    dims = [f.dim for f in fibers]
    ratios1 = [d1 / v for v, d1, _ in jets]
    ratios2 = [d2 / v for v, _, d2 in jets]
    radial = -sum(n * q for n, q in zip(dims, ratios2))
    out = []
    for i, (fib, (v, d1, _)) in enumerate(zip(fibers, jets)):
        cross = sum(dims[l] * ratios1[i] * ratios1[l] for l in range(len(fibers)) if l != i)
        out.append(-ratios2[i] + (fib.ricci_lower - (fib.dim - 1) * d1 * d1) / (v * v) - cross)
    return RicciEval(radial, tuple(out))


def ricci_triple(m: int, n: int, jets: Sequence[Jet], r: float | None = None) -> RicciEval:
    """Ricci of ``dr^2 + phi^2 g_{S^m} + psi^2 g_{S^n} + rho^2 g_{S^2}``."""
    if m < 1 or n < 1:
        raise ValueError("sphere dimensions must be >= 1")
    if r is not None and not r > 0.0:
        raise CurvatureDomainError("radius must be positive")
    (f, f1, f2), (g, g1, g2), (h, h1, h2) = jets
    _check_positive(jets)
    ric0 = -(m * f2 / f + n * g2 / g + 2 * h2 / h)
    ric1 = -f2 / f + (m - 1) * (1 - f1 * f1) / (f * f) - n * f1 * g1 / (f * g) - 2 * f1 * h1 / (f * h)
    ric2 = -g2 / g + (n - 1) * (1 - g1 * g1) / (g * g) - m * f1 * g1 / (f * g) - 2 * g1 * h1 / (g * h)
    ric3 = -h2 / h + (1 - h1 * h1) / (h * h) - m * f1 * h1 / (f * h) - n * g1 * h1 / (g * h)
    return RicciEval(ric0, (ric1, ric2, ric3))


def ricci_linear(m: int, n: int, p: LinearProfilePair, r: float) -> RicciEval:
    """Closed form for ``phi = a1 r + b1`` and ``psi = rho = a2 r + b2``."""
    a1, b1, a2, b2 = p.a1, p.b1, p.a2, p.b2
    phi = a1 * r + b1
    psi = a2 * r + b2
    if not (phi > 0.0 and psi > 0.0):
        raise CurvatureDomainError(f"linear profiles nonpositive at r={r}: {phi}, {psi}")
    d11 = phi * phi * psi
    d22 = phi * psi * psi
    num11 = ((m - 1) - (m + n + 1) * a1 * a1) * a2 * r + (m - 1) * b2 - ((m - 1) * a1 * b2 + (n + 2) * a2 * b1) * a1
    num22 = ((n - 1) - (m + n + 1) * a2 * a2) * a1 * r + (n - 1) * b1 - ((n + 1) * a2 * b1 + m * a1 * b2) * a2
    num33 = (1 - (m + n + 1) * a2 * a2) * a1 * r + b1 - ((n + 1) * a2 * b1 + m * a1 * b2) * a2
    return RicciEval(0.0, (num11 / d11, num22 / d22, num33 / d22))


# ---------------------------------------------------------------------------
# scale-free evaluation

LogJet = tuple[float, float, float]  # (ln(f/r), r f'/f, r^2 f''/f)


def log_jet_from_jet(jet: Jet, r: float) -> LogJet:
    v, d1, d2 = jet
    return (math.log(v / r), r * d1 / v, r * r * d2 / v)


def unscale_r2(x: float, t: float) -> float:
    """``x / r^2`` at ``r = e^t``; ``1 / r^2`` itself may leave double range."""
    if x == 0.0:
        return 0.0
    if -2.0 * t < 709.0:
        return x * math.exp(-2.0 * t)
    return math.copysign(math.inf, x)


def scaled_ricci(fibers: Sequence[FiberDescriptor], log_jets: Sequence[LogJet]) -> RicciEval:
    """``r^2 * Ric`` from log-jets; same lower-bound semantics as ``ricci_multi``.

    Every term except ``kappa * exp(-2 ln u)`` is a bounded product of
    logarithmic derivatives, so the result is finite or ``+inf``.
    """
    dims = [f.dim for f in fibers]
    ps = [j[1] for j in log_jets]
    qs = [j[2] for j in log_jets]
    radial = -sum(n * q for n, q in zip(dims, qs))
    out = []
    for i, fib in enumerate(fibers):
        p = ps[i]
        rest = -qs[i] - (fib.dim - 1) * p * p
        for l in range(len(fibers)):
            if l != i:
                rest -= dims[l] * p * ps[l]
        if fib.ricci_lower == 0.0:
            out.append(rest)
            continue
        e = -2.0 * log_jets[i][0]
        big = fib.ricci_lower * math.exp(e) if e < 709.0 else math.copysign(math.inf, fib.ricci_lower)
        out.append(big + rest)
    return RicciEval(radial, tuple(out))


# ---------------------------------------------------------------------------
# finite-difference oracle


def _sphere_metric_diag(angles: np.ndarray) -> np.ndarray:
    """Diagonal of the round metric in standard hyperspherical coordinates."""
    out = np.ones(len(angles))
    s = 1.0
    for j in range(1, len(angles)):
        s *= math.sin(angles[j - 1]) ** 2
        out[j] = s
    return out


def _fd_ricci_diag(metric: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, h: float) -> np.ndarray:
    """Diagonal Ricci components ``R_aa`` of a diagonal coordinate metric."""
    dim = len(x0)
    eye = np.eye(dim)

    def dmetric(x):
        dg = np.empty((dim, dim))  # dg[c, a] = d_c g_aa
        for c in range(dim):
            dg[c] = (metric(x + h * eye[c]) - metric(x - h * eye[c])) / (2 * h)
        return dg

    def christoffel(x):
        g = metric(x)
        dg = dmetric(x)
        gam = np.zeros((dim, dim, dim))  # gam[a, b, c] = Gamma^a_bc
        for a in range(dim):
            for b in range(dim):
                for c in range(dim):
                    t = 0.0
                    if a == c:
                        t += dg[b, a]
                    if a == b:
                        t += dg[c, a]
                    if b == c:
                        t -= dg[a, b]
                    gam[a, b, c] = 0.5 * t / g[a]
        return gam

    gam = christoffel(x0)
    dgam = np.empty((dim, dim, dim, dim))  # dgam[d, a, b, c] = d_d Gamma^a_bc
    for d in range(dim):
        dgam[d] = (christoffel(x0 + h * eye[d]) - christoffel(x0 - h * eye[d])) / (2 * h)
    ric = np.empty(dim)
    for b in range(dim):
        t = 0.0
        for a in range(dim):
            t += dgam[a, a, b, b] - dgam[b, a, a, b]
            for e in range(dim):
                t += gam[a, a, e] * gam[e, b, b] - gam[a, b, e] * gam[e, a, b]
        ric[b] = t
    return ric


def ricci_fd_oracle_multi(
    dims: Sequence[int],
    profiles: Sequence[Callable[[float], float]],
    r: float,
    step: float | None = None,
    richardson: bool = True,
) -> RicciEval:
    """Ricci of ``dr^2 + sum f_i^2 g_{S^{n_i}}`` from the coordinate metric.

    Profiles only need to be evaluable near ``r``; their derivatives are never
    used.  The default step is ``max(1e-4, 1e-4 r)`` with Richardson
    extrapolation over ``{h, h/2}``.
    """
    if step is None:
        step = max(1e-4, 1e-4 * r)
    offsets = [1]
    for n in dims:
        offsets.append(offsets[-1] + n)
    total = offsets[-1]
    # generic angles away from the coordinate poles
    x0 = np.empty(total)
    x0[0] = r
    for i, n in enumerate(dims):
        x0[offsets[i]:offsets[i + 1]] = [0.9 + 0.17 * j for j in range(n)]

    def metric(x):
        g = np.empty(total)
        g[0] = 1.0
        for i, n in enumerate(dims):
            f = profiles[i](x[0])
            g[offsets[i]:offsets[i + 1]] = f * f * _sphere_metric_diag(x[offsets[i]:offsets[i + 1]])
        return g

    def components(h):
        ric = _fd_ricci_diag(metric, x0, h)
        g = metric(x0)
        vals = ric / g
        return vals[0], tuple(vals[offsets[i]] for i in range(len(dims)))

    meta: dict = {"step": step, "richardson": richardson}
    r0, f0 = components(step)
    if richardson:
        r1, f1 = components(step / 2)
        radial = (4 * r1 - r0) / 3
        fib = tuple((4 * b - a) / 3 for a, b in zip(f0, f1))
        spread = max(abs(a - b) for a, b in zip((r0, *f0), (r1, *f1)))
        scale = max(1.0, max(abs(v) for v in (radial, *fib)))
        meta["step_spread"] = spread
        if spread > 1e-3 * scale:
            meta["warning"] = "step too large to resolve second derivatives"
    else:
        radial, fib = r0, f0
    if step > 0.1 * r:
        meta["warning"] = "step too large relative to radius"
    return RicciEval(float(radial), tuple(float(v) for v in fib), meta)


def ricci_fd_oracle(
    m: int,
    n: int,
    profiles: Sequence[Callable[[float], float]],
    r: float,
    step: float | None = None,
    richardson: bool = True,
) -> RicciEval:
    """Finite-difference Ricci for the triple ``S^m x S^n x S^2`` case."""
    return ricci_fd_oracle_multi((m, n, 2), profiles, r, step, richardson)
