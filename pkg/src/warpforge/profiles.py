"""Piecewise warp profiles on a ray, stored in log-radius frames.

A profile is a list of pieces.  Each piece carries a closed-form local
function ``g(x)`` (one of five kinds) and a frame ``(sigma, kappa)``::

    f(r) = r * exp(kappa) * g(x) / x,      x = r * exp(-sigma)

and covers a log-radius interval ``[t_lo, t_hi)`` with ``t = ln r``.
Rescaling ``r -> A^-1 f(A r)`` only shifts ``sigma`` and the breakpoints;
multiplying by a constant only shifts ``kappa``.  Local parameters are never
refitted, and radii like ``exp(1e6)`` are handled without overflow.

Curvature works with log-jets ``(ln(f/r), r f'/f, r^2 f''/f)``; every kind
evaluates and encloses those directly from ``xi = t - sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .interval import Interval, exp_rd, exp_ru

INF = math.inf
BREAK_RTOL = 1e-12


class ProfileDomainError(ValueError):
    """Evaluation outside the profile's domain."""


class GluingError(ValueError):
    """Two profiles disagree on the requested overlap."""

    def __init__(self, message: str, discrepancy: float = math.nan, location: float = math.nan):
        super().__init__(message)
        self.discrepancy = discrepancy
        self.location = location


class BridgeInfeasible(ValueError):
    """No bridge satisfying the constraint was found; carries a width hint."""

    def __init__(self, message: str, min_width_estimate: float = math.nan):
        super().__init__(message)
        self.min_width_estimate = min_width_estimate


# ---------------------------------------------------------------------------
# segment kinds (local functions of x > 0)


def _iv(x: float) -> Interval:
    return Interval(x, x)


def _ln_interval_of_positive(u: Interval) -> Interval:
    return Interval(-INF if u.lo <= 0 else u.log().lo, u.log().hi if u.hi > 0 else -INF)


@dataclass(frozen=True)
class Constant:
    v: float
    kind = "constant"

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"constant segment must be positive, got {self.v}")

    def params(self) -> dict:
        return {"v": self.v}

    def scaled(self, c: float) -> "Constant":
        return Constant(self.v * c)

    def local(self, x: float) -> tuple[float, float, float]:
        return self.v, 0.0, 0.0

    def log_jet(self, xi: float) -> tuple[float, float, float]:
        return math.log(self.v) - xi, 0.0, 0.0

    def enclose(self, xi: Interval) -> "LocalEnclosure":
        lnv = _iv(self.v).log()
        lnu = Interval(lnv.lo - xi.hi if xi.hi < INF else -INF, lnv.hi - xi.lo if xi.lo > -INF else INF)
        # outward rounding for the subtraction
        lnu = Interval(math.nextafter(lnu.lo, -INF), math.nextafter(lnu.hi, INF))
        zero = _iv(0.0)
        return LocalEnclosure(lnu, zero, zero, zero)


@dataclass(frozen=True)
class Linear:
    a: float
    b: float
    kind = "linear"

    def params(self) -> dict:
        return {"a": self.a, "b": self.b}

    def scaled(self, c: float) -> "Linear":
        return Linear(self.a * c, self.b * c)

    def local(self, x: float) -> tuple[float, float, float]:
        return self.a * x + self.b, self.a, 0.0

    def _u(self, xi: float) -> float:
        if self.b == 0.0:
            return self.a
        if self.a > 0 and self.b > 0:
            return self.a + self.b * math.exp(-xi) if xi > -700 else math.inf
        return self.a + self.b * math.exp(-xi)

    def log_jet(self, xi: float) -> tuple[float, float, float]:
        if self.b > 0 and self.a >= 0 and xi < -700:
            lnu = math.log(self.b) - xi if self.a == 0 else max(math.log(self.b) - xi, math.log(self.a))
            return lnu, 0.0 if self.a == 0 else self.a * math.exp(-lnu), 0.0
        u = self._u(xi)
        if not u > 0:
            raise ProfileDomainError(f"linear segment nonpositive at xi={xi}")
        return math.log(u), self.a / u, 0.0

    def _u_iv(self, xi: float, lower: bool) -> float:
        if self.b == 0.0:
            return self.a
        if xi == -INF:
            return INF if self.b > 0 else -INF
        if xi == INF:
            return self.a
        e = _iv(-xi).exp()
        u = _iv(self.a) + _iv(self.b) * e
        return u.lo if lower else u.hi

    def enclose(self, xi: Interval) -> "LocalEnclosure":
        # u = a + b exp(-xi) is monotone in xi
        ends = [self._u_iv(xi.lo, True), self._u_iv(xi.lo, False), self._u_iv(xi.hi, True), self._u_iv(xi.hi, False)]
        u = Interval(max(0.0, min(ends)), max(ends))
        if u.hi <= 0:
            raise ProfileDomainError("linear segment nonpositive on enclosure interval")
        lnu = _ln_interval_of_positive(u)
        a = _iv(self.a)
        if self.a == 0.0:
            p = _iv(0.0)
        elif u.lo == 0.0:
            p = Interval((a / u.hi).lo if u.hi < INF else 0.0, INF) if self.a > 0 else Interval(-INF, (a / u.hi).hi)
        elif u.hi == INF:
            p = Interval(0.0, (a / u.lo).hi) if self.a > 0 else Interval((a / u.lo).lo, 0.0)
        else:
            p = a / u
        return LocalEnclosure(lnu, p, _iv(0.0), a)


@dataclass(frozen=True)
class Power:
    a: float
    s: float
    kind = "power"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("power segment needs a > 0")

    def params(self) -> dict:
        return {"a": self.a, "s": self.s}

    def scaled(self, c: float) -> "Power":
        return Power(self.a * c, self.s)

    def local(self, x: float) -> tuple[float, float, float]:
        v = self.a * x ** self.s
        return v, self.s * v / x, self.s * (self.s - 1) * v / (x * x)

    def log_jet(self, xi: float) -> tuple[float, float, float]:
        return math.log(self.a) + (self.s - 1) * xi, self.s, self.s * (self.s - 1)

    def enclose(self, xi: Interval) -> "LocalEnclosure":
        lna = _iv(self.a).log()
        sm1 = _iv(self.s) - 1.0
        lnu = lna + sm1 * xi if not (math.isinf(xi.lo) or math.isinf(xi.hi)) else _unbounded_affine(lna, sm1, xi)
        s = _iv(self.s)
        q = s * sm1
        d = s * lnu.exp() if lnu.hi < 700 else Interval(0.0, INF)
        return LocalEnclosure(lnu, s, q, d)


def _unbounded_affine(c: Interval, k: Interval, xi: Interval) -> Interval:
    """Enclosure of ``c + k * xi`` over a possibly unbounded ``xi``."""
    vals = []
    for x in (xi.lo, xi.hi):
        for kk in (k.lo, k.hi):
            if math.isinf(x):
                if kk == 0:
                    vals.append(0.0)
                else:
                    vals.append(math.copysign(INF, kk) * math.copysign(1.0, x))
            else:
                t = _iv(kk) * x
                vals += [t.lo, t.hi]
    return c + Interval(min(vals), max(vals))


@dataclass(frozen=True)
class LogBlend:
    """``slope x + c (x ln x - (ln x0 + 1) x) + b``; ``x g'' = c`` throughout."""

    c: float
    x0: float
    slope: float
    b: float
    kind = "logblend"

    def params(self) -> dict:
        return {"c": self.c, "x0": self.x0, "slope": self.slope, "b": self.b}

    def scaled(self, k: float) -> "LogBlend":
        return LogBlend(self.c * k, self.x0, self.slope * k, self.b * k)

    def local(self, x: float) -> tuple[float, float, float]:
        lx = math.log(x) - math.log(self.x0)
        return (self.slope * x + self.c * (x * lx - x) + self.b, self.slope + self.c * lx, self.c / x)

    def log_jet(self, xi: float) -> tuple[float, float, float]:
        lx = xi - math.log(self.x0)
        u = self.slope + self.c * (lx - 1.0) + self.b * math.exp(-xi)
        if not u > 0:
            raise ProfileDomainError(f"logblend segment nonpositive at xi={xi}")
        d = self.slope + self.c * lx
        return math.log(u), d / u, self.c / u

    def _u_iv(self, xi: Interval) -> Interval:
        lnx0 = _iv(self.x0).log()
        return _iv(self.slope) + _iv(self.c) * (xi - lnx0 - 1.0) + _iv(self.b) * (-xi).exp()

    def enclose(self, xi: Interval) -> "LocalEnclosure":
        if math.isinf(xi.lo) or math.isinf(xi.hi):
            raise ProfileDomainError("logblend segments are only enclosed on bounded intervals")
        cands = [self._u_iv(_iv(xi.lo)), self._u_iv(_iv(xi.hi))]
        if self.c != 0 and self.b != 0 and (self.b / self.c) > 0:
            xs = math.log(self.b / self.c)
            if xi.lo < xs < xi.hi:
                # u(xs) = slope + c (ln(b/c) - ln x0)
                crit = _iv(self.slope) + _iv(self.c) * (Interval(self.b) / self.c).log() - _iv(self.c) * _iv(self.x0).log()
                cands.append(crit)
        u = Interval(min(c.lo for c in cands), max(c.hi for c in cands))
        if u.lo <= 0:
            raise ProfileDomainError("logblend segment not certified positive")
        lnx0 = _iv(self.x0).log()
        d = _iv(self.slope) + _iv(self.c) * (xi - lnx0)
        return LocalEnclosure(u.log(), d / u, _iv(self.c) / u, d)


@dataclass(frozen=True)
class Bridge:
    """Polynomial in Bernstein form on ``y = (x - x_lo) / (x_hi - x_lo)`` in ``[0, 1]``.

    Storing Bernstein coefficients keeps flat junctions exact: a quintic that
    ends on a constant has three equal trailing coefficients, so ``P''(1) = 0``
    holds in exact arithmetic and interval bounds touch zero without rounding.
    """

    coeffs: tuple[float, ...]
    x_lo: float
    x_hi: float
    kind = "bridge"

    def params(self) -> dict:
        return {"coeffs": list(self.coeffs), "x_lo": self.x_lo, "x_hi": self.x_hi}

    def scaled(self, c: float) -> "Bridge":
        return Bridge(tuple(k * c for k in self.coeffs), self.x_lo, self.x_hi)

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def derivative_coeffs(self, order: int) -> list[Interval]:
        """Bernstein coefficients (as intervals) of the ``order``-th y-derivative."""
        c = [_iv(v) for v in self.coeffs]
        deg = self.degree
        for _ in range(order):
            c = [(c[j + 1] - c[j]) * float(deg) for j in range(len(c) - 1)]
            deg -= 1
        return c

    def poly(self, y: float) -> tuple[float, float, float]:
        c0 = list(self.coeffs)
        n = len(c0) - 1
        c1 = [n * (c0[j + 1] - c0[j]) for j in range(n)]
        c2 = [(n - 1) * (c1[j + 1] - c1[j]) for j in range(n - 1)]
        return (_de_casteljau_point(c0, y), _de_casteljau_point(c1, y) if c1 else 0.0,
                _de_casteljau_point(c2, y) if c2 else 0.0)

    def local(self, x: float) -> tuple[float, float, float]:
        h = self.width
        # clamp like enclose(): a shifted frame can land an ulp outside [0, 1]
        y = min(max((x - self.x_lo) / h, 0.0), 1.0)
        p, d1, d2 = self.poly(y)
        return p, d1 / h, d2 / (h * h)

    def log_jet(self, xi: float) -> tuple[float, float, float]:
        x = math.exp(xi)
        g, g1, g2 = self.local(x)
        if not g > 0:
            raise ProfileDomainError(f"bridge nonpositive at xi={xi}")
        return math.log(g / x), x * g1 / g, x * x * g2 / g

    def bernstein_bounds(self, y0: float, y1: float, order: int = 0) -> Interval:
        """Enclosure of the ``order``-th y-derivative of ``P`` on ``[y0, y1]``."""
        c = self.derivative_coeffs(order)
        if not c:
            return _iv(0.0)
        return bernstein_range(c, y0, y1)

    def enclose(self, xi: Interval) -> "LocalEnclosure":
        x = xi.exp()
        h = _iv(self.width)
        y = (x - self.x_lo) / h
        y0, y1 = max(0.0, y.lo), min(1.0, y.hi)
        if y0 > y1:
            y0 = y1 = min(max(y.lo, 0.0), 1.0)
        pv = self.bernstein_bounds(y0, y1, 0)
        if pv.lo <= 0:
            raise ProfileDomainError("bridge not certified positive")
        p1 = self.bernstein_bounds(y0, y1, 1) / h
        p2 = self.bernstein_bounds(y0, y1, 2) / h.sqr()
        u = pv / x
        return LocalEnclosure(u.log(), x * p1 / pv, x.sqr() * p2 / pv, p1)


def _de_casteljau_point(c: Sequence[float], y: float) -> float:
    b = list(c)
    for r in range(1, len(b)):
        for j in range(len(b) - r):
            b[j] = (1 - y) * b[j] + y * b[j + 1]
    return b[0]


def _subdivide(c: list[Interval], tau: float, keep_left: bool) -> list[Interval]:
    """De Casteljau split at ``tau``; returns the coefficients on ``[0, tau]`` or ``[tau, 1]``."""
    n = len(c) - 1
    one_m = _iv(1.0) - tau
    rows = [list(c)]
    for _ in range(n):
        prev = rows[-1]
        rows.append([prev[j] * one_m + prev[j + 1] * tau for j in range(len(prev) - 1)])
    if keep_left:
        return [rows[j][0] for j in range(n + 1)]
    return [rows[n - j][j] for j in range(n + 1)]


def bernstein_range(coeffs: Sequence[Interval], y0: float, y1: float) -> Interval:
    """Range enclosure on ``[y0, y1]`` of a polynomial given by Bernstein coefficients on ``[0, 1]``."""
    c = list(coeffs)
    if y1 < 1.0:
        c = _subdivide(c, y1, keep_left=True)
        if y0 > 0.0:
            c = _subdivide(c, y0 / y1, keep_left=False)
    elif y0 > 0.0:
        c = _subdivide(c, y0, keep_left=False)
    # the endpoint coefficients are exact range members, so the hull is a valid enclosure;
    # the hull of the unsubdivided coefficients bounds the whole of [0, 1] without rounding
    lo = max(min(v.lo for v in c), min(v.lo for v in coeffs))
    hi = min(max(v.hi for v in c), max(v.hi for v in coeffs))
    return Interval(lo, hi)


SEGMENT_KINDS = {cls.kind: cls for cls in (Constant, Linear, Power, LogBlend, Bridge)}


def segment_from_params(kind: str, params: dict):
    cls = SEGMENT_KINDS.get(kind)
    if cls is None:
        raise ValueError(f"unknown segment kind {kind!r}")
    if cls is Bridge:
        return Bridge(tuple(float(c) for c in params["coeffs"]), float(params["x_lo"]), float(params["x_hi"]))
    return cls(**{k: float(v) for k, v in params.items()})


@dataclass(frozen=True)
class LocalEnclosure:
    """Bounds on ``ln(g/x)``, ``x g'/g``, ``x^2 g''/g`` and ``g'`` over a xi-range."""

    lnu: Interval
    p: Interval
    q: Interval
    d: Interval


# ---------------------------------------------------------------------------
# pieces and profiles


@dataclass(frozen=True)
class Piece:
    seg: object
    sigma: float
    kappa: float
    lo: float
    hi: float

    def xi(self, t: float) -> float:
        return t - self.sigma

    def log_jet(self, t: float) -> tuple[float, float, float]:
        lnu, p, q = self.seg.log_jet(t - self.sigma)
        return self.kappa + lnu, p, q

    def xi_interval(self, t0: float, t1: float) -> Interval:
        lo = t0 - self.sigma
        hi = t1 - self.sigma
        if math.isfinite(lo):
            lo = math.nextafter(lo, -INF)
        if math.isfinite(hi):
            hi = math.nextafter(hi, INF)
        return Interval(lo, hi)

    def enclose(self, t0: float, t1: float) -> "Enclosure":
        loc = self.seg.enclose(self.xi_interval(t0, t1))
        lnu = loc.lnu + self.kappa if self.kappa != 0 else loc.lnu
        # real-unit slope f' = exp(kappa) g'
        d1 = loc.d * _iv(self.kappa).exp() if self.kappa != 0 else loc.d
        return Enclosure(t0, t1, lnu, loc.p, loc.q, d1)

    def local_frame_jet(self, t: float) -> tuple[float, float, float]:
        """``(g, g', g'')`` in this piece's local frame at log-radius ``t``."""
        return self.seg.local(math.exp(t - self.sigma))

    def shifted(self, dt: float) -> "Piece":
        return replace(self, sigma=self.sigma + dt, lo=self.lo + dt, hi=self.hi + dt)

    def with_range(self, lo: float, hi: float) -> "Piece":
        return replace(self, lo=lo, hi=hi)

    def canonical(self) -> tuple:
        """Frame-independent parameters; entries tagged ``"log"`` are log-magnitudes."""
        s, k, g = self.sigma, self.kappa, self.seg
        if isinstance(g, Constant):
            return ("constant", ("log", math.log(g.v) + k + s))
        if isinstance(g, Linear):
            return ("linear", _slog(g.a, k), _slog(g.b, k + s))
        if isinstance(g, Power):
            return ("power", ("val", g.s), ("log", math.log(g.a) + k - s * (g.s - 1)))
        if isinstance(g, LogBlend):
            return ("logblend", _slog(g.c, k), ("log", math.log(g.x0) + s), _slog(g.slope, k), _slog(g.b, k + s))
        if isinstance(g, Bridge):
            return ("bridge", *(("val", c) for c in g.coeffs), ("log", math.log(g.x_lo) + s),
                    ("log", math.log(g.x_hi) + s), ("log", k + s))
        raise TypeError(type(g))

    def same_function(self, other: "Piece", rtol: float = BREAK_RTOL) -> tuple[bool, float]:
        a, b = self.canonical(), other.canonical()
        if a[0] != b[0] or len(a) != len(b):
            return False, INF
        worst = 0.0
        for x, y in zip(a[1:], b[1:]):
            if x[0] != y[0] or (x[0] == "slog" and x[2] != y[2]):
                return False, INF
            if x[0] == "zero":
                continue
            scale = max(1.0, abs(x[1]), abs(y[1]))
            worst = max(worst, abs(x[1] - y[1]) / scale)
        return worst <= rtol, worst


def _slog(v: float, shift: float) -> tuple:
    if v == 0.0:
        return ("zero", 0.0)
    return ("slog", math.log(abs(v)) + shift, math.copysign(1.0, v))


@dataclass(frozen=True)
class Enclosure:
    """Certified bounds of a profile over a log-radius interval.

    ``lnu``, ``p``, ``q`` bound ``ln(f/r)``, ``r f'/f`` and ``r^2 f''/f``;
    ``value``, ``d1``, ``d2`` are the real-unit bounds on ``f, f', f''``
    (possibly infinite where they leave double range).
    """

    t_lo: float
    t_hi: float
    lnu: Interval
    p: Interval
    q: Interval
    d1: Interval

    @property
    def value(self) -> Interval:
        return (self.lnu + Interval(self.t_lo, self.t_hi)).exp() if not math.isinf(self.t_lo) or self.lnu.lo > -INF else Interval(0.0, (self.lnu + self.t_hi).exp().hi)

    @property
    def d2(self) -> Interval:
        # f'' = q f / r^2 = q exp(lnu) / r
        r_inv = Interval(exp_rd(-self.t_hi), exp_ru(-self.t_lo))
        return self.q * self.lnu.exp() * r_inv

    def union(self, other: "Enclosure") -> "Enclosure":
        return Enclosure(min(self.t_lo, other.t_lo), max(self.t_hi, other.t_hi), self.lnu.union(other.lnu),
                         self.p.union(other.p), self.q.union(other.q), self.d1.union(other.d1))


Segment = Piece


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class PiecewiseProfile:
    """Ordered, abutting pieces covering ``[origin, inf)`` in log-radius."""

    pieces: tuple[Piece, ...]
    name: str = ""
    c2_breaks: frozenset = field(default_factory=frozenset, compare=False)

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("profile needs at least one piece")
        for a, b in zip(self.pieces, self.pieces[1:]):
            if a.hi != b.lo:
                raise ValueError(f"pieces do not abut: {a.hi} vs {b.lo}")
        for pc in self.pieces:
            if not pc.lo < pc.hi:
                raise ValueError(f"empty piece [{pc.lo}, {pc.hi})")
        if self.pieces[-1].hi != INF:
            raise ValueError("last piece must extend to infinity")

    @property
    def origin(self) -> float:
        """Log-radius of the left end (``-inf`` for a profile on ``(0, inf)``)."""
        return self.pieces[0].lo

    @property
    def breakpoints(self) -> list[float]:
        return [pc.hi for pc in self.pieces[:-1]]

    def piece_index(self, t: float) -> int:
        if t < self.origin:
            raise ProfileDomainError(f"log-radius {t} below profile origin {self.origin}")
        los = [pc.lo for pc in self.pieces]
        import bisect

        return max(0, bisect.bisect_right(los, t) - 1)

    def piece_at(self, t: float) -> Piece:
        return self.pieces[self.piece_index(t)]

    def log_jet(self, t: float) -> tuple[float, float, float]:
        return self.piece_at(t).log_jet(t)

    def log_value(self, t: float) -> float:
        return t + self.log_jet(t)[0]

    def eval(self, r: float) -> tuple[float, float, float]:
        if not r > 0:
            raise ProfileDomainError("profiles are evaluated at r > 0")
        t = math.log(r)
        lnu, p, q = self.log_jet(t)
        e = math.exp(lnu) if lnu < 709 else INF
        return r * e, p * e, q * e / r

    def pieces_over(self, t0: float, t1: float) -> list[Piece]:
        return [pc for pc in self.pieces if pc.hi > t0 and pc.lo < t1]

    def enclose(self, t0: float, t1: float) -> Enclosure:
        out = None
        for pc in self.pieces_over(t0, t1):
            e = pc.enclose(max(t0, pc.lo), min(t1, pc.hi))
            out = e if out is None else out.union(e)
        if out is None:
            raise ProfileDomainError(f"no piece covers [{t0}, {t1}]")
        return Enclosure(t0, t1, out.lnu, out.p, out.q, out.d1)

    def sup_log(self, t0: float, t1: float, cells: int = 32) -> float:
        """Upper bound for ``ln f`` over log-radii ``[t0, t1]`` (``inf`` if unbounded)."""
        best = -INF
        for pc in self.pieces_over(t0, t1):
            a, b = max(t0, pc.lo), min(t1, pc.hi)
            if math.isinf(a) or math.isinf(b):
                best = max(best, _tail_sup_log(pc, a, b))
                continue
            h = (b - a) / cells
            for j in range(cells):
                c0 = a + j * h
                c1 = b if j == cells - 1 else a + (j + 1) * h
                e = pc.enclose(c0, c1)
                best = max(best, math.nextafter(c1 + e.lnu.hi, INF))
        return best

    # transforms -----------------------------------------------------------

    def rescale_log(self, ln_a: float) -> "PiecewiseProfile":
        """``r -> A^-1 f(A r)`` with ``ln A`` given."""
        return PiecewiseProfile(tuple(pc.shifted(-ln_a) for pc in self.pieces), self.name,
                                frozenset(t - ln_a for t in self.c2_breaks))

    def rescale(self, a: float) -> "PiecewiseProfile":
        if not a > 0:
            raise ValueError("rescale factor must be positive")
        return self.rescale_log(math.log(a))

    def scale_fiber_log(self, ln_c: float) -> "PiecewiseProfile":
        return replace(self, pieces=tuple(replace(pc, kappa=pc.kappa + ln_c) for pc in self.pieces))

    def scale_fiber(self, c: float) -> "PiecewiseProfile":
        if not c > 0:
            raise ValueError("fiber scale must be positive")
        return self.scale_fiber_log(math.log(c))

    def restrict(self, t0: float, t1: float = INF) -> list[Piece]:
        out = []
        for pc in self.pieces_over(t0, t1):
            out.append(pc.with_range(max(pc.lo, t0), min(pc.hi, t1)))
        return out

    def renamed(self, name: str) -> "PiecewiseProfile":
        return replace(self, name=name)

    def coalesced(self) -> "PiecewiseProfile":
        """Merge neighbouring pieces that carry the same function."""
        out: list[Piece] = []
        breaks = set(self.c2_breaks)
        for pc in self.pieces:
            if out and out[-1].seg.kind == pc.seg.kind and out[-1].same_function(pc)[0]:
                breaks.discard(pc.lo)
                out[-1] = out[-1].with_range(out[-1].lo, pc.hi)
            else:
                out.append(pc)
        return PiecewiseProfile(tuple(out), self.name, frozenset(breaks))

    def continuity_report(self) -> list["BreakReport"]:
        reports = []
        for left, right in zip(self.pieces, self.pieces[1:]):
            t = left.hi
            la, pa, qa = left.log_jet(t)
            lb, pb, qb = right.log_jet(t)
            reports.append(BreakReport(t, abs(la - lb), abs(pa - pb), abs(qa - qb),
                                       max(abs(pa), abs(pb), 1.0), max(abs(qa), abs(qb), 1.0), t in self.c2_breaks))
        return reports

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "segments": [
                {"kind": pc.seg.kind, "params": pc.seg.params(), "sigma": pc.sigma, "kappa": pc.kappa,
                 "lo": pc.lo, "hi": pc.hi}
                for pc in self.pieces
            ],
            "c2_breaks": sorted(self.c2_breaks),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseProfile":
        pieces = []
        for s in d["segments"]:
            seg = segment_from_params(s["kind"], s["params"])
            pieces.append(Piece(seg, float(s.get("sigma", 0.0)), float(s.get("kappa", 0.0)),
                                float(s["lo"]), float(s["hi"])))
        return cls(tuple(pieces), d.get("name", ""), frozenset(float(x) for x in d.get("c2_breaks", [])))


def _tail_sup_log(pc: Piece, a: float, b: float) -> float:
    g = pc.seg
    if isinstance(g, Constant):
        return math.nextafter(math.log(g.v) + pc.kappa + pc.sigma, INF)
    increasing = (isinstance(g, Linear) and g.a >= 0 and g.b >= 0) or (isinstance(g, Power) and g.s >= 0)
    if increasing and math.isfinite(b):
        t = b
        return math.nextafter(t + pc.log_jet(t)[0], INF) + 4 * math.ulp(abs(t) + 1.0)
    return INF


@dataclass(frozen=True)
class BreakReport:
    """Jumps of ``ln(f/r)``, ``r f'/f`` and ``r^2 f''/f`` across one breakpoint."""

    t: float
    d_value: float
    d_slope: float
    d_curv: float
    slope_scale: float
    curv_scale: float
    c2_claimed: bool

    def tolerance(self, scale: float) -> float:
        # breakpoints are only known to an ulp of t; that positional error
        # propagates through the log-jet with unit-order derivatives
        return BREAK_RTOL * scale + 8 * math.ulp(abs(self.t)) * (scale + 1.0)

    @property
    def c0(self) -> bool:
        return self.d_value <= self.tolerance(1.0 + self.slope_scale)

    @property
    def c1(self) -> bool:
        return self.c0 and self.d_slope <= self.tolerance(self.slope_scale + self.curv_scale)

    @property
    def c2(self) -> bool:
        return self.c1 and self.d_curv <= self.tolerance(self.curv_scale) * 10


def profile_from_pieces(pieces: Iterable[Piece], name: str = "", c2_breaks: Iterable[float] = ()) -> PiecewiseProfile:
    return PiecewiseProfile(tuple(pieces), name, frozenset(c2_breaks))


def single(seg, name: str = "", origin: float = -INF, sigma: float = 0.0, kappa: float = 0.0) -> PiecewiseProfile:
    return PiecewiseProfile((Piece(seg, sigma, kappa, origin, INF),), name)


def glue(left: PiecewiseProfile, right: PiecewiseProfile, t_a: float, t_b: float) -> PiecewiseProfile:
    """Left below ``t_a``, right above; both must agree on ``[t_a, t_b]``."""
    if not t_a < t_b:
        raise GluingError("overlap must be a nondegenerate interval")
    cuts = sorted({t_a, t_b, *[x for x in left.breakpoints + right.breakpoints if t_a < x < t_b]})
    worst = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        mid = 0.5 * (lo + hi)
        pl, pr = left.piece_at(mid), right.piece_at(mid)
        ok, dev = pl.same_function(pr)
        if not ok:
            raise GluingError(f"profiles {left.name!r}/{right.name!r} disagree on overlap", dev, mid)
        worst = max(worst, dev)
    if right.origin > t_a:
        raise GluingError("right profile does not cover the overlap", INF, t_a)
    pieces = left.restrict(left.origin, t_a) + right.restrict(t_a)
    breaks = {t for t in left.c2_breaks if t < t_a} | {t for t in right.c2_breaks if t > t_a}
    return PiecewiseProfile(tuple(pieces), left.name or right.name, frozenset(breaks)).coalesced()


def glue_log(left, right, t_a, t_b):
    return glue(left, right, t_a, t_b)


# ---------------------------------------------------------------------------
# bridges


def _flat_end(b_end: float, b_next: float) -> float:
    """Third coefficient making the second difference vanish exactly, nudging if needed."""
    from fractions import Fraction

    cand = 2 * b_next - b_end
    if Fraction(cand) == 2 * Fraction(b_next) - Fraction(b_end):
        return cand
    raise ArithmeticError


def quintic_hermite(p0: float, d0: float, s0: float, p1: float, d1: float, s1: float) -> tuple[float, ...]:
    """Bernstein coefficients on ``[0, 1]`` matching value, slope and second derivative at both ends.

    When an end has zero second derivative the coefficients are adjusted by
    a few ulps so that the corresponding second difference is exactly zero.
    """
    b0, b5 = p0, p1
    b1 = b0 + d0 / 5.0
    b4 = b5 - d1 / 5.0
    b2 = 2 * b1 - b0 + s0 / 20.0
    b3 = 2 * b4 - b5 + s1 / 20.0
    if s0 == 0.0:
        b1, b2 = _exact_flat(b0, b1)
    if s1 == 0.0:
        b4, b3 = _exact_flat(b5, b4)
    return (b0, b1, b2, b3, b4, b5)


def _exact_flat(b_end: float, b_next: float) -> tuple[float, float]:
    for k in range(64):
        try:
            return b_next, _flat_end(b_end, b_next)
        except ArithmeticError:
            b_next = math.nextafter(b_next, INF)
    raise BridgeInfeasible("could not make a flat bridge end exact")


@dataclass(frozen=True)
class D2Constraint:
    """One-sided sign of ``f''`` on a bridge window: ``-1`` concave, ``+1`` convex, ``0`` free."""

    sign: int = 0
    upper_abs: float | None = None  # optional bound on |f''| in real units

    @classmethod
    def concave(cls) -> "D2Constraint":
        return cls(-1)

    @classmethod
    def convex(cls, upper_abs: float | None = None) -> "D2Constraint":
        return cls(1, upper_abs)


BRIDGE_SUBCELLS = 32


def certify_bridge_d2(b: Bridge, sign: int, upper_local: float | None = None) -> bool:
    """Certify the sign (and optional bound) of ``P''`` on ``[0, 1]`` from Bernstein bounds."""
    if sign == 0 and upper_local is None:
        return True
    for i in range(BRIDGE_SUBCELLS):
        e = b.bernstein_bounds(i / BRIDGE_SUBCELLS, (i + 1) / BRIDGE_SUBCELLS, 2)
        if sign < 0 and e.hi > 0:
            return False
        if sign > 0 and e.lo < 0:
            return False
        if upper_local is not None and max(abs(e.lo), abs(e.hi)) > upper_local:
            return False
    return True


def certify_bridge_positive(b: Bridge) -> bool:
    return all(b.bernstein_bounds(i / BRIDGE_SUBCELLS, (i + 1) / BRIDGE_SUBCELLS, 0).lo > 0
               for i in range(BRIDGE_SUBCELLS))


def hermite_bridge(left: Piece, right: Piece, t_c: float, w: float) -> Piece:
    """Quintic bridge on ``r in [c(1-w), c(1+w)]``, ``c = exp(t_c)``, in the frame ``sigma = t_c``."""
    if not 0 < w < 1:
        raise ValueError("relative half-width must lie in (0, 1)")
    x_a, x_b = 1.0 - w, 1.0 + w
    t_a, t_b = t_c + math.log1p(-w), t_c + math.log1p(w)
    la, pa, qa = left.log_jet(t_a)
    lb, pb, qb = right.log_jet(t_b)
    kappa = la
    h = x_b - x_a
    ea, eb = 1.0, math.exp(lb - kappa)
    # local P(x) = x exp(l - kappa); P' = p exp(l - kappa); P'' = q exp(l - kappa) / x
    coeffs = quintic_hermite(x_a * ea, pa * ea * h, qa * ea / x_a * h * h,
                             x_b * eb, pb * eb * h, qb * eb / x_b * h * h)
    return Piece(Bridge(coeffs, x_a, x_b), t_c, kappa, t_a, t_b)



MAX_BRIDGE_ATTEMPTS = 8


def _smooth(f: Piece, g: Piece, t_c: float, w: float, sign: int, upper_abs: float | None) -> Piece:
    if f.same_function(g)[0]:
        return f
    last = None
    for _ in range(MAX_BRIDGE_ATTEMPTS):
        if w >= 1:
            break
        try:
            br = hermite_bridge(f, g, t_c, w)
        except (ProfileDomainError, ValueError, OverflowError) as exc:
            last = exc
        else:
            upper_local = None
            if upper_abs is not None:
                # f'' = exp(kappa - sigma) P_yy / H^2
                upper_local = upper_abs * math.exp(br.sigma - br.kappa) * br.seg.width ** 2
            if certify_bridge_positive(br.seg) and certify_bridge_d2(br.seg, sign, upper_local):
                return br
        w = min(2 * w, 0.5 * (1 + w))
    raise BridgeInfeasible(f"no certified bridge near t={t_c} ({last})", min_width_estimate=w)


def smooth_min(f: Piece, g: Piece, t_c: float, w: float, d2: D2Constraint | None = None) -> Piece:
    """Concave-type bridge from ``f`` (left) to ``g`` (right) around ``r = exp(t_c)``."""
    d2 = d2 or D2Constraint.concave()
    return _smooth(f, g, t_c, w, d2.sign, d2.upper_abs)


def smooth_max(f: Piece, g: Piece, t_c: float, w: float, d2: D2Constraint | None = None) -> Piece:
    d2 = d2 or D2Constraint.convex()
    return _smooth(f, g, t_c, w, d2.sign, d2.upper_abs)


def concave_cap(f: Piece, t_start: float, t_end: float) -> tuple[Piece, Piece, float]:
    """Concave quintic from ``f`` at ``t_start`` to a constant at ``t_end``.

    Returns ``(bridge, constant_piece, ln_lambda)`` with ``lambda`` the
    terminal value.  With Bernstein coefficients ``b0..b5`` and
    ``b3 = b4 = b5 = lambda``, the control-polygon second differences are
    ``<= 0`` exactly when ``b2 <= lambda <= 2 b2 - b1``; the midpoint is
    taken, which also makes ``P'`` positive on ``[0, 1)``.
    """
    if not t_end > t_start:
        raise ValueError("cap end must exceed its start")
    if isinstance(f.seg, Constant):
        return f.with_range(t_start, t_end), f.with_range(t_end, INF), f.kappa + f.sigma + math.log(f.seg.v)
    x_b = math.exp(t_end - t_start)
    h = x_b - 1.0
    la, pa, qa = f.log_jet(t_start)
    if pa < 0 or qa > 0:
        raise BridgeInfeasible("cap needs a nondecreasing concave start")
    b0 = 1.0
    b1 = b0 + pa * h / 5.0
    b2 = 2 * b1 - b0 + qa * h * h / 20.0
    lam_lo, lam_hi = b2, 2 * b2 - b1
    if not lam_lo < lam_hi:
        raise BridgeInfeasible(f"no concave cap on [{t_start}, {t_end}]", min_width_estimate=t_end - t_start)
    lam = 0.5 * (lam_lo + lam_hi)
    br = Bridge((b0, b1, b2, lam, lam, lam), 1.0, x_b)
    if not (certify_bridge_positive(br) and certify_bridge_d2(br, -1)):
        raise BridgeInfeasible(f"cap on [{t_start}, {t_end}] failed certification", min_width_estimate=t_end - t_start)
    bp = Piece(br, t_start, la, t_start, t_end)
    cp = Piece(Constant(lam), t_start, la, t_end, INF)
    return bp, cp, la + t_start + math.log(lam)


class ProfileBuilder:
    """Accumulate pieces left to right, bridging between closed forms."""

    def __init__(self, first: Piece, origin: float = -INF, name: str = ""):
        self.name = name
        self.done: list[Piece] = []
        self.current = first.with_range(origin, INF)
        self.c2: set[float] = set()

    def join(self, nxt: Piece, t_c: float, w: float, sign: int = 0, upper_abs: float | None = None) -> Piece:
        br = _smooth(self.current, nxt, t_c, w, sign, upper_abs)
        if br is self.current:
            return br
        if br.lo <= self.current.lo:
            raise BridgeInfeasible(f"bridge at t={t_c} overruns the previous piece")
        self.done.append(self.current.with_range(self.current.lo, br.lo))
        self.done.append(br)
        self.c2 |= {br.lo, br.hi}
        self.current = nxt.with_range(br.hi, INF)
        return br

    def switch(self, nxt: Piece, t: float) -> None:
        """Hard switch at ``t`` (only for pieces that already agree there)."""
        self.done.append(self.current.with_range(self.current.lo, t))
        self.current = nxt.with_range(t, INF)

    def cap(self, t_start: float, t_end: float) -> float:
        br, cp, ln_lam = concave_cap(self.current, t_start, t_end)
        self.done.append(self.current.with_range(self.current.lo, t_start))
        self.done.append(br)
        self.c2 |= {t_start, t_end}
        self.current = cp
        return ln_lam

    def build(self) -> PiecewiseProfile:
        return PiecewiseProfile(tuple(self.done) + (self.current,), self.name, frozenset(self.c2)).coalesced()
