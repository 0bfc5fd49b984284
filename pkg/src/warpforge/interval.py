"""Closed real intervals with outward rounding.

Rounding is directed only when an operation is inexact.  Sums and products
are checked with error-free transformations (TwoSum, Dekker's TwoProduct), so
exact results such as ``1 - 1`` stay degenerate; transcendental functions are
widened by a fixed number of ulps.
"""

from __future__ import annotations

import math

_INF = math.inf
_SPLITTER = 134217729.0  # 2**27 + 1
_SAFE_MAG = 1e150
_TINY = 1e-280
TRANSCENDENTAL_SLACK_ULPS = 2


def _up(x: float, k: int = 1) -> float:
    for _ in range(k):
        x = math.nextafter(x, _INF)
    return x


def _down(x: float, k: int = 1) -> float:
    for _ in range(k):
        x = math.nextafter(x, -_INF)
    return x


def _two_sum_err(a: float, b: float, s: float) -> float:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod_err(a: float, b: float, p: float) -> float:
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _bracket(s: float, err: float) -> tuple[float, float]:
    if err > 0.0:
        return s, _up(s)
    if err < 0.0:
        return _down(s), s
    return s, s


def add_rd_ru(a: float, b: float) -> tuple[float, float]:
    s = a + b
    if not math.isfinite(s):
        return s, s
    return _bracket(s, _two_sum_err(a, b, s))


def mul_rd_ru(a: float, b: float) -> tuple[float, float]:
    if a == 0.0 or b == 0.0:
        # 0 * inf only arises as a zero coefficient times a limit; treated as 0
        return 0.0, 0.0
    p = a * b
    if not math.isfinite(p):
        return p, p
    if abs(a) < _SAFE_MAG and abs(b) < _SAFE_MAG and abs(p) > _TINY:
        return _bracket(p, _two_prod_err(a, b, p))
    return _down(p), _up(p)


def div_rd_ru(a: float, b: float) -> tuple[float, float]:
    if a == 0.0:
        return 0.0, 0.0
    if math.isinf(b):
        if math.isinf(a):
            raise ValueError("inf / inf in interval division")
        return 0.0, 0.0
    q = a / b
    if not math.isfinite(q):
        return q, q
    if abs(q) < _SAFE_MAG and abs(b) < _SAFE_MAG and abs(q) > _TINY and abs(a) > _TINY:
        e = _two_prod_err(q, b, q * b)
        r = (a - q * b) - e  # a - q*b is exact by Sterbenz for correctly rounded q
        if r == 0.0:
            return q, q
        # sign of the remainder over b decides which side the true quotient is on
        if (r > 0) == (b > 0):
            return q, _up(q)
        return _down(q), q
    return _down(q), _up(q)


class Interval:
    """A closed interval ``[lo, hi]``; endpoints may be infinite."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: float, hi: float | None = None):
        if hi is None:
            hi = lo
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("NaN interval endpoint")
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)

    @classmethod
    def hull(cls, *values: float) -> "Interval":
        return cls(min(values), max(values))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def union(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        if math.isinf(self.lo) or math.isinf(self.hi):
            raise ValueError("midpoint of unbounded interval")
        return 0.5 * (self.lo + self.hi)

    @staticmethod
    def _coerce(x: "Interval | float") -> "Interval":
        return x if isinstance(x, Interval) else Interval(float(x))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other: "Interval | float") -> "Interval":
        o = self._coerce(other)
        lo = add_rd_ru(self.lo, o.lo)[0]
        hi = add_rd_ru(self.hi, o.hi)[1]
        return Interval(lo, hi)

    __radd__ = __add__

    def __sub__(self, other: "Interval | float") -> "Interval":
        return self + (-self._coerce(other))

    def __rsub__(self, other: float) -> "Interval":
        return self._coerce(other) - self

    def __mul__(self, other: "Interval | float") -> "Interval":
        o = self._coerce(other)
        los = []
        his = []
        for a in (self.lo, self.hi):
            for b in (o.lo, o.hi):
                d, u = mul_rd_ru(a, b)
                los.append(d)
                his.append(u)
        return Interval(min(los), max(his))

    __rmul__ = __mul__

    def __truediv__(self, other: "Interval | float") -> "Interval":
        o = self._coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise ZeroDivisionError(f"division by interval containing zero: {o}")
        los = []
        his = []
        for a in (self.lo, self.hi):
            for b in (o.lo, o.hi):
                d, u = div_rd_ru(a, b)
                los.append(d)
                his.append(u)
        return Interval(min(los), max(his))

    def __rtruediv__(self, other: float) -> "Interval":
        return self._coerce(other) / self

    def sqr(self) -> "Interval":
        if self.lo >= 0.0:
            return Interval(mul_rd_ru(self.lo, self.lo)[0], mul_rd_ru(self.hi, self.hi)[1])
        if self.hi <= 0.0:
            return Interval(mul_rd_ru(self.hi, self.hi)[0], mul_rd_ru(self.lo, self.lo)[1])
        m = max(-self.lo, self.hi)
        return Interval(0.0, mul_rd_ru(m, m)[1])

    def exp(self) -> "Interval":
        return Interval(exp_rd(self.lo), exp_ru(self.hi))

    def log(self) -> "Interval":
        if self.lo < 0.0:
            raise ValueError("log of interval with negative part")
        return Interval(log_rd(self.lo), log_ru(self.hi))

    def scale_exact(self, k: float) -> "Interval":
        """Multiply by ``k``; exact when ``k`` is a power of two."""
        return self * k


def exp_rd(x: float) -> float:
    if x == -_INF:
        return 0.0
    if x == 0.0:
        return 1.0
    if x > 709.78:
        return math.inf if x == _INF else _down(math.exp(709.78))
    v = math.exp(x)
    return max(0.0, _down(v, TRANSCENDENTAL_SLACK_ULPS))


def exp_ru(x: float) -> float:
    if x == -_INF:
        return 0.0
    if x == 0.0:
        return 1.0
    if x > 709.78:
        return math.inf
    return _up(math.exp(x), TRANSCENDENTAL_SLACK_ULPS)


def log_rd(x: float) -> float:
    if x == 0.0:
        return -_INF
    if x == 1.0:
        return 0.0
    if math.isinf(x):
        return _INF
    return _down(math.log(x), TRANSCENDENTAL_SLACK_ULPS)


def log_ru(x: float) -> float:
    if x == 0.0:
        return -_INF
    if x == 1.0:
        return 0.0
    if math.isinf(x):
        return _INF
    return _up(math.log(x), TRANSCENDENTAL_SLACK_ULPS)


def point(x: float) -> Interval:
    return Interval(x, x)
