import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from warpforge.interval import Interval, add_rd_ru, div_rd_ru, exp_rd, exp_ru, log_rd, log_ru, mul_rd_ru, point

reals = st.floats(min_value=-1e12, max_value=1e12, allow_nan=False, allow_infinity=False)
nonzero = reals.filter(lambda x: abs(x) > 1e-12)


def frac_in(lo, hi, exact):
    return (lo == -math.inf or Fraction(lo) <= exact) and (hi == math.inf or exact <= Fraction(hi))


@given(reals, reals)
def test_add_brackets_exact_sum(a, b):
    lo, hi = add_rd_ru(a, b)
    assert frac_in(lo, hi, Fraction(a) + Fraction(b))


@given(reals, reals)
def test_mul_brackets_exact_product(a, b):
    lo, hi = mul_rd_ru(a, b)
    assert frac_in(lo, hi, Fraction(a) * Fraction(b))


@given(reals, nonzero)
def test_div_brackets_exact_quotient(a, b):
    lo, hi = div_rd_ru(a, b)
    assert frac_in(lo, hi, Fraction(a) / Fraction(b))


def test_exact_operations_stay_degenerate():
    assert add_rd_ru(1.0, -1.0) == (0.0, 0.0)
    assert mul_rd_ru(3.0, 0.5) == (1.5, 1.5)
    assert div_rd_ru(1.0, 4.0) == (0.25, 0.25)
    assert (Interval(1.0) - Interval(1.0)) == point(0.0)


@st.composite
def intervals(draw):
    a, b = draw(reals), draw(reals)
    return Interval(min(a, b), max(a, b))


@given(intervals(), intervals(), st.floats(0, 1), st.floats(0, 1))
def test_arithmetic_contains_members(x, y, u, v):
    a = Fraction(x.lo) + (Fraction(x.hi) - Fraction(x.lo)) * Fraction(u)
    b = Fraction(y.lo) + (Fraction(y.hi) - Fraction(y.lo)) * Fraction(v)
    for iv, exact in ((x + y, a + b), (x - y, a - b), (x * y, a * b), (x.sqr(), a * a)):
        assert frac_in(iv.lo, iv.hi, exact)
    if y.lo > 0 or y.hi < 0:
        q = x / y
        assert frac_in(q.lo, q.hi, a / b)


@given(st.floats(-700, 700))
def test_exp_log_bounds(x):
    assert exp_rd(x) <= math.exp(x) <= exp_ru(x)
    y = math.exp(x)
    assert log_rd(y) <= math.log(y) <= log_ru(y)


def test_exp_log_special_values():
    assert Interval(-math.inf, 0.0).exp() == Interval(0.0, 1.0)
    assert Interval(0.0, 1.0).log() == Interval(-math.inf, 0.0)
    assert exp_ru(710.0) == math.inf
    with pytest.raises(ValueError):
        Interval(-1.0, 1.0).log()


def test_constructor_rejects_bad_endpoints():
    with pytest.raises(ValueError):
        Interval(2.0, 1.0)
    with pytest.raises(ValueError):
        Interval(math.nan)


def test_division_by_interval_containing_zero_raises():
    with pytest.raises(ZeroDivisionError):
        Interval(1.0, 2.0) / Interval(-1.0, 1.0)


def test_hull_union_width_mid():
    iv = Interval.hull(3.0, -1.0, 2.0)
    assert iv == Interval(-1.0, 3.0)
    assert iv.union(Interval(5.0)) == Interval(-1.0, 5.0)
    assert iv.width == 4.0 and iv.mid == 1.0
    assert iv.contains(0.0) and not iv.contains(3.5)
