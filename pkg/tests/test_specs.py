import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import flat_spec
from warpforge.curvature import FiberDescriptor, ricci_fd_oracle_multi, ricci_multi, ricci_triple
from warpforge.profiles import Constant, Linear, Power, single
from warpforge.specs import MultiWarpSpec, TripleWarpSpec


def test_flat_spec_ricci():
    ev = flat_spec().ricci_at(2.0)
    assert tuple(ev) == (0.0, 0.0, 1.0, 1.0)


def test_swapped_exchanges_factors():
    spec = TripleWarpSpec(3, 2, single(Linear(1.0, 0.0)), single(Constant(2.0)), single(Constant(1.0)))
    sw = spec.swapped()
    assert (sw.m, sw.n) == (2, 3)
    a, b = spec.scaled_ricci_at(0.3), sw.scaled_ricci_at(0.3)
    assert (a[0], a[1], a[2], a[3]) == (b[0], b[2], b[1], b[3])


@given(st.floats(-20, 20), st.floats(-3, 3))
def test_rescale_is_homothety(ln_a, t):
    # r^2 Ric is scale invariant: the rescaled metric at t equals the original at t + ln A
    spec = TripleWarpSpec(2, 3, single(Linear(0.5, 1.0)), single(Power(1.0, 0.5)), single(Constant(3.0)))
    a = spec.rescale_log(ln_a).scaled_ricci_at(t)
    b = spec.scaled_ricci_at(t + ln_a)
    assert all(x == pytest.approx(y, rel=1e-9, abs=1e-12) for x, y in zip(a, b))
    assert spec.rescale(math.exp(ln_a)).origin == -math.inf


def test_multi_spec_validation():
    with pytest.raises(ValueError):
        MultiWarpSpec((FiberDescriptor.sphere(2),), ())
    spec = MultiWarpSpec((FiberDescriptor.sphere(2),), (single(Linear(1.0, 0.0)),))
    assert spec.names == ("f1",)
    assert spec.dims_dict == {"fibers": [{"dim": 2, "ricci_lower": 1.0}]}


def test_grouped_fibers_match_triple():
    # phi on S^2, psi on S^2 x S^3 (as two factors), rho on S^2: phi, rho and radial parts see n = 5
    jets = [(1.3, 0.8, -0.2), (0.7, 0.1, 0.05), (0.9, -0.3, 0.4)]
    multi = ricci_multi([FiberDescriptor.sphere(2), FiberDescriptor.sphere(2), FiberDescriptor.sphere(3),
                         FiberDescriptor.sphere(2)], [jets[0], jets[1], jets[1], jets[2]])
    tri = ricci_triple(2, 5, jets)
    assert multi[0] == pytest.approx(tri[0], rel=1e-14)
    assert multi[1] == pytest.approx(tri[1], rel=1e-14)
    assert multi[4] == pytest.approx(tri[3], rel=1e-14)


def test_four_factor_fd_oracle():
    fns = [lambda r: r + 0.1 * math.sin(r), lambda r: 2 + math.cos(r), lambda r: 1 + r * r / 5,
           lambda r: 3 + 0.5 * math.sin(2 * r)]
    jets = [(1.7 + 0.1 * math.sin(1.7), 1 + 0.1 * math.cos(1.7), -0.1 * math.sin(1.7)),
            (2 + math.cos(1.7), -math.sin(1.7), -math.cos(1.7)),
            (1 + 1.7 ** 2 / 5, 2 * 1.7 / 5, 0.4),
            (3 + 0.5 * math.sin(3.4), math.cos(3.4), -2 * math.sin(3.4))]
    dims = (2, 2, 3, 2)
    exact = ricci_multi([FiberDescriptor.sphere(d) for d in dims], jets)
    fd = ricci_fd_oracle_multi(dims, fns, 1.7)
    assert all(abs(a - b) <= 1e-4 * max(1.0, abs(a)) for a, b in zip(exact, fd))
