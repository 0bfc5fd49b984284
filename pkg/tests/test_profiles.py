import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from warpforge.profiles import (INF, Bridge, BridgeInfeasible, Constant, D2Constraint, GluingError, Linear, LogBlend,
                                Piece, PiecewiseProfile, Power, ProfileBuilder, ProfileDomainError,
                                certify_bridge_d2, certify_bridge_positive, concave_cap, glue, hermite_bridge,
                                quintic_hermite, single, smooth_min)

frames = st.tuples(st.floats(-3, 3), st.floats(-3, 3))


@st.composite
def pieces(draw):
    sigma, kappa = draw(frames)
    kind = draw(st.sampled_from(["constant", "linear", "power", "logblend"]))
    if kind == "constant":
        seg = Constant(draw(st.floats(0.1, 10)))
    elif kind == "linear":
        seg = Linear(draw(st.floats(0.05, 2)), draw(st.floats(0.0, 2)))
    elif kind == "power":
        seg = Power(draw(st.floats(0.1, 3)), draw(st.floats(-1, 2)))
    else:
        seg = LogBlend(draw(st.floats(0.01, 0.2)), 1.0, draw(st.floats(1.0, 2.0)), draw(st.floats(0.0, 1.0)))
    return Piece(seg, sigma, kappa, -INF, INF)


def real_jet(pc, r):
    """``f = e^(kappa + sigma) g(r e^-sigma)`` and its derivatives, from the local frame."""
    x = r * math.exp(-pc.sigma)
    g, g1, g2 = pc.seg.local(x)
    s = math.exp(pc.kappa + pc.sigma)
    return s * g, s * g1 * math.exp(-pc.sigma), s * g2 * math.exp(-2 * pc.sigma)


def close(a, b, rtol=1e-9):
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


@given(pieces(), st.floats(-2, 2))
def test_log_jet_matches_local_frame(pc, t):
    r = math.exp(t)
    f, f1, f2 = real_jet(pc, r)
    lnu, p, q = pc.log_jet(t)
    assert close(lnu, math.log(f / r))
    assert close(p, r * f1 / f)
    assert close(q, r * r * f2 / f)


@given(pieces(), st.floats(-2, 2), st.floats(0.001, 1.0))
def test_enclosure_contains_point_jets(pc, t0, w):
    e = pc.enclose(t0, t0 + w)
    for j in range(5):
        t = t0 + w * j / 4
        lnu, p, q = pc.log_jet(t)
        assert e.lnu.contains(lnu) and e.p.contains(p) and e.q.contains(q)


@given(pieces(), st.floats(-2, 2), st.floats(-5, 5))
def test_rescale_shifts_log_radius(pc, t, a):
    prof = PiecewiseProfile((pc,))
    got, want = prof.rescale_log(a).log_jet(t), prof.log_jet(t + a)
    assert all(close(x, y, 1e-12) for x, y in zip(got, want))


@given(pieces(), st.floats(-2, 2), st.floats(-5, 5))
def test_fiber_scale_moves_only_the_value(pc, t, c):
    prof = PiecewiseProfile((pc,))
    a, b = prof.log_jet(t), prof.scale_fiber_log(c).log_jet(t)
    assert close(b[0], a[0] + c, 1e-12) and a[1:] == b[1:]


@given(st.floats(0.05, 2), st.floats(0.01, 2), frames, st.floats(-4, 4))
def test_same_function_is_frame_independent(a, b, frame, d):
    sigma, kappa = frame
    p1 = Piece(Linear(a, b), sigma, kappa, -INF, INF)
    p2 = Piece(Linear(a, b * math.exp(-d)), sigma + d, kappa, -INF, INF)
    assert p1.same_function(p2)[0]
    p3 = Piece(Linear(a * 1.01, b), sigma, kappa, -INF, INF)
    assert not p1.same_function(p3)[0]


@given(st.floats(0.1, 3), st.floats(-1, 2), frames, st.floats(-4, 4))
def test_power_same_function_across_frames(a, s, frame, d):
    pc = Piece(Power(a, s), *frame, -INF, INF)
    other = pc.shifted(d)
    assume(abs(d) > 1e-6)
    # shifting the frame changes the function unless compensated
    fixed = Piece(Power(a * math.exp(d * (s - 1)), s), frame[0] + d, frame[1], -INF, INF)
    assert fixed.same_function(pc)[0]
    assert other.same_function(pc)[0] == (abs(s - 1) * abs(d) < 1e-9)


def test_eval_real_units():
    prof = single(Linear(2.0, 1.0), "phi")
    v, d1, d2 = prof.eval(3.0)
    assert (v, d1, d2) == pytest.approx((7.0, 2.0, 0.0))
    assert single(Constant(1.0), kappa=math.log(5.0)).eval(0.2)[0] == pytest.approx(5.0)


def test_domain_errors():
    prof = single(Linear(1.0, 0.0), origin=0.0)
    with pytest.raises(ProfileDomainError):
        prof.eval(0.5)
    with pytest.raises(ProfileDomainError):
        prof.eval(-1.0)
    with pytest.raises(ProfileDomainError):
        single(Linear(1.0, -2.0)).log_jet(0.0)
    with pytest.raises(ValueError):
        Constant(-1.0)
    with pytest.raises(ValueError):
        Power(0.0, 1.0)


def test_profile_structure_is_validated():
    a = Piece(Constant(1.0), 0.0, 0.0, -INF, 0.0)
    with pytest.raises(ValueError):
        PiecewiseProfile(())
    with pytest.raises(ValueError):
        PiecewiseProfile((a, Piece(Constant(1.0), 0.0, 0.0, 1.0, INF)))
    with pytest.raises(ValueError):
        PiecewiseProfile((a,))


def test_glue_and_coalesce():
    left = single(Linear(1.0, 0.0), "phi")
    right = PiecewiseProfile((Piece(Linear(1.0, 0.0), 0.0, 0.0, -1.0, 1.0), Piece(Constant(1.0), 0.0, 0.0, 1.0, INF)))
    out = glue(left, right, -0.5, 0.5)
    assert out.breakpoints == [1.0]
    assert out.log_jet(-10.0) == (0.0, 1.0, 0.0)
    with pytest.raises(GluingError):
        glue(left, single(Linear(2.0, 0.0)), -0.5, 0.5)
    with pytest.raises(GluingError):
        glue(left, left, 0.5, 0.5)


@given(pieces(), st.floats(-2, 2), st.floats(0.01, 3))
def test_sup_log_bounds_samples(pc, t0, w):
    prof = PiecewiseProfile((pc,))
    sup = prof.sup_log(t0, t0 + w)
    assert all(prof.log_value(t0 + w * j / 16) <= sup for j in range(17))


def test_sup_log_of_unbounded_tail():
    assert single(Constant(2.0)).sup_log(0.0, INF) >= math.log(2.0)
    assert single(Linear(1.0, 0.0)).sup_log(0.0, INF) == INF


def test_quintic_hermite_matches_endpoint_data():
    c = quintic_hermite(1.0, 0.5, -0.2, 2.0, 0.0, 0.0)
    b = Bridge(c, 0.0, 1.0)
    assert b.poly(0.0) == pytest.approx((1.0, 0.5, -0.2))
    assert b.poly(1.0) == pytest.approx((2.0, 0.0, 0.0), abs=1e-15)
    # flat end: the last second difference vanishes exactly
    assert c[3] - 2 * c[4] + c[5] == 0.0


def test_hermite_bridge_is_c2():
    left = Piece(Linear(1.0, 0.0), 0.0, 0.0, -INF, INF)
    right = Piece(Constant(1.5), 0.0, 0.0, -INF, INF)
    br = smooth_min(left, right, math.log(1.5), 0.3)
    assert isinstance(br.seg, Bridge)
    assert certify_bridge_d2(br.seg, -1) and certify_bridge_positive(br.seg)
    prof = PiecewiseProfile((left.with_range(-INF, br.lo), br, right.with_range(br.hi, INF)),
                            c2_breaks=frozenset({br.lo, br.hi}))
    assert all(rep.c2 for rep in prof.continuity_report())


def test_bridge_constraints_can_fail():
    left = Piece(Linear(1.0, 0.0), 0.0, 0.0, -INF, INF)
    right = Piece(Constant(1.5), 0.0, 0.0, -INF, INF)
    # a concave turn cannot be made convex
    with pytest.raises(BridgeInfeasible):
        smooth_min(left, right, math.log(1.5), 0.3, D2Constraint.convex())
    with pytest.raises(ValueError):
        hermite_bridge(left, right, 0.0, 1.5)


def test_concave_cap_ends_constant():
    f = Piece(Linear(1.0, 0.0), 0.0, 0.0, -INF, INF)
    br, cp, ln_lam = concave_cap(f, 0.0, 1.0)
    assert certify_bridge_d2(br.seg, -1)
    assert cp.log_jet(5.0)[1:] == (0.0, 0.0)
    assert cp.sigma + cp.kappa + math.log(cp.seg.v) == pytest.approx(ln_lam)
    prof = PiecewiseProfile((f.with_range(-INF, 0.0), br, cp.with_range(1.0, INF)), c2_breaks=frozenset({0.0, 1.0}))
    assert all(rep.c2 for rep in prof.continuity_report())
    with pytest.raises(BridgeInfeasible):
        concave_cap(Piece(Power(1.0, 2.0), 0.0, 0.0, -INF, INF), 0.0, 1.0)


def test_builder_coalesces_and_records_c2_breaks():
    b = ProfileBuilder(Piece(Linear(1.0, 0.0), 0.0, 0.0, -INF, INF), name="psi")
    b.join(Piece(Constant(2.0), 0.0, 0.0, -INF, INF), math.log(2.0), 0.3, sign=-1)
    prof = b.build()
    assert len(prof.pieces) == 3 and prof.name == "psi"
    assert set(prof.breakpoints) == set(prof.c2_breaks)


@given(pieces())
def test_dict_round_trip(pc):
    prof = PiecewiseProfile((pc,), "rho")
    assert PiecewiseProfile.from_dict(prof.to_dict()) == prof
