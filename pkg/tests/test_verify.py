import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import flat_spec
from warpforge.constructions import PatternError
from warpforge.constructions.models import line
from warpforge.curvature import scaled_ricci
from warpforge.profiles import INF, Constant, Linear, Piece, PiecewiseProfile, Power, single
from warpforge.specs import TripleWarpSpec
from warpforge.verify import (CertifyPolicy, cell_lower_bounds, certify, check_table, combine_psi, cone_window_scan,
                              log_grid, sample_row, sample_table, step_inequality_audit, to_csv,
                              verify_boundary_conditions, verify_nonneg_ricci, window_deviations, worker_count)
from warpforge.verify.audit import STEPS
from warpforge.verify.samples import fmt
from warpforge.verify.windows import window_bounds, window_ln_scale

# --- certificates ---------------------------------------------------------------


def test_flat_spec_passes_with_zero_margin():
    cert = certify(flat_spec())
    assert cert.passed and cert.margin == 0.0
    assert all(c.lower[0] == 0.0 and c.lower[1] == 0.0 for c in cert.cells)
    assert cert.components == ("ric00", "ric11", "ric22", "ric33")


def test_convex_rho_tail_fails():
    spec = flat_spec().with_profiles([single(Linear(1.0, 0.0)), single(Constant(1.0)),
                                      single(Power(1.0, 2.0), "rho")])
    cert = certify(spec, -1.0, 1.0)
    assert not cert.passed and cert.status == "fail"
    # r^2 Ric00 = -2 r^2 rho''/rho = -4 throughout
    assert all(c.lower[0] < 0 for c in cert.cells)


def test_verify_interval_and_errors(model1):
    spec, _ = model1
    cert = verify_nonneg_ricci(spec, (0.0, 5.0))
    assert cert.t_lo == 0.0 and cert.t_hi == 5.0 and cert.passed
    with pytest.raises(ValueError):
        verify_nonneg_ricci(spec, (1.0, 1.0))


def test_refinement_is_monotone(model1):
    spec, _ = model1
    margins = [certify(spec, policy=CertifyPolicy(max_depth=d)).margin for d in range(0, 5)]
    assert all(a <= b for a, b in zip(margins, margins[1:]))
    assert margins[-1] >= 0


def test_certificate_json_is_deterministic(model2):
    spec, _ = model2
    a, b = certify(spec).to_json(), certify(spec).to_json()
    assert a == b
    assert '"status": "pass"' in a and '"-inf"' in a


def test_worker_count(monkeypatch):
    monkeypatch.setenv("WARPFORGE_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("WARPFORGE_THREADS", "junk")
    assert worker_count() == 1


def test_parallel_certificate_matches_serial(model1):
    spec, _ = model1
    assert certify(spec, workers=2).to_json() == certify(spec, workers=1).to_json()


@st.composite
def smooth_specs(draw):
    def prof(name):
        kind = draw(st.sampled_from(["const", "line", "power"]))
        if kind == "const":
            return single(Constant(1.0), name, kappa=draw(st.floats(-2, 2)))
        if kind == "line":
            return single(Linear(draw(st.floats(0.05, 1)), draw(st.floats(0, 2))), name)
        return single(Power(1.0, draw(st.floats(0.1, 1.0))), name, kappa=draw(st.floats(-2, 2)))

    return TripleWarpSpec(draw(st.integers(2, 4)), draw(st.integers(2, 4)), prof("phi"), prof("psi"), prof("rho"))


@given(smooth_specs(), st.integers(0, 2**32 - 1))
def test_cell_bounds_are_sound(spec, seed):
    rng = np.random.default_rng(seed)
    cert = certify(spec, -2.0, 2.0, CertifyPolicy(max_depth=4))
    assert cert.passed == (cert.margin >= 0)
    for cell in cert.cells:
        for t in rng.uniform(cell.t_lo, cell.t_hi, 4):
            val = scaled_ricci(spec.fibers, [p.log_jet(t) for p in spec.profiles])
            assert all(v >= lb - 1e-12 * max(1.0, abs(v)) for v, lb in zip(val, cell.lower))


@given(smooth_specs(), st.floats(-2, 1.5), st.floats(0.01, 0.5))
def test_subcell_bounds_refine(spec, t0, w):
    whole = cell_lower_bounds(spec.fibers, spec.profiles, t0, t0 + w)
    halves = [cell_lower_bounds(spec.fibers, spec.profiles, t0, t0 + w / 2),
              cell_lower_bounds(spec.fibers, spec.profiles, t0 + w / 2, t0 + w)]
    for h in halves:
        assert all(b >= a - 1e-12 * max(1.0, abs(a)) for a, b in zip(whole, h))


# --- step audits ---------------------------------------------------------------


@pytest.mark.parametrize("step", [s for s in STEPS if s.startswith("model1")])
def test_model_I_steps(model1, step):
    spec, cons = model1
    rep = step_inequality_audit(spec, cons, step)
    assert rep.passed, rep.summary()


@pytest.mark.parametrize("step", [s for s in STEPS if s.startswith("model2")])
def test_model_II_steps(model2, step):
    spec, cons = model2
    rep = step_inequality_audit(spec, cons, step)
    assert rep.passed, rep.summary()


def test_step1_ric22_exact(model1):
    spec, cons = model1
    items = step_inequality_audit(spec, cons, "model1.step1").items
    ric22 = [i for i in items if i.name.startswith("Ric22")]
    assert ric22 and all(i.exact and i.passed for i in ric22)


def test_step3_tail_formula(model1):
    spec, cons = model1
    items = step_inequality_audit(spec, cons, "model1.step3").items
    assert any(i.name.startswith("Ric11") and i.exact and i.passed for i in items)
    # closed form at a tail point, r^2 units
    k, s, m, n = cons.k, cons.s, cons.m, cons.n
    t = cons.ln_R["R4"] + 1.0
    assert spec.scaled_ricci_at(t)[1] == pytest.approx((m - 1) * (1 - k * k) / (k * k) - (n + 2 * s), rel=1e-12)
    assert spec.scaled_ricci_at(t)[0] == pytest.approx(2 * s * (1 - s), rel=1e-12)


def test_audit_errors(model1):
    spec, cons = model1
    with pytest.raises(ValueError):
        step_inequality_audit(spec, cons, "model3.step1")


# --- boundary conditions ----------------------------------------------------------


def _apex_spec(cone_piece, rho):
    t0 = -5.0
    phi = PiecewiseProfile((cone_piece.with_range(t0, INF),), "phi")
    return TripleWarpSpec(2, 2, phi, single(Constant(1.0), "psi", origin=t0), rho.__class__(
        tuple(pc.with_range(t0, pc.hi) if pc is rho.pieces[0] else pc for pc in rho.pieces), "rho"), t0)


def test_boundary_smooth_apex():
    # r - e^-5 vanishes at the origin with unit slope
    spec = _apex_spec(Piece(Linear(1.0, -1.0), -5.0, 0.0, -5.0, INF), single(Constant(2.0)))
    rep = verify_boundary_conditions(spec, "phi")
    assert rep.passed, rep.failures()
    assert rep.cones == ("phi",)


def test_boundary_cone_angle_fails():
    eps = 0.01
    spec = _apex_spec(Piece(Linear(1.0 - eps, -(1.0 - eps)), -5.0, 0.0, -5.0, INF), single(Constant(2.0)))
    fails = verify_boundary_conditions(spec, "phi").failures()
    assert [f.condition for f in fails] == ["f'(origin) = 1"]
    assert fails[0].residual == pytest.approx(eps, rel=1e-12)


def test_boundary_nonconstant_rho_fails():
    spec = _apex_spec(Piece(Linear(1.0, -1.0), -5.0, 0.0, -5.0, INF), single(Linear(1.0, 1.0)))
    conds = {f.condition for f in verify_boundary_conditions(spec, "phi").failures()}
    assert "f'(origin) = 0" in conds


def test_boundary_of_smoothed_stage(telescope):
    for st in telescope:
        assert verify_boundary_conditions(st.smoothed, "psi").passed


def test_check_table_detects_mismatch(connector):
    spec, cons = connector
    rows = cons.extra["table"]
    assert all(c.passed for c in check_table(spec, rows))
    bad = [type(r)(r.name, r.lo, r.hi, (("line", 0.5),) + r.entries[1:]) for r in rows]
    assert not all(c.passed for c in check_table(spec, bad))


# --- cone windows ----------------------------------------------------------------


devs = st.floats(0, 1)


@given(devs, st.lists(devs, min_size=1, max_size=4), devs, st.integers(0, 5), st.floats(0, 1))
def test_psi_dominates_and_is_monotone(active, collapsing, eps, which, bump):
    psi = combine_psi(active, collapsing, eps)
    assert psi >= max(active, eps, *collapsing)
    assert combine_psi(active + bump, collapsing, eps) >= psi
    assert combine_psi(active, collapsing, eps + bump) >= psi
    j = which % len(collapsing)
    more = list(collapsing)
    more[j] += bump
    assert combine_psi(active, more, eps) >= psi


def test_window_bounds():
    lo, hi = window_bounds(100.0)
    assert math.exp(lo) == pytest.approx(0.1) and math.exp(hi) == pytest.approx(5.0)


# frozen from the closed form psi = eps_i L_i^(1/2): active deviation and eps term are each eps_i L_i^(1/2) / 2
FROZEN_PSI = [0.0316227766016838, 0.001, 3.162277660168379e-05]


@pytest.mark.parametrize("mode,target", [("A", "R^3"), ("B", "R^4")])
def test_scan_values(telescope, mode, target):
    reps = cone_window_scan(telescope, mode)
    assert [r.stage for r in reps] == [1, 2, 3]
    assert all(r.target == target and r.active_exact and r.j_consistent for r in reps)
    assert [r.psi for r in reps] == pytest.approx(FROZEN_PSI, rel=1e-9)
    for r, st in zip(reps, telescope):
        assert r.psi == pytest.approx(st.epsilon * math.sqrt(st.L), rel=1e-9)
        assert r.psi >= r.active_deviation and r.psi >= r.eps_term
        assert r.j_checked == ((st.index, st.index + 1) if st.index < 3 else (3,))
    d = reps[0].to_dict()
    assert d["target"] == target and d["psi"] == reps[0].psi


def test_scan_active_roles(telescope):
    assert {r.active for r in cone_window_scan(telescope, "A")} == {"psi"}
    assert {r.active for r in cone_window_scan(telescope, "B")} == {"phi"}


@given(st.floats(-60, 60))
def test_scan_covariance(a):
    # rescaling the spec by e^a and the window scale by e^a leaves the window unchanged
    from conftest import TELESCOPE_CACHE

    st_ = TELESCOPE_CACHE()[0]
    ln_scale = window_ln_scale(st_, "A")
    base = window_deviations(st_.spec, ln_scale, st_.L, st_.epsilon, 1)
    moved = window_deviations(st_.spec.rescale_log(a), ln_scale + a, st_.L, st_.epsilon, 1)
    assert moved[0] == pytest.approx(base[0], rel=1e-9)
    for nm in base[3]:
        assert moved[3][nm] == pytest.approx(base[3][nm], rel=1e-9)


def test_multi_scan_modes(multi_telescope):
    fib = cone_window_scan(multi_telescope, "fiber")
    assert [r.target for r in fib] == ["C(M_1)", "C(M_2)"]
    assert [r.target_dim for r in fib] == [4, 3]
    a = cone_window_scan(multi_telescope, "A")
    assert all(r.target == "R^3" and r.active_exact for r in a)
    assert a[0].psi > a[1].psi


def test_scan_errors(telescope):
    with pytest.raises(ValueError):
        cone_window_scan([], "A")
    with pytest.raises(ValueError):
        cone_window_scan(telescope, "C")
    with pytest.raises(ValueError):
        cone_window_scan(telescope, "fiber")
    with pytest.raises(ValueError):
        cone_window_scan([object()], "A")
    st_ = telescope[0]
    with pytest.raises(PatternError):
        window_deviations(st_.spec, window_ln_scale(st_, "A"), st_.L, st_.epsilon, 0)


# --- samples -----------------------------------------------------------------------


def test_flat_sample_row():
    assert sample_row(flat_spec(), 1.0) == [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]


def test_sample_table_with_oracle():
    spec = TripleWarpSpec(2, 2, single(Linear(1.0, 0.5), "phi"), single(Linear(0.3, 1.0), "psi"),
                          single(Power(1.0, 0.5), "rho"))
    cols, rows = sample_table(spec, [0.7, 1.9], oracle=True)
    assert cols[-4:] == ["fd_ric00", "fd_ric11", "fd_ric22", "fd_ric33"]
    for row in rows:
        for a, b in zip(row[4:8], row[8:12]):
            assert abs(a - b) <= 1e-4 * max(1.0, abs(b))


def test_csv_and_grid():
    grid = log_grid(0.0, math.log(100.0), 3)
    assert grid == pytest.approx([1.0, 10.0, 100.0])
    assert log_grid(1.0, 2.0, 1) == [math.e]
    text = to_csv(flat_spec(), [1.0])
    assert text.splitlines() == ["r,phi,psi,rho,ric00,ric11,ric22,ric33", "1,1,1,1,0,0,1,1"]
    assert fmt(-0.0) == "0" and fmt(0.1) == "0.10000000000000001"
