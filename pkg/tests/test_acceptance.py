"""Acceptance suite: one test per primary criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from warpforge.constructions import build_telescope
from warpforge.curvature import LinearProfilePair, ricci_fd_oracle, ricci_linear, ricci_triple, scaled_ricci
from warpforge.io import load, save, spec_document
from warpforge.profiles import Constant, Linear, LogBlend, Piece, PiecewiseProfile, Power, single
from warpforge.specs import TripleWarpSpec
from warpforge.verify import (cell_lower_bounds, certify, check_table, cone_window_scan, step_inequality_audit,
                              verify_nonneg_ricci)

RESULTS = []


def report(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# --- 1 -------------------------------------------------------------------


def test_closed_form_matches_generic():
    rng = np.random.default_rng(20240601)
    t = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        m, n = (int(x) for x in rng.integers(2, 5, 2))
        a1, b1, a2, b2 = rng.uniform(0.05, 2.0, 4)
        r = rng.uniform(0.05, 20.0)
        pair = LinearProfilePair(a1, b1, a2, b2)
        lin = ricci_linear(m, n, pair, r)
        gen = ricci_triple(m, n, pair.jets(r), r)
        worst = max(worst, max(abs(x - y) / max(1.0, abs(y)) for x, y in zip(lin, gen)))
    dt = time.perf_counter() - t
    report("1 closed form vs generic", worst <= 1e-12 and dt < 1.0,
           f"max rel err {worst:.3g} (tol 1e-12), {dt:.3f}s (limit 1s)")


# --- 2 -------------------------------------------------------------------

# (value, first, second derivative) triples with closed-form derivatives
TRIPLES = [
    (lambda r: (math.sin(r), math.cos(r), -math.sin(r)),
     lambda r: (math.cosh(r), math.sinh(r), math.cosh(r)),
     lambda r: (1 + r * r, 2 * r, 2.0)),
    (lambda r: (r, 1.0, 0.0),
     lambda r: (math.exp(r / 3), math.exp(r / 3) / 3, math.exp(r / 3) / 9),
     lambda r: (2 - math.cos(r), math.sin(r), math.cos(r))),
    (lambda r: (math.tanh(r), 1 - math.tanh(r) ** 2, -2 * math.tanh(r) * (1 - math.tanh(r) ** 2)),
     lambda r: (1 + r ** 3 / 10, 0.3 * r * r, 0.6 * r),
     lambda r: (math.sqrt(1 + r), 0.5 / math.sqrt(1 + r), -0.25 * (1 + r) ** -1.5)),
    (lambda r: (r / (1 + r), (1 + r) ** -2, -2 * (1 + r) ** -3),
     lambda r: (math.log(2 + r), 1 / (2 + r), -(2 + r) ** -2),
     lambda r: (1 + math.exp(-r), -math.exp(-r), math.exp(-r))),
    (lambda r: (r * math.exp(-r / 4), (1 - r / 4) * math.exp(-r / 4), (r / 16 - 0.5) * math.exp(-r / 4)),
     lambda r: (0.5 + r * r / 4, r / 2, 0.5),
     lambda r: (3 + math.atan(r), 1 / (1 + r * r), -2 * r / (1 + r * r) ** 2)),
]


def _fd_errors(triple, r, step, richardson):
    exact = ricci_triple(2, 2, [f(r) for f in triple], r)
    fd = ricci_fd_oracle(2, 2, [lambda x, f=f: f(x)[0] for f in triple], r, step, richardson)
    return max(abs(a - b) / max(1.0, abs(a)) for a, b in zip(exact, fd))


def test_fd_oracle_agrees():
    t = time.perf_counter()
    radii = np.linspace(0.5, 2.0, 50)
    worst = 0.0
    for triple in TRIPLES:
        for r in radii:
            worst = max(worst, _fd_errors(triple, float(r), None, True))
    # order: plain central differences at h and h/2 at a few points
    ratios = []
    for triple in TRIPLES:
        for r in (0.7, 1.3, 1.9):
            e1 = _fd_errors(triple, r, 1e-2, False)
            e2 = _fd_errors(triple, r, 5e-3, False)
            ratios.append(math.log2(e1 / e2))
    order = min(ratios)
    dt = time.perf_counter() - t
    ok = worst <= 1e-4 and 1.8 <= order and max(ratios) <= 2.2 and dt < 30
    report("2 FD oracle", ok, f"max rel err {worst:.3g} (tol 1e-4), observed order {order:.3f}..{max(ratios):.3f}, "
                              f"{dt:.1f}s (limit 30s)")


# --- 3 -------------------------------------------------------------------


def test_model_I_certifies(model1):
    t = time.perf_counter()
    spec, cons = model1
    ln_hi = cons.ln_R["R"] + math.log(10.0)
    cert = verify_nonneg_ricci(spec, (spec.origin, ln_hi))
    audits = [step_inequality_audit(spec, cons, f"model1.step{i}") for i in range(1, 5)]
    ric22 = [it for it in audits[0].items if it.name.startswith("Ric22")]
    dt = time.perf_counter() - t
    ok = cert.passed and all(a.passed for a in audits) and ric22 and all(it.exact for it in ric22) and dt < 60
    report("3 Model I(2,2,0.01)", ok, f"{cert.summary()}; step audits "
           f"{'/'.join('ok' if a.passed else 'FAIL' for a in audits)}; Ric22 exact={all(i.exact for i in ric22)}; "
           f"{dt:.1f}s (limit 60s)")


# --- 4 -------------------------------------------------------------------


def test_model_II_rho_constant(model2):
    t = time.perf_counter()
    spec, cons = model2
    pieces = spec.rho.pieces
    const = all(isinstance(pc.seg, Constant) for pc in pieces)
    probes = [min(max(0.0, pc.lo + 1.0), pc.hi - 1.0) if math.isfinite(pc.hi) else max(0.0, pc.lo + 1.0)
              for pc in pieces]
    values = {spec.rho.log_value(t) for t in probes}
    cert = certify(spec)
    dt = time.perf_counter() - t
    ok = const and len(values) == 1 and values == {0.0} and cert.passed and dt < 60
    report("4 Model II(2,2,0.01,1)", ok, f"rho constant={const and len(values) == 1} (ln rho {values}); "
                                         f"{cert.summary()}; {dt:.1f}s (limit 60s)")


# --- 5 -------------------------------------------------------------------


def test_connector_table(connector):
    spec, cons = connector
    checks = check_table(spec, cons.extra["table"])
    rows = {c.row for c in checks}
    ln_c, ln_L, ln_R = cons.extra["ln_c"], math.log(cons.L), cons.ln_R["R"]
    d1 = cons.ln_delta_1 < ln_c - 2 * ln_L - 2 * ln_R
    d2 = cons.ln_delta_2 < ln_c - ln_L
    ok = len(rows) == 5 and all(c.passed for c in checks) and d1 and d2
    report("5 connector(2,3,0.01,10)", ok,
           f"{sum(c.passed for c in checks)}/{len(checks)} table entries over {len(rows)} rows; "
           f"ln delta1 {cons.ln_delta_1:.6g} < {ln_c - 2 * ln_L - 2 * ln_R:.6g}: {d1}; "
           f"ln delta2 {cons.ln_delta_2:.6g} < {ln_c - ln_L:.6g}: {d2}")


# --- 6 -------------------------------------------------------------------


def test_telescope_three_stages():
    t = time.perf_counter()
    stages = build_telescope(3, 2, 3)
    a = cone_window_scan(stages, "A")
    b = cone_window_scan(stages, "B")
    psi_a = [r.psi for r in a]
    psi_b = [r.psi for r in b]
    targets = {r.target for r in a} == {"R^3"} and {r.target for r in b} == {"R^4"}
    decreasing = all(x > y for x, y in zip(psi_a, psi_a[1:])) and all(x > y for x, y in zip(psi_b, psi_b[1:]))
    exact = all(r.active_exact and r.j_consistent for r in a + b)
    certified = all(s.certificate.passed and s.smoothed_certificate.passed for s in stages)
    dt = time.perf_counter() - t
    ok = targets and decreasing and exact and certified and dt < 300
    report("6 telescope(3,2) 3 stages", ok,
           f"targets A={a[0].target} B={b[0].target}; psi_A {[f'{x:.3g}' for x in psi_a]}, "
           f"psi_B {[f'{x:.3g}' for x in psi_b]} strictly decreasing={decreasing}; "
           f"active exactly (1-eps_i) r={exact}; {dt:.1f}s (limit 300s)")


# --- 7 -------------------------------------------------------------------


def _random_profile(rng, name):
    kind = rng.integers(0, 4)
    if kind == 0:
        return single(Constant(1.0), name, kappa=rng.uniform(-3, 3))
    if kind == 1:
        return single(Linear(rng.uniform(0.05, 1.0), rng.uniform(0.0, 2.0)), name, sigma=rng.uniform(-2, 2))
    if kind == 2:
        return single(Power(1.0, rng.uniform(0.05, 1.0)), name, kappa=rng.uniform(-2, 2))
    return single(LogBlend(rng.uniform(0.05, 0.2), 1.0, rng.uniform(1.0, 2.0), rng.uniform(0.0, 1.0)), name)


def random_spec(rng):
    m, n = (int(x) for x in rng.integers(2, 5, 2))
    return TripleWarpSpec(m, n, _random_profile(rng, "phi"), _random_profile(rng, "psi"),
                          _random_profile(rng, "rho"))


def test_fiber_scale_law():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        spec = random_spec(rng)
        for c in (1.0, 0.5, 0.1):
            scaled = spec.with_profiles([spec.phi, spec.psi, spec.rho.scale_fiber(c)])
            t = rng.uniform(-3, 3)
            a, b = spec.scaled_ricci_at(t), scaled.scaled_ricci_at(t)
            for i in range(3):
                worst = max(worst, abs(a[i] - b[i]) / max(1.0, abs(a[i])))
            # r^2 (c^-2 - 1) / rho^2 in log form
            want = (c ** -2 - 1) * math.exp(-2 * spec.rho.log_jet(t)[0])
            worst = max(worst, abs((b[3] - a[3]) - want) / max(1.0, abs(a[3]), abs(b[3])))
    report("7 fiber-scale law", worst <= 1e-12, f"100 specs x c in {{1, 1/2, 1/10}}, max rel err {worst:.3g}")


# --- 8 -------------------------------------------------------------------


POINT_RTOL = 1e-12


def _sample_cell(rng, cell):
    hi = cell.t_hi if math.isfinite(cell.t_hi) else cell.t_lo + 50.0
    lo = cell.t_lo if math.isfinite(cell.t_lo) else hi - 50.0
    return rng.uniform(lo, hi)


def test_certificate_soundness(model1, model2, connector, telescope):
    rng = np.random.default_rng(11)
    specs = [("model1", *model1), ("model2", *model2), ("connector", *connector)]
    certs = [(name, spec, cons.extra["certificate"]) for name, spec, cons in specs]
    for st in telescope:
        certs.append((f"stage{st.index}", st.spec, st.certificate))
        certs.append((f"stage{st.index}.smoothed", st.smoothed, st.smoothed_certificate))
    per = 10_000 // len(certs) + 1
    total, bad, strict, gap = 0, [], 0, 0.0
    for name, spec, cert in certs:
        for _ in range(per):
            cell = cert.cells[rng.integers(len(cert.cells))]
            t = _sample_cell(rng, cell)
            if t <= spec.origin:
                continue
            val = scaled_ricci(spec.fibers, [p.log_jet(t) for p in spec.profiles])
            total += 1
            # the bound encloses the exact value; the double evaluation is off by a few ulps
            for v, lb in zip(val, cell.lower):
                strict += v < lb
                gap = max(gap, lb - v)
                if v < lb - POINT_RTOL * max(1.0, abs(v)):
                    bad.append((name, t, v, lb))
    report("8 certificate soundness", total >= 10_000 and not bad,
           f"{total} pointwise evaluations over {len(certs)} certificates, {len(bad)} below their cell bound "
           f"beyond rounding ({strict} within rounding, worst gap {gap:.3g})")


# --- 9 -------------------------------------------------------------------


def test_round_trip(model2, connector, tmp_path):
    same = []
    for name, (spec, cons) in (("model2", model2), ("connector", connector)):
        path = tmp_path / f"{name}.json"
        save(path, spec_document(spec, name, cons))
        loaded = load(path).spec
        same.append(certify(spec).to_json() == certify(loaded).to_json())
    report("9 round trip", all(same), f"byte-identical certificates after save/load: {same}")
