"""Structural checks: step audits, apex boundary conditions, profile tables."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..interval import Interval
from ..profiles import INF, Constant, Linear, Piece, Power
from .certificate import CertifyPolicy, cell_lower_bounds, certify

EXACT_RTOL = 1e-12
AUDIT_SUBCELLS = 1000


@dataclass(frozen=True)
class AuditItem:
    """One checked claim: ``bound <= actual`` (or equality when ``exact``)."""

    name: str
    bound: float
    actual: float
    passed: bool
    exact: bool = False
    detail: str = ""


@dataclass
class StepAuditReport:
    step: str
    items: list[AuditItem] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.items) and all(i.passed for i in self.items)

    def summary(self) -> str:
        lines = [f"{self.step}: {'pass' if self.passed else 'FAIL'}"]
        for i in self.items:
            rel = "=" if i.exact else "<="
            lines.append(f"  [{'ok' if i.passed else 'FAIL'}] {i.name}: {i.bound:.6g} {rel} {i.actual:.6g} {i.detail}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# helpers


def _pieces_match(prof, t0: float, t1: float, want: Piece) -> bool:
    return all(pc.same_function(want)[0] for pc in prof.pieces_over(t0, t1))


def _pieces_kind(prof, t0: float, t1: float, kind) -> bool:
    return all(isinstance(pc.seg, kind) for pc in prof.pieces_over(t0, t1))


def _sample_ts(t0: float, t1: float, count: int = 64) -> list[float]:
    if math.isinf(t0):
        t0 = t1 - 50.0
    if math.isinf(t1):
        t1 = t0 + 50.0
    return [t0 + (t1 - t0) * (j + 0.5) / count for j in range(count)]


def _f2_ricci_at(spec, i: int, t: float) -> float:
    """``f_i^2 Ric_ii`` at log-radius ``t``; finite even when ``f_i`` underflows."""
    jets = [p.log_jet(t) for p in spec.profiles]
    fib = spec.fibers[i]
    ell, p, q = jets[i]
    cross = sum(p * pl * f.dim for l, ((_, pl, _), f) in enumerate(zip(jets, spec.fibers)) if l != i)
    e = math.exp(ell)
    return fib.ricci_lower - (fib.dim - 1) * (p * e) ** 2 - (q + cross) * e * e


def _exact_item(name: str, spec, comp: int, region, formula, symbolic: bool, value=None) -> AuditItem:
    """Pointwise ``r^2 Ric`` (or ``value(t)``) against a closed form on ``region``, plus the piece check."""
    worst = 0.0
    expected_min = INF
    for t in _sample_ts(*region):
        got = value(t) if value else spec.scaled_ricci_at(t)[comp]
        want = formula(t)
        expected_min = min(expected_min, want)
        worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    ok = symbolic and worst <= EXACT_RTOL
    return AuditItem(name, expected_min, expected_min * (1 - worst), ok, exact=True,
                     detail=f"(max rel err {worst:.2e}, closed-form pieces {'yes' if symbolic else 'no'})")


def _region_certificate(name: str, spec, region, depth: int = 20) -> AuditItem:
    cert = certify(spec, region[0], region[1], CertifyPolicy(max_depth=depth))
    return AuditItem(name, 0.0, cert.margin, cert.passed, detail=f"({len(cert.cells)} cells)")


def _second_derivative_sign(name: str, prof, region, sign: int, cells: int = 256) -> AuditItem:
    t0, t1 = region
    worst = -INF if sign < 0 else INF
    h = (t1 - t0) / cells
    for j in range(cells):
        e = prof.enclose(t0 + j * h, t1 if j == cells - 1 else t0 + (j + 1) * h)
        worst = max(worst, e.q.hi) if sign < 0 else min(worst, e.q.lo)
    ok = worst <= 0 if sign < 0 else worst >= 0
    return AuditItem(name, 0.0, -worst if sign < 0 else worst, ok, detail="(sign of f'' from enclosures)")


def _fiber_times_f2(i: int, fibers, encs) -> Interval:
    """Enclosure of ``f_i^2 Ric_ii``: ``kappa - (n_i - 1) f'^2 - (q + cross) e^(2 ell)``."""
    e = encs[i]
    cross = Interval(0.0)
    for l, other in enumerate(encs):
        if l != i:
            cross = cross + e.p * other.p * float(fibers[l].dim)
    return (Interval(fibers[i].ricci_lower) - e.d1.sqr() * float(fibers[i].dim - 1)
            - (e.q + cross) * (e.lnu * 2.0).exp())


def _check_triple(spec) -> None:
    if getattr(spec, "names", None) != ("phi", "psi", "rho"):
        raise ValueError("the step audit needs a triple spec in its own layout")


# ---------------------------------------------------------------------------
# Model I


def _m1_step1(spec, c) -> list[AuditItem]:
    m, n, k = c.m, c.n, c.k
    T1 = c.ln_R["R1"]
    # pointwise samples only where (n-1) r^2 / delta^2 is a finite double
    inner = (max(spec.origin, c.ln_delta - 300.0), min(T1 - math.log(10.0), c.ln_delta + 300.0))
    # with psi constant every term of Ric22 but the curvature one carries psi' = 0
    symbolic = _pieces_kind(spec.psi, -INF, inner[1], Constant)
    items = [_exact_item("Ric22 = (n-1)/delta^2 on (0, R1/10]", spec, 2, inner,
                         lambda t: (n - 1) * math.exp(2 * (t - c.ln_delta)), symbolic)]
    items.append(AuditItem("0 < delta1 < k/2", c.ln_delta_1, math.log(k / 2), c.ln_delta_1 < math.log(k / 2),
                           detail="(natural logs)"))
    # the Ric00 display, on the support of the psi, rho bridges where their convexity is paid
    eps, beta = c.epsilon, c.extra["beta"]
    R1 = math.exp(T1)
    bound = (m * (1 - eps - k) / (100 * R1 * (1 - eps + 9 * k)) - (n + 2) * beta / R1) / R1
    lo, hi = T1 + math.log(0.5), T1 + math.log(1.5)
    worst = INF
    h = (hi - lo) / AUDIT_SUBCELLS
    for j in range(AUDIT_SUBCELLS):
        a, b = lo + j * h, lo + (j + 1) * h
        lb = cell_lower_bounds(spec.fibers, spec.profiles, a, b)[0]
        worst = min(worst, lb * math.exp(-2 * b) if lb >= 0 else lb * math.exp(-2 * a))
    items.append(AuditItem("Ric00 >= R1^-1 [m(1-eps-k)/(100 R1 (1-eps+9k)) - (n+2) delta1/delta]",
                           bound, worst, bound <= worst, detail="(bridge support [R1/2, 3R1/2])"))
    items.append(_region_certificate("Ric >= 0 on [R1/10, 10 R1]", spec, c.regions["step1"]))
    return items


def _m1_step2(spec, c) -> list[AuditItem]:
    m, n, k = c.m, c.n, c.k
    d1, d = math.exp(c.ln_delta_1), math.exp(c.ln_delta)
    bracket = 0.5 - 20 * (m * k * d1 * d + n * d1 * d1)
    lo, hi = c.regions["step2"]
    worst = INF
    h = (hi - lo) / AUDIT_SUBCELLS
    for j in range(AUDIT_SUBCELLS):
        encs = [p.enclose(lo + j * h, lo + (j + 1) * h) for p in spec.profiles]
        worst = min(worst, _fiber_times_f2(2, spec.fibers, encs).lo)
    return [
        AuditItem("rho^2 Ric33 >= 1/2 - 20 (m k delta1 delta + n delta1^2)", bracket, worst, bracket <= worst,
                  detail=f"({AUDIT_SUBCELLS} subintervals)"),
        _second_derivative_sign("rho concave at R2", spec.rho, (lo, hi), -1),
        _region_certificate("Ric >= 0 on the R2 bridge", spec, (lo, hi)),
    ]


def _m1_step3(spec, c) -> list[AuditItem]:
    m, n, k, s = c.m, c.n, c.k, c.s
    t4 = c.ln_R["R4"]
    tail = (t4, t4 + math.log(10.0))
    symbolic = (_pieces_match(spec.phi, *tail, Piece(Linear(k, 0.0), 0.0, 0.0, -INF, INF))
                and _pieces_match(spec.psi, *tail, Piece(Linear(k, 0.0), 0.0, 0.0, -INF, INF))
                and _pieces_kind(spec.rho, *tail, Power)
                and all(pc.seg.s == s for pc in spec.rho.pieces_over(*tail)))
    ric11 = (m - 1) * (1 - k * k) / (k * k) - (n + 2 * s)
    return [
        _exact_item("Ric11 = (m-1)(1-k^2)/(k^2 r^2) - (n+2s)/r^2 on [R4, 10 R4]", spec, 1, tail,
                    lambda t: ric11, symbolic),
        AuditItem("(m-1)(1-k^2)/k^2 - (n+2s) > 0", 0.0, ric11, ric11 > 0),
        _exact_item("Ric00 = 2s(1-s)/r^2 on [R4, 10 R4]", spec, 0, tail, lambda t: 2 * s * (1 - s), symbolic),
        _region_certificate("Ric >= 0 on the Step 3 blends", spec, c.regions["step3"]),
    ]


def _m1_step4(spec, c) -> list[AuditItem]:
    cap, tail = c.regions["step4"], c.regions["tail"]
    k = c.k
    symbolic = _pieces_kind(spec.rho, *tail, Constant)
    ric11 = (c.m - 1) * (1 - k * k) / (k * k) - c.n
    return [
        _second_derivative_sign("rho concave on the cap", spec.rho, cap, -1),
        _region_certificate("Ric >= 0 on the cap", spec, cap),
        _exact_item("Ric11 = ((m-1)(1-k^2)/k^2 - n)/r^2 beyond the cap", spec, 1, (tail[0], tail[0] + 50.0),
                    lambda t: ric11, symbolic),
    ]


# ---------------------------------------------------------------------------
# Model II


def _m2_rho_constant(spec, c) -> AuditItem:
    lam = c.ln_lambda["lambda"]
    ok = all(isinstance(pc.seg, Constant) and pc.same_function(Piece(Constant(1.0), 0.0, lam, -INF, INF))[0]
             for pc in spec.rho.pieces)
    return AuditItem("rho = lambda on (0, inf)", lam, lam if ok else math.nan, ok, exact=True)


def _m2_step1(spec, c) -> list[AuditItem]:
    reg = c.regions["step1"]
    return [_m2_rho_constant(spec, c), _second_derivative_sign("psi concave at R1", spec.psi, reg, -1),
            _region_certificate("Ric >= 0 on the R1 bridge", spec, reg)]


def _m2_step2(spec, c) -> list[AuditItem]:
    reg = c.regions["step2"]
    t2 = c.ln_R["R2"]
    return [_second_derivative_sign("phi convex at R2", spec.phi, (t2 + math.log(0.5), t2 + math.log(1.5)), +1),
            _region_certificate("Ric >= 0 from R2 to R3", spec, reg)]


def _m2_step3(spec, c) -> list[AuditItem]:
    m, n, eps = c.m, c.n, c.epsilon
    cap, tail = c.regions["step3"], c.regions["tail"]
    probe = (tail[0], tail[0] + 50.0)
    cone = Piece(Linear(1.0 - eps, 0.0), 0.0, 0.0, -INF, INF)
    symbolic = _pieces_match(spec.phi, *tail, cone) and _pieces_kind(spec.psi, *tail, Constant)
    surplus = (m - 1) * ((1 - eps) ** -2 - 1)
    return [
        _second_derivative_sign("psi concave on the cap", spec.psi, cap, -1),
        _region_certificate("Ric >= 0 on the cap", spec, cap),
        _exact_item("Ric11 = (m-1)((1-eps)^-2 - 1)/r^2 beyond the cap", spec, 1, probe, lambda t: surplus, symbolic),
        _exact_item("psi^2 Ric22 = n-1 beyond the cap", spec, 2, probe, lambda t: float(n - 1), symbolic,
                    value=lambda t: _f2_ricci_at(spec, 1, t)),
    ]


STEPS = {
    "model1.step1": _m1_step1, "model1.step2": _m1_step2, "model1.step3": _m1_step3, "model1.step4": _m1_step4,
    "model2.step1": _m2_step1, "model2.step2": _m2_step2, "model2.step3": _m2_step3,
}


def step_inequality_audit(spec, constants, step: str) -> StepAuditReport:
    """Check the per-step sufficient estimates of a local model.

    ``step`` is one of ``model1.step1`` .. ``model1.step4`` or
    ``model2.step1`` .. ``model2.step3``.
    """
    fn = STEPS.get(step)
    if fn is None:
        raise ValueError(f"unknown step {step!r}; expected one of {sorted(STEPS)}")
    _check_triple(spec)
    return StepAuditReport(step, fn(spec, constants))


# ---------------------------------------------------------------------------
# apex boundary conditions


@dataclass(frozen=True)
class BoundaryCondition:
    profile: str
    condition: str
    residual: float
    passed: bool


@dataclass
class BoundaryReport:
    origin: float
    cones: tuple[str, ...]
    conditions: list[BoundaryCondition]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def failures(self) -> list[BoundaryCondition]:
        return [c for c in self.conditions if not c.passed]


def _linear_u(pc, t0: float) -> float:
    """``a + b e^(sigma - t0)``, the origin value of ``f / r`` up to ``e^kappa``."""
    g = pc.seg
    if g.b == 0.0:
        return g.a
    z = pc.sigma - t0
    return g.a + g.b * math.exp(z) if z < 709 else math.copysign(INF, g.b)


def _zero_tolerance(pc, t0: float) -> float:
    """Slack on ``f(origin) / r`` from rounding in the log-positions ``sigma`` and ``t0``."""
    g = pc.seg
    if not isinstance(g, Linear) or t0 == -INF or g.b == 0.0:
        return 0.0
    z = pc.sigma - t0
    return 4 * abs(g.b) * math.exp(min(z, 709.0)) * (math.ulp(abs(pc.sigma)) + math.ulp(abs(t0)) + math.ulp(abs(z)))


def _vanishes_at_origin(prof, t0: float) -> bool:
    pc = prof.pieces[0]
    if not isinstance(pc.seg, Linear):
        return False
    if t0 == -INF:
        return pc.seg.b == 0.0
    return abs(_linear_u(pc, t0)) <= max(_zero_tolerance(pc, t0), 4 * math.ulp(abs(pc.seg.a)))


def _origin_derivatives(prof, t0: float) -> tuple[float, float, float]:
    """``(f / r, f', f'')`` at the origin from the first piece's closed form."""
    pc = prof.pieces[0]
    g = pc.seg
    ek = math.exp(pc.kappa)
    if isinstance(g, Constant):
        return INF, 0.0, 0.0
    if isinstance(g, Linear):
        if t0 == -INF:
            return (0.0 if g.b == 0 else INF), ek * g.a, 0.0
        return ek * _linear_u(pc, t0), ek * g.a, 0.0
    if t0 == -INF:
        if isinstance(g, Power):
            return 0.0, (ek * g.a if g.s == 1 else (0.0 if g.s > 1 else INF)), math.nan
        return math.nan, math.nan, math.nan
    x0 = math.exp(t0 - pc.sigma)
    v, d, dd = g.local(x0)
    # f'' = e^(kappa - sigma) g'', kept in logs since sigma can be of order -1e9
    d2 = 0.0 if dd == 0 else math.copysign(math.exp(min(pc.kappa - pc.sigma + math.log(abs(dd)), 709.0)), dd)
    return ek * v / x0, ek * d, d2


def verify_boundary_conditions(spec, cone=None) -> BoundaryReport:
    """Smoothness at the origin: cone fibers need ``f = 0, f' = 1, f'' = 0``, the rest ``f > 0, f' = 0``.

    ``cone`` names (or indexes) the fiber that closes up; by default every
    profile vanishing at the origin is treated as one.
    """
    t0 = spec.origin
    names = list(spec.names)
    if cone is None:
        cones = [i for i, p in enumerate(spec.profiles) if _vanishes_at_origin(p, t0)]
    else:
        cones = [cone if isinstance(cone, int) else names.index(cone)]
    out = []
    for i, prof in enumerate(spec.profiles):
        val, d, dd = _origin_derivatives(prof, t0)
        nm = names[i]
        if i in cones:
            tol = math.exp(prof.pieces[0].kappa) * _zero_tolerance(prof.pieces[0], t0)
            out.append(BoundaryCondition(nm, "f(origin) = 0", abs(val), abs(val) <= tol))
            out.append(BoundaryCondition(nm, "f'(origin) = 1", abs(d - 1.0), d == 1.0))
            out.append(BoundaryCondition(nm, "f''(origin) = 0", abs(dd), dd == 0.0))
        else:
            out.append(BoundaryCondition(nm, "f(origin) > 0", 0.0 if val > 0 else abs(val), val > 0))
            out.append(BoundaryCondition(nm, "f'(origin) = 0", abs(d), d == 0.0))
            flat = isinstance(prof.pieces[0].seg, Constant)
            out.append(BoundaryCondition(nm, "constant near the origin", 0.0 if flat else math.nan, flat))
    return BoundaryReport(t0, tuple(names[i] for i in cones), out)


# ---------------------------------------------------------------------------
# profile tables


@dataclass(frozen=True)
class TableCheck:
    row: str
    profile: str
    expected: tuple
    passed: bool
    worst: float


def check_table(spec, rows) -> list[TableCheck]:
    """Exact segment inspection of ``rows`` (see ``constructions.TableRow``)."""
    from ..constructions import expected_piece

    out = []
    for row in rows:
        for prof, entry in zip(spec.profiles, row.entries):
            pcs = prof.pieces_over(row.lo, row.hi)
            if entry[0] == "const" and entry[1] is None:
                ok = bool(pcs) and all(isinstance(pc.seg, Constant) for pc in pcs)
                worst = max((pcs[0].same_function(pc)[1] for pc in pcs), default=INF) if ok else INF
                ok = ok and worst <= EXACT_RTOL
            else:
                want = expected_piece(entry)
                res = [pc.same_function(want) for pc in pcs]
                worst = max((w for _, w in res), default=INF)
                ok = bool(res) and all(r for r, _ in res)
            out.append(TableCheck(row.name, prof.name, entry, ok, worst))
    return out
