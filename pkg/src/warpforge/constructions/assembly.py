"""Blocks, connectors, origin smoothing and the telescopes built from them.

Everything is composed from the two local models by exact rescaling and
gluing on intervals where both sides carry the same closed-form piece.
Scales such as ``N_i`` are handled through their natural logs only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..curvature import FiberDescriptor
from ..profiles import (INF, Bridge, BridgeInfeasible, Constant, Linear, Piece, PiecewiseProfile, certify_bridge_d2,
                        certify_bridge_positive, glue, quintic_hermite)
from ..specs import TripleWarpSpec
from .layout import Layout, multi_layouts, triple_layout
from .models import (LN10, assemble_model_II, build_model_I, build_model_II, check_dims, check_epsilon, line)
from .types import ConstructionConstants, ConstructionError, PatternError, SearchPolicy, TelescopeStage

LN2 = math.log(2.0)
RHO_EXPONENT = 4.0
MAX_K_ROUNDS = 6


def _certify(spec, policy: SearchPolicy, t_lo: float | None = None):
    from ..verify import CertifyPolicy, certify

    return certify(spec, t_lo=t_lo, policy=CertifyPolicy(max_depth=policy.certify_depth))


def _check_L(L: float) -> None:
    if not L > 1:
        raise ValueError(f"L must exceed 1, got {L}")


def _rho_index(layout: Layout) -> int:
    return layout.roles.index("rho")


# ---------------------------------------------------------------------------
# profile tables


@dataclass(frozen=True)
class TableRow:
    """Expected closed forms on one log-radius interval, one entry per fiber.

    Entries are ``("line", a)`` for ``a r`` or ``("const", ln_v)``; a
    ``None`` value for a constant means any constant.
    """

    name: str
    lo: float
    hi: float
    entries: tuple


def expected_piece(entry) -> Piece:
    kind, v = entry
    if kind == "line":
        return line(v)
    return Piece(Constant(1.0), 0.0, v, -INF, INF)


def _row(name, lo, hi, roles, cone, collapse, ln_rho):
    ents = []
    for r in roles:
        if r == "rho":
            ents.append(("const", ln_rho))
        elif r == "phi":
            ents.append(cone)
        else:
            ents.append(collapse)
    return TableRow(name, lo, hi, tuple(ents))


# ---------------------------------------------------------------------------
# block


def build_block(m: int, n: int, epsilon: float, L: float, search_policy: SearchPolicy | None = None,
                layout: Layout | None = None, k: float | None = None):
    """Model II shrunk by ``(L R_II)^-1`` glued to Model I on ``[1/L, 1]``.

    Table: ``(kr, kr, lambda1)`` on ``(0, (LR)^-1)``, ``((1-eps) r, delta,
    lambda1)`` on ``[1/L, 1]`` and ``(kr, kr, lambda2)`` on ``[R, inf)``.
    """
    layout = layout or triple_layout(m, n)
    m, n = layout.m, layout.n
    check_dims(m, n)
    check_epsilon(epsilon)
    _check_L(L)
    policy = search_policy or SearchPolicy()
    k = policy.k0 if k is None else k
    ln_L = math.log(L)
    for _ in range(MAX_K_ROUNDS):
        _, c2 = build_model_II(m, n, epsilon, k=k, search_policy=policy, ln_lambda=0.0, layout=layout)
        ln_R2 = c2.ln_R["R"]
        ln_delta = c2.ln_delta - ln_L - ln_R2
        spec1, c1 = build_model_I(m, n, epsilon, k=c2.k, search_policy=policy, ln_delta=ln_delta, layout=layout)
        if c1.k == c2.k:
            break
        k = min(c1.k, c2.k)
    else:
        raise ConstructionError("block: Model I and Model II did not settle on a common k")
    k = c1.k
    # lambda := L R_II lambda1 so that the shrunk rho meets Model I's rho = delta
    spec2, c2b = assemble_model_II(m, n, epsilon, ln_delta + ln_L + ln_R2, k, c2.extra["shrink"], layout)
    spec2 = spec2.rescale_log(ln_L + ln_R2)
    profiles = [glue(p2, p1, -ln_L, 0.0) for p2, p1 in zip(spec2.profiles, spec1.profiles)]
    spec = layout.from_fiber_profiles(profiles)

    ln_R = max(c1.ln_R["R"], ln_R2)
    cons = ConstructionConstants(m, n, epsilon, k, s=c1.s, ln_delta=ln_delta, gamma=c1.gamma, c=c1.c, L=L)
    cons.ln_lambda = {"lambda1": ln_delta, "lambda2": c1.ln_lambda["lambda2"]}
    cons.ln_R = {"R": ln_R, "R_model_I": c1.ln_R["R"], "R_model_II": ln_R2}
    cons.regions = {"inner": (-INF, -ln_L - ln_R), "glue": (-ln_L, 0.0), "outer": (ln_R, INF)}
    cons.extra.update({"model_I": c1, "model_II": c2b, "layout": layout})
    cons.log.extend(c2b.log, "II.")
    cons.log.extend(c1.log, "I.")
    cons.log.record("ln_delta", ln_delta, "block row [1/L, 1]: psi = delta = delta_II / (L R_II)")
    cons.log.record("ln_R", ln_R, "block rows (0, (LR)^-1) and [R, inf)")
    cons.extra["table"] = block_table(layout, cons)
    if policy.certify:
        cert = _certify(spec, policy)
        cons.extra["certificate"] = cert
        if not cert.passed:
            raise ConstructionError(f"block certificate failed: {cert.summary()}", margin=cert.margin)
    return spec, cons


def block_table(layout: Layout, cons: ConstructionConstants) -> list[TableRow]:
    ln_L, ln_R, k, eps = math.log(cons.L), cons.ln_R["R"], cons.k, cons.epsilon
    kr = ("line", k)
    lam1, lam2 = cons.ln_lambda["lambda1"], cons.ln_lambda["lambda2"]
    return [
        _row("(0,(LR)^-1)", -INF, -ln_L - ln_R, layout.roles, kr, kr, lam1),
        _row("[1/L,1]", -ln_L, 0.0, layout.roles, ("line", 1.0 - eps), ("const", cons.ln_delta), lam1),
        _row("[R,inf)", ln_R, INF, layout.roles, kr, kr, lam2),
    ]


# ---------------------------------------------------------------------------
# connector


def build_connector(m: int, n: int, epsilon: float, L: float, search_policy: SearchPolicy | None = None,
                    layouts: tuple[Layout, Layout] | None = None, k: float | None = None):
    """Two blocks, the inner one with the cone role moved to another fiber.

    The inner block is shrunk by ``(2 L R^2)^-1`` and glued on
    ``[(2LR)^-1, (LR)^-1]``; the larger of the two rho constants there is
    scaled down to meet the other (fiber scaling by ``c <= 1`` only raises
    Ricci curvature).
    """
    outer, inner = layouts or (triple_layout(m, n), triple_layout(m, n, swap=True))
    m, n = outer.m, outer.n
    check_dims(m, n)
    check_epsilon(epsilon)
    _check_L(L)
    policy = search_policy or SearchPolicy()
    k = policy.k0 if k is None else k
    for _ in range(MAX_K_ROUNDS):
        s1, b1 = build_block(m, n, epsilon, L, policy, outer, k)
        s2, b2 = build_block(inner.m, inner.n, epsilon, L, policy, inner, b1.k)
        if b1.k == b2.k:
            break
        k = min(b1.k, b2.k)
    else:
        raise ConstructionError("connector: blocks did not settle on a common k")
    k = b1.k
    ln_L = math.log(L)
    ln_R = max(b1.ln_R["R"], b2.ln_R["R"])
    ln_A = LN2 + ln_L + 2 * ln_R
    s2 = s2.rescale_log(ln_A)
    t_a, t_b = -(LN2 + ln_L + ln_R), -(ln_L + ln_R)

    j = _rho_index(outer)
    p2, p1 = list(s2.profiles), list(s1.profiles)
    d = p2[j].log_value(t_b) - p1[j].log_value(t_b)
    ln_c_inner, ln_c_outer = (-d, 0.0) if d > 0 else (0.0, d)
    if ln_c_inner:
        p2[j] = p2[j].scale_fiber_log(ln_c_inner)
    if ln_c_outer:
        p1[j] = p1[j].scale_fiber_log(ln_c_outer)
    profiles = [glue(a, b, t_a, t_b) for a, b in zip(p2, p1)]
    spec = outer.from_fiber_profiles(profiles)

    c_II1 = b1.extra["model_II"]
    c_II2 = b2.extra["model_II"]
    ln_c = LN2 + max(c_II1.ln_delta - c_II1.ln_R["R"], c_II2.ln_delta - c_II2.ln_R["R"])
    cons = ConstructionConstants(m, n, epsilon, k, s=b1.s, L=L, c=math.exp(ln_c) if ln_c < 709 else INF)
    cons.ln_delta_1 = b2.ln_delta - ln_A
    cons.ln_delta_2 = b1.ln_delta
    cons.ln_delta = b1.ln_delta
    cons.ln_lambda = {
        "lambda1": b2.ln_lambda["lambda1"] - ln_A + ln_c_inner,
        "lambda2": b1.ln_lambda["lambda1"] + ln_c_outer,
        "lambda3": b1.ln_lambda["lambda2"] + ln_c_outer,
    }
    cons.ln_R = {"R": ln_R, "R_outer_block": b1.ln_R["R"], "R_inner_block": b2.ln_R["R"]}
    cons.regions = {name: (r.lo, r.hi) for name, r in zip(("row1", "row2", "row3", "row4", "row5"),
                                                             connector_rows(ln_L, ln_R))}
    cons.extra.update({"outer_block": b1, "inner_block": b2, "layouts": (outer, inner), "ln_c": ln_c,
                       "ln_A": ln_A, "rho_match": {"ln_c_inner": ln_c_inner, "ln_c_outer": ln_c_outer}})
    cons.log.extend(b1.log, "outer.")
    cons.log.extend(b2.log, "inner.")
    cons.log.record("ln_R", ln_R, "connector R = max of the two block radii")
    cons.log.record("ln_delta_1", cons.ln_delta_1, "connector row [(2L^2R^2)^-1, (2LR^2)^-1]: delta1 < c (L^2R^2)^-1")
    cons.log.record("ln_delta_2", cons.ln_delta_2, "connector row [1/L, 1]: delta2 < c / L")
    cons.log.record("ln_c", ln_c, "c = 2 max(delta_II / R_II) over both blocks")
    cons.extra["table"] = connector_table(outer, inner, cons)
    if policy.certify:
        cert = _certify(spec, policy)
        cons.extra["certificate"] = cert
        if not cert.passed:
            raise ConstructionError(f"connector certificate failed: {cert.summary()}", margin=cert.margin)
    return spec, cons


def connector_rows(ln_L: float, ln_R: float) -> list[TableRow]:
    return [
        TableRow("(0,(2L^2R^3)^-1)", -INF, -(LN2 + 2 * ln_L + 3 * ln_R), ()),
        TableRow("[(2L^2R^2)^-1,(2LR^2)^-1]", -(LN2 + 2 * ln_L + 2 * ln_R), -(LN2 + ln_L + 2 * ln_R), ()),
        TableRow("[(2LR)^-1,(LR)^-1]", -(LN2 + ln_L + ln_R), -(ln_L + ln_R), ()),
        TableRow("[1/L,1]", -ln_L, 0.0, ()),
        TableRow("[R,inf)", ln_R, INF, ()),
    ]


def connector_table(outer: Layout, inner: Layout, cons: ConstructionConstants) -> list[TableRow]:
    rows = connector_rows(math.log(cons.L), cons.ln_R["R"])
    kr = ("line", cons.k)
    cone = ("line", 1.0 - cons.epsilon)
    lam = cons.ln_lambda
    spec_rows = [
        (outer.roles, kr, kr, lam["lambda1"]),
        (inner.roles, cone, ("const", cons.ln_delta_1), lam["lambda1"]),
        (outer.roles, kr, kr, lam["lambda2"]),
        (outer.roles, cone, ("const", cons.ln_delta_2), lam["lambda2"]),
        (outer.roles, kr, kr, lam["lambda3"]),
    ]
    return [_row(r.name, r.lo, r.hi, roles, c, p, lr) for r, (roles, c, p, lr) in zip(rows, spec_rows)]


# ---------------------------------------------------------------------------
# origin smoothing


def _cone_index(spec, cone) -> int:
    if isinstance(cone, int):
        return cone
    names = list(spec.names)
    if cone in names:
        return names.index(cone)
    raise ValueError(f"unknown cone fiber {cone!r}")


# bridge window in the frame x = r L / scale: width 5/8 keeps 5 (b1 - b0) / h exact,
# so the bridge leaves the apex with slope exactly 1
APEX_X_LO, APEX_X_HI = 0.6875, 1.3125


def apex_profile(epsilon: float, sigma: float, t0: float, name: str = "") -> PiecewiseProfile:
    """``r - eps e^sigma`` from its zero, a concave bridge, then ``(1 - eps) r``."""
    xa, xb = APEX_X_LO, APEX_X_HI
    h = xb - xa
    coeffs = quintic_hermite(xa - epsilon, h, 0.0, (1.0 - epsilon) * xb, (1.0 - epsilon) * h, 0.0)
    if Fraction(coeffs[1]) - Fraction(coeffs[0]) != Fraction(h) / 5:
        raise BridgeInfeasible("apex bridge slope is not exact")
    br = Bridge(coeffs, xa, xb)
    if not (certify_bridge_d2(br, -1) and certify_bridge_positive(br)):
        raise BridgeInfeasible("apex bridge is not certified concave")
    t_a, t_b = sigma + math.log(xa), sigma + math.log(xb)
    pieces = (
        Piece(Linear(1.0, -epsilon), sigma, 0.0, t0, t_a),
        Piece(br, sigma, 0.0, t_a, t_b),
        line(1.0 - epsilon).with_range(t_b, INF),
    )
    return PiecewiseProfile(pieces, name, frozenset({t_a, t_b}))


def smooth_origin(spec, epsilon: float, L: float, ln_scale: float = 0.0, cone="phi"):
    """Replace the apex by ``r - eps L^-1`` and bend it concavely into ``(1-eps) r``.

    Needs the cone fiber equal to ``(1-eps) r`` and every other profile
    constant on ``[1/L, 1]`` (scaled by ``exp(ln_scale)``).  Returns a spec
    whose origin is ``ln(eps / L) + ln_scale``; nothing changes from
    ``2/L`` outward.
    """
    if not 0 < epsilon < 0.1:
        raise ValueError("smoothing needs 0 < epsilon < 1/10")
    if not L > 2:
        raise ValueError("smoothing needs L > 2")
    j = _cone_index(spec, cone)
    ln_L = math.log(L)
    w_lo, w_hi = ln_scale - ln_L, ln_scale
    cone_piece = line(1.0 - epsilon)
    for i, prof in enumerate(spec.profiles):
        pcs = prof.pieces_over(w_lo, w_hi)
        if len(pcs) != 1:
            raise PatternError(f"profile {prof.name!r} is not a single piece on the smoothing window")
        if i == j:
            if not pcs[0].same_function(cone_piece)[0]:
                raise PatternError(f"cone profile {prof.name!r} is not (1-eps) r on the smoothing window")
        elif not isinstance(pcs[0].seg, Constant):
            raise PatternError(f"profile {prof.name!r} is not constant on the smoothing window")

    t0 = math.log(epsilon) - ln_L + ln_scale
    sigma = ln_scale - ln_L
    head = apex_profile(epsilon, sigma, t0, spec.profiles[j].name)
    t_glue = sigma + math.log(APEX_X_HI)
    if not t_glue < w_hi:
        raise PatternError("smoothing bridge does not fit below the window end")
    out = []
    for i, prof in enumerate(spec.profiles):
        if i == j:
            out.append(glue(head, prof, t_glue, w_hi))
        else:
            pc = prof.piece_at(0.5 * (w_lo + w_hi))
            flat = PiecewiseProfile((pc.with_range(t0, INF),), prof.name)
            out.append(glue(flat, prof, w_lo, w_hi))
    return spec.with_profiles(out, origin=t0)


# ---------------------------------------------------------------------------
# telescopes


def _check_stage_fibers(fibers) -> None:
    for f in fibers:
        if f.dim < 2 or f.ricci_lower != f.dim - 1:
            raise ValueError(f"fibers must have dim >= 2 and normalized Ricci lower bound dim - 1, got {f}")


def _telescope(stages: int, make_connector, search_policy: SearchPolicy | None, cone_of_stage,
               rho_exponent: float = RHO_EXPONENT):
    if int(stages) != stages or stages < 1:
        raise ValueError("stages must be a positive integer")
    policy = search_policy or SearchPolicy()
    k = policy.k0
    for _ in range(MAX_K_ROUNDS):
        try:
            return _telescope_with_k(stages, make_connector, policy, cone_of_stage, rho_exponent, k)
        except _KChanged as e:
            k = e.k
    raise ConstructionError("telescope: connectors did not settle on a common k")


class _KChanged(Exception):
    def __init__(self, k):
        self.k = k


def _rho_cap(spec, j: int, ln_N: float, rho_exponent: float):
    """Scale rho so that ``sup rho <= N^-exponent``; returns the new spec and the log scale."""
    prof = spec.profiles[j]
    sup = prof.sup_log(prof.origin, INF)
    target = -rho_exponent * ln_N
    if sup <= target:
        return spec, 0.0
    ps = list(spec.profiles)
    ps[j] = prof.scale_fiber_log(target - sup)
    return spec.with_profiles(ps), target - sup


def _telescope_with_k(stages, make_connector, policy, cone_of_stage, rho_exponent, k):
    out: list[TelescopeStage] = []
    prev = None
    ln_N = 0.0
    for i in range(1, stages + 1):
        eps, L = 100.0 ** -i, 10.0 ** i
        try:
            conn, cons = make_connector(i, eps, L, policy, k)
        except ConstructionError as e:
            raise ConstructionError(f"stage {i}: {e}", margin=e.margin, stage=i) from e
        if cons.k != k:
            raise _KChanged(cons.k)
        layout = cons.extra["layouts"][0]
        j_rho = _rho_index(layout)
        ln_L, ln_R = math.log(L), cons.ln_R["R"]
        if prev is None:
            ln_shift = 0.0
            spec = conn
            ln_N_new = LN2 + 2 * ln_L + 3 * ln_R
            rho_match = 0.0
        else:
            ln_shift = LN2 + ln_N + ln_R
            conn = conn.rescale_log(ln_shift)
            t_a, t_b = -(LN2 + ln_N), -ln_N
            pin, pout = list(conn.profiles), list(prev.profiles)
            d = pin[j_rho].log_value(t_b) - pout[j_rho].log_value(t_b)
            if d > 0:
                pin[j_rho] = pin[j_rho].scale_fiber_log(-d)
            elif d < 0:
                pout[j_rho] = pout[j_rho].scale_fiber_log(d)
            rho_match = d
            spec = layout.from_fiber_profiles([glue(a, b, t_a, t_b) for a, b in zip(pin, pout)])
            ln_N_new = math.log(4.0) + ln_N + 2 * ln_L + 4 * ln_R
        spec, ln_rho_scale = _rho_cap(spec, j_rho, ln_N_new, rho_exponent)
        cert = _certify(spec, policy) if policy.certify else None
        if cert is not None and not cert.passed:
            raise ConstructionError(f"stage {i} certificate failed: {cert.summary()}", margin=cert.margin, stage=i)

        # smoothing window: the inner block's [1/L, 1] row, where the inner cone fiber is (1 - eps) r
        ln_scale = -(LN2 + ln_L + 2 * ln_R) - ln_shift
        cone = cone_of_stage(i, cons)
        try:
            smoothed = smooth_origin(spec, eps, L, ln_scale, cone)
        except PatternError as e:
            raise ConstructionError(f"stage {i}: origin smoothing failed: {e}", stage=i) from e
        s_cert = _certify(smoothed, policy, t_lo=smoothed.origin) if policy.certify else None
        if s_cert is not None and not s_cert.passed:
            raise ConstructionError(f"stage {i} smoothed certificate failed: {s_cert.summary()}",
                                    margin=s_cert.margin, stage=i)
        cons.extra.update({"ln_shift": ln_shift, "rho_match": rho_match, "ln_rho_scale": ln_rho_scale,
                           "ln_smoothing_scale": ln_scale})
        cons.log.record(f"stage{i}.ln_N", ln_N_new, "N_1 = 2 L^2 R^3, N_(i+1) = 4 N_i L^2 R^4")
        cons.log.record(f"stage{i}.ln_rho_scale", ln_rho_scale, "rho scaled so that rho <= N^-4")
        st = TelescopeStage(index=i, spec=spec, smoothed=smoothed, ln_N=ln_N_new, L=L, ln_R=ln_R,
                            epsilon=eps, origin_offset=smoothed.origin, constants=cons, certificate=cert,
                            smoothed_certificate=s_cert, i0=cons.extra.get("i0"),
                            window_row="[(2L^2R^2)^-1,(2LR^2)^-1] (A) / [1/L,1] (B)")
        out.append(st)
        prev, ln_N = spec, ln_N_new
    return out


def build_telescope(m: int, n: int, stages: int, search_policy: SearchPolicy | None = None,
                    rho_exponent: float = RHO_EXPONENT) -> list[TelescopeStage]:
    """Stages with ``eps_i = 100^-i``, ``L_i = 10^i`` of nested rescaled connectors."""
    check_dims(m, n)
    if m < n:
        raise ValueError("the telescope needs m >= n")

    def make(i, eps, L, policy, k):
        return build_connector(m, n, eps, L, policy, k=k)

    return _telescope(stages, make, search_policy, lambda i, cons: "psi", rho_exponent)


def build_multi_telescope(fibers, stages: int, search_policy: SearchPolicy | None = None,
                          rho_exponent: float = RHO_EXPONENT) -> list[TelescopeStage]:
    """N-fold telescope: stage ``i`` makes fiber ``(i - 1) mod N`` the cone of its outer block.

    Two round ``S^2`` factors are appended to ``fibers``: an auxiliary cone
    fiber (the one smoothed at the origin) and the ``rho`` fiber.
    """
    fibers = tuple(f if isinstance(f, FiberDescriptor) else FiberDescriptor.sphere(int(f)) for f in fibers)
    if not fibers:
        raise ValueError("at least one fiber required")
    _check_stage_fibers(fibers)
    aux = len(fibers)

    def make(i, eps, L, policy, k):
        i0 = (i - 1) % len(fibers)
        outer, inner = multi_layouts(fibers, i0)
        spec, cons = build_connector(outer.m, outer.n, eps, L, policy, (outer, inner), k)
        cons.extra["i0"] = i0
        return spec, cons

    return _telescope(stages, make, search_policy, lambda i, cons: aux, rho_exponent)
