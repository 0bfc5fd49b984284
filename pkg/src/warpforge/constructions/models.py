"""The two local models: cone-to-cylinder (Model I) and cylinder-to-cone (Model II).

Both are assembled from closed-form pieces joined by certified quintic
bridges.  Every radius lives in log form, so constants such as
``exp(1e7)`` cost nothing; the search loop only retunes the few free
constants the existence proofs leave implicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..profiles import (INF, BridgeInfeasible, Constant, Linear, LogBlend, Piece, Power, ProfileBuilder,
                        ProfileDomainError)
from ..specs import TripleWarpSpec
from .layout import Layout, triple_layout
from .types import ConstructionConstants, ConstructionError, SearchPolicy

LN10 = math.log(10.0)
R1 = 100.0
T1 = math.log(R1)
T2 = math.log(1e3 * R1)
CAP_RATIO = 2.0
BRIDGE_W = 0.5
MIN_EPS, MAX_EPS = 0.0, 0.01


def check_epsilon(epsilon: float) -> None:
    if not (MIN_EPS < epsilon <= MAX_EPS):
        raise ValueError(f"epsilon must lie in (0, 1/100], got {epsilon}")


def check_dims(m: int, n: int) -> None:
    if int(m) != m or int(n) != n or m < 2 or n < 2:
        raise ValueError(f"fiber dimensions must be integers >= 2, got m={m}, n={n}")


def line(a: float, b: float = 0.0, kappa: float = 0.0) -> Piece:
    """``exp(kappa) (a r + b)`` on the whole ray."""
    return Piece(Linear(a, b), 0.0, kappa, -INF, INF)


def const(ln_v: float) -> Piece:
    return Piece(Constant(1.0), 0.0, ln_v, -INF, INF)


def power_through(prof: Piece, t: float, s: float) -> Piece:
    """``c r^s`` passing through ``prof`` at log-radius ``t``."""
    ell = prof.log_jet(t)[0]
    return Piece(Power(1.0, s), t, ell, -INF, INF)


def power_crossing(pw: Piece, ln_slope: float) -> float:
    """Log-radius where the power piece ``pw`` meets the line ``exp(ln_slope) r``."""
    s = pw.seg.s
    # ln(f/r) = kappa + (s - 1)(t - sigma) + ln a
    return pw.sigma + (ln_slope - pw.kappa - math.log(pw.seg.a)) / (s - 1.0)


# ---------------------------------------------------------------------------
# Model II


def _model_II_exponents(m: int, n: int, epsilon: float) -> tuple[float, float]:
    # s keeps n s below half the cone-angle surplus (m-1)((1-eps)^-2 - 1) of Ric11;
    # gamma keeps m gamma (1 + gamma) below n s (1 - s) / 2 for Ric00
    surplus = (m - 1) * ((1.0 - epsilon) ** -2 - 1.0)
    s = 0.5 * surplus / n
    g = 0.25 * n * s * (1 - s) / m
    gamma = 0.5 * (math.sqrt(1 + 4 * g) - 1)
    return s, gamma


def assemble_model_II(m: int, n: int, epsilon: float, ln_lambda: float, k: float,
                      shrink: float = 1.0, layout: Layout | None = None) -> tuple[TripleWarpSpec, ConstructionConstants]:
    layout = layout or triple_layout(m, n)
    s, gamma = _model_II_exponents(m, n, epsilon)
    s *= shrink
    gamma *= shrink
    ln_k = math.log(k)
    cons = ConstructionConstants(m, n, epsilon, k, s=s, gamma=gamma)

    # Step 1: psi = min{kr, k R1^(1-s) r^s}, concave bridge at R1
    psi_b = ProfileBuilder(line(k), name="psi")
    psi_pow = power_through(line(k), T1, s)
    psi_b.join(psi_pow, T1, BRIDGE_W, sign=-1)

    # Step 2: phi = kr -> b r^(1+gamma) -> (1-eps) r
    phi_b = ProfileBuilder(line(k), name="phi")
    phi_pow = power_through(line(k), T2, 1.0 + gamma)
    phi_b.join(phi_pow, T2, BRIDGE_W, sign=+1)
    t_cross = power_crossing(phi_pow, math.log1p(-epsilon))
    phi_b.join(line(1.0 - epsilon), t_cross, BRIDGE_W, sign=0)
    t_R3 = t_cross + math.log1p(BRIDGE_W)

    # Step 3: psi capped to the constant delta on [10 R3, 20 R3]
    t_cap = t_R3 + LN10
    ln_delta = psi_b.cap(t_cap, t_cap + math.log(CAP_RATIO))
    ln_R = t_R3 + 4 * LN10

    phi = phi_b.build()
    psi = psi_b.build()
    rho = ProfileBuilder(const(ln_lambda), name="rho").build()
    spec = layout.make(phi, psi, rho)

    cons.ln_delta = ln_delta
    cons.ln_delta_2 = ln_delta
    cons.ln_lambda = {"lambda": ln_lambda}
    cons.ln_R = {"R1": T1, "R2": T2, "R3": t_R3, "R": ln_R}
    cons.a = {"psi_power": psi_pow.kappa, "phi_power": phi_pow.kappa}
    cons.regions = {
        "step1": (T1 + math.log1p(-BRIDGE_W), T1 + math.log1p(BRIDGE_W)),
        "step2": (T2 + math.log1p(-BRIDGE_W), t_R3),
        "step3": (t_cap, t_cap + math.log(CAP_RATIO)),
        "tail": (t_cap + math.log(CAP_RATIO), INF),
        "inner": (-INF, 0.0),
    }
    cons.extra["t_cross"] = t_cross
    log = cons.log
    log.record("s", s, "Model II Step 1 exponent of the psi power tail")
    log.record("gamma", gamma, "Model II Step 2 exponent excess of the phi power")
    log.record("ln_R1", T1, "Model II Step 1, R1 = 100")
    log.record("ln_R2", T2, "Model II Step 2, R2 = 10^3 R1")
    log.record("ln_R3", t_R3, "Model II Step 2 end: phi = (1-eps) r beyond R3")
    log.record("ln_delta", ln_delta, "Model II Step 3 cap value: psi = delta on [R, inf)")
    log.record("ln_R", ln_R, "Model II table row [R, inf)")
    return spec, cons


# ---------------------------------------------------------------------------
# Model I


@dataclass(frozen=True)
class ModelIParams:
    k: float = 0.1
    beta: float = 1e-3
    s: float = 0.1
    ln_R3_extra: float = 0.0


def assemble_model_I(m: int, n: int, epsilon: float, ln_delta: float,
                     p: ModelIParams, layout: Layout | None = None) -> tuple[TripleWarpSpec, ConstructionConstants]:
    layout = layout or triple_layout(m, n)
    k, beta, s = p.k, p.beta, p.s
    cons = ConstructionConstants(m, n, epsilon, k, s=s)
    b1 = R1 * (1.0 - epsilon - k)
    if b1 <= 0:
        raise ValueError("k must be below 1 - epsilon")

    # Step 1: phi = min{(1-eps) r, (1-eps) R1 + k (r - R1)}; psi = rho = max{delta, delta + delta1 (r - R1)}
    phi_b = ProfileBuilder(line(1.0 - epsilon), name="phi")
    phi_b.join(line(k, b1), T1, 0.95, sign=-1)
    psi_line = line(beta / R1, 1.0 - beta, ln_delta)
    psi_b = ProfileBuilder(const(ln_delta), name="psi")
    psi_b.join(psi_line, T1, BRIDGE_W, sign=+1)
    rho_b = ProfileBuilder(const(ln_delta), name="rho")
    rho_b.join(psi_line, T1, BRIDGE_W, sign=+1)

    # Step 2: rho = min{delta1 r + b2, (delta1 R2 + b2)(r / R2)^s}
    rho_pow = power_through(psi_line, T2, s)
    rho_b.join(rho_pow, T2, BRIDGE_W, sign=-1)

    # Step 3 (phi): r ln r blends take kr + b1 down to kr. The convex half costs
    # about m c / k of Ric00, which the rho power pays for with s(1 - s).
    t3 = T2 + 2 * LN10 + p.ln_R3_extra
    c = min(1.0 / (10.0 * t3), s * (1.0 - s) * k / m)
    R3 = math.exp(t3)
    lam_excess = math.sqrt(b1 / (c * R3))
    Lam = 1.0 + lam_excess
    ln_Lam = math.log1p(lam_excess)
    # local frame x = r / R3, f = R3 g(x)
    blend_a = Piece(LogBlend(-c, 1.0, k, b1 / R3 - c), t3, 0.0, -INF, INF)
    blend_b = Piece(LogBlend(c, Lam * Lam, k, c * Lam * Lam), t3, 0.0, -INF, INF)
    wb = 0.3 * ln_Lam
    phi_b.join(blend_a, t3, wb, sign=0)
    phi_b.join(blend_b, t3 + ln_Lam, wb, sign=0)
    phi_b.join(line(k), t3 + 2 * ln_Lam, wb, sign=0)
    t_phi_end = t3 + 2 * ln_Lam + math.log1p(wb)

    # Step 3 (psi): delta1 r + b2 -> a' r^(1+gamma) -> kr
    g = s * (1 - s) / (2 * n)
    gamma = 0.5 * (math.sqrt(1 + 4 * g) - 1)
    t_psi1 = t_phi_end + 2 * LN10
    psi_pow = power_through(psi_line, t_psi1, 1.0 + gamma)
    psi_b.join(psi_pow, t_psi1, BRIDGE_W, sign=+1)
    t_psi2 = power_crossing(psi_pow, math.log(k))
    psi_b.join(line(k), t_psi2, BRIDGE_W, sign=0)
    t_R4 = t_psi2 + math.log1p(BRIDGE_W)

    # Step 4: rho capped to lambda2 on [10 R4, 20 R4]
    t_cap = t_R4 + LN10
    ln_lam2 = rho_b.cap(t_cap, t_cap + math.log(CAP_RATIO))
    ln_R = t_R4 + 4 * LN10

    spec = layout.make(phi_b.build(), psi_b.build(), rho_b.build())
    ln_delta1 = ln_delta + math.log(beta / R1)
    cons.ln_delta = ln_delta
    cons.ln_delta_1 = ln_delta1
    cons.gamma = gamma
    cons.c = c
    cons.b = {"b1": b1, "ln_b2": ln_delta + math.log1p(-beta)}
    cons.ln_lambda = {"lambda1": ln_delta, "lambda2": ln_lam2}
    cons.ln_R = {"R1": T1, "R2": T2, "R3": t3, "R4": t_R4, "R": ln_R, "Lambda": ln_Lam}
    cons.extra.update({"beta": beta, "t_phi_end": t_phi_end, "t_psi1": t_psi1, "t_psi2": t_psi2})
    cons.regions = {
        "inner": (-INF, 0.0),
        "step1": (T1 - LN10, T1 + LN10),
        "step2": (T2 + math.log1p(-BRIDGE_W), T2 + math.log1p(BRIDGE_W)),
        "step3": (t3 + math.log1p(-wb), t_R4),
        "step3_phi": (t3 + math.log1p(-wb), t_phi_end),
        "step3_psi": (t_psi1 + math.log1p(-BRIDGE_W), t_R4),
        "step4": (t_cap, t_cap + math.log(CAP_RATIO)),
        "tail": (t_cap + math.log(CAP_RATIO), INF),
    }
    log = cons.log
    log.record("ln_delta", ln_delta, "Model I table row (0,1): psi = delta")
    log.record("beta = delta1 R1 / delta", beta, "Model I Step 1 slope of psi, rho after R1")
    log.record("ln_delta1", ln_delta1, "Model I Step 1, 0 < delta1 < k/2")
    log.record("b1", b1, "Model I Step 3, b1 = R1 (1 - eps - k)")
    log.record("s", s, "Model I Step 2 exponent of the rho power")
    log.record("ln_R3", t3, "Model I Step 3 start of the r ln r blend")
    log.record("c", c, "Model I Step 3, c = (10 ln R3)^-1")
    log.record("ln_Lambda", ln_Lam, "Model I Step 3 blend turning point R3 * Lambda")
    log.record("gamma", gamma, "Model I Step 3 exponent excess of the psi power")
    log.record("ln_R4", t_R4, "Model I Step 3 end: psi = kr beyond R4")
    log.record("ln_lambda2", ln_lam2, "Model I Step 4 cap: rho = lambda2 on [R, inf)")
    log.record("ln_R", ln_R, "Model I table row [R, inf), R = 10^4 R4")
    return spec, cons


# ---------------------------------------------------------------------------
# search wrappers


def _certify(spec, policy: SearchPolicy):
    from ..verify import CertifyPolicy, certify

    return certify(spec, policy=CertifyPolicy(max_depth=policy.certify_depth))


def build_model_II(m: int, n: int, epsilon: float, lam: float = 1.0, k: float | None = None,
                   search_policy: SearchPolicy | None = None, ln_lambda: float | None = None,
                   layout: Layout | None = None):
    """Model II: ``(kr, kr, lambda)`` near 0 turning into ``((1-eps) r, delta, lambda)`` beyond ``R``."""
    if layout is not None:
        m, n = layout.m, layout.n
    check_dims(m, n)
    check_epsilon(epsilon)
    if ln_lambda is None:
        if not lam > 0:
            raise ValueError("lambda must be positive")
        ln_lambda = math.log(lam)
    policy = search_policy or SearchPolicy()
    k = policy.k0 if k is None else k
    shrink = 1.0
    best = -INF
    for attempt in range(1, policy.budget + 1):
        try:
            spec, cons = assemble_model_II(m, n, epsilon, ln_lambda, k, shrink, layout)
        except (BridgeInfeasible, ProfileDomainError, ValueError, OverflowError):
            k *= 0.5
            shrink *= 0.5
            continue
        cons.attempts = attempt
        cons.extra["shrink"] = shrink
        if not policy.certify:
            return spec, cons
        cert = _certify(spec, policy)
        cons.extra["certificate"] = cert
        if cert.passed:
            return spec, cons
        best = max(best, cert.margin)
        k *= 0.5
        shrink *= 0.5
    raise ConstructionError("Model II search exhausted its budget", margin=best)


def _next_model_I(p: ModelIParams) -> ModelIParams:
    return ModelIParams(p.k * 0.5, p.beta * 0.5, p.s, p.ln_R3_extra + LN10)


def build_model_I(m: int, n: int, epsilon: float, delta: float | None = None, k: float | None = None,
                  search_policy: SearchPolicy | None = None, ln_delta: float | None = None,
                  layout: Layout | None = None):
    """Model I: ``((1-eps) r, delta, delta)`` near 0 turning into ``(kr, kr, lambda2)`` beyond ``R``.

    ``delta`` defaults to ``epsilon``.
    """
    if layout is not None:
        m, n = layout.m, layout.n
    check_dims(m, n)
    check_epsilon(epsilon)
    if ln_delta is None:
        delta = epsilon if delta is None else delta
        if not delta > 0:
            raise ValueError("delta must be positive")
        ln_delta = math.log(delta)
    policy = search_policy or SearchPolicy()
    params = ModelIParams(k=policy.k0 if k is None else k, beta=policy.beta0, s=policy.s_model1)
    best = -INF
    for attempt in range(1, policy.budget + 1):
        try:
            spec, cons = assemble_model_I(m, n, epsilon, ln_delta, params, layout)
        except (BridgeInfeasible, ProfileDomainError, ValueError, OverflowError):
            params = _next_model_I(params)
            continue
        cons.attempts = attempt
        cons.extra["params"] = params
        if not policy.certify:
            return spec, cons
        cert = _certify(spec, policy)
        cons.extra["certificate"] = cert
        if cert.passed:
            return spec, cons
        best = max(best, cert.margin)
        params = _next_model_I(params)
    raise ConstructionError("Model I search exhausted its budget", margin=best)
