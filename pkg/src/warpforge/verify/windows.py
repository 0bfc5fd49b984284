"""Cone-window scans of telescope stages.

At stage ``i`` the metric rescaled by ``A_i = N R^-1 L^-1/2`` (A-scale) or
``B_i = N R^-3 L^-3/2 / 2`` (B-scale) is, on the window ``[L^-1/2, L^1/2 / 2]``,
a cone in one fiber times factors whose warps are tiny.  The scan measures
how tiny, and combines the deviations into a Gromov-Hausdorff bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..constructions.types import PatternError
from ..profiles import INF, Linear, Piece

LN2 = math.log(2.0)
MODES = ("A", "B", "fiber")
WINDOW_CELLS = 32
J_RTOL = 1e-12


def combine_psi(active: float, collapsing, eps_term: float) -> float:
    """``pi * sum(collapsing) + active + eps_term``; monotone in every argument."""
    return math.pi * math.fsum(collapsing) + active + eps_term


@dataclass
class ConeWindowReport:
    """Deviations of one rescaled stage from its model cone on the window.

    ``ln_scale`` is the log of ``A_i`` or ``B_i``; ``window`` is in rescaled
    radius.  ``collapsing`` maps profile names to the sup of their rescaled
    warp over the window.
    """

    stage: int
    mode: str
    ln_scale: float
    window: tuple[float, float]
    target: str
    target_dim: int | None
    active: str
    active_deviation: float
    collapsing: dict[str, float]
    eps_term: float
    active_exact: bool
    j_checked: tuple[int, ...] = ()
    j_consistent: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def psi(self) -> float:
        return combine_psi(self.active_deviation, self.collapsing.values(), self.eps_term)

    @property
    def deviations(self) -> dict:
        return {"active": self.active_deviation, "collapsing": dict(self.collapsing), "epsilon": self.eps_term}

    def to_dict(self) -> dict:
        return {"stage": self.stage, "mode": self.mode, "ln_scale": self.ln_scale, "window": list(self.window),
                "target": self.target, "target_dim": self.target_dim, "active": self.active,
                "deviations": self.deviations, "psi": self.psi, "active_exact": self.active_exact,
                "j_checked": list(self.j_checked), "j_consistent": self.j_consistent,
                "ln_collapsing": dict(self.extra.get("ln_collapsing", {}))}


def _normalize_mode(mode: str) -> str:
    m = mode.strip()
    m = {"A-scale": "A", "B-scale": "B", "a": "A", "b": "B"}.get(m, m)
    if m not in MODES:
        raise ValueError(f"unknown scan mode {mode!r}; expected A, B or fiber")
    return m


def window_ln_scale(stage, mode: str) -> float:
    ln_L, ln_R, ln_N = math.log(stage.L), stage.ln_R, stage.ln_N
    if mode == "A":
        return ln_N - ln_R - 0.5 * ln_L
    return ln_N - 3 * ln_R - 1.5 * ln_L - LN2


def window_bounds(L: float) -> tuple[float, float]:
    """Window ``[L^-1/2, L^1/2 / 2]`` in rescaled log-radius."""
    h = 0.5 * math.log(L)
    return -h, h - LN2


def _active_index(stage, mode: str) -> tuple[int, str, int | None]:
    spec = stage.spec
    if stage.i0 is None:
        if mode == "fiber":
            raise ValueError("fiber mode needs a multi-fiber telescope")
        m, n = spec.fibers[0].dim, spec.fibers[1].dim
        return (1, f"R^{n + 1}", n + 1) if mode == "A" else (0, f"R^{m + 1}", m + 1)
    if mode == "A":
        aux = len(spec.fibers) - 2
        return aux, f"R^{spec.fibers[aux].dim + 1}", spec.fibers[aux].dim + 1
    i0 = stage.i0
    fib = spec.fibers[i0]
    dim = fib.dim + 1 if fib.ricci_lower == fib.dim - 1 else None
    return i0, f"C(M_{i0 + 1})", dim


def _active_deviation(prof, t0: float, t1: float) -> float:
    """Upper bound of ``sup |f(s) - s|`` over ``ln s in [t0, t1]``."""
    best = 0.0
    h = (t1 - t0) / WINDOW_CELLS
    for j in range(WINDOW_CELLS):
        a = t0 + j * h
        b = t1 if j == WINDOW_CELLS - 1 else t0 + (j + 1) * h
        e = prof.enclose(a, b)
        rel = max(abs(math.expm1(e.lnu.lo)), abs(math.expm1(e.lnu.hi)))
        best = max(best, rel * math.exp(b))
    return best * (1 + 8 * 2.0 ** -52)


def window_deviations(spec, ln_scale: float, L: float, epsilon: float, active: int):
    """Deviations of ``spec`` rescaled by ``exp(ln_scale)`` on the window.

    Returns ``(active_deviation, {name: sup}, active_exact, {name: ln sup})``; raises
    :class:`PatternError` unless the active profile is exactly
    ``(1 - eps) r`` there.
    """
    t0, t1 = window_bounds(L)
    scaled = spec.rescale_log(-ln_scale)
    prof = scaled.profiles[active]
    cone = Piece(Linear(1.0 - epsilon, 0.0), 0.0, 0.0, -INF, INF)
    exact = all(pc.same_function(cone)[0] for pc in prof.pieces_over(t0, t1))
    if not exact:
        raise PatternError(f"profile {prof.name!r} is not (1 - eps) r on the cone window")
    dev = _active_deviation(prof, t0, t1)
    collapsing, logs = {}, {}
    for i, p in enumerate(scaled.profiles):
        if i != active:
            sup = p.sup_log(t0, t1, cells=WINDOW_CELLS)
            logs[p.name] = sup
            collapsing[p.name] = math.exp(sup) if sup < 709 else INF
    return dev, collapsing, exact, logs


def cone_window(stages, i: int, mode: str, check_next: bool = True) -> ConeWindowReport:
    """Report for stage ``stages[i]`` using its own spec and, if present, the next stage's."""
    mode = _normalize_mode(mode)
    st = stages[i]
    ln_scale = window_ln_scale(st, mode)
    active, target, dim = _active_index(st, mode)
    js = [i] + ([i + 1] if check_next and i + 1 < len(stages) else [])
    results = [window_deviations(stages[j].spec, ln_scale, st.L, st.epsilon, active) for j in js]
    dev = max(r[0] for r in results)
    names = list(results[0][1])
    collapsing = {nm: max(r[1][nm] for r in results) for nm in names}
    consistent = True
    rho = st.spec.names[-1]
    for r in results[1:]:
        if abs(r[0] - results[0][0]) > J_RTOL * results[0][0]:
            consistent = False
        # compared as logs: the sups themselves are often below the double range
        for nm in names:
            a, b = results[0][3][nm], r[3][nm]
            tol = J_RTOL * max(1.0, abs(a), abs(b))
            consistent &= (b <= a + tol) if nm == rho else abs(a - b) <= tol
    lo, hi = window_bounds(st.L)
    r_max = math.exp(hi)
    return ConeWindowReport(
        stage=st.index, mode=mode, ln_scale=ln_scale, window=(math.exp(lo), r_max), target=target,
        target_dim=dim, active=st.spec.names[active], active_deviation=dev, collapsing=collapsing,
        eps_term=st.epsilon * r_max, active_exact=all(r[2] for r in results),
        j_checked=tuple(stages[j].index for j in js), j_consistent=consistent,
        extra={"ln_collapsing": {nm: max(r[3][nm] for r in results) for nm in names}},
    )


def cone_window_scan(stages, mode: str) -> list[ConeWindowReport]:
    """One :class:`ConeWindowReport` per stage at A-scale, B-scale or in fiber mode."""
    if not stages:
        raise ValueError("no stages to scan")
    if not all(hasattr(s, "ln_N") for s in stages):
        raise ValueError("cone_window_scan needs telescope stages")
    return [cone_window(stages, i, mode) for i in range(len(stages))]
