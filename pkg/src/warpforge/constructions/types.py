"""Shared records for the construction pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from ..specs import MultiWarpSpec, TripleWarpSpec


class ConstructionError(RuntimeError):
    """A construction could not be completed.

    ``margin`` is the tightest failing certificate margin seen by the search
    (``-inf`` when no candidate got as far as certification).
    """

    def __init__(self, message: str, margin: float = -math.inf, stage: int | None = None):
        super().__init__(message)
        self.margin = margin
        self.stage = stage


class PatternError(ValueError):
    """A spec does not have the profile pattern an operation requires."""


@dataclass(frozen=True)
class SearchPolicy:
    """How free constants are adjusted when a candidate fails certification.

    Each failure halves ``k`` and the Model I slope ratio ``beta`` and pushes
    ``R3`` outward; at most ``budget`` candidates are tried per construction.
    """

    budget: int = 64
    k0: float = 0.1
    beta0: float = 1e-3
    s_model1: float = 0.1
    certify_depth: int = 20
    certify: bool = True


@dataclass
class ConstructionLog:
    entries: list[dict] = field(default_factory=list)

    def record(self, name: str, value: Any, row: str) -> None:
        self.entries.append({"constant": name, "value": value, "row": row})

    def extend(self, other: "ConstructionLog", prefix: str = "") -> None:
        for e in other.entries:
            self.entries.append({**e, "constant": prefix + e["constant"]})

    def to_text(self) -> str:
        return "\n".join(f"{e['constant']} = {e['value']!r}    # {e['row']}" for e in self.entries)


@dataclass
class ConstructionConstants:
    """Constants of one construction; radii and tiny scales are kept as natural logs.

    ``ln_R`` maps names such as ``"R1"`` or ``"R"`` to ``ln R``; ``ln_lambda``
    likewise for the rho constants.  ``regions`` records the log-radius
    support of each step, used by the step audit.
    """

    m: int
    n: int
    epsilon: float
    k: float
    s: float = math.nan
    ln_delta: float = math.nan
    ln_delta_1: float = math.nan
    ln_delta_2: float = math.nan
    gamma: float = math.nan
    c: float = math.nan
    L: float = math.nan
    a: dict[str, float] = field(default_factory=dict)
    b: dict[str, float] = field(default_factory=dict)
    ln_lambda: dict[str, float] = field(default_factory=dict)
    ln_R: dict[str, float] = field(default_factory=dict)
    regions: dict[str, tuple[float, float]] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)
    log: ConstructionLog = field(default_factory=ConstructionLog)
    attempts: int = 1

    @property
    def R(self) -> float:
        return math.exp(self.ln_R["R"]) if self.ln_R.get("R", math.inf) < 709 else math.inf

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        return clean({
            "m": self.m, "n": self.n, "epsilon": self.epsilon, "k": self.k, "s": self.s,
            "ln_delta": self.ln_delta, "ln_delta_1": self.ln_delta_1, "ln_delta_2": self.ln_delta_2,
            "gamma": self.gamma, "c": self.c, "L": self.L, "a": self.a, "b": self.b,
            "ln_lambda": self.ln_lambda, "ln_R": self.ln_R, "regions": self.regions,
            "attempts": self.attempts, "extra": self.extra,
        })


@dataclass
class TelescopeStage:
    """One stage of the telescope: the spec, its origin-smoothed variant and scales.

    ``ln_N``, ``ln_R`` are natural logs; ``origin_offset`` is the log-radius
    of the smoothed origin ``eps_i R_i / N_i``.
    """

    index: int
    spec: TripleWarpSpec | MultiWarpSpec
    smoothed: TripleWarpSpec | MultiWarpSpec
    ln_N: float
    L: float
    ln_R: float
    epsilon: float
    origin_offset: float
    constants: ConstructionConstants | None = None
    certificate: Any = None
    smoothed_certificate: Any = None
    i0: int | None = None
    window_row: str = ""
