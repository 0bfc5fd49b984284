"""Pointwise samples of profiles and Ricci curvature, and their CSV form."""

from __future__ import annotations

import csv
import io
import math

from ..curvature import ricci_fd_oracle_multi, unscale_r2

DIGITS = 17


def fmt(x: float) -> str:
    return format(x + 0.0, f".{DIGITS}g")


def header(spec, oracle: bool = False) -> list[str]:
    comps = [f"ric{i}{i}" for i in range(len(spec.fibers) + 1)]
    cols = ["r", *spec.names, *comps]
    if oracle:
        cols += [f"fd_{c}" for c in comps]
    return cols


def sample_row(spec, r: float, oracle: bool = False) -> list[float]:
    """``r``, the profile values and the Ricci eigenvalues in real units at ``r``."""
    t = math.log(r)
    vals = []
    for p in spec.profiles:
        lv = p.log_value(t)
        vals.append(math.exp(lv) if lv < 709 else math.inf)
    ev = spec.scaled_ricci_at(t)
    row = [r, *vals, *(unscale_r2(x, t) for x in ev.components)]
    if oracle:
        fns = [(lambda s, p=p: p.eval(s)[0]) for p in spec.profiles]
        fd = ricci_fd_oracle_multi([f.dim for f in spec.fibers], fns, r)
        row += list(fd.components)
    return row


def log_grid(t_lo: float, t_hi: float, count: int) -> list[float]:
    if count < 2:
        return [math.exp(t_lo)]
    return [math.exp(t_lo + (t_hi - t_lo) * j / (count - 1)) for j in range(count)]


def sample_table(spec, radii, oracle: bool = False) -> tuple[list[str], list[list[float]]]:
    return header(spec, oracle), [sample_row(spec, r, oracle) for r in radii]


def to_csv(spec, radii, oracle: bool = False) -> str:
    cols, rows = sample_table(spec, radii, oracle)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()
