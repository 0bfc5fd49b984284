"""``warpforge`` command line: build, verify, scan, eval, export.

Exit codes: 0 success, 1 certificate or construction failure, 2 bad
parameters or unreadable input.
"""

from __future__ import annotations

import math
import sys
from pathlib import Path

import click

from . import io
from .constructions import (ConstructionError, PatternError, SearchPolicy, build_block, build_connector,
                            build_model_I, build_model_II, build_multi_telescope, build_telescope)
from .curvature import CurvatureDomainError, LinearProfilePair, ricci_linear
from .profiles import Linear, ProfileDomainError
from .specs import TripleWarpSpec
from .verify import CertifyPolicy, certify, cone_window_scan, log_grid, sample_table, to_csv
from .verify.samples import fmt

TARGETS = ("model1", "model2", "block", "connector", "telescope", "multi-telescope")
EXIT_OK, EXIT_FAIL, EXIT_PARAM = 0, 1, 2


class ParamError(click.ClickException):
    exit_code = EXIT_PARAM


def _fail(msg: str) -> None:
    click.echo(msg, err=True)
    sys.exit(EXIT_FAIL)


def _load(path: str) -> io.Document:
    try:
        return io.load(path)
    except io.DocumentError as e:
        raise ParamError(f"{path}: {e}") from None
    except OSError as e:
        raise ParamError(f"{path}: {e.strerror}") from None


def _policy(depth: int | None, per_decade: float | None) -> CertifyPolicy:
    kw = {}
    if depth is not None:
        if depth < 0:
            raise ParamError("--depth must be >= 0")
        kw["max_depth"] = depth
    if per_decade is not None:
        if not per_decade > 0:
            raise ParamError("--per-decade must be positive")
        kw["per_decade"] = per_decade
    return CertifyPolicy(**kw)


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Build and certify warped products with nonnegative Ricci curvature."""


# ---------------------------------------------------------------------------
# build


def _check_build_params(target, m, n, epsilon, delta, lam, L, stages, fibers) -> None:
    if target in ("model1", "model2", "block", "connector"):
        if not 0 < epsilon <= 0.01:
            raise ParamError(f"--epsilon must lie in (0, 0.01], got {epsilon}")
    if m < 2 or n < 2:
        raise ParamError("--m and --n must be >= 2")
    if delta is not None and not delta > 0:
        raise ParamError("--delta must be positive")
    if not lam > 0:
        raise ParamError("--lam must be positive")
    if target in ("block", "connector") and not L > 1:
        raise ParamError("--L must be > 1")
    if target in ("telescope", "multi-telescope") and stages < 1:
        raise ParamError("--stages must be >= 1")
    if target == "telescope" and m < n:
        raise ParamError("the telescope needs m >= n")
    if target == "multi-telescope" and not fibers:
        raise ParamError("multi-telescope needs --fibers, e.g. 3,2")


def _parse_fibers(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        dims = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ParamError(f"--fibers must be a comma list of integers, got {text!r}") from None
    if any(d < 2 for d in dims):
        raise ParamError("fiber dimensions must be >= 2")
    return dims


@main.command()
@click.option("--target", type=click.Choice(TARGETS), required=True)
@click.option("--m", "m", type=int, default=2, show_default=True)
@click.option("--n", "n", type=int, default=2, show_default=True)
@click.option("--epsilon", type=float, default=0.01, show_default=True)
@click.option("--delta", type=float, default=None, help="Model I cylinder radius (default: epsilon).")
@click.option("--lam", type=float, default=1.0, show_default=True, help="Model II rho constant.")
@click.option("--L", "L", type=float, default=10.0, show_default=True)
@click.option("--stages", type=int, default=1, show_default=True)
@click.option("--fibers", type=str, default=None, help="Fiber dimensions for multi-telescope, e.g. 3,2.")
@click.option("--k", type=float, default=None, help="Initial k for the constant search.")
@click.option("--budget", type=int, default=None, help="Candidates tried per construction.")
@click.option("--depth", type=int, default=None, help="Certificate refinement depth.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Document path (default <target>.json).")
def build(target, m, n, epsilon, delta, lam, L, stages, fibers, k, budget, depth, out):
    """Run a construction and write its document, log and certificates."""
    dims = _parse_fibers(fibers)
    _check_build_params(target, m, n, epsilon, delta, lam, L, stages, dims)
    kw = {}
    if budget is not None:
        if budget < 1:
            raise ParamError("--budget must be >= 1")
        kw["budget"] = budget
    if depth is not None:
        kw["certify_depth"] = depth
    if k is not None:
        if not 0 < k < 1:
            raise ParamError("--k must lie in (0, 1)")
        kw["k0"] = k
    policy = SearchPolicy(**kw)
    out = Path(out or f"{target}.json")
    try:
        if target in ("telescope", "multi-telescope"):
            if target == "telescope":
                st = build_telescope(m, n, stages, policy)
            else:
                st = build_multi_telescope(dims, stages, policy)
            _write_telescope(out, target, st)
            return
        if target == "model1":
            spec, cons = build_model_I(m, n, epsilon, delta=delta if delta is not None else epsilon,
                                       search_policy=policy)
        elif target == "model2":
            spec, cons = build_model_II(m, n, epsilon, lam=lam, search_policy=policy)
        elif target == "block":
            spec, cons = build_block(m, n, epsilon, L, policy)
        else:
            spec, cons = build_connector(m, n, epsilon, L, policy)
    except ConstructionError as e:
        where = f" (stage {e.stage})" if e.stage is not None else ""
        _fail(f"construction failed{where}: {e}; tightest margin {e.margin:.6g}")
    except ValueError as e:
        raise ParamError(str(e)) from None
    cert = cons.extra.get("certificate")
    io.save(out, io.spec_document(spec, target, cons))
    _sidecar(out, ".log.txt").write_text(cons.log.to_text() + "\n")
    if cert is not None:
        _sidecar(out, ".cert.json").write_text(cert.to_json())
        click.echo(f"{target}: {cert.summary()}")
    click.echo(f"wrote {out}")
    if cert is not None and not cert.passed:
        sys.exit(EXIT_FAIL)


def _write_telescope(out: Path, target: str, stages) -> None:
    io.save(out, io.telescope_document(stages, target))
    lines = []
    ok = True
    for st in stages:
        lines.append(f"# stage {st.index}")
        if st.constants is not None:
            lines.append(st.constants.log.to_text())
        for tag, cert in (("", st.certificate), (".smoothed", st.smoothed_certificate)):
            if cert is None:
                continue
            _sidecar(out, f".stage{st.index}{tag}.cert.json").write_text(cert.to_json())
            click.echo(f"stage {st.index}{tag}: {cert.summary()}")
            ok &= cert.passed
    _sidecar(out, ".log.txt").write_text("\n".join(lines) + "\n")
    click.echo(f"wrote {out}")
    if not ok:
        sys.exit(EXIT_FAIL)


# ---------------------------------------------------------------------------
# verify


def _specs_of(doc: io.Document, stage: int | None = None, smoothed: bool = False):
    if doc.kind == "spec":
        if stage is not None:
            raise ParamError("--stage needs a telescope document")
        return [("spec", doc.spec)]
    sts = doc.stages
    if stage is not None:
        sts = [s for s in sts if s.index == stage]
        if not sts:
            raise ParamError(f"no stage {stage} in document")
    out = []
    for s in sts:
        out.append((f"stage{s.index}", s.spec))
        if smoothed:
            out.append((f"stage{s.index}.smoothed", s.smoothed))
    return out


def _default_range(spec) -> tuple[float, float]:
    bps = [b for p in spec.profiles for b in p.breakpoints]
    lo = spec.origin if math.isfinite(spec.origin) else (min(bps) - 5.0 if bps else -5.0)
    hi = max(bps) + 5.0 if bps else 5.0
    return lo, hi


@main.command()
@click.argument("document", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Certificate path.")
@click.option("--depth", type=int, default=None, help="Maximum refinement depth.")
@click.option("--per-decade", type=float, default=None, help="Initial cells per decade of r.")
@click.option("--emit-csv", type=click.Path(dir_okay=False), default=None, help="Also write a Ricci sample table.")
@click.option("--samples", type=int, default=200, show_default=True)
def verify(document, out, depth, per_decade, emit_csv, samples):
    """Certify Ric >= 0 for every spec in DOCUMENT."""
    doc = _load(document)
    policy = _policy(depth, per_decade)
    results = []
    for name, spec in _specs_of(doc, smoothed=True):
        cert = certify(spec, policy=policy)
        results.append((name, cert))
        click.echo(f"{name}: {cert.summary()}")
    out = Path(out) if out else _sidecar(Path(document), ".verify.json")
    if len(results) == 1:
        out.write_text(results[0][1].to_json())
    else:
        out.write_text(io.dumps({"certificates": {n: c.to_dict() for n, c in results}}))
    if emit_csv:
        spec = _specs_of(doc)[-1][1]
        lo, hi = _default_range(spec)
        Path(emit_csv).write_text(to_csv(spec, log_grid(lo + 1e-9 * max(1.0, abs(lo)), hi, max(samples, 2))))
    if not all(c.passed for _, c in results):
        if depth is not None and depth < CertifyPolicy().max_depth:
            click.echo(f"refinement needed: negative cells remain at depth {depth}; rerun with a larger --depth",
                       err=True)
        sys.exit(EXIT_FAIL)


# ---------------------------------------------------------------------------
# scan


def _scan_svg(path: str, stages, reports) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .verify.windows import window_bounds

    plt.rcParams["svg.hashsalt"] = "warpforge"
    fig, axes = plt.subplots(1, len(reports), figsize=(4 * len(reports), 3.5), squeeze=False)
    by_index = {s.index: s for s in stages}
    for ax, rep in zip(axes[0], reports):
        st = by_index[rep.stage]
        scaled = st.spec.rescale_log(-rep.ln_scale)
        t0, t1 = window_bounds(st.L)
        ts = [t0 + (t1 - t0) * j / 200 for j in range(201)]
        x = [t / math.log(10) for t in ts]
        for p in scaled.profiles:
            ax.plot(x, [p.log_value(t) / math.log(10) for t in ts], label=p.name)
        ax.plot(x, [(t + math.log1p(-st.epsilon)) / math.log(10) for t in ts], "k--", lw=0.8,
                label="(1-eps) r")
        ax.set_title(f"stage {rep.stage}, {rep.mode}: {rep.target}")
        ax.set_xlabel("log10 r (rescaled)")
        ax.set_ylabel("log10 f (rescaled)")
        ax.set_ylim(min(x) - 3, max(x) + 1)
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


@main.command()
@click.argument("document", type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(["A", "B", "fiber"]), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Report path (JSON).")
@click.option("--svg", type=click.Path(dir_okay=False), default=None, help="Window plot.")
def scan(document, mode, out, svg):
    """Cone-window deviations of each telescope stage."""
    doc = _load(document)
    if doc.kind != "telescope":
        raise ParamError("scan needs a telescope document")
    try:
        reports = cone_window_scan(doc.stages, mode)
    except PatternError as e:
        _fail(f"scan failed: {e}")
    except ValueError as e:
        raise ParamError(str(e)) from None
    click.echo("stage  target      psi                      active dev               j-consistent")
    for r in reports:
        click.echo(f"{r.stage:<6d} {r.target:<11s} {fmt(r.psi):<24s} {fmt(r.active_deviation):<24s} {r.j_consistent}")
    out = Path(out) if out else _sidecar(Path(document), f".scan{mode}.json")
    out.write_text(io.dumps({"mode": mode, "reports": [r.to_dict() for r in reports]}))
    if svg:
        _scan_svg(svg, doc.stages, reports)
    if not all(r.j_consistent for r in reports):
        _fail("stage reports depend on j")


# ---------------------------------------------------------------------------
# eval


def _linear_pair(spec):
    if not isinstance(spec, TripleWarpSpec):
        return None
    coeffs = []
    for p in spec.profiles:
        if len(p.pieces) != 1 or not isinstance(p.pieces[0].seg, Linear):
            return None
        pc = p.pieces[0]
        coeffs.append((math.exp(pc.kappa) * pc.seg.a, math.exp(pc.kappa + pc.sigma) * pc.seg.b))
    if coeffs[1] != coeffs[2]:
        return None
    return LinearProfilePair(*coeffs[0], *coeffs[1])


@main.command(name="eval")
@click.argument("document", type=click.Path(dir_okay=False))
@click.option("--r", "radii", type=float, multiple=True, required=True, help="Radius (repeatable).")
@click.option("--oracle", is_flag=True, help="Add finite-difference columns and relative deltas.")
@click.option("--closed-form", is_flag=True, help="Add the linear-pair closed form (linear specs only).")
@click.option("--stage", type=int, default=None)
@click.option("--smoothed", is_flag=True, help="Use the origin-smoothed stage spec.")
def eval_cmd(document, radii, oracle, closed_form, stage, smoothed):
    """Print profiles and Ricci eigenvalues at the given radii as CSV."""
    doc = _load(document)
    specs = _specs_of(doc, stage, smoothed)
    spec = specs[-1][1]
    for r in radii:
        if not (r > 0 and math.log(r) > spec.origin):
            raise ParamError(f"r = {r} is outside the domain (origin at r = {math.exp(spec.origin):.17g})")
    pair = None
    if closed_form:
        pair = _linear_pair(spec)
        if pair is None:
            raise ParamError("--closed-form needs phi, psi = rho single linear segments")
    try:
        cols, rows = sample_table(spec, radii, oracle)
    except (ProfileDomainError, CurvatureDomainError, ValueError) as e:
        raise ParamError(str(e)) from None
    ncomp = len(spec.fibers) + 1
    if oracle:
        cols += [f"delta_ric{i}{i}" for i in range(ncomp)]
        for row in rows:
            gen, fd = row[-2 * ncomp:-ncomp], row[-ncomp:]
            row += [abs(a - b) / max(1.0, abs(b)) for a, b in zip(gen, fd)]
    if pair is not None:
        cols += [f"lin_ric{i}{i}" for i in range(ncomp)]
        for row in rows:
            row += list(ricci_linear(spec.m, spec.n, pair, row[0]).components)
    click.echo(",".join(cols))
    for row in rows:
        click.echo(",".join(fmt(x) for x in row))


# ---------------------------------------------------------------------------
# export


def _profiles_svg(path: str, spec, lo: float, hi: float, samples: int) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "warpforge"
    ts = [lo + (hi - lo) * j / (samples - 1) for j in range(samples)]
    x = [t / math.log(10) for t in ts]
    fig, ax = plt.subplots(figsize=(6, 4))
    for p in spec.profiles:
        ax.plot(x, [p.log_value(t) / math.log(10) for t in ts], label=p.name)
    ax.set_xlabel("log10 r")
    ax.set_ylabel("log10 f")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


@main.command()
@click.argument("document", type=click.Path(dir_okay=False))
@click.option("--format", "fmt_", type=click.Choice(["document", "csv", "svg"]), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--samples", type=int, default=200, show_default=True)
@click.option("--t-lo", type=float, default=None, help="Lower natural-log radius.")
@click.option("--t-hi", type=float, default=None, help="Upper natural-log radius.")
@click.option("--stage", type=int, default=None)
@click.option("--smoothed", is_flag=True)
def export(document, fmt_, out, samples, t_lo, t_hi, stage, smoothed):
    """Rewrite DOCUMENT or sample it to CSV or a log-log SVG plot."""
    doc = _load(document)
    if fmt_ == "document":
        if doc.kind == "spec":
            io.save(out, io.spec_document(doc.spec, doc.target, doc.constants))
        else:
            io.save(out, io.telescope_document(doc.stages, doc.target))
        return
    if samples < 2:
        raise ParamError("--samples must be >= 2")
    spec = _specs_of(doc, stage, smoothed)[-1][1]
    lo, hi = _default_range(spec)
    lo = lo if t_lo is None else t_lo
    hi = hi if t_hi is None else t_hi
    if not (lo < hi and lo >= spec.origin):
        raise ParamError("empty or out-of-domain radius range")
    if lo == spec.origin:
        lo = lo + 1e-9 * max(1.0, abs(lo))
    if fmt_ == "csv":
        Path(out).write_text(to_csv(spec, log_grid(lo, hi, samples)))
    else:
        _profiles_svg(out, spec, lo, hi, samples)


if __name__ == "__main__":
    main()
