"""Profile documents: JSON with strict fields and bit-exact reals.

Layout::

    {"format": "warpforge", "version": 1, "radius_encoding": "ln",
     "kind": "spec" | "telescope", "target": ..., "dims": {...},
     "origin": ..., "profiles": [{"name", "segments": [{kind, params, lo, hi, sigma, kappa}], "c2_breaks"}],
     "stages": [...], "constants": {...}}

Radii (``lo``, ``hi``, ``origin``, ``sigma``) are natural logs, as flagged
by ``radius_encoding``.  Reals are written with 17 significant digits, which
round-trips every double; infinities are the strings ``"inf"``/``"-inf"``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .curvature import FiberDescriptor
from .profiles import (Bridge, Piece, PiecewiseProfile, ProfileDomainError, certify_bridge_positive,
                       segment_from_params)
from .specs import MultiWarpSpec, TripleWarpSpec

FORMAT = "warpforge"
VERSION = 1
RADIUS_ENCODING = "ln"
INF = math.inf


class DocumentError(ValueError):
    """A document is malformed, has unknown fields or describes an invalid profile."""


# ---------------------------------------------------------------------------
# writing


def _real(x: float) -> str:
    if math.isnan(x):
        raise DocumentError("NaN cannot be stored")
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x + 0.0, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def _write(v, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return _real(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_write(x, indent, level + 1)}" for k, x in v.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            return "[" + ", ".join(_write(x, indent, level + 1) for x in v) + "]"
        return "[" + pad + ("," + pad).join(_write(x, indent, level + 1) for x in v) + end + "]"
    raise TypeError(f"cannot store {type(v).__name__}")


def dumps(doc: dict) -> str:
    return _write(doc, 1, 0) + "\n"


def jsonable(v):
    """Plain-data view of construction records (certificates become summaries)."""
    from .verify.certificate import CurvatureCertificate

    if isinstance(v, CurvatureCertificate):
        return {"status": v.status, "margin": v.margin, "cells": len(v.cells)}
    if hasattr(v, "to_dict") and not isinstance(v, type):
        return jsonable(v.to_dict())
    if dataclasses.is_dataclass(v) and not isinstance(v, type):
        return {f.name: jsonable(getattr(v, f.name)) for f in dataclasses.fields(v)}
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, frozenset, set)):
        return [jsonable(x) for x in v]
    if isinstance(v, float):
        return v if math.isfinite(v) else (None if math.isnan(v) else v)
    if isinstance(v, (int, str, bool)) or v is None:
        return v
    return repr(v)


def _dims(spec) -> dict:
    if isinstance(spec, TripleWarpSpec):
        return {"m": spec.m, "n": spec.n}
    return {"fibers": [{"dim": f.dim, "ricci_lower": float(f.ricci_lower)} for f in spec.fibers]}


def _profiles(spec) -> list[dict]:
    out = []
    for p in spec.profiles:
        d = p.to_dict()
        d["c2_breaks"] = [float(x) for x in d["c2_breaks"]]
        out.append(d)
    return out


def spec_document(spec, target: str = "", constants=None) -> dict:
    doc = {"format": FORMAT, "version": VERSION, "radius_encoding": RADIUS_ENCODING, "kind": "spec",
           "target": target, "dims": _dims(spec), "origin": spec.origin, "profiles": _profiles(spec)}
    if constants is not None:
        doc["constants"] = jsonable(constants)
    return doc


def telescope_document(stages, target: str = "telescope") -> dict:
    if not stages:
        raise DocumentError("no stages")
    rows = []
    for st in stages:
        rows.append({
            "index": st.index, "ln_N": st.ln_N, "L": st.L, "ln_R": st.ln_R, "epsilon": st.epsilon,
            "origin_offset": st.origin_offset, "i0": st.i0,
            "spec": {"origin": st.spec.origin, "profiles": _profiles(st.spec)},
            "smoothed": {"origin": st.smoothed.origin, "profiles": _profiles(st.smoothed)},
        })
    return {"format": FORMAT, "version": VERSION, "radius_encoding": RADIUS_ENCODING, "kind": "telescope",
            "target": target, "dims": _dims(stages[0].spec), "stages": rows}


# ---------------------------------------------------------------------------
# reading


def _fields(d, where: str, required: set, optional: set = frozenset()) -> dict:
    if not isinstance(d, dict):
        raise DocumentError(f"{where}: expected an object")
    unknown = set(d) - required - set(optional)
    if unknown:
        raise DocumentError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise DocumentError(f"{where}: missing field(s) {sorted(missing)}")
    return d


def _to_real(v, where: str) -> float:
    if isinstance(v, bool):
        raise DocumentError(f"{where}: expected a real, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if v in ("inf", "-inf"):
        return float(v)
    raise DocumentError(f"{where}: expected a real, got {v!r}")


def _to_int(v, where: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise DocumentError(f"{where}: expected an integer, got {v!r}")
    return v


PARAMS = {"constant": {"v"}, "linear": {"a", "b"}, "power": {"a", "s"}, "logblend": {"c", "x0", "slope", "b"},
          "bridge": {"coeffs", "x_lo", "x_hi"}}


def _check_positive(pc: Piece, where: str) -> None:
    """Reject pieces that are not positive on the open range ``(lo, hi)``."""
    if isinstance(pc.seg, Bridge):
        if not certify_bridge_positive(pc.seg):
            raise DocumentError(f"{where}: bridge segment is not positive")
        return
    lo, hi = pc.lo, pc.hi
    a = lo if math.isfinite(lo) else (hi - 50.0 if math.isfinite(hi) else -50.0)
    b = hi if math.isfinite(hi) else a + 50.0
    ts = [a + (b - a) * j / 16 for j in range(1, 16)]
    if math.isfinite(lo):
        ts.append(math.nextafter(lo, INF) if lo != a else a + 1e-9 * (b - a))
    if math.isfinite(hi):
        ts.append(hi)
    try:
        for t in ts:
            pc.log_jet(t)
        if math.isfinite(lo) and math.isfinite(hi):
            pc.enclose(lo, hi)
    except (ProfileDomainError, ValueError, OverflowError) as e:
        raise DocumentError(f"{where}: segment is not positive on its range ({e})") from None


def _profile(d, where: str) -> PiecewiseProfile:
    _fields(d, where, {"name", "segments"}, {"c2_breaks"})
    if not isinstance(d["name"], str):
        raise DocumentError(f"{where}.name: expected a string")
    segs = d["segments"]
    if not isinstance(segs, list) or not segs:
        raise DocumentError(f"{where}.segments: expected a non-empty list")
    pieces = []
    for j, s in enumerate(segs):
        w = f"{where}.segments[{j}]"
        _fields(s, w, {"kind", "params", "lo", "hi"}, {"sigma", "kappa"})
        kind = s["kind"]
        if kind not in PARAMS:
            raise DocumentError(f"{w}: unknown segment kind {kind!r}")
        params = _fields(s["params"], f"{w}.params", PARAMS[kind])
        if kind == "bridge":
            if not isinstance(params["coeffs"], list) or len(params["coeffs"]) < 2:
                raise DocumentError(f"{w}.params.coeffs: expected a list of reals")
            clean = {"coeffs": [_to_real(c, f"{w}.params.coeffs") for c in params["coeffs"]],
                     "x_lo": _to_real(params["x_lo"], f"{w}.params"), "x_hi": _to_real(params["x_hi"], f"{w}.params")}
        else:
            clean = {k: _to_real(v, f"{w}.params.{k}") for k, v in params.items()}
        try:
            seg = segment_from_params(kind, clean)
        except (ValueError, TypeError) as e:
            raise DocumentError(f"{w}: {e}") from None
        pc = Piece(seg, _to_real(s.get("sigma", 0.0), w), _to_real(s.get("kappa", 0.0), w),
                   _to_real(s["lo"], w), _to_real(s["hi"], w))
        _check_positive(pc, w)
        pieces.append(pc)
    breaks = d.get("c2_breaks", [])
    if not isinstance(breaks, list):
        raise DocumentError(f"{where}.c2_breaks: expected a list")
    try:
        return PiecewiseProfile(tuple(pieces), d["name"], frozenset(_to_real(x, where) for x in breaks))
    except ValueError as e:
        raise DocumentError(f"{where}: {e}") from None


def _make_spec(dims: dict, origin: float, profiles: list[PiecewiseProfile]):
    if "m" in dims:
        if len(profiles) != 3:
            raise DocumentError("a triple spec needs exactly three profiles")
        return TripleWarpSpec(dims["m"], dims["n"], *profiles, origin=origin)
    fibers = tuple(FiberDescriptor(f["dim"], f["ricci_lower"]) for f in dims["fibers"])
    if len(fibers) != len(profiles):
        raise DocumentError("one profile per fiber required")
    return MultiWarpSpec(fibers, tuple(profiles), origin)


def _parse_dims(d) -> dict:
    if isinstance(d, dict) and "fibers" in d:
        _fields(d, "dims", {"fibers"})
        if not isinstance(d["fibers"], list) or not d["fibers"]:
            raise DocumentError("dims.fibers: expected a non-empty list")
        out = []
        for j, f in enumerate(d["fibers"]):
            _fields(f, f"dims.fibers[{j}]", {"dim"}, {"ricci_lower"})
            dim = _to_int(f["dim"], f"dims.fibers[{j}].dim")
            if dim < 2:
                raise DocumentError(f"dims.fibers[{j}].dim must be >= 2")
            out.append({"dim": dim, "ricci_lower": _to_real(f.get("ricci_lower", dim - 1), f"dims.fibers[{j}]")})
        return {"fibers": out}
    _fields(d, "dims", {"m", "n"})
    m, n = _to_int(d["m"], "dims.m"), _to_int(d["n"], "dims.n")
    if m < 2 or n < 2:
        raise DocumentError("dims: m and n must be >= 2")
    return {"m": m, "n": n}


def _spec_body(d: dict, dims: dict, where: str):
    profiles = [_profile(p, f"{where}.profiles[{j}]") for j, p in enumerate(d["profiles"])]
    origin = _to_real(d["origin"], f"{where}.origin")
    for p in profiles:
        if p.origin != origin:
            raise DocumentError(f"{where}: profile {p.name!r} starts at {p.origin}, not at the origin {origin}")
    return _make_spec(dims, origin, profiles)


@dataclass
class Document:
    kind: str
    target: str
    spec: TripleWarpSpec | MultiWarpSpec | None = None
    stages: list | None = None
    constants: dict | None = None


def from_dict(doc) -> Document:
    head = {"format", "version", "radius_encoding", "kind", "target", "dims"}
    if not isinstance(doc, dict):
        raise DocumentError("document: expected an object")
    kind = doc.get("kind")
    if kind == "spec":
        _fields(doc, "document", head | {"origin", "profiles"}, {"constants"})
    elif kind == "telescope":
        _fields(doc, "document", head | {"stages"}, {"constants"})
    else:
        raise DocumentError(f"document: unknown kind {kind!r}")
    if doc["format"] != FORMAT or doc["version"] != VERSION:
        raise DocumentError(f"document: unsupported format {doc['format']!r} version {doc['version']!r}")
    if doc["radius_encoding"] != RADIUS_ENCODING:
        raise DocumentError(f"document: radius_encoding must be {RADIUS_ENCODING!r}")
    if not isinstance(doc["target"], str):
        raise DocumentError("document.target: expected a string")
    dims = _parse_dims(doc["dims"])
    constants = doc.get("constants")
    if kind == "spec":
        if not isinstance(doc["profiles"], list):
            raise DocumentError("document.profiles: expected a list")
        return Document("spec", doc["target"], spec=_spec_body(doc, dims, "document"), constants=constants)

    from .constructions.types import TelescopeStage

    if not isinstance(doc["stages"], list) or not doc["stages"]:
        raise DocumentError("document.stages: expected a non-empty list")
    stages = []
    for j, s in enumerate(doc["stages"]):
        w = f"stages[{j}]"
        _fields(s, w, {"index", "ln_N", "L", "ln_R", "epsilon", "origin_offset", "i0", "spec", "smoothed"})
        parts = {}
        for key in ("spec", "smoothed"):
            body = _fields(s[key], f"{w}.{key}", {"origin", "profiles"})
            if not isinstance(body["profiles"], list):
                raise DocumentError(f"{w}.{key}.profiles: expected a list")
            parts[key] = _spec_body(body, dims, f"{w}.{key}")
        i0 = None if s["i0"] is None else _to_int(s["i0"], f"{w}.i0")
        stages.append(TelescopeStage(
            index=_to_int(s["index"], f"{w}.index"), spec=parts["spec"], smoothed=parts["smoothed"],
            ln_N=_to_real(s["ln_N"], w), L=_to_real(s["L"], w), ln_R=_to_real(s["ln_R"], w),
            epsilon=_to_real(s["epsilon"], w), origin_offset=_to_real(s["origin_offset"], w), i0=i0))
    return Document("telescope", doc["target"], stages=stages, constants=constants)


def _reject_constant(name: str):
    raise DocumentError(f"non-finite literal {name} is not allowed; use \"inf\" or \"-inf\"")


def loads(text: str) -> Document:
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise DocumentError(f"not valid JSON: {e}") from None
    return from_dict(raw)


def load(path) -> Document:
    return loads(Path(path).read_text())


def save(path, doc: dict) -> None:
    Path(path).write_text(dumps(doc))
