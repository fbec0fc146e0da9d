"""JSON curve-spec files: an exterior map plus, optionally, its boundary.

Example::

    {
      "name": "lens",
      "map": {"kind": "closed_form_phi", "phi": {"1": "1/2", "-1": "1/2"}, "gamma": "1/2"},
      "boundary": {"segments": [...], "corners": [...]}
    }

Map kinds:

* ``closed_form_phi``: ``phi`` maps exponent -> coefficient
* ``psi_series``: ``b`` and ``coeffs`` for ``psi(w) = b w + c0 + c1/w + ...``
* ``lune``: ``beta``, the exterior corner angle in units of pi

Coefficients are ``"p/q"`` strings, decimal strings or integers (all exact),
or ``[re, im]`` pairs of those. ``gamma`` is optional and checked when given.
Without ``boundary`` the natural boundary of the map is used.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import gmpy2

from .faber import ExteriorMap
from .hp import format_rational, parse_rational
from .quadrature import BoundaryPath, CircularArc, Corner, LevelCurve, PsiCurve

MAP_KEYS = {
    "closed_form_phi": {"kind", "phi", "gamma"},
    "psi_series": {"kind", "b", "coeffs", "gamma"},
    "lune": {"kind", "beta", "gamma"},
}
TOP_KEYS = {"name", "map", "boundary"}


class CurveSpecError(ValueError):
    pass


@dataclass(frozen=True)
class CurveSpec:
    name: str
    emap: ExteriorMap
    path: BoundaryPath


def _strict(d, allowed, where):
    if not isinstance(d, dict):
        raise CurveSpecError(f"{where}: expected an object")
    extra = set(d) - allowed
    if extra:
        raise CurveSpecError(f"{where}: unknown keys {sorted(extra)}")


def _number(v, where):
    if isinstance(v, bool) or isinstance(v, float):
        raise CurveSpecError(f"{where}: give numbers as strings or integers to keep them exact")
    if isinstance(v, list):
        if len(v) != 2:
            raise CurveSpecError(f"{where}: complex values are [re, im]")
        re, im = (_number(x, where) for x in v)
        return re if im == 0 else gmpy2.mpc(re, im)
    try:
        return parse_rational(v)
    except (ValueError, ZeroDivisionError) as exc:
        raise CurveSpecError(f"{where}: cannot parse {v!r}") from exc


def _dump_number(v):
    if type(v).__name__ == "mpc" or isinstance(v, complex):
        return [format_rational(parse_rational(repr(float(v.real)))), format_rational(parse_rational(repr(float(v.imag))))]
    return format_rational(v)


def map_from_dict(d: dict, name: str = "") -> ExteriorMap:
    kind = d.get("kind") if isinstance(d, dict) else None
    if kind not in MAP_KEYS:
        raise CurveSpecError(f"map.kind must be one of {sorted(MAP_KEYS)}")
    _strict(d, MAP_KEYS[kind], "map")
    try:
        if kind == "closed_form_phi":
            phi = d.get("phi")
            if not isinstance(phi, dict):
                raise CurveSpecError("map.phi: expected exponent -> coefficient object")
            emap = ExteriorMap.from_phi({int(k): _number(v, f"map.phi[{k}]") for k, v in phi.items()}, name=name)
        elif kind == "psi_series":
            coeffs = d.get("coeffs", [])
            if not isinstance(coeffs, list):
                raise CurveSpecError("map.coeffs: expected a list")
            emap = ExteriorMap.from_psi(_number(d["b"], "map.b"), [_number(c, "map.coeffs") for c in coeffs], name=name)
        else:
            emap = ExteriorMap.lune(_number(d["beta"], "map.beta"))
    except KeyError as exc:
        raise CurveSpecError(f"map: missing key {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, CurveSpecError):
            raise
        raise CurveSpecError(f"map: {exc}") from exc
    if "gamma" in d and _number(d["gamma"], "map.gamma") != emap.gamma:
        raise CurveSpecError(f"map.gamma {d['gamma']} disagrees with the map (gamma = {emap.gamma})")
    return emap


def map_to_dict(emap: ExteriorMap) -> dict:
    if emap.kind == "closed_form_phi":
        out = {"kind": emap.kind, "phi": {str(k): _dump_number(v) for k, v in sorted(emap.phi.coeffs.items(), reverse=True)}}
    elif emap.kind == "psi_series":
        out = {"kind": emap.kind, "b": _dump_number(emap.psi_b), "coeffs": [_dump_number(c) for c in emap.psi_coeffs]}
    else:
        out = {"kind": "lune", "beta": format_rational(emap.beta)}
    out["gamma"] = _dump_number(emap.gamma)
    return out


def _segment(d, emap, i):
    where = f"boundary.segments[{i}]"
    t = d.get("type") if isinstance(d, dict) else None
    if t == "arc":
        _strict(d, {"type", "center", "start", "end", "ccw", "radius", "angles"}, where)
        pts = [[_number(x, where) for x in d[k]] for k in ("center", "start", "end")]
        return CircularArc(*[tuple(p) for p in pts], ccw=bool(d.get("ccw", True)))
    if t == "level":
        _strict(d, {"type", "phi"}, where)
        if emap.kind != "closed_form_phi":
            raise CurveSpecError(f"{where}: level segments need a closed_form_phi map")
        return LevelCurve(emap.phi)
    if t == "psi":
        _strict(d, {"type"}, where)
        if emap.kind != "psi_series":
            raise CurveSpecError(f"{where}: psi segments need a psi_series map")
        return PsiCurve(emap)
    raise CurveSpecError(f"{where}: unknown segment type {t!r}")


def path_from_dict(d: dict, emap: ExteriorMap, name: str = "") -> BoundaryPath:
    _strict(d, {"segments", "corners"}, "boundary")
    try:
        segs = [_segment(s, emap, i) for i, s in enumerate(d.get("segments", []))]
        corners = []
        for i, c in enumerate(d.get("corners", [])):
            _strict(c, {"point", "angle"}, f"boundary.corners[{i}]")
            corners.append(Corner(tuple(_number(x, "corner") for x in c["point"]), _number(c["angle"], "corner")))
        return BoundaryPath(tuple(segs), tuple(corners), name=name)
    except (KeyError, TypeError) as exc:
        raise CurveSpecError(f"boundary: malformed ({exc})") from exc
    except ValueError as exc:
        if isinstance(exc, CurveSpecError):
            raise
        raise CurveSpecError(f"boundary: {exc}") from exc


def from_dict(d: dict) -> CurveSpec:
    _strict(d, TOP_KEYS, "curve spec")
    if "map" not in d:
        raise CurveSpecError("curve spec: missing 'map'")
    name = str(d.get("name", ""))
    emap = map_from_dict(d["map"], name)
    path = path_from_dict(d["boundary"], emap, name) if "boundary" in d else BoundaryPath.for_map(emap)
    return CurveSpec(name or emap.name or path.name, emap, path)


def to_dict(spec: CurveSpec) -> dict:
    return {"name": spec.name, "map": map_to_dict(spec.emap), "boundary": spec.path.to_dict()}


def load(path) -> CurveSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CurveSpecError(f"{path}: invalid JSON ({exc})") from exc
    return from_dict(data)


def dump(spec: CurveSpec, path) -> None:
    Path(path).write_text(json.dumps(to_dict(spec), indent=2) + "\n")


def builtin(name: str) -> CurveSpec:
    """Named curves: ``lens`` and ``circle`` (alias ``disk``)."""
    if name == "lens":
        m = ExteriorMap.lens()
    elif name in ("circle", "disk"):
        m = ExteriorMap.circle()
    else:
        raise CurveSpecError(f"unknown built-in curve {name!r}")
    return CurveSpec(m.name, m, BoundaryPath.for_map(m))
