"""Command-line front end.

    faber-bergman lens-exact --n-max 100 --out runs/exact
    faber-bergman verify --curve lens --n-max 16 --tol 1e-9 --out runs/verify
    faber-bergman alpha --curve lens --n-max 30 --precision-bits 256 --out runs/alpha
    faber-bergman sweep --curve lens --curve circle --n-max 32 --out runs/sweep

Exit codes: 0 success, 2 configuration error, 3 exact-identity failure,
4 tolerance or convergence failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import curvespec
from .asymptotics import SweepCurve, limit_sweep, lens_limit_check
from .bergman import IllConditionedError, PrecisionError, alpha_decomposition, alpha_table, build_basis
from .exact import (
    a_seq,
    ab_cross_identity,
    b_seq_explicit,
    even_relation_report,
    g_poly,
    g_poly_recurrence,
    i_diag_closed,
    i_odd_by_parts,
    a2_sum_identity,
    sequences,
)
from .faber import ExteriorMap, e_tail, remainder_pair
from .hp import Backend, format_rational, format_real
from .quadrature import BoundaryPath, ConvergenceError, OrientationError, green_deriv_norm

OK, CONFIG_ERROR, IDENTITY_FAILURE, TOLERANCE_FAILURE = 0, 2, 3, 4
COMMANDS = ("lens-exact", "verify", "alpha", "sweep")
FORMATS = ("csv", "json")

DEFAULTS = {
    "lens-exact": {"n_max": 100, "precision_bits": 256, "tol": 1e-12},
    "verify": {"n_max": 16, "precision_bits": 53, "tol": 1e-9},
    "alpha": {"n_max": 30, "precision_bits": 256, "tol": 1e-10},
    "sweep": {"n_max": 32, "precision_bits": 53, "tol": 1e-10},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    curves: tuple = ()
    n_max: int | None = None
    precision_bits: int | None = None
    tol: float | None = None
    check_tol: float = 1e-8
    limit_n_max: int = 2000
    out: str = "."
    formats: tuple = FORMATS

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        d = DEFAULTS[self.command]
        for key in ("n_max", "precision_bits", "tol"):
            if getattr(self, key) is None:
                object.__setattr__(self, key, d[key])
        object.__setattr__(self, "curves", tuple(self.curves))
        object.__setattr__(self, "formats", tuple(sorted(set(self.formats))))
        if not isinstance(self.n_max, int) or self.n_max < 0:
            raise ConfigError("n_max must be a non-negative integer")
        if not isinstance(self.precision_bits, int) or self.precision_bits < 2:
            raise ConfigError("precision_bits must be an integer >= 2")
        for key in ("tol", "check_tol"):
            v = getattr(self, key)
            if not isinstance(v, (int, float)) or not v > 0 or not math.isfinite(v):
                raise ConfigError(f"{key} must be a positive number")
        if not isinstance(self.limit_n_max, int) or self.limit_n_max < 10:
            raise ConfigError("limit_n_max must be an integer >= 10")
        if not self.formats or any(f not in FORMATS for f in self.formats):
            raise ConfigError(f"formats must be drawn from {FORMATS}")
        if self.command in ("lens-exact",) and self.curves:
            raise ConfigError("lens-exact takes no curve")
        if self.command in ("verify", "alpha") and len(self.curves) > 1:
            raise ConfigError(f"{self.command} takes a single curve")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        if "command" not in d:
            raise ConfigError("config needs 'command'")
        d = dict(d)
        for key in ("curves", "formats"):
            if key in d:
                if isinstance(d[key], str):
                    d[key] = [d[key]]
                if not isinstance(d[key], list):
                    raise ConfigError(f"{key} must be a list")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["curves"] = list(self.curves)
        d["formats"] = list(self.formats)
        return d


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


class Writer:
    """All files go through here, in call order, with deterministic bytes."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written = []

    def _write(self, name, text):
        path = self.dir / name
        path.write_text(text)
        self.written.append(str(path))

    def table(self, stem, header, rows):
        """CSV with a precision header line and/or a JSON list of records."""
        if "csv" in self.cfg.formats:
            buf = io.StringIO()
            buf.write(f"# precision_bits={self.cfg.precision_bits} tol={self.cfg.tol!r}\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
            self._write(f"{stem}.csv", buf.getvalue())
        if "json" in self.cfg.formats:
            recs = [dict(zip(header, r)) for r in rows]
            self.json(f"{stem}_rows", {"precision_bits": self.cfg.precision_bits, "rows": recs})

    def json(self, stem, obj):
        self._write(f"{stem}.json", json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")

    def text(self, name, text):
        self._write(name, text)


def _json_default(o):
    if type(o).__name__ in ("mpq",):
        return format_rational(o)
    if type(o).__name__ in ("mpfr", "mpf"):
        return str(o)
    if dataclasses.is_dataclass(o):
        return dataclasses.asdict(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _num(x, bits):
    return format_real(x, bits)


def _load_curve(name: str) -> curvespec.CurveSpec:
    p = Path(name)
    if p.exists():
        return curvespec.load(p)
    try:
        return curvespec.builtin(name)
    except curvespec.CurveSpecError:
        raise ConfigError(f"curve {name!r} is neither a file nor a built-in name (lens, circle)") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _count(pred, items):
    items = list(items)
    fails = [i for i in items if not pred(i)]
    return {"checked": len(items), "passed": len(items) - len(fails), "failures": fails[:20]}


def lens_exact_checks(n_max: int, g_max: int = 512) -> dict:
    """Exact identity pass counts up to ``n_max``."""
    a, b = sequences(n_max)
    g_rec = g_poly_recurrence(min(n_max, g_max))
    even_n = max(0, (n_max - 1) // 2)
    checks = {
        "identity_a2_sum": _count(a2_sum_identity, range(n_max + 1)),
        "a_recurrence_vs_explicit": _count(lambda n: a[n] == a_seq(n), range(n_max + 1)),
        "b_recurrence_vs_explicit": _count(lambda n: b[n] == b_seq_explicit(n), range(n_max + 1)),
        "g_recurrence_vs_explicit": _count(lambda n: g_rec[n] == g_poly(n), range(len(g_rec))),
        "ab_cross_identity": _count(ab_cross_identity, range(2, n_max + 1, 2)),
        "odd_summation_form_vs_closed": _count(lambda k: i_odd_by_parts(k) == i_diag_closed(2 * k), range(n_max // 2 + 1)),
    }
    checks["even_relation"] = even_relation_report(even_n)
    return checks


def green_oracle_n2(report: dict, tol: float = 1e-12) -> dict:
    """Quadrature value of ||E'_2||^2 on the lens, set against both relation readings at N = 0."""
    res = green_deriv_norm(e_tail(2, ExteriorMap.lens()), BoundaryPath.lens(), tol=tol)
    value = float(res.value)
    uncorrected = report["uncorrected"]["float_N0"]
    closed = report["closed_float_N0"]
    return {
        "quadrature_value": value,
        "quadrature_error": res.error,
        "diff_closed_form": abs(value - closed),
        "diff_uncorrected_form": abs(value - uncorrected),
        "confirms_corrected": abs(value - closed) <= 1e-9 < abs(value - uncorrected),
    }


def cmd_lens_exact(cfg: RunConfig) -> int:
    w = Writer(cfg)
    n_max, bits = cfg.n_max, cfg.precision_bits
    a, b = sequences(n_max)
    header = ["n", "a_n", "b_n", "I_exact", "I_float"]
    rows = []
    for n in range(n_max + 1):
        v = i_diag_closed(n)
        rows.append([n, format_rational(a[n]), format_rational(b[n]), str(v), _num(v.to_float(bits), bits)])
    w.table("sequences", header, rows)
    checks = lens_exact_checks(n_max)
    checks["green_oracle_n2"] = green_oracle_n2(checks["even_relation"])
    ok = all(c["passed"] == c["checked"] for k, c in checks.items() if "checked" in c)
    ok = ok and checks["even_relation"]["corrected"]["matches_closed_form"]
    checks["all_identities_pass"] = ok
    checks["config"] = cfg.to_dict()
    w.json("checks", checks)
    return OK if ok else IDENTITY_FAILURE


def _exact_reference(spec, n):
    if spec.emap.is_lens:
        return i_diag_closed(n - 1)
    if spec.emap.is_circle:
        return 0
    return None


def cmd_verify(cfg: RunConfig) -> int:
    spec = _load_curve(cfg.curves[0] if cfg.curves else "lens")
    if _exact_reference(spec, 1) is None:
        raise ConfigError("verify needs a curve with an exact reference (lens or circle)")
    w = Writer(cfg)
    bits = cfg.precision_bits
    bk = Backend(bits)
    rows, failed = [], 0
    for n in range(1, cfg.n_max + 1):
        ref = _exact_reference(spec, n)
        exact_str = str(ref) if not isinstance(ref, int) else "0"
        exact_val = ref.to_float(bits) if not isinstance(ref, int) else 0
        try:
            res = green_deriv_norm(remainder_pair(n, spec.emap, bk), spec.path, tol=cfg.tol, precision_bits=bits)
            diff = abs(res.value - exact_val)
            status = "pass" if diff <= cfg.tol else "fail"
            cells = [_num(res.value, bits), _num(diff, bits), f"{res.error:.3e}"]
        except (ConvergenceError, OrientationError) as exc:
            status = "nonconverged"
            cells = ["", "", str(exc)]
        failed += status != "pass"
        rows.append([n, exact_str, _num(exact_val, bits)] + cells + [status])
    header = ["n", "exact", "exact_float", "numeric", "abs_diff", "error_estimate", "status"]
    w.table("verify", header, rows)
    w.json("verify_summary", {"curve": spec.name, "rows": len(rows), "failed": failed, "config": cfg.to_dict()})
    return OK if not failed else TOLERANCE_FAILURE


def cmd_alpha(cfg: RunConfig) -> int:
    spec = _load_curve(cfg.curves[0] if cfg.curves else "lens")
    w = Writer(cfg)
    try:
        basis = build_basis(spec.path, cfg.n_max, precision_bits=cfg.precision_bits, tol=cfg.tol)
        table = alpha_table(basis, spec.emap.gamma, spec.emap)
    except (IllConditionedError, PrecisionError, ConvergenceError) as exc:
        w.json("alpha_summary", {"curve": spec.name, "error": str(exc), "config": cfg.to_dict()})
        print(f"alpha: {exc}", file=sys.stderr)
        return TOLERANCE_FAILURE
    bits = basis.precision_bits
    rows, bad_bound, worst = [], [], 0.0
    for r in table:
        res = alpha_decomposition(basis, spec.emap, r.n).residual
        worst = max(worst, res)
        bound_ok = float(r.alpha_n) >= float(r.exterior_bound) - cfg.check_tol
        if not bound_ok:
            bad_bound.append(r.n)
        rows.append(
            [
                r.n,
                _num(r.lambda_n, bits),
                _num(r.alpha_n, bits),
                _num(r.n_alpha_n, bits),
                _num(r.exterior_bound, bits),
                f"{res:.3e}",
                "yes" if bound_ok else "no",
            ]
        )
    header = ["n", "lambda_n", "alpha_n", "n*alpha_n", "lower_bound", "decomposition_residual", "lower_bound_ok"]
    w.table("alpha", header, rows)
    ok = not bad_bound and worst <= cfg.check_tol
    w.json(
        "alpha_summary",
        {
            "curve": spec.name,
            "precision_bits_used": bits,
            "gram_residual": basis.gram_residual,
            "max_bits_lost": basis.max_bits_lost,
            "lower_bound_violations": bad_bound,
            "max_decomposition_residual": worst,
            "passed": ok,
            "config": cfg.to_dict(),
        },
    )
    return OK if ok else TOLERANCE_FAILURE


def cmd_sweep(cfg: RunConfig) -> int:
    specs = [_load_curve(c) for c in (cfg.curves or ("lens", "circle"))]
    w = Writer(cfg)
    curves = [SweepCurve(s.name, s.emap, s.path) for s in specs]
    reports = limit_sweep(curves, cfg.n_max, tol=cfg.tol)
    rows = []
    for rep in reports:
        for r in rep.rows:
            rows.append(
                [
                    rep.name,
                    r.n,
                    repr(r.value),
                    repr(r.scaled_value),
                    "" if r.running_extrapolation is None else repr(r.running_extrapolation),
                    "" if r.fit_residual is None else repr(r.fit_residual),
                ]
            )
        w.text(f"{_slug(rep.name)}.dat", "".join(f"{r.n} {r.value!r}\n" for r in rep.rows))
    header = ["curve", "n", "norm_sq", "scaled", "running_limit", "fit_residual"]
    w.table("sweep", header, rows)
    summary = {"curves": [rep.summary() for rep in reports], "config": cfg.to_dict()}
    if any(s.emap.is_lens for s in specs):
        summary["lens_limit"] = lens_limit_check(cfg.limit_n_max).to_dict()
    w.json("sweep_summary", summary)
    failed = any(rep.notes and rep.notes[0].startswith("quadrature failed") for rep in reports)
    return TOLERANCE_FAILURE if failed else OK


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name) or "curve"


HANDLERS = {"lens-exact": cmd_lens_exact, "verify": cmd_verify, "alpha": cmd_alpha, "sweep": cmd_sweep}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="faber-bergman", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="strict JSON RunConfig; flags override it")
        s.add_argument("--n-max", type=int)
        s.add_argument("--precision-bits", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--check-tol", type=float)
        s.add_argument("--curve", action="append", help="curve-spec file or built-in name; repeat for sweep")
        s.add_argument("--out")
        s.add_argument("--format", action="append", choices=FORMATS)
        if name == "sweep":
            s.add_argument("--limit-n-max", type=int)
    return p


def config_from_args(args) -> RunConfig:
    base = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(base, dict):
            raise ConfigError("config must be a JSON object")
        if base.get("command", args.command) != args.command:
            raise ConfigError(f"config is for {base['command']!r}, not {args.command!r}")
    base = dict(base, command=args.command)
    flags = {
        "n_max": args.n_max,
        "precision_bits": args.precision_bits,
        "tol": args.tol,
        "check_tol": args.check_tol,
        "curves": args.curve,
        "out": args.out,
        "formats": args.format,
        "limit_n_max": getattr(args, "limit_n_max", None),
    }
    base.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig.from_dict(base)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return HANDLERS[cfg.command](cfg)
    except (ConfigError, curvespec.CurveSpecError) as exc:
        print(f"{parser.prog}: config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
