"""Sequence diagnostics: model extrapolation, liminf proxies, limit checks and
curve sweeps for ``||E'_{n+1}||^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exact import i_diag_float_table
from .faber import ExteriorMap, remainder_pair
from .hp import Backend
from .quadrature import BoundaryPath, ConvergenceError, OrientationError, QuadratureRule, green_deriv_norm

MODELS = ("const+c/N", "const+c*lnN/N", "exponential")
ALGEBRAIC = MODELS[:2]

BOUNDED = "bounded-away-from-zero"
DECAYING = "decaying-to-zero"
INCONCLUSIVE = "inconclusive"


class DegenerateFitError(ValueError):
    pass


@dataclass(frozen=True)
class Fit:
    model: str
    limit: float
    residual: float  # RMS of the fit residuals
    coeffs: tuple
    n_points: int


def _as_arrays(values):
    pts = sorted((float(n), float(x)) for n, x in values)
    n = np.array([p[0] for p in pts])
    x = np.array([p[1] for p in pts])
    if len(n) < 3:
        raise ValueError("extrapolation needs at least 3 points")
    if np.any(np.diff(n) <= 0):
        raise ValueError("n must be strictly increasing")
    if n[0] <= 0:
        raise ValueError("n must be positive")
    return n, x


def _linear_fit(model, n, x, basis):
    a = np.column_stack([np.ones_like(n), basis])
    if not np.all(np.isfinite(a)) or np.linalg.matrix_rank(a) < 2:
        raise DegenerateFitError(f"{model}: singular least-squares system")
    c, *_ = np.linalg.lstsq(a, x, rcond=None)
    r = float(np.sqrt(np.mean((a @ c - x) ** 2)))
    return Fit(model, float(c[0]), r, tuple(float(v) for v in c), len(n))


def _exponential_fit(n, x):
    dx = np.diff(x)
    if np.all(dx == 0):
        return Fit("exponential", float(x[-1]), 0.0, (float(x[-1]), 0.0, 0.0), len(n))
    keep = dx != 0
    if keep.sum() < 2 or np.any(np.sign(dx[keep]) != np.sign(dx[keep][0])):
        raise DegenerateFitError("exponential: differences are not of one sign")
    # x_n = L + c rho^n  =>  log|x_{n+1} - x_n| is linear in n with slope log rho
    # (n need not be consecutive; use the left endpoint and the step)
    nm, step = n[:-1][keep], np.diff(n)[keep]
    if np.any(step != step[0]):
        raise DegenerateFitError("exponential: needs equally spaced n")
    # differences near the rounding level of x carry no slope information
    ad = np.abs(dx[keep])
    noise = 1e3 * np.finfo(float).eps * max(1.0, float(np.abs(x).max()))
    w = np.minimum(1.0, ad / noise)
    if np.count_nonzero(w > 1e-3) < 2:
        raise DegenerateFitError("exponential: differences lost in rounding")
    slope = np.polyfit(nm, np.log(ad), 1, w=w)[0]
    rho = math.exp(slope)
    if not 0 < rho < 1:
        raise DegenerateFitError(f"exponential: ratio {rho:.3g} is not a decay")
    # scale the basis by its value at the first point to keep it representable
    k = n - n[0]
    lim, c = _linear_fit("exponential", n, x, rho**k).coeffs
    # Gauss-Newton polish of (L, c, rho) against x itself
    for _ in range(20):
        rk = rho**k
        r = x - (lim + c * rk)
        jac = np.column_stack([np.ones_like(k), rk, c * k * rho ** np.maximum(k - 1, 0)])
        step, *_ = np.linalg.lstsq(jac, r, rcond=None)
        if not np.all(np.isfinite(step)) or not 0 < rho + step[2] < 1:
            break
        lim, c, rho = lim + step[0], c + step[1], rho + step[2]
        if abs(step[2]) <= 4 * np.finfo(float).eps * rho:
            break
    resid = float(np.sqrt(np.mean((x - lim - c * rho**k) ** 2)))
    return Fit("exponential", float(lim), resid, (float(lim), float(c), float(rho)), len(n))


def extrapolate(values, model: str = "const+c/N") -> Fit:
    """Least-squares fit of ``model`` to ``(n, x_n)`` pairs; the constant is the limit."""
    n, x = _as_arrays(values)
    if model == "const+c/N":
        return _linear_fit(model, n, x, 1.0 / n)
    if model == "const+c*lnN/N":
        return _linear_fit(model, n, x, np.log(n) / n)
    if model == "exponential":
        return _exponential_fit(n, x)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def alternates(x, fraction: float = 0.75) -> bool:
    """True when consecutive differences flip sign in most of the sequence."""
    d = np.diff(np.asarray(x, dtype=float))
    d = d[d != 0]
    if len(d) < 3:
        return False
    flips = np.sum(np.sign(d[1:]) != np.sign(d[:-1]))
    return flips >= fraction * (len(d) - 1)


@dataclass(frozen=True)
class Extrapolation:
    limit: float
    error: float
    model: str
    parity_split: bool
    fits: tuple


def best_extrapolation(ns, xs, models=ALGEBRAIC) -> Extrapolation:
    """Best-residual model; oscillating data is fitted per parity and averaged.

    The error is the fit residual plus, for parity splits, half the gap
    between the two parity limits.
    """
    ns = [int(v) for v in ns]
    xs = [float(v) for v in xs]
    split = alternates(xs) and len(ns) >= 6

    def best(pairs):
        fits = []
        for m in models:
            try:
                fits.append(extrapolate(pairs, m))
            except DegenerateFitError:
                continue
        if not fits:
            raise DegenerateFitError("no model could be fitted")
        return min(fits, key=lambda f: f.residual)

    if not split:
        f = best(list(zip(ns, xs)))
        return Extrapolation(f.limit, f.residual, f.model, False, (f,))
    groups = [[(n, x) for n, x in zip(ns, xs) if n % 2 == p] for p in (0, 1)]
    fits = tuple(best(g) for g in groups)
    limit = 0.5 * (fits[0].limit + fits[1].limit)
    err = 0.5 * abs(fits[0].limit - fits[1].limit) + max(f.residual for f in fits)
    model = fits[0].model if fits[0].model == fits[1].model else "mixed"
    return Extrapolation(limit, err, model, True, fits)


def liminf_estimate(ns, xs) -> float:
    """Limit of minima over the tail windows ``[n/2, n]``."""
    ns = np.asarray(ns, dtype=float)
    xs = np.asarray(xs, dtype=float)
    mins = []
    for i, n in enumerate(ns):
        w = (ns >= n / 2) & (ns <= n)
        mins.append(xs[w].min())
    tail = [(n, m) for n, m in zip(ns, mins) if n >= ns[-1] / 2]
    if len(tail) < 3:
        return float(mins[-1])
    try:
        return extrapolate(tail, "const+c/N").limit
    except DegenerateFitError:
        return float(mins[-1])


@dataclass(frozen=True)
class SequenceRow:
    n: int
    value: float
    scaled_value: float
    running_extrapolation: float | None
    fit_residual: float | None


@dataclass(frozen=True)
class Thresholds:
    """Classification settings. These are tunable defaults, not claims."""

    ratio: float = 5.0  # limit > ratio * error  =>  bounded away from zero
    min_points: int = 8
    zero_atol: float = 1e-14  # values at or below this count as exact zeros
    decay_atol: float = 1e-6  # exponential limit this close to 0 counts as zero


@dataclass
class SequenceReport:
    name: str
    rows: list
    estimated_limit: float | None = None
    limit_error: float | None = None
    estimated_liminf: float | None = None
    model: str | None = None
    parity_split: bool = False
    classification: str = INCONCLUSIVE
    notes: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "points": len(self.rows),
            "estimated_limit": self.estimated_limit,
            "limit_error": self.limit_error,
            "estimated_liminf": self.estimated_liminf,
            "model": self.model,
            "parity_split": self.parity_split,
            "classification": self.classification,
            "notes": list(self.notes),
        }


def sequence_report(name, ns, values, scale=None, errors=None, thresholds: Thresholds = Thresholds()) -> SequenceReport:
    """Tabulate a sequence with running extrapolations and classify its limit.

    ``scale(n)`` produces the scaled column (defaults to the value itself);
    ``errors`` are per-value absolute uncertainties, used as a noise floor.
    """
    order = np.argsort(ns)
    ns = [int(ns[i]) for i in order]
    vals = [float(values[i]) for i in order]
    errs = [float(errors[i]) for i in order] if errors is not None else [0.0] * len(ns)
    rows = []
    for i, (n, v) in enumerate(zip(ns, vals)):
        run, res = None, None
        pts = [(k, x) for k, x in zip(ns[: i + 1], vals[: i + 1]) if k > 0]
        if len(pts) >= 3:
            try:
                ex = best_extrapolation([p[0] for p in pts], [p[1] for p in pts])
                run, res = ex.limit, ex.error
            except DegenerateFitError:
                pass
        rows.append(SequenceRow(n, v, float(scale(n) * v) if scale else v, run, res))
    rep = SequenceReport(name, rows)
    classify(rep, ns, vals, errs, thresholds)
    return rep


def classify(rep: SequenceReport, ns, vals, errs, t: Thresholds):
    if len(ns) < t.min_points:
        rep.notes.append(f"only {len(ns)} points; need {t.min_points} to classify")
        return rep
    pos = [(n, v, e) for n, v, e in zip(ns, vals, errs) if n > 0]
    floor = [max(t.zero_atol, 10 * e) for _, _, e in pos]
    if all(abs(v) <= f for (_, v, _), f in zip(pos, floor)):
        rep.estimated_limit, rep.limit_error, rep.estimated_liminf = 0.0, max(floor), 0.0
        rep.model, rep.classification = "zero", DECAYING
        rep.notes.append("all values within the noise floor of zero")
        return rep
    # values above the noise floor
    sig = [(n, v) for (n, v, _), f in zip(pos, floor) if abs(v) > f]
    tail = sig[len(sig) // 4:]
    if len(sig) < len(pos) or len(tail) < 3:
        below = len(pos) - len(sig)
        rep.notes.append(f"{below} values fell to the noise floor")
    tn, tv = [p[0] for p in tail], [p[1] for p in tail]
    exp_fit = _try_fit(tn, tv, ("exponential",))
    alg = _try_fit(tn, tv, ALGEBRAIC)
    decays = exp_fit is not None and abs(exp_fit.limit) <= max(t.decay_atol, t.ratio * exp_fit.error)
    if decays and (alg is None or len(sig) < len(pos) or exp_fit.error < alg.error):
        return _set_decay(rep, exp_fit)
    if alg is None:
        rep.notes.append("no model fitted")
        return rep
    rep.estimated_limit, rep.limit_error = alg.limit, alg.error
    rep.model, rep.parity_split = alg.model, alg.parity_split
    rep.estimated_liminf = liminf_estimate(tn, tv)
    if alg.limit > t.ratio * alg.error:
        rep.classification = BOUNDED
    return rep


def _try_fit(ns, xs, models):
    try:
        return best_extrapolation(ns, xs, models)
    except (DegenerateFitError, ValueError):
        return None


def _set_decay(rep, ex: Extrapolation):
    rep.estimated_limit, rep.limit_error = ex.limit, ex.error
    rep.estimated_liminf = ex.limit
    rep.model, rep.parity_split, rep.classification = "exponential", ex.parity_split, DECAYING
    rhos = ", ".join(f"{f.coeffs[-1]:.6g}" for f in ex.fits)
    rep.notes.append(f"geometric ratio {rhos}")
    return rep


# limit checks for the lens ------------------------------------------------

TARGET_NORM = 1 / (2 * math.pi)  # lim ||E'_n||^2 for the lens
TARGET_SCALED = 1 / (2 * math.pi**2)  # the same divided by pi


@dataclass
class LensLimitReport:
    big_n_max: int
    limit_estimate: float  # of (1/pi) ||E'_{2N+1}||^2
    limit_error: float
    target: float
    limit_deviation: float
    checkpoints: list  # (N, value, |value - 1/(2 pi)|)
    deviations_decreasing: bool
    envelope_constant: float | None  # max over the fit range of r_N N^2 / ln N
    envelope_decreasing: bool | None
    lower_bound_rows_ok: bool | None = None
    lower_bound_violations: list = field(default_factory=list)

    def passed(self, tol: float = 1e-3) -> bool:
        ok = self.limit_deviation <= tol and self.deviations_decreasing
        return ok and self.lower_bound_rows_ok is not False

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["checkpoints"] = [list(c) for c in self.checkpoints]
        return d


CHECKPOINTS = (100, 200, 500, 1000, 2000)


def lens_limit_check(
    big_n_max: int,
    precision_bits: int = 256,
    fit_from: int | None = None,
    alpha_rows=None,
    tol: float = 1e-8,
) -> LensLimitReport:
    """Convergence of ``(1/pi) ||E'_{2N+1}||^2`` to ``1/(2 pi^2)`` for the lens.

    The limit is extrapolated with the ``const + c lnN/N`` model over
    ``N >= fit_from`` (default ``N_max/20``). ``alpha_rows`` (from
    :func:`alpha_table` with the lens map) are checked against the row-level
    lower bound ``n alpha_n >= ||E'_{n+1}||^2 n / (pi (n+1)) - tol``.
    """
    if big_n_max < 10:
        raise ValueError("N_max must be >= 10")
    table = i_diag_float_table(2 * big_n_max, precision_bits)
    xs = np.array([float(table[2 * k]) for k in range(big_n_max + 1)])
    start = max(1, fit_from if fit_from is not None else big_n_max // 20)
    pairs = [(k, xs[k] / math.pi) for k in range(start, big_n_max + 1)]
    if len(pairs) < 3:
        pairs = [(k, xs[k] / math.pi) for k in range(1, big_n_max + 1)]
    fit = extrapolate(pairs, "const+c*lnN/N")

    checks = [k for k in CHECKPOINTS if k <= big_n_max] or [big_n_max // 4, big_n_max // 2, big_n_max]
    cps = [(k, float(xs[k]), abs(float(xs[k]) - TARGET_NORM)) for k in checks]
    decreasing = all(b[2] < a[2] for a, b in zip(cps, cps[1:]))

    # second-order residual |I_{2N+1}/(2N+1) - 1/(2 pi (2N+1))| against ln N / N^2
    env_n = [k for k in range(max(2, start), big_n_max + 1)]
    r = np.array([abs(xs[k] - TARGET_NORM) / (2 * k + 1) for k in env_n])
    ratios = r * np.array(env_n, dtype=float) ** 2 / np.log(env_n)
    envelope = float(ratios.max()) if len(env_n) else None
    env_dec = bool(np.all(np.diff(r) < 0)) if len(env_n) > 1 else None

    rep = LensLimitReport(
        big_n_max,
        fit.limit,
        fit.residual,
        TARGET_SCALED,
        abs(fit.limit - TARGET_SCALED),
        cps,
        decreasing,
        envelope,
        env_dec,
    )
    if alpha_rows is not None:
        bad = []
        for row in alpha_rows:
            n = row.n
            bound = float(table[n]) * n / (math.pi * (n + 1)) if n <= 2 * big_n_max else None
            if bound is None or float(row.exterior_bound or 1.0) <= 0 or float(row.n_alpha_n) < bound - tol:
                bad.append(n)
        rep.lower_bound_rows_ok = not bad
        rep.lower_bound_violations = bad
    return rep


# sweeps ------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCurve:
    name: str
    emap: ExteriorMap
    path: BoundaryPath


def norm_sequence(curve: SweepCurve, n_max: int, tol: float = 1e-10, rule: QuadratureRule | None = None):
    """``||E'_{n+1}||^2`` for n = 0..n_max by boundary quadrature, with error estimates."""
    bk = Backend(53)
    ns, vals, errs = [], [], []
    for n in range(n_max + 1):
        res = green_deriv_norm(remainder_pair(n + 1, curve.emap, bk), curve.path, rule=rule, tol=tol)
        ns.append(n)
        vals.append(float(res.value))
        errs.append(float(res.error))
    return ns, vals, errs


def limit_sweep(curves, n_max: int, tol: float = 1e-10, thresholds: Thresholds = Thresholds()) -> list:
    """Classify the large-n behaviour of ``||E'_{n+1}||^2`` for each curve.

    A quadrature failure on one curve yields an inconclusive report for it
    and the sweep continues.
    """
    out = []
    for curve in curves:
        try:
            ns, vals, errs = norm_sequence(curve, n_max, tol)
        except (ConvergenceError, OrientationError, ArithmeticError, ValueError) as exc:
            rep = SequenceReport(curve.name, [])
            rep.notes.append(f"quadrature failed: {exc}")
            out.append(rep)
            continue
        out.append(sequence_report(curve.name, ns, vals, scale=lambda n: n + 1, errors=errs, thresholds=thresholds))
    return out
