"""Corner-graded Gauss-Legendre panel quadrature on piecewise analytic boundaries.

Area integrals are reduced to contour integrals over the boundary (traversed
counter-clockwise around the bounded domain G):

* ``int_G z^j conj(z)^k dA = 1/(2i) oint z^j conj(z)^{k+1}/(k+1) dz``
* ``int_Omega |f'|^2 dA = -1/(2i) oint f'(z) conj(f(z)) dz`` for f analytic in
  the exterior with f = O(1/z); the sign is fixed by ``f = 1/z`` on the unit
  circle, whose exterior Dirichlet integral is pi.

Every segment is parametrized by an analytic map ``t -> z(t)``; panels shrink
geometrically toward parameter endpoints that sit on a corner.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import gmpy2
import mpmath
import numpy as np
from gmpy2 import mpq

from .faber import ExteriorMap, LaurentPolynomial, psi_evaluator
from .hp import FLOAT_BITS, Backend, parse_rational


class ConvergenceError(RuntimeError):
    """Refinement reached its maximum depth above the requested tolerance."""

    def __init__(self, msg, value=None, error=None):
        super().__init__(msg)
        self.value = value
        self.error = error


class OrientationError(RuntimeError):
    """A nonnegative quantity came out negative beyond its error estimate."""


def _pair(z):
    """Exact (re, im) pair from a complex-like or (re, im) input."""
    if isinstance(z, (tuple, list)):
        return (parse_rational(z[0]), parse_rational(z[1]))
    if isinstance(z, complex):
        return (parse_rational(repr(z.real)), parse_rational(repr(z.imag)))
    return (parse_rational(z), mpq(0))


def _pair_to_float(p) -> complex:
    return complex(float(p[0]), float(p[1]))


# ---------------------------------------------------------------------------
# segments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircularArc:
    """Arc of the circle through ``start`` centred at ``center``, ending at ``end``.

    Parametrized by the polar angle about the centre, so both endpoints are hit
    exactly (up to rounding of the angle itself).
    """

    center: tuple
    start: tuple
    end: tuple
    ccw: bool = True

    def __post_init__(self):
        object.__setattr__(self, "center", _pair(self.center))
        object.__setattr__(self, "start", _pair(self.start))
        object.__setattr__(self, "end", _pair(self.end))
        c, s, e = (_pair_to_float(p) for p in (self.center, self.start, self.end))
        if abs(abs(s - c) - abs(e - c)) > 1e-12 * max(1.0, abs(s - c)):
            raise ValueError("arc endpoints are not equidistant from the centre")

    kind = "arc"

    def interval(self, bk: Backend):
        c = bk.cplx(self.center)
        t0 = bk.phase(bk.cplx(self.start) - c)
        t1 = bk.phase(bk.cplx(self.end) - c)
        two_pi = 2 * bk.pi
        if self.ccw and t1 <= t0:
            t1 += two_pi
        if not self.ccw and t1 >= t0:
            t1 -= two_pi
        return t0, t1

    def evaluate(self, t, bk: Backend):
        c = bk.cplx(self.center)
        r = abs(bk.cplx(self.start) - c)
        e = bk.expi(t)
        z = c + r * e
        dz = (bk.cplx((0, 1)) * r) * e
        return z, dz

    def endpoints(self):
        return _pair_to_float(self.start), _pair_to_float(self.end)

    def to_dict(self):
        # radius and angles are informational; center/start/end/ccw define the arc
        bk = Backend(FLOAT_BITS)
        t0, t1 = self.interval(bk)
        c, s = _pair_to_float(self.center), _pair_to_float(self.start)
        return {
            "type": "arc",
            "center": [str(x) for x in self.center],
            "start": [str(x) for x in self.start],
            "end": [str(x) for x in self.end],
            "ccw": self.ccw,
            "radius": repr(abs(s - c)),
            "angles": [repr(float(t0)), repr(float(t1))],
        }


@dataclass(frozen=True)
class LevelCurve:
    """Closed curve ``{z : |phi(z)| = 1}`` for a Laurent-polynomial phi.

    z(theta) is the outermost root of phi(z) = exp(i theta); this is the boundary
    point whenever the other preimages lie inside the curve, which holds for
    small perturbations of the identity such as z + eps/z.
    """

    phi: LaurentPolynomial
    kind = "level"

    def interval(self, bk: Backend):
        return bk.real(0), 2 * bk.pi

    def _roots(self, w: complex):
        lo = min(0, self.phi.min_exp)
        hi = self.phi.max_exp
        poly = np.zeros(hi - lo + 1, dtype=complex)  # highest power first
        for k, c in self.phi.coeffs.items():
            poly[hi - k] += complex(c)
        poly[hi] -= w  # constant term of phi sits at exponent 0
        roots = np.roots(poly)
        return roots[np.argmax(np.abs(roots))]

    def evaluate(self, t, bk: Backend):
        w = bk.expi(t)
        z0 = np.array([self._roots(complex(wi)) for wi in w])
        f, df = self.phi.evaluator(bk)
        z = bk.asarray(list(z0))
        for _ in range(8 if bk.mp else 2):
            z = z - (f(z) - w) / df(z)
        dz = (bk.cplx((0, 1)) * w) / df(z)
        return z, dz

    def endpoints(self):
        z = complex(self._roots(1.0))
        return z, z

    def to_dict(self):
        return {"type": "level", "phi": {str(k): str(v) for k, v in self.phi.coeffs.items()}}


@dataclass(frozen=True)
class PsiCurve:
    """Closed curve ``psi(exp(i theta))`` for a truncated inverse map."""

    emap: ExteriorMap
    kind = "psi"

    def interval(self, bk: Backend):
        return bk.real(0), 2 * bk.pi

    def evaluate(self, t, bk: Backend):
        w = bk.expi(t)
        val, dval = psi_evaluator(self.emap, bk)(w)
        return val, (bk.cplx((0, 1)) * w) * dval

    def endpoints(self):
        val, _ = psi_evaluator(self.emap, Backend())(np.array([1.0 + 0j]))
        return complex(val[0]), complex(val[0])

    def to_dict(self):
        return {"type": "psi"}


@dataclass(frozen=True)
class Corner:
    point: tuple
    angle: object  # exterior angle in units of pi

    def __post_init__(self):
        object.__setattr__(self, "point", _pair(self.point))
        object.__setattr__(self, "angle", parse_rational(self.angle))
        if not (0 < self.angle < 2):
            raise ValueError("corner exterior angle must lie in (0, 2); cusps are not supported")

    def to_dict(self):
        return {"point": [str(x) for x in self.point], "angle": str(self.angle)}


@dataclass(frozen=True)
class BoundaryPath:
    """Closed Jordan curve traversed counter-clockwise around its interior."""

    segments: tuple
    corners: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "corners", tuple(self.corners))
        if not self.segments:
            raise ValueError("empty boundary")
        ends = [s.endpoints() for s in self.segments]
        scale = max(1.0, *(abs(p) for e in ends for p in e))
        for i, (_, e) in enumerate(ends):
            s_next = ends[(i + 1) % len(ends)][0]
            if abs(e - s_next) > 1e-10 * scale:
                raise ValueError(f"segment {i} does not chain to segment {(i + 1) % len(ends)}")

    # constructors ---------------------------------------------------------
    @classmethod
    def lens(cls) -> "BoundaryPath":
        """Outer arcs of |z - i| = sqrt(2) and |z + i| = sqrt(2); corners at +-1."""
        return cls.lune(mpq(1, 2))

    @classmethod
    def mirror_lens(cls) -> "BoundaryPath":
        """The two inner arcs; bounds the reflection {1/z : z outside the lens}."""
        return cls(
            (
                CircularArc((0, 1), (-1, 0), (1, 0)),
                CircularArc((0, -1), (1, 0), (-1, 0)),
            ),
            (Corner((1, 0), mpq(3, 2)), Corner((-1, 0), mpq(3, 2))),
            name="mirror-lens",
        )

    @classmethod
    def circle(cls, radius=1) -> "BoundaryPath":
        r = parse_rational(radius)
        return cls(
            (CircularArc((0, 0), (r, 0), (-r, 0)), CircularArc((0, 0), (-r, 0), (r, 0))),
            name="circle",
        )

    @classmethod
    def lune(cls, beta) -> "BoundaryPath":
        """Two circular arcs through +-1 meeting at exterior angle ``beta*pi``."""
        beta = parse_rational(beta)
        if not (0 < beta < 2):
            raise ValueError("beta must lie in (0, 2)")
        if beta == 1:
            return cls.circle()
        c = _lune_center_offset(beta)
        corners = (Corner((1, 0), beta), Corner((-1, 0), beta))
        return cls(
            (CircularArc((0, c), (1, 0), (-1, 0)), CircularArc((0, -c), (-1, 0), (1, 0))),
            corners,
            name="lens" if beta == mpq(1, 2) else f"lune-{beta}",
        )

    @classmethod
    def level_curve(cls, emap: ExteriorMap) -> "BoundaryPath":
        return cls((LevelCurve(emap.phi),), name=emap.name or "level")

    @classmethod
    def psi_curve(cls, emap: ExteriorMap) -> "BoundaryPath":
        return cls((PsiCurve(emap),), name=emap.name or "psi")

    @classmethod
    def for_map(cls, emap: ExteriorMap) -> "BoundaryPath":
        """Natural boundary for an exterior map."""
        if emap.is_lens:
            return cls.lens()
        if emap.is_circle:
            return cls.circle()
        if emap.kind == "lune":
            return cls.lune(emap.beta)
        if emap.kind == "psi_series":
            return cls.psi_curve(emap)
        return cls.level_curve(emap)

    def is_corner(self, z: complex) -> bool:
        return any(abs(_pair_to_float(c.point) - z) < 1e-10 for c in self.corners)

    def to_dict(self):
        return {
            "segments": [s.to_dict() for s in self.segments],
            "corners": [c.to_dict() for c in self.corners],
        }


def _lune_center_offset(beta):
    """Imaginary offset c of the upper arc's centre i*c (lower arc: -i*c)."""
    if beta == mpq(1, 2):
        return mpq(1)
    with mpmath.workprec(420):
        h = mpmath.cot(mpmath.pi * mpmath.mpf(beta.numerator) / beta.denominator / 4)
        c = (h * h - 1) / (2 * h)
        return parse_rational(mpmath.nstr(c, 120))


# ---------------------------------------------------------------------------
# rules and nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule.

    ``order`` nodes per panel; uniform panels of parameter length at most
    ``panel_length``; the panel touching a corner is split geometrically
    ``grading_levels`` times with ``ratio``.
    """

    order: int = 16
    panel_length: float = 0.5
    grading_levels: int = 40
    ratio: float = 0.5

    def __post_init__(self):
        if self.order < 1 or self.panel_length <= 0 or self.grading_levels < 0:
            raise ValueError("invalid quadrature rule")
        if not (0 < self.ratio < 1):
            raise ValueError("grading ratio must lie in (0, 1)")

    def refined(self) -> "QuadratureRule":
        """Every panel halved; one extra grading level keeps the corner panel halved too."""
        return replace(
            self,
            panel_length=self.panel_length / 2,
            grading_levels=self.grading_levels + 1 if self.grading_levels else 0,
        )


DEFAULT_RULE = QuadratureRule()


def _breakpoints(t0, t1, rule: QuadratureRule, grade_start: bool, grade_end: bool):
    length = abs(float(t1 - t0))
    m = max(1, math.ceil(length / rule.panel_length - 1e-12))
    h = (t1 - t0) / m
    pts = [t0 + h * i for i in range(m)] + [t1]
    levels, r = rule.grading_levels, rule.ratio
    if levels and grade_start:
        a, b = pts[0], pts[1]
        inner = [a + (b - a) * r**lv for lv in range(levels, 0, -1)]
        pts = [a] + inner + pts[1:]
    if levels and grade_end:
        a, b = pts[-1], pts[-2]
        inner = [a + (b - a) * r**lv for lv in range(1, levels + 1)]
        pts = pts[:-1] + inner + [a]
    return pts


@lru_cache(maxsize=48)
def path_nodes(path: BoundaryPath, rule: QuadratureRule, bits: int = 53):
    """Nodes ``z`` and weighted differentials ``dz * w`` in fixed panel order."""
    bk = Backend(bits)
    with bk.context():
        x, w = bk.gauss_legendre(rule.order)
        ratio = bk.real(parse_rational(repr(rule.ratio)) if bk.mp else rule.ratio)
        rule_ = replace(rule, ratio=ratio) if bk.mp else rule
        zs, dzs = [], []
        for seg in path.segments:
            t0, t1 = seg.interval(bk)
            s_end, e_end = seg.endpoints()
            pts = _breakpoints(t0, t1, rule_, path.is_corner(s_end), path.is_corner(e_end))
            ts, ws = [], []
            for a, b in zip(pts[:-1], pts[1:]):
                half = (b - a) / 2
                mid = (a + b) / 2
                ts.append(mid + half * x)
                ws.append(half * w)
            t = np.concatenate(ts)
            wt = np.concatenate(ws)
            z, dz = seg.evaluate(t, bk)
            zs.append(z)
            dzs.append(dz * wt)
        z = np.concatenate(zs)
        dzw = np.concatenate(dzs)
    z.setflags(write=False)
    dzw.setflags(write=False)
    return z, dzw


# ---------------------------------------------------------------------------
# integrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadResult:
    value: object
    error: float
    rule: QuadratureRule = field(default=DEFAULT_RULE)
    precision_bits: int = 53

    def __float__(self):
        return float(self.value.real if hasattr(self.value, "real") else self.value)


def contour_integral(g, path: BoundaryPath, rule: QuadratureRule, bits: int = 53):
    """``oint g(z) dz`` counter-clockwise; ``g`` maps node arrays to values."""
    z, dzw = path_nodes(path, rule, bits)
    bk = Backend(bits)
    with bk.context():
        return np.sum(g(z) * dzw)


def refine_until(
    rule: QuadratureRule,
    target: float,
    path: BoundaryPath | None = None,
    integrand=None,
    precision_bits: int = 53,
    max_depth: int = 8,
) -> QuadratureRule:
    """Smallest refinement of ``rule`` whose halving estimate on ``integrand`` is below ``target``.

    The probe defaults to ``g(z) = 1/z`` on the unit circle.
    """
    path = path if path is not None else BoundaryPath.circle()
    integrand = integrand if integrand is not None else (lambda z: 1 / z)
    cur = rule
    coarse = contour_integral(integrand, path, cur, precision_bits)
    for _ in range(max_depth + 1):
        fine_rule = cur.refined()
        fine = contour_integral(integrand, path, fine_rule, precision_bits)
        est = float(abs(fine - coarse))
        if est < target:
            return cur
        cur, coarse = fine_rule, fine
    raise ConvergenceError(f"max depth {max_depth} exceeded; estimate {est:.3g} >= target {target:.3g}", fine, est)


def _check_floor(tol, bits, scale, where):
    """Refinement cannot beat rounding: fail at once rather than after max_depth."""
    floor = 2.0 ** (6 - bits) * max(1.0, float(scale))
    if tol < floor:
        raise ConvergenceError(f"{where}: tol {tol:.3g} below the {bits}-bit rounding floor {floor:.3g}")


def _as_pair(f, bk: Backend):
    if isinstance(f, LaurentPolynomial):
        return f.evaluator(bk)
    fn, dfn = f
    return fn, dfn


def green_deriv_norm(
    f,
    path: BoundaryPath,
    rule: QuadratureRule | None = None,
    tol: float = 1e-12,
    precision_bits: int = 53,
    max_depth: int = 8,
) -> QuadResult:
    """``||f'||^2`` over the exterior of ``path`` via a boundary integral.

    ``f`` is a :class:`~faber_bergman.faber.TailSeries` (or any Laurent series
    with negative exponents only) or a pair of callables ``(f, f')``.  The
    error estimate is the larger of the panel-halving difference and the
    spurious imaginary part.
    """
    rule = rule or DEFAULT_RULE
    bk = Backend(precision_bits)
    with bk.context():
        fn, dfn = _as_pair(f, bk)
        factor = bk.cplx((0, 1)) / 2  # -1/(2i) = i/2

        def integrand(z):
            return dfn(z) * np.conj(fn(z))

        coarse = factor * contour_integral(integrand, path, rule, precision_bits)
        _check_floor(tol, precision_bits, abs(coarse), "green_deriv_norm")
        est = math.inf
        for _ in range(max_depth + 1):
            fine_rule = rule.refined()
            fine = factor * contour_integral(integrand, path, fine_rule, precision_bits)
            est = max(float(abs(fine - coarse)), float(abs(fine.imag)))
            if est <= tol:
                value = fine.real
                if value < -est - 64 * 2.0**-precision_bits:
                    raise OrientationError(f"negative Dirichlet integral {float(value):.3g} (error {est:.3g})")
                return QuadResult(value, est, rule, precision_bits)
            rule, coarse = fine_rule, fine
    raise ConvergenceError(f"green_deriv_norm: estimate {est:.3g} above tol {tol:.3g}", fine.real, est)


def area_moment(
    j: int,
    k: int,
    path: BoundaryPath,
    rule: QuadratureRule | None = None,
    tol: float = 1e-12,
    precision_bits: int = 53,
    max_depth: int = 8,
) -> QuadResult:
    """``int_G z^j conj(z)^k dA``; ``tol`` is relative to max(1, |value|)."""
    if j < 0 or k < 0:
        raise ValueError("moment indices must be >= 0")
    res = moment_matrix(max(j, k), path, rule, tol, precision_bits, max_depth)
    return QuadResult(res.matrix[j, k], res.error, res.rule, precision_bits)


@dataclass(frozen=True)
class MomentMatrix:
    matrix: np.ndarray  # M[j, k] = int_G z^j conj(z)^k dA
    error: float
    rule: QuadratureRule
    precision_bits: int


def _moment_sum(path, rule, n, bits):
    z, dzw = path_nodes(path, rule, bits)
    bk = Backend(bits)
    with bk.context():
        npts = len(z)
        zc = np.conj(z)
        p = bk.zeros((npts, n + 1))
        q = bk.zeros((npts, n + 1))
        p[:, 0] = bk.cplx(1) if bk.mp else 1.0
        cur = zc * dzw
        for j in range(n + 1):
            if j:
                p[:, j] = p[:, j - 1] * z
                cur = cur * zc
            q[:, j] = cur / (j + 1)
        m = p.T @ q
        return m * (bk.cplx((0, -1)) / 2)  # 1/(2i)


def moment_matrix(
    n: int,
    path: BoundaryPath,
    rule: QuadratureRule | None = None,
    tol: float = 1e-12,
    precision_bits: int = 53,
    max_depth: int = 8,
) -> MomentMatrix:
    """All moments ``int_G z^j conj(z)^k dA`` for j, k <= n, refined until converged."""
    rule = rule or DEFAULT_RULE
    coarse = _moment_sum(path, rule, n, precision_bits)
    _check_floor(tol, precision_bits, 1.0, "moment_matrix")
    est = math.inf
    for _ in range(max_depth + 1):
        fine_rule = rule.refined()
        fine = _moment_sum(path, fine_rule, n, precision_bits)
        scale = max(1.0, max(float(abs(x)) for x in fine.ravel()))
        est = max(float(abs(x)) for x in (fine - coarse).ravel()) / scale
        if est <= tol:
            return MomentMatrix(fine, est, rule, precision_bits)
        rule, coarse = fine_rule, fine
    raise ConvergenceError(f"moment_matrix: relative estimate {est:.3g} above tol {tol:.3g}", fine, est)
