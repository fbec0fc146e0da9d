"""Laurent arithmetic, exterior maps and Faber polynomials.

Three kinds of exterior map are supported:

``closed_form_phi``
    phi is a Laurent polynomial ``gamma z + c_0 + c_{-1}/z + ...`` (the lens
    ``(z + 1/z)/2``, the circle ``z``, perturbations ``z + eps/z``).  F_n is
    the polynomial part of phi^n and E_n its principal part, both exact.
``psi_series``
    truncated inverse map ``psi(w) = b w + b_0 + b_1/w + ... + b_M/w^M``.
    F_n comes from the generating function
    ``psi'(w)/(psi(w) - z) = sum_n F_n(z) w^{-n-1}`` (Faber's classical
    recurrence, see e.g. Suetin, *Series of Faber Polynomials*, ch. 1).
``lune``
    the circular-arc lens through +-1 whose exterior angle at both corners is
    ``beta*pi``; ``phi = (t+1)/(t-1)`` with ``t = ((z+1)/(z-1))**(1/beta)``.
    beta = 1/2 is the Joukowski lens, beta = 1 the unit circle.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
import numpy as np
from gmpy2 import mpq

from .hp import Backend, parse_rational


class TruncationError(ValueError):
    """The inverse-map series is too short for the requested degree."""


class UnsupportedMapError(ValueError):
    """Operation not available for this kind of exterior map."""


def _is_zero(c) -> bool:
    return c == 0


@dataclass(frozen=True)
class LaurentPolynomial:
    """Finite Laurent series ``sum_k c_k z^k``; coefficients exact or complex."""

    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(k): v for k, v in self.coeffs.items() if not _is_zero(v)}
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @classmethod
    def from_pairs(cls, pairs):
        return cls(dict(pairs))

    def __iter__(self):
        return iter(self.coeffs.items())

    def __getitem__(self, k):
        return self.coeffs.get(k, 0)

    def __len__(self):
        return len(self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, LaurentPolynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    @property
    def max_exp(self):
        return max(self.coeffs) if self.coeffs else None

    @property
    def min_exp(self):
        return min(self.coeffs) if self.coeffs else None

    def __add__(self, other):
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return LaurentPolynomial(out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, s):
        return LaurentPolynomial({k: v * s for k, v in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, LaurentPolynomial):
            return self.scale(other)
        out = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                out[i + j] = out.get(i + j, 0) + a * b
        return LaurentPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not Laurent polynomials in general")
        result = LaurentPolynomial({0: mpq(1)})
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def derivative(self):
        return type(self)({k - 1: k * v for k, v in self.coeffs.items() if k != 0})

    def evaluator(self, backend: Backend):
        """Return ``(f, df)`` evaluating the series and its derivative on arrays."""
        items = [(k, backend.cplx(v)) for k, v in self.coeffs.items()]

        def f(z):
            z = np.asarray(z)
            out = backend.zeros(z.shape)
            for k, c in items:
                out = out + c * z**k if k >= 0 else out + c / z ** (-k)
            return out

        def df(z):
            z = np.asarray(z)
            out = backend.zeros(z.shape)
            for k, c in items:
                if k == 0:
                    continue
                e = k - 1
                term = (k * c) * z**e if e >= 0 else (k * c) / z ** (-e)
                out = out + term
            return out

        return f, df


class SparsePolynomial(LaurentPolynomial):
    """Polynomial: all exponents >= 0."""

    def __post_init__(self):
        super().__post_init__()
        if any(k < 0 for k in self.coeffs):
            raise ValueError("polynomial with negative exponent")

    @property
    def degree(self) -> int:
        return self.max_exp if self.coeffs else -1

    @property
    def leading(self):
        return self.coeffs[self.degree] if self.coeffs else 0

    def constant(self):
        return self.coeffs.get(0, 0)

    def dense(self, backend: Backend, length: int | None = None):
        """Coefficient vector ``[c_0, c_1, ...]`` converted to ``backend``."""
        n = (self.degree + 1) if length is None else length
        out = backend.zeros(n)
        for k, v in self.coeffs.items():
            if k < n:
                out[k] = backend.cplx(v)
        return out


class TailSeries(LaurentPolynomial):
    """Principal part at infinity: all exponents <= -1."""

    def __post_init__(self):
        super().__post_init__()
        if any(k >= 0 for k in self.coeffs):
            raise ValueError("tail series with non-negative exponent")


def polynomial_part(f: LaurentPolynomial):
    """Split ``f`` into ``(exponents >= 0, exponents < 0)``."""
    pos = {k: v for k, v in f.coeffs.items() if k >= 0}
    neg = {k: v for k, v in f.coeffs.items() if k < 0}
    return SparsePolynomial(pos), TailSeries(neg)


# ---------------------------------------------------------------------------
# exterior maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExteriorMap:
    """Data describing phi : exterior of the curve -> exterior of the unit disk."""

    kind: str
    phi: LaurentPolynomial | None = None
    psi_b: object = None
    psi_coeffs: tuple = ()
    beta: object = None
    name: str = ""

    KINDS = ("closed_form_phi", "psi_series", "lune")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "closed_form_phi":
            if self.phi is None or self.phi.max_exp != 1:
                raise ValueError("closed-form phi must have leading term gamma*z")
            g = self.phi[1]
            if not _is_positive_real(g):
                raise ValueError("phi'(infinity) must be a positive real")
        elif self.kind == "psi_series":
            if not _is_positive_real(self.psi_b):
                raise ValueError("psi leading coefficient must be a positive real")
        else:
            if not (0 < self.beta < 2):
                raise ValueError("exterior angle must lie strictly between 0 and 2 (units of pi)")

    # constructors ---------------------------------------------------------
    @classmethod
    def from_phi(cls, coeffs: dict, name: str = "") -> "ExteriorMap":
        return cls("closed_form_phi", phi=LaurentPolynomial({k: _exact(v) for k, v in coeffs.items()}), name=name)

    @classmethod
    def from_psi(cls, b, coeffs, name: str = "") -> "ExteriorMap":
        """``psi(w) = b w + coeffs[0] + coeffs[1]/w + ...``."""
        return cls("psi_series", psi_b=_exact(b), psi_coeffs=tuple(_exact(c) for c in coeffs), name=name)

    @classmethod
    def lens(cls) -> "ExteriorMap":
        return cls.from_phi({1: mpq(1, 2), -1: mpq(1, 2)}, name="lens")

    @classmethod
    def lens_psi(cls, m_max: int) -> "ExteriorMap":
        """Inverse lens map w + sqrt(w^2 - 1) = 2w + sum_m binom(1/2, m) (-1)^m w^(1-2m), kept to w^-m_max."""
        coeffs = [mpq(0)] * (m_max + 1)
        c = mpq(1)  # binom(1/2, m) (-1)^m
        for m in range(1, m_max // 2 + 2):
            c = c * (mpq(1, 2) - (m - 1)) / m * -1
            if 2 * m - 1 <= m_max:
                coeffs[2 * m - 1] = c
        return cls.from_psi(2, coeffs, name="lens-psi")

    @classmethod
    def circle(cls) -> "ExteriorMap":
        return cls.from_phi({1: mpq(1)}, name="circle")

    @classmethod
    def lune(cls, beta) -> "ExteriorMap":
        b = _exact(beta)
        return cls("lune", beta=b, name=f"lune-{b}")

    @property
    def gamma(self):
        """phi'(infinity), the reciprocal of the logarithmic capacity."""
        if self.kind == "closed_form_phi":
            return self.phi[1]
        if self.kind == "psi_series":
            return 1 / self.psi_b
        return self.beta

    @property
    def is_lens(self) -> bool:
        return (self.kind == "closed_form_phi" and self.phi == ExteriorMap.lens().phi) or (
            self.kind == "lune" and self.beta == mpq(1, 2)
        )

    @property
    def is_circle(self) -> bool:
        return (self.kind == "closed_form_phi" and self.phi == LaurentPolynomial({1: mpq(1)})) or (
            self.kind == "lune" and self.beta == 1
        )

    @property
    def truncation(self) -> int:
        """Index M of the last retained psi coefficient b_M."""
        return len(self.psi_coeffs) - 1


def _exact(v):
    if isinstance(v, (complex,)) or type(v).__name__ == "mpc":
        return v
    if isinstance(v, float):
        return v
    return parse_rational(v)


def _is_positive_real(v) -> bool:
    if isinstance(v, complex) or type(v).__name__ == "mpc":
        return v.imag == 0 and v.real > 0
    return v is not None and v > 0


def capacity(emap: ExteriorMap):
    """gamma = phi'(infinity); the logarithmic capacity of the curve is 1/gamma."""
    return emap.gamma


# ---------------------------------------------------------------------------
# Faber polynomials
# ---------------------------------------------------------------------------


def faber(n: int, emap: ExteriorMap) -> SparsePolynomial:
    """F_n: polynomial part of phi^n at infinity."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if emap.kind == "closed_form_phi":
        return polynomial_part(emap.phi**n)[0]
    if emap.kind == "psi_series":
        return faber_from_psi(n, emap)[n]
    return faber_from_series(n, lune_laurent_series(emap.beta, n))


def faber_from_psi(n: int, emap: ExteriorMap) -> list:
    """``[F_0, ..., F_n]`` from the inverse-map coefficients.

    Matching powers of w in psi'(w) = (psi(w) - z) sum_m F_m(z) w^{-m-1} gives
    b F_m = (z - b_0) F_{m-1} - sum_{k=1}^{m-1} b_k F_{m-1-k} - (m-1) b_{m-1}.
    F_n only involves b_0..b_{n-1}, so a series with M >= n is exact here.
    """
    if emap.kind != "psi_series":
        raise UnsupportedMapError("psi recurrence needs a psi_series map")
    if emap.truncation < n:
        raise TruncationError(f"psi series truncated at M={emap.truncation} < n={n}")
    b = emap.psi_b
    coeffs = emap.psi_coeffs
    polys = [[mpq(1)]]  # dense coefficient lists
    for m in range(1, n + 1):
        prev = polys[m - 1]
        cur = [0] * (m + 1)
        for i, c in enumerate(prev):
            cur[i + 1] += c
            cur[i] -= coeffs[0] * c
        for k in range(1, m):
            for i, c in enumerate(polys[m - 1 - k]):
                cur[i] -= coeffs[k] * c
        if m >= 2:
            cur[0] -= (m - 1) * coeffs[m - 1]
        polys.append([c / b for c in cur])
    return [SparsePolynomial(dict(enumerate(p))) for p in polys]


def faber_from_series(n: int, series: list) -> SparsePolynomial:
    """F_n from ``series`` = coefficients s_m of phi(z)/z in powers of u = 1/z."""
    if len(series) < n + 1:
        raise TruncationError("Laurent series too short")
    power = [mpq(1)] + [0] * n
    for _ in range(n):
        power = _series_mul(power, series, n + 1)
    return SparsePolynomial({n - m: power[m] for m in range(n + 1)})


def e_tail(n: int, emap: ExteriorMap) -> TailSeries:
    """E_n = phi^n - F_n as a finite principal part (closed-form phi only)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if emap.kind != "closed_form_phi":
        raise UnsupportedMapError(f"tail of phi^n is not a finite series for kind {emap.kind!r}")
    return polynomial_part(emap.phi**n)[1]


# ---------------------------------------------------------------------------
# lune maps
# ---------------------------------------------------------------------------


def _series_mul(a, b, order):
    out = [0] * order
    for i, x in enumerate(a[:order]):
        if _is_zero(x):
            continue
        for j in range(min(len(b), order - i)):
            out[i + j] += x * b[j]
    return out


def lune_laurent_series(beta, order: int) -> list:
    """Coefficients ``s_0..s_order`` with phi(z)/z = sum_m s_m z^{-m}.

    With u = 1/z: t = exp((2/beta) artanh u), phi u = (t + 1) / ((t - 1)/u).
    Exact for rational beta.
    """
    c = 2 / _exact(beta)
    m_top = order + 2
    g = [0] * (m_top + 1)  # (2/beta) artanh(u)
    for k in range(1, m_top + 1, 2):
        g[k] = c * mpq(1, k)
    t = [mpq(1)] + [0] * m_top  # exp(g) via e' = g' e
    for m in range(1, m_top + 1):
        t[m] = sum((k * g[k] * t[m - k] for k in range(1, m + 1)), mpq(0)) / m
    s = t[1:]  # (t - 1)/u
    num = [t[0] + 1] + t[1:]
    out = [0] * (order + 1)
    for m in range(order + 1):
        acc = num[m] - sum((out[k] * s[m - k] for k in range(m)), mpq(0))
        out[m] = acc / s[0]
    return out


def lune_phi(beta, backend: Backend):
    """Vectorized closed-form ``(phi, phi')`` for the lune with angle ``beta*pi``."""
    inv_beta = backend.real(1 / _exact(beta)) if backend.mp else float(1 / _exact(beta))

    def parts(z):
        z = np.asarray(z)
        zeta = (z + 1) / (z - 1)
        t = zeta**inv_beta
        phi = (t + 1) / (t - 1)
        dphi = (-2 / (t - 1) ** 2) * (t * inv_beta / zeta) * (-2 / (z - 1) ** 2)
        return phi, dphi

    return parts


def remainder_pair(n: int, emap: ExteriorMap, backend: Backend):
    """Callables ``(E_n, E_n')`` valid on the boundary and in the exterior."""
    if emap.kind == "closed_form_phi":
        return e_tail(n, emap).evaluator(backend)
    fn = faber(n, emap)
    f_poly, df_poly = fn.evaluator(backend)
    if emap.kind == "lune":
        parts = lune_phi(emap.beta, backend)

        def f(z):
            phi, _ = parts(z)
            return phi**n - f_poly(z)

        def df(z):
            phi, dphi = parts(z)
            return n * phi ** (n - 1) * dphi - df_poly(z) if n else backend.zeros(np.shape(z))

        return f, df

    psi = psi_evaluator(emap, backend)

    def f(z):
        w = psi_inverse(emap, backend, z)
        return w**n - f_poly(z)

    def df(z):
        w = psi_inverse(emap, backend, z)
        _, dpsi = psi(w)
        return n * w ** (n - 1) / dpsi - df_poly(z) if n else backend.zeros(np.shape(z))

    return f, df


def psi_evaluator(emap: ExteriorMap, backend: Backend):
    b = backend.cplx(emap.psi_b)
    cs = [backend.cplx(c) for c in emap.psi_coeffs]

    def psi(w):
        w = np.asarray(w)
        val = b * w + cs[0]
        dval = backend.zeros(w.shape) + b
        inv = 1 / w
        p = inv
        for k in range(1, len(cs)):
            val = val + cs[k] * p
            dval = dval - k * cs[k] * p * inv
            p = p * inv
        return val, dval

    return psi


def psi_inverse(emap: ExteriorMap, backend: Backend, z, max_iter: int = 200):
    """Solve psi(w) = z for |w| >= 1 by Newton's method from w = z/b."""
    psi = psi_evaluator(emap, backend)
    z = np.asarray(z)
    w = z / backend.cplx(emap.psi_b)
    tol = 2.0 ** (-backend.bits + 6)
    for _ in range(max_iter):
        val, dval = psi(w)
        step = (val - z) / dval
        w = w - step
        if max(float(abs(s)) for s in np.ravel(step)) <= tol * max(1.0, max(float(abs(x)) for x in np.ravel(w))):
            return w
    raise ArithmeticError("psi inversion did not converge")
