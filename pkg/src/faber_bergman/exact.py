"""Exact sequences and closed forms for the two-circular-arc lens.

The lens is bounded by the mutually exterior arcs of |z - i| = sqrt(2) and
|z + i| = sqrt(2); its exterior map is phi(z) = (z + 1/z)/2.  Everything here is
exact rational arithmetic (gmpy2 ``mpq``) except the explicitly float-valued
helpers, which carry a rigorous error radius from interval arithmetic.

Indexing conventions used throughout:

* ``a_seq(n) = F_n(0)``, ``b_seq(n) = int_{-1}^{1} G_{n+1}(x)/x dx``.
* ``i_diag_closed(n)`` returns ``I_{n+1,n+1} = ||E'_{n+1}||^2`` over the exterior.
* ``E_n(z) = G_n(1/z)`` (checked by direct expansion of phi^n in ``faber``).
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import gmpy2
import mpmath
from gmpy2 import mpq, mpz

from .hp import format_rational, iv_precision, parse_rational

ZERO = mpq(0)
ONE = mpq(1)


# ---------------------------------------------------------------------------
# PiLinear
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiLinear:
    """Exact number ``pi_coeff * pi + const_coeff`` with rational coefficients."""

    pi_coeff: object = ZERO
    const_coeff: object = ZERO

    def __post_init__(self):
        object.__setattr__(self, "pi_coeff", mpq(self.pi_coeff))
        object.__setattr__(self, "const_coeff", mpq(self.const_coeff))

    def __add__(self, other):
        if not isinstance(other, PiLinear):
            other = PiLinear(0, other)
        return PiLinear(self.pi_coeff + other.pi_coeff, self.const_coeff + other.const_coeff)

    __radd__ = __add__

    def __neg__(self):
        return PiLinear(-self.pi_coeff, -self.const_coeff)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, scalar):
        if isinstance(scalar, PiLinear):
            raise TypeError("PiLinear is closed under rational scaling only")
        s = mpq(scalar)
        return PiLinear(self.pi_coeff * s, self.const_coeff * s)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, PiLinear):
            raise TypeError("division by a PiLinear leaves the ring; use to_float")
        return self * (ONE / mpq(scalar))

    def __eq__(self, other):
        if not isinstance(other, PiLinear):
            other = PiLinear(0, other)
        return self.pi_coeff == other.pi_coeff and self.const_coeff == other.const_coeff

    def __hash__(self):
        return hash((self.pi_coeff, self.const_coeff))

    def to_float(self, precision_bits: int = 53):
        """Value as an ``mpmath.mpf`` at ``precision_bits`` (float when <= 53).

        The two terms nearly cancel for large coefficients, so the sum is
        formed with guard bits and rounded once.
        """
        mag = max(abs(self.pi_coeff), abs(self.const_coeff), 1)
        guard = 32 + int(gmpy2.floor(gmpy2.log2(mag))) + 2
        with mpmath.workprec(precision_bits + guard):
            v = (
                mpmath.mpf(self.pi_coeff.numerator) / self.pi_coeff.denominator * mpmath.pi
                + mpmath.mpf(self.const_coeff.numerator) / self.const_coeff.denominator
            )
        if precision_bits <= 53:
            return float(v)
        with mpmath.workprec(precision_bits):
            return +v

    def enclosure(self, precision_bits: int = 256):
        """Rigorous interval containing the value."""
        with iv_precision(precision_bits):
            iv = mpmath.iv
            return iv.mpf(self.pi_coeff.numerator) / self.pi_coeff.denominator * iv.pi + (
                iv.mpf(self.const_coeff.numerator) / self.const_coeff.denominator
            )

    def __float__(self):
        return float(self.to_float(80))

    def __str__(self):
        return f"({format_rational(self.pi_coeff)})*pi+({format_rational(self.const_coeff)})"

    def __repr__(self):
        return f"PiLinear({self})"

    @classmethod
    def parse(cls, text: str) -> "PiLinear":
        """Inverse of ``str``; accepts ``(p/q)*pi+(r/s)`` with optional spaces."""
        s = text.replace(" ", "")
        head, sep, tail = s.partition(")*pi+(")
        if not sep or not head.startswith("(") or not tail.endswith(")"):
            raise ValueError(f"not a PiLinear literal: {text!r}")
        return cls(parse_rational(head[1:]), parse_rational(tail[:-1]))


@dataclass(frozen=True)
class AuditedFloat:
    """High-precision float with a rigorous absolute error bound."""

    value: mpmath.mpf
    error_bound: mpmath.mpf
    precision_bits: int

    @classmethod
    def from_interval(cls, x, bits):
        with mpmath.workprec(bits):
            lo, hi = mpmath.mpf(x.a), mpmath.mpf(x.b)
            mid = (lo + hi) / 2
            rad = max(hi - mid, mid - lo)
        return cls(mid, rad, bits)

    def __float__(self):
        return float(self.value)

    def contains(self, x) -> bool:
        with mpmath.workprec(self.precision_bits + 16):
            return abs(mpmath.mpf(x) - self.value) <= self.error_bound


# ---------------------------------------------------------------------------
# a_n and b_n
# ---------------------------------------------------------------------------


def a_seq(n: int) -> mpq:
    """``F_n(0)`` for the lens: 0 for odd n, ``2^-n binom(n, n/2)`` for even n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n % 2:
        return ZERO
    return mpq(gmpy2.comb(n, n // 2), mpz(1) << n)


def a_seq_recurrence(n_max: int) -> list:
    """``a_0..a_{n_max}`` from a_0 = 1 and a_n = (n-1)/n * a_{n-2}."""
    out = [ZERO] * (n_max + 1)
    out[0] = ONE
    for n in range(2, n_max + 1, 2):
        out[n] = out[n - 2] * mpq(n - 1, n)
    return out


def b_seq_explicit(n: int) -> mpq:
    """``b_n`` from the finite sum ``2^-n sum_j binom(n+1, j)/(n+1-2j)``.

    Evaluated by binary splitting over the terms; independent of the recurrence.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n % 2:
        return ZERO
    big_n = n + 1

    # Block [lo, hi) with p_i = N - i, q_i = i + 1, d_i = N - 2i holds
    # P = prod p, Q = prod q, D = prod d and T with
    # sum_j (prod_{lo<=i<j} p_i/q_i) / d_j = T / (Q D).
    def split(lo, hi):
        if hi - lo == 1:
            return mpz(big_n - lo), mpz(lo + 1), mpz(lo + 1), mpz(big_n - 2 * lo)
        mid = (lo + hi) // 2
        p1, q1, t1, d1 = split(lo, mid)
        p2, q2, t2, d2 = split(mid, hi)
        return p1 * p2, q1 * q2, t1 * q2 * d2 + p1 * t2 * d1, d1 * d2

    _, q, t, d = split(0, n // 2 + 1)
    return mpq(t, (q * d) << n)


class _LensTables:
    """Lazily extended exact tables; contents independent of call order."""

    def __init__(self):
        self._lock = threading.Lock()
        self.a = [ONE]
        self.b = [ONE]
        self.sum_ab = [ZERO]  # sum_ab[n] = sum_{k<n} a_k b_k / (k+2)
        self.sum_a2 = [ONE]  # sum_a2[n] = sum_{k<=n} a_k^2
        # summation-by-parts pieces, indexed by N
        self.even_sq_over = [ONE]  # sum_{k<=N} a_{2k}^2/(2k+1)
        self.even_triple = [ZERO]  # sum_{k<N} (sum_{j<=k} a_{2j}^2)/((2k+1)(2k+2)(2k+3))

    def ensure(self, n_max: int):
        if n_max < len(self.a):
            return
        with self._lock:
            a, b = self.a, self.b
            for n in range(len(a), n_max + 1):
                an = a_seq(n)
                if n % 2:
                    bn = ZERO
                else:
                    bn = b[n - 2] * mpq(n, n + 1) + an / (n + 1)
                a.append(an)
                b.append(bn)
                self.sum_ab.append(self.sum_ab[-1] + a[n - 1] * b[n - 1] / (n + 1))
                self.sum_a2.append(self.sum_a2[-1] + an * an)
                if n % 2 == 0:
                    big_n = n // 2
                    self.even_sq_over.append(self.even_sq_over[-1] + an * an / (n + 1))
                    k = big_n - 1
                    partial = self.sum_a2[2 * k]
                    self.even_triple.append(
                        self.even_triple[-1] + partial / ((2 * k + 1) * (2 * k + 2) * (2 * k + 3))
                    )


_TABLES = _LensTables()


def b_seq(n: int) -> mpq:
    """``b_n`` via b_0 = 1, b_n = n/(n+1) b_{n-2} + a_n/(n+1); zero for odd n."""
    if n < 0:
        raise ValueError("n must be >= 0")
    _TABLES.ensure(n)
    return _TABLES.b[n]


def sequences(n_max: int):
    """Exact lists ``(a_0..a_n_max, b_0..b_n_max)``."""
    _TABLES.ensure(n_max)
    return list(_TABLES.a[: n_max + 1]), list(_TABLES.b[: n_max + 1])


# ---------------------------------------------------------------------------
# G_n
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LensPolynomial:
    """Polynomial with exponents of a single parity and exact coefficients."""

    parity: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        for e in self.coeffs:
            if e < 0 or e % 2 != self.parity:
                raise ValueError(f"exponent {e} incompatible with parity {self.parity}")

    @property
    def degree(self) -> int:
        return max(self.coeffs) if self.coeffs else -1

    def __eq__(self, other):
        if not isinstance(other, LensPolynomial):
            return NotImplemented
        a = {k: v for k, v in self.coeffs.items() if v}
        b = {k: v for k, v in other.coeffs.items() if v}
        return a == b

    def __call__(self, z):
        return sum((c * z**e for e, c in self.coeffs.items()), 0)

    def as_dict(self) -> dict:
        return dict(sorted(self.coeffs.items()))


def g_poly(n: int) -> LensPolynomial:
    """``G_n = F_n - F_n(0)`` from the explicit binomial sum."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return LensPolynomial(0, {})
    scale = mpz(1) << n
    coeffs = {n - 2 * j: mpq(gmpy2.comb(n, j), scale) for j in range((n - 1) // 2 + 1)}
    return LensPolynomial(n % 2, coeffs)


def g_poly_recurrence(n_max: int) -> list:
    """``G_0..G_{n_max}`` from G_{n+1} = phi G_n + z a_n/2 - a_{n+1}/2."""
    out = [LensPolynomial(0, {})]
    half = mpq(1, 2)
    for n in range(n_max):
        cur = out[-1].coeffs
        nxt = {}
        for e, c in cur.items():
            nxt[e + 1] = nxt.get(e + 1, ZERO) + c * half
            nxt[e - 1] = nxt.get(e - 1, ZERO) + c * half
        an, an1 = a_seq(n), a_seq(n + 1)
        if an:
            nxt[1] = nxt.get(1, ZERO) + an * half
        if an1:
            nxt[0] = nxt.get(0, ZERO) - an1 * half
        nxt = {e: c for e, c in nxt.items() if c}
        if any(e < 0 for e in nxt):
            raise ArithmeticError(f"negative exponent produced at n={n + 1}")
        out.append(LensPolynomial((n + 1) % 2, nxt))
    return out


# ---------------------------------------------------------------------------
# identities and closed forms
# ---------------------------------------------------------------------------


def a2_sum_identity(k: int) -> bool:
    """``sum_{j<=k} a_{2j}^2 == (2k+1) a_{2k} b_{2k}`` exactly."""
    if k < 0:
        raise ValueError("k must be >= 0")
    _TABLES.ensure(2 * k)
    return _TABLES.sum_a2[2 * k] == (2 * k + 1) * _TABLES.a[2 * k] * _TABLES.b[2 * k]


def ab_cross_identity(n: int) -> bool:
    """``(n+2) a_{n+2} b_n - n a_n b_{n-2} == a_n^2`` for even n >= 2."""
    if n < 2 or n % 2:
        raise ValueError("n must be even and >= 2")
    _TABLES.ensure(n + 2)
    a, b = _TABLES.a, _TABLES.b
    return (n + 2) * a[n + 2] * b[n] - n * a[n] * b[n - 2] == a[n] * a[n]


def i_diag_closed(n: int) -> PiLinear:
    """``I_{n+1,n+1} = ||E'_{n+1}||^2`` over the lens exterior, exactly.

    (n+1) [pi/4 - sum_{k<n} a_k b_k/(k+2)] - 1/2 sum_{k<=n} a_k^2
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    _TABLES.ensure(n)
    return PiLinear(mpq(n + 1, 4), -(n + 1) * _TABLES.sum_ab[n] - _TABLES.sum_a2[n] / 2)


def i_diag_table(n_max: int) -> list:
    """``[i_diag_closed(0), ..., i_diag_closed(n_max)]``."""
    _TABLES.ensure(n_max)
    return [i_diag_closed(n) for n in range(n_max + 1)]


def i_odd_by_parts(big_n: int) -> PiLinear:
    """``I_{2N+1,2N+1}`` from the summation-by-parts form.

    (2N+1) [pi/4 - 1/2 sum_{k<=N} a_{2k}^2/(2k+1)
            - sum_{k<N} (sum_{j<=k} a_{2j}^2)/((2k+1)(2k+2)(2k+3))]
    """
    if big_n < 0:
        raise ValueError("N must be >= 0")
    _TABLES.ensure(2 * big_n)
    m = 2 * big_n + 1
    const = -_TABLES.even_sq_over[big_n] / 2 - _TABLES.even_triple[big_n]
    return PiLinear(mpq(m, 4), m * const)


def even_relation(big_n: int, factor=ONE) -> PiLinear:
    """``(2N+2)/(2N+1) I_{2N+1} - factor * sum_{j<=N} a_{2j}^2/(2N+1)``.

    ``factor=1`` is the uncorrected reading, negative at N = 0; ``factor=1/2``
    agrees with the closed expression.
    """
    m = 2 * big_n + 1
    _TABLES.ensure(2 * big_n + 1)
    s = _TABLES.sum_a2[2 * big_n]
    return i_diag_closed(2 * big_n) * mpq(m + 1, m) - PiLinear(0, mpq(factor) * s / m)


def even_relation_report(big_n_max: int = 1000) -> dict:
    """Compare both readings of the even-index relation with the closed form."""
    uncorrected_fail, corrected_fail = [], []
    for big_n in range(big_n_max + 1):
        target = i_diag_closed(2 * big_n + 1)
        if even_relation(big_n) != target:
            uncorrected_fail.append(big_n)
        if even_relation(big_n, mpq(1, 2)) != target:
            corrected_fail.append(big_n)
    p0 = even_relation(0)
    c0 = i_diag_closed(1)
    return {
        "N_max": big_n_max,
        "uncorrected": {
            "form": "(2N+2)/(2N+1)*I_{2N+1,2N+1} - sum_{j<=N} a_{2j}^2/(2N+1)",
            "value_N0": str(p0),
            "float_N0": float(p0),
            "negative_at_N0": float(p0) < 0,
            "mismatch_count": len(uncorrected_fail),
            "first_mismatch": uncorrected_fail[0] if uncorrected_fail else None,
        },
        "corrected": {
            "form": "(2N+2)/(2N+1)*I_{2N+1,2N+1} - (1/2)*sum_{j<=N} a_{2j}^2/(2N+1)",
            "factor": "1/2",
            "mismatch_count": len(corrected_fail),
            "matches_closed_form": not corrected_fail,
        },
        "closed_form_N0": str(c0),
        "closed_float_N0": float(c0),
    }


# ---------------------------------------------------------------------------
# float mode
# ---------------------------------------------------------------------------


def i_diag_float_table(n_max: int, precision_bits: int = 256) -> list:
    """``I_{n+1,n+1}`` for n = 0..n_max in interval arithmetic.

    Each entry is an :class:`AuditedFloat`; the error bound is the radius of the
    enclosing interval, so it accounts for every rounding along the recurrences.
    """
    out = []
    with iv_precision(precision_bits):
        iv = mpmath.iv
        quarter_pi = iv.pi / 4
        a_prev2 = iv.mpf(1)  # a_{n-2} for the current parity chain
        b_prev2 = iv.mpf(1)
        a = [iv.mpf(1)]
        b = [iv.mpf(1)]
        sum_ab = iv.mpf(0)
        sum_a2 = iv.mpf(1)
        out.append(AuditedFloat.from_interval(quarter_pi - sum_a2 / 2, precision_bits))
        for n in range(1, n_max + 1):
            if n % 2:
                an = bn = iv.mpf(0)
            else:
                an = a_prev2 * (n - 1) / n
                bn = b_prev2 * n / (n + 1) + an / (n + 1)
                a_prev2, b_prev2 = an, bn
            sum_ab = sum_ab + a[n - 1] * b[n - 1] / (n + 1)
            sum_a2 = sum_a2 + an * an
            a.append(an)
            b.append(bn)
            val = (n + 1) * (quarter_pi - sum_ab) - sum_a2 / 2
            out.append(AuditedFloat.from_interval(val, precision_bits))
    return out


def i_diag_value(n: int, precision_bits: int = 256, exact_max_n: int = 5000) -> AuditedFloat:
    """``I_{n+1,n+1}`` as an audited float, exact up to ``exact_max_n``."""
    if n <= exact_max_n:
        return AuditedFloat.from_interval(i_diag_closed(n).enclosure(precision_bits), precision_bits)
    return i_diag_float_table(n, precision_bits)[n]


def lens_alpha_lower_bound(n: int, precision_bits: int = 256) -> AuditedFloat:
    """``||E'_{n+1}||^2 / (pi (n+1))`` -- the lower bound on alpha_n for the lens."""
    val = i_diag_closed(n)
    with iv_precision(precision_bits):
        x = val.enclosure(precision_bits) / (mpmath.iv.pi * (n + 1))
    return AuditedFloat.from_interval(x, precision_bits)


def stirling_ratio(k: int, precision_bits: int = 128):
    """``a_{2k} * sqrt(pi (k - 1/2))``, which tends to 1."""
    a = a_seq(2 * k)
    with mpmath.workprec(precision_bits):
        return mpmath.mpf(a.numerator) / a.denominator * mpmath.sqrt(mpmath.pi * (k - mpmath.mpf(1) / 2))
