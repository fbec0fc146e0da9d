"""Precision backends shared by the quadrature and orthogonalization kernels.

Two backends exist: ``float`` (numpy complex128, used when ``bits <= 53``) and
``mp`` (numpy object arrays of gmpy2 ``mpfr``/``mpc`` at ``bits`` precision).
Kernels are written once against numpy array operations and run on either.
"""
from __future__ import annotations

import contextlib
import math
from fractions import Fraction
from functools import lru_cache

import gmpy2
import mpmath
import numpy as np

FLOAT_BITS = 53


def parse_rational(text):
    """Parse ``"p/q"``, an integer, or a decimal string into an exact ``mpq``."""
    if isinstance(text, (int, Fraction)):
        return gmpy2.mpq(text)
    if type(text).__name__ == "mpq":
        return text
    if isinstance(text, float):
        return gmpy2.mpq(Fraction(text))
    s = str(text).strip()
    return gmpy2.mpq(Fraction(s))


def format_rational(q) -> str:
    q = gmpy2.mpq(q)
    return f"{q.numerator}/{q.denominator}"


@contextlib.contextmanager
def iv_precision(bits: int):
    """Temporarily set the precision of mpmath's interval context."""
    old = mpmath.iv.prec
    mpmath.iv.prec = bits
    try:
        yield mpmath.iv
    finally:
        mpmath.iv.prec = old


def digits_for_bits(bits: int) -> int:
    return max(17, int(math.ceil(bits * math.log10(2))) + 1)


def format_real(x, bits: int) -> str:
    """Decimal string carrying the full working precision."""
    if isinstance(x, (float, int, np.floating)) or bits <= FLOAT_BITS:
        return repr(float(x))
    if type(x).__name__ == "mpfr":
        x = str(x)
    with mpmath.workprec(bits + 8):
        return mpmath.nstr(mpmath.mpf(x), digits_for_bits(bits), min_fixed=-5, max_fixed=5)


class Backend:
    """Number factory for one working precision."""

    def __init__(self, bits: int = FLOAT_BITS):
        if bits < 2:
            raise ValueError("precision must be at least 2 bits")
        self.bits = int(bits)
        self.mp = self.bits > FLOAT_BITS

    def __repr__(self):
        return f"Backend(bits={self.bits})"

    @contextlib.contextmanager
    def context(self):
        if not self.mp:
            yield self
            return
        with gmpy2.context(gmpy2.get_context(), precision=self.bits):
            yield self

    # scalars -------------------------------------------------------------
    def real(self, x):
        if not self.mp:
            return float(x) if not isinstance(x, str) else float(Fraction(x))
        if isinstance(x, str):
            x = parse_rational(x) if "/" in x or "." not in x else x
        return gmpy2.mpfr(x)

    def cplx(self, x):
        if isinstance(x, (tuple, list)):
            re, im = x
            if not self.mp:
                return complex(self.real(re), self.real(im))
            return gmpy2.mpc(self.real(re), self.real(im))
        if isinstance(x, complex):
            if self.mp:
                return gmpy2.mpc(gmpy2.mpfr(x.real), gmpy2.mpfr(x.imag))
            return x
        if not self.mp:
            if type(x).__name__ == "mpc":
                return complex(x)
            return complex(self.real(x))
        if type(x).__name__ == "mpc":
            return gmpy2.mpc(x)
        return gmpy2.mpc(self.real(x))

    @property
    def pi(self):
        return gmpy2.const_pi() if self.mp else math.pi

    def sqrt(self, x):
        return gmpy2.sqrt(x) if self.mp else (np.sqrt(x) if isinstance(x, complex) else math.sqrt(x))

    def phase(self, z):
        return gmpy2.phase(z) if self.mp else math.atan2(z.imag, z.real)

    def to_float(self, x) -> float:
        return float(x)

    # arrays --------------------------------------------------------------
    def zeros(self, shape, complex_=True):
        if not self.mp:
            return np.zeros(shape, dtype=complex if complex_ else float)
        out = np.empty(shape, dtype=object)
        zero = gmpy2.mpc(0) if complex_ else gmpy2.mpfr(0)
        out.fill(zero)
        return out

    def asarray(self, values, complex_=True):
        if not self.mp:
            return np.asarray(values, dtype=complex if complex_ else float)
        conv = self.cplx if complex_ else self.real
        out = np.empty(len(values), dtype=object)
        for i, v in enumerate(values):
            out[i] = conv(v)
        return out

    def expi(self, t):
        """exp(i t) for a real array t."""
        if not self.mp:
            return np.exp(1j * np.asarray(t, dtype=float))
        out = np.empty(len(t), dtype=object)
        for i, ti in enumerate(t):
            s, c = gmpy2.sin_cos(ti)
            out[i] = gmpy2.mpc(c, s)
        return out

    def abs(self, arr):
        if not self.mp:
            return np.abs(arr)
        return np.array([abs(v) for v in arr], dtype=object)

    def real_part(self, arr):
        if not self.mp:
            return np.real(arr)
        return np.array([v.real for v in arr], dtype=object)

    def gauss_legendre(self, order: int):
        return _gauss_legendre(order, self.bits if self.mp else FLOAT_BITS)


@lru_cache(maxsize=64)
def _gauss_legendre(order: int, bits: int):
    x0, w0 = np.polynomial.legendre.leggauss(order)
    if bits <= FLOAT_BITS:
        return x0, w0
    # Newton polish of the float nodes; quadratic convergence needs ~log2(bits/50) steps.
    work = bits + 32
    xs = np.empty(order, dtype=object)
    ws = np.empty(order, dtype=object)
    with gmpy2.context(gmpy2.get_context(), precision=work):
        eps = gmpy2.mpfr(2) ** (-bits - 8)
        for i, xf in enumerate(x0):
            x = gmpy2.mpfr(float(xf))
            for _ in range(60):
                p, dp = _legendre_with_deriv(order, x)
                dx = p / dp
                x -= dx
                if abs(dx) < eps:
                    break
            p, dp = _legendre_with_deriv(order, x)
            xs[i] = x
            ws[i] = 2 / ((1 - x * x) * dp * dp)
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        xs = np.array([gmpy2.mpfr(v) for v in xs], dtype=object)
        ws = np.array([gmpy2.mpfr(v) for v in ws], dtype=object)
    return xs, ws


def _legendre_with_deriv(n: int, x):
    p0, p1 = gmpy2.mpfr(1), x
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1)
    return p1, dp
