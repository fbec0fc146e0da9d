"""Bergman orthonormal polynomials and the error term alpha_n.

Inner products over G are bilinear forms in the moment matrix
``M[j, k] = int_G z^j conj(z)^k dA`` computed once by boundary quadrature.
The basis is built degree by degree: ``z * p_k`` is orthogonalized against
``p_0..p_k`` (two passes of modified Gram-Schmidt) and normalized, which is
Arnoldi on the multiplication-by-z operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import gmpy2
import numpy as np

from .exact import i_diag_closed
from .faber import ExteriorMap, faber, remainder_pair
from .hp import Backend
from .quadrature import BoundaryPath, MomentMatrix, QuadratureRule, green_deriv_norm, moment_matrix

# Polynomial integrands are analytic along each arc: no corner grading needed.
BERGMAN_RULE = QuadratureRule(order=48, panel_length=0.5, grading_levels=0)


class IllConditionedError(ArithmeticError):
    def __init__(self, msg, degree):
        super().__init__(msg)
        self.degree = degree


class PrecisionError(ArithmeticError):
    """The alpha_n cancellation left no reliable digits."""


@dataclass(frozen=True)
class OrthoBasis:
    coeffs: tuple  # p_n as dense coefficient arrays of length N+1
    lambdas: tuple
    gram_residual: float
    precision_bits: int
    moments: MomentMatrix
    path: BoundaryPath
    tol: float
    max_bits_lost: float

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def backend(self) -> Backend:
        return Backend(self.precision_bits)

    def inner(self, f, g):
        """``int_G f conj(g) dA`` for dense coefficient vectors."""
        with self.backend().context():
            return f @ self.moments.matrix[: len(f), : len(g)] @ np.conj(g)


@dataclass(frozen=True)
class AlphaRow:
    n: int
    lambda_n: object
    alpha_n: object
    n_alpha_n: object
    decomposition_residual: object = None
    exterior_bound: object = None


def _bits_lost(total, magnitude_sum) -> float:
    if total <= 0:
        return math.inf
    return max(0.0, math.log2(float(magnitude_sum) / float(total)))


def _build(path, n_max, bits, tol, rule, moment_tol):
    bk = Backend(bits)
    mm = moment_matrix(n_max, path, rule, tol=moment_tol, precision_bits=bits)
    with bk.context():
        m = mm.matrix
        abs_m = np.vectorize(abs, otypes=[object])(m) if bk.mp else np.abs(m)
        size = n_max + 1
        m00 = m[0, 0].real
        p0 = bk.zeros(size)
        p0[0] = bk.cplx(1 / bk.sqrt(m00))
        basis = [p0]
        mconj = [m @ np.conj(p0)]  # M conj(p_i): inner(q, p_i) = q . mconj[i]
        worst_loss = 0.0
        for k in range(n_max):
            q = bk.zeros(size)
            q[1:] = basis[k][:-1]
            for _ in range(2):
                for i in range(k + 1):
                    h = q @ mconj[i]
                    q = q - h * basis[i]
            nrm2 = (q @ (m @ np.conj(q))).real
            aq = bk.abs(q)
            loss = _bits_lost(nrm2, aq @ abs_m @ aq)
            worst_loss = max(worst_loss, loss)
            if loss > bits / 2:
                raise IllConditionedError(f"lost {loss:.0f} of {bits} bits at degree {k + 1}", k + 1)
            p = q / bk.sqrt(nrm2)
            basis.append(p)
            mconj.append(m @ np.conj(p))
        mat = np.array(basis, dtype=object if bk.mp else complex)
        gram = mat @ m @ np.conj(mat).T
        eye = np.eye(size)
        resid = max(float(abs(gram[i, j] - eye[i, j])) for i in range(size) for j in range(size))
        lambdas = tuple(basis[n][n].real for n in range(size))
    if resid > tol:
        raise IllConditionedError(f"Gram residual {resid:.3g} above tol {tol:.3g}", n_max)
    return OrthoBasis(tuple(basis), lambdas, resid, bits, mm, path, tol, worst_loss)


def build_basis(
    path: BoundaryPath,
    n_max: int,
    precision_bits: int = 256,
    tol: float = 1e-10,
    rule: QuadratureRule | None = None,
    moment_tol: float | None = None,
    max_bits: int = 2048,
) -> OrthoBasis:
    """Orthonormal p_0..p_{n_max} over the interior of ``path``.

    On ill-conditioning the precision is doubled and the build retried, up to
    ``max_bits``.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    bits = precision_bits
    while True:
        mtol = moment_tol if moment_tol is not None else 2.0 ** (-0.75 * bits)
        try:
            return _build(path, n_max, bits, tol, rule or BERGMAN_RULE, mtol)
        except IllConditionedError:
            if bits * 2 > max_bits:
                raise
            bits *= 2


def exterior_norm(emap: ExteriorMap, n: int, path: BoundaryPath | None = None, precision_bits: int = 53):
    """``||E'_n||^2`` over the exterior: exact for the lens and circle, else quadrature."""
    if n == 0 or emap.is_circle:
        return 0
    if emap.is_lens:
        v = i_diag_closed(n - 1)
        if precision_bits <= 53:
            return v.to_float(53)
        with gmpy2.context(gmpy2.get_context(), precision=precision_bits + 16):
            return v.pi_coeff * gmpy2.const_pi() + v.const_coeff
    path = path or BoundaryPath.for_map(emap)
    bk = Backend(53)
    return green_deriv_norm(remainder_pair(n, emap, bk), path, tol=1e-11).value


def alpha_table(basis: OrthoBasis, gamma, emap: ExteriorMap | None = None) -> list:
    """``alpha_n = 1 - (n+1) gamma^(2n+2) / (pi lambda_n^2)`` for every degree in ``basis``.

    With ``emap`` the rows also carry the exterior lower bound
    ``||E'_{n+1}||^2 / (pi (n+1))``.
    """
    bk = basis.backend()
    rows = []
    with bk.context():
        g = bk.real(gamma) if not isinstance(gamma, float) else gamma
        pi = bk.pi
        for n, lam in enumerate(basis.lambdas):
            ratio = (n + 1) * g ** (2 * n + 2) / (pi * lam * lam)
            alpha = 1 - ratio
            err = float(ratio) * (4 * basis.gram_residual + 2.0 ** (-bits_safe(bk.bits)))
            if err > max(abs(float(alpha)), basis.tol):
                raise PrecisionError(f"alpha_{n}: error {err:.3g} swamps value {float(alpha):.3g}")
            bound = None
            if emap is not None:
                bound = exterior_norm(emap, n + 1, basis.path, bk.bits) / (math.pi * (n + 1))
            rows.append(AlphaRow(n, lam, alpha, n * alpha, None, bound))
    return rows


def bits_safe(bits: int) -> int:
    return max(40, bits - 16)


@dataclass(frozen=True)
class AlphaDecomposition:
    n: int
    alpha: object
    interior_term: object
    exterior_term: object
    residual: float


def alpha_decomposition(basis: OrthoBasis, emap: ExteriorMap, n: int) -> AlphaDecomposition:
    """Compare alpha_n with interior + exterior contributions.

    interior = (n+1)/pi * ||F'_{n+1}/(n+1) - gamma^(n+1)/lambda_n p_n||^2 over G
    exterior = ||E'_{n+1}||^2 / (pi (n+1)) over the exterior
    """
    if not 0 <= n <= basis.degree:
        raise ValueError("n outside the computed basis")
    bk = basis.backend()
    with bk.context():
        gamma = bk.real(emap.gamma) if not isinstance(emap.gamma, float) else emap.gamma
        fd = faber(n + 1, emap).derivative()
        size = n + 1
        d = bk.zeros(size)
        for k, c in fd.coeffs.items():
            d[k] = bk.cplx(c) / (n + 1)
        lam = basis.lambdas[n]
        d = d - (gamma ** (n + 1) / lam) * basis.coeffs[n][:size]
        interior = (n + 1) * basis.inner(d, d).real / bk.pi
        ext = exterior_norm(emap, n + 1, basis.path, bk.bits)
        ext = bk.real(ext) if bk.mp else float(ext)
        exterior = ext / (bk.pi * (n + 1))
        alpha = 1 - (n + 1) * gamma ** (2 * n + 2) / (bk.pi * lam * lam)
        residual = float(abs(alpha - interior - exterior))
    return AlphaDecomposition(n, alpha, interior, exterior, residual)


def check_alpha_decomposition(basis: OrthoBasis, emap: ExteriorMap, n: int, tol: float = 1e-8) -> float:
    """Residual of the alpha_n decomposition; raises if it exceeds ``tol``."""
    res = alpha_decomposition(basis, emap, n).residual
    if res > tol:
        raise AssertionError(f"alpha decomposition residual {res:.3g} > {tol:.3g} at n={n}")
    return res
