import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faber_bergman.bergman import (
    IllConditionedError,
    alpha_decomposition,
    alpha_table,
    build_basis,
    check_alpha_decomposition,
    exterior_norm,
)
from faber_bergman.exact import lens_alpha_lower_bound
from faber_bergman.faber import ExteriorMap
from faber_bergman.quadrature import BoundaryPath

LENS_MAP = ExteriorMap.lens()


@pytest.fixture(scope="module")
def lens_basis():
    return build_basis(BoundaryPath.lens(), 30, precision_bits=256)


@pytest.fixture(scope="module")
def lens_rows(lens_basis):
    return alpha_table(lens_basis, LENS_MAP.gamma, LENS_MAP)


def test_disk_basis():
    b = build_basis(BoundaryPath.circle(), 20, precision_bits=128)
    with mpmath.workprec(128):
        for n, lam in enumerate(b.lambdas):
            assert abs(mpmath.mpf(str(lam)) - mpmath.sqrt((n + 1) / mpmath.pi)) < mpmath.mpf(10) ** -30
    rows = alpha_table(b, 1)
    assert max(abs(float(r.alpha_n)) for r in rows) < 1e-30


def test_disk_basis_float():
    b = build_basis(BoundaryPath.circle(), 10, precision_bits=53)
    lam = np.array([float(x) for x in b.lambdas])
    np.testing.assert_allclose(lam, np.sqrt(np.arange(1, 12) / np.pi), rtol=1e-12)


def test_lens_lambda_zero():
    b = build_basis(BoundaryPath.lens(), 0, precision_bits=128)
    with mpmath.workprec(128):
        assert abs(mpmath.mpf(str(b.lambdas[0].real)) - 1 / mpmath.sqrt(3 * mpmath.pi + 2)) < mpmath.mpf(2) ** -100


def test_lens_alpha_zero(lens_rows):
    with mpmath.workprec(256):
        exact = mpmath.mpf(1) / 4 - 1 / (2 * mpmath.pi)
        assert abs(mpmath.mpf(str(lens_rows[0].alpha_n.real)) - exact) < mpmath.mpf(10) ** -60
    # alpha_0 sits exactly on the exterior bound: the interior term vanishes
    assert abs(float(lens_rows[0].alpha_n.real) - float(lens_alpha_lower_bound(0).value)) < 1e-15


def test_gram_residual(lens_basis):
    assert lens_basis.gram_residual < 1e-60
    assert lens_basis.degree == 30


def test_alpha_in_unit_interval(lens_rows):
    for r in lens_rows:
        assert 0 < float(r.alpha_n.real) < 1


def test_lower_bound_holds(lens_rows):
    for r in lens_rows:
        assert float(r.alpha_n.real) >= float(r.exterior_bound) - 1e-40


def test_lower_bound_matches_exact_engine(lens_rows):
    for r in lens_rows[:10]:
        assert abs(float(r.exterior_bound) - float(lens_alpha_lower_bound(r.n).value)) < 1e-15


def test_decomposition_residual(lens_basis):
    for n in (0, 1, 5, 17, 30):
        d = alpha_decomposition(lens_basis, LENS_MAP, n)
        assert d.residual < 1e-50
        assert float(d.interior_term) >= -1e-60
    assert check_alpha_decomposition(lens_basis, LENS_MAP, 10) < 1e-8


def test_tightening_with_degree(lens_basis, lens_rows):
    # the interior term is a least-squares defect: more degrees cannot make
    # the bound worse, so alpha_n - bound stays nonnegative along the table
    gaps = [float(r.alpha_n.real) - float(r.exterior_bound) for r in lens_rows]
    assert min(gaps) > -1e-40
    assert gaps[0] < 1e-40


def test_alpha_stable_under_precision(lens_rows):
    b = build_basis(BoundaryPath.lens(), 12, precision_bits=128)
    rows = alpha_table(b, LENS_MAP.gamma)
    for r, s in zip(rows, lens_rows):
        assert abs(float(r.alpha_n.real) - float(s.alpha_n.real)) < 1e-25


def test_float_basis_reports_loss():
    # double precision cannot hold degree 30 on the lens: the build either doubles up or fails loudly
    try:
        b = build_basis(BoundaryPath.lens(), 30, precision_bits=53, max_bits=53)
    except IllConditionedError as e:
        assert e.degree <= 30
    else:
        assert b.gram_residual <= b.tol


def test_exterior_norm_circle_and_zero():
    assert exterior_norm(ExteriorMap.circle(), 5) == 0
    assert exterior_norm(LENS_MAP, 0) == 0


def test_negative_degree_rejected():
    with pytest.raises(ValueError):
        build_basis(BoundaryPath.circle(), -1)


@given(st.sampled_from(["3/5", "2/3", "3/4", "5/4"]), st.integers(0, 6))
@settings(max_examples=8, deadline=None)
def test_lune_alpha_bounds(beta, n):
    emap = ExteriorMap.lune(beta)
    path = BoundaryPath.lune(beta)
    b = build_basis(path, n, precision_bits=128)
    row = alpha_table(b, emap.gamma, emap)[n]
    a = float(row.alpha_n.real)
    assert 0 <= a < 1
    assert a >= float(row.exterior_bound) - 1e-9
