import math

import gmpy2
import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from faber_bergman.exact import (
    AuditedFloat,
    PiLinear,
    a2_sum_identity,
    a_seq,
    a_seq_recurrence,
    ab_cross_identity,
    b_seq,
    b_seq_explicit,
    even_relation,
    even_relation_report,
    g_poly,
    g_poly_recurrence,
    i_diag_closed,
    i_diag_float_table,
    i_diag_value,
    i_odd_by_parts,
    lens_alpha_lower_bound,
    sequences,
    stirling_ratio,
)

rationals = st.fractions(max_denominator=10**6).map(mpq)
pilinears = st.builds(PiLinear, rationals, rationals)


# a_n, b_n ---------------------------------------------------------------


def test_a_examples():
    assert a_seq(0) == 1
    assert a_seq(1) == 0
    assert a_seq(6) == mpq(5, 16)


def test_b_examples():
    assert b_seq(0) == 1
    assert b_seq(1) == 0
    assert b_seq(2) == mpq(5, 6)
    assert b_seq(4) == mpq(89, 120)
    assert b_seq_explicit(2) == mpq(5, 6)


def test_a_recurrence_matches_binomial():
    rec = a_seq_recurrence(2000)
    assert all(rec[n] == a_seq(n) for n in range(2001))


def test_b_recurrence_matches_explicit_sum():
    assert all(b_seq(n) == b_seq_explicit(n) for n in range(0, 1201))


@given(st.integers(0, 3000))
@settings(max_examples=25, deadline=None)
def test_b_explicit_random_n(n):
    assert b_seq_explicit(n) == b_seq(n)


def test_odd_terms_vanish():
    a, b = sequences(99)
    assert all(a[n] == 0 and b[n] == 0 for n in range(1, 100, 2))


def test_cache_is_order_independent():
    # later extension must not change earlier entries
    before = [b_seq(n) for n in range(50)]
    sequences(400)
    assert [b_seq(n) for n in range(50)] == before


# G_n ----------------------------------------------------------------------


def test_g_examples():
    assert g_poly(0).coeffs == {}
    assert g_poly(1).as_dict() == {1: mpq(1, 2)}
    assert g_poly(3).as_dict() == {3: mpq(1, 8), 1: mpq(3, 8)}


def test_g_recurrence_matches_explicit():
    rec = g_poly_recurrence(300)
    assert all(rec[n] == g_poly(n) for n in range(301))


@given(st.integers(1, 200))
@settings(max_examples=30, deadline=None)
def test_g_parity_and_no_constant(n):
    g = g_poly(n)
    assert all(e % 2 == n % 2 and e > 0 for e in g.coeffs)
    assert g.degree == n
    assert g.coeffs[n] == mpq(1, 2**n)


# identities -----------------------------------------------------------------


def test_a2_sum_identity_examples():
    assert a2_sum_identity(0)
    assert a2_sum_identity(1)  # 1 + 1/4 = 3 * 1/2 * 5/6
    assert a2_sum_identity(2)  # 89/64 = 5 * 3/8 * 89/120


@given(st.integers(0, 1500))
@settings(max_examples=40, deadline=None)
def test_a2_sum_identity(k):
    assert a2_sum_identity(k)


@given(st.integers(1, 1000).map(lambda m: 2 * m))
@settings(max_examples=40, deadline=None)
def test_ab_cross_identity(n):
    assert ab_cross_identity(n)


def test_ab_cross_identity_rejects_odd():
    with pytest.raises(ValueError):
        ab_cross_identity(3)


# closed form ----------------------------------------------------------------


def test_i_diag_small_values():
    assert i_diag_closed(0) == PiLinear(mpq(1, 4), mpq(-1, 2))
    assert i_diag_closed(1) == PiLinear(mpq(1, 2), mpq(-3, 2))


def test_i_diag_zero_against_mirror_area():
    # E_1 = 1/(2z); z -> 1/z sends the exterior onto the mirror region, area pi - 2
    # (two circular segments of angle pi/2 and radius sqrt 2: 2 * (pi/2 - 1))
    mirror_area = 2 * (0.5 * 2 * (math.pi / 2 - math.sin(math.pi / 2)))
    assert abs(float(i_diag_closed(0).to_float()) - mirror_area / 4) < 1e-15


def test_i_diag_float_64_bits():
    v = i_diag_closed(0).to_float(64)
    assert abs(v - (mpmath.pi / 4 - mpmath.mpf(1) / 2)) < mpmath.mpf(2) ** -50


def test_odd_by_parts_matches_closed_form():
    assert i_odd_by_parts(0) == PiLinear(mpq(1, 4), mpq(-1, 2))
    assert all(i_odd_by_parts(k) == i_diag_closed(2 * k) for k in range(300))
    assert 0 < float(i_odd_by_parts(10).to_float()) < 0.3


def test_i_diag_bounded():
    vals = [float(x) for x in i_diag_float_table(1000)]
    assert min(vals) >= 0
    assert max(vals) <= 0.3


def test_float_table_agrees_with_exact():
    table = i_diag_float_table(400, 256)
    for n in (0, 1, 2, 57, 400):
        assert table[n].contains(i_diag_closed(n).to_float(300))
        assert table[n].error_bound < 1e-60


def test_i_diag_value_switches_mode():
    exact = i_diag_value(30, exact_max_n=100)
    table = i_diag_value(30, exact_max_n=10)
    assert abs(exact.value - table.value) <= exact.error_bound + table.error_bound


def test_lower_bound_examples():
    assert abs(float(lens_alpha_lower_bound(0).value) - (math.pi / 4 - 0.5) / math.pi) < 1e-15
    assert abs(float(lens_alpha_lower_bound(1).value) - (math.pi / 2 - 1.5) / (2 * math.pi)) < 1e-15
    assert abs(float(lens_alpha_lower_bound(0).value) - 0.090845) < 1e-6


def test_stirling_envelope():
    for k in range(2, 3000, 37):
        assert abs(stirling_ratio(k) - 1) <= 1 / k


# even-index relation ----------------------------------------------------------


def test_even_relation_uncorrected_fails_at_zero():
    v = even_relation(0)
    assert v == PiLinear(mpq(1, 2), mpq(-2))
    assert float(v.to_float()) < 0
    assert v != i_diag_closed(1)


def test_even_relation_half_factor_matches():
    assert all(even_relation(k, mpq(1, 2)) == i_diag_closed(2 * k + 1) for k in range(200))


def test_even_relation_report_shape():
    rep = even_relation_report(50)
    assert rep["uncorrected"]["negative_at_N0"]
    assert rep["uncorrected"]["mismatch_count"] == 51
    assert rep["corrected"]["matches_closed_form"]
    assert rep["closed_form_N0"] == "(1/2)*pi+(-3/2)"


# PiLinear ---------------------------------------------------------------------


@given(pilinears, pilinears, rationals)
def test_pilinear_ring_ops(x, y, q):
    assert (x + y) - y == x
    assert (x + y).pi_coeff == x.pi_coeff + y.pi_coeff
    assert (x * q).const_coeff == x.const_coeff * q
    if q != 0:
        assert (x * q) / q == x


@given(pilinears)
def test_pilinear_string_round_trip(x):
    assert PiLinear.parse(str(x)) == x


def test_pilinear_refuses_pi_products():
    with pytest.raises(TypeError):
        PiLinear(1, 0) * PiLinear(1, 0)


@given(pilinears)
@settings(max_examples=50)
def test_to_float_monotone_in_precision(x):
    # higher precision never moves further from a 400-bit reference
    ref = x.to_float(400)
    errs = [abs(mpmath.mpf(x.to_float(b)) - ref) for b in (53, 100, 200)]
    assert errs[0] >= errs[1] >= errs[2]


@given(pilinears)
@settings(max_examples=50)
def test_enclosure_contains_value(x):
    enc = x.enclosure(128)
    assert enc.a <= x.to_float(300) <= enc.b


def test_audited_float():
    a = AuditedFloat.from_interval(i_diag_closed(5).enclosure(128), 128)
    assert a.precision_bits == 128
    assert a.contains(i_diag_closed(5).to_float(200))


def test_negative_index_rejected():
    for f in (a_seq, b_seq, b_seq_explicit, g_poly, i_diag_closed, i_odd_by_parts):
        with pytest.raises(ValueError):
            f(-1)


def test_exact_types_are_reduced():
    b = b_seq(40)
    assert gmpy2.gcd(b.numerator, b.denominator) == 1
