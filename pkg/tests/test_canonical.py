import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclie.canonical import (
    CanonicalExpr,
    CanonicalTerm,
    T,
    X,
    const,
    convention_gap,
    evaluate,
    exp_linear,
    format_expr,
    formal_dt,
    formal_dx,
    heat_residual,
    parse_expr,
    power_rule_dt,
    power_rule_dx,
    to_canonical,
)
from fraclie.errors import DomainError, ParseError, UnsupportedConventionError

INV_GAMMA_1_5 = 1.12837916709551257389615890312
FOUR_OVER_PI = 1.27323954473516268615107010698
TWO_OVER_PI = 0.63661977236758134307553505349
EXP_INV_GAMMA_1_5 = 3.09064302231079762044838978118

# -- strategies ----------------------------------------------------------------

small = st.integers(min_value=-4, max_value=4)
coeffs = st.integers(min_value=-8, max_value=8).filter(bool).map(lambda k: k / 4)


@st.composite
def terms(draw):
    return CanonicalExpr(
        (
            CanonicalTerm(
                draw(coeffs),
                draw(st.integers(0, 3)),
                draw(st.integers(0, 3)),
                draw(small) / 2,
                draw(small) / 2,
            ),
        )
    )


exprs = st.lists(terms(), min_size=0, max_size=4).map(lambda ts: sum(ts, CanonicalExpr()))


# -- construction ----------------------------------------------------------------


def test_terms_merge_and_cancel():
    e = X + X + 2 * T - T - T
    assert format_expr(e) == "2*X"
    assert not (X - X)
    assert len(CanonicalExpr()) == 0


def test_zero_coefficient_term_rejected():
    with pytest.raises(DomainError):
        CanonicalTerm(0.0, 1, 0)
    with pytest.raises(DomainError):
        CanonicalTerm(1.0, -1, 0)


def test_coefficients_are_exact_fractions():
    e = const(0.1) + const(0.2)
    assert e.terms[0].coeff == Fraction(0.1) + Fraction(0.2)


@settings(max_examples=100, deadline=None)
@given(exprs, exprs, exprs)
def test_addition_and_multiplication_commute_and_associate(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@settings(max_examples=100, deadline=None)
@given(exprs)
def test_normalization_is_idempotent(e):
    assert CanonicalExpr(e.terms) == e
    assert CanonicalExpr(CanonicalExpr(e.terms).terms).terms == e.terms


@settings(max_examples=100, deadline=None)
@given(exprs)
def test_partial_derivatives_commute(e):
    assert formal_dx(formal_dt(e)) == formal_dt(formal_dx(e))


@settings(max_examples=100, deadline=None)
@given(exprs, st.floats(0.2, 1.5), st.floats(0.2, 1.5))
def test_formal_dx_matches_central_difference(e, Xv, Tv):
    h = 1e-4
    fd = (e(Xv + h, Tv) - e(Xv - h, Tv)) / (2 * h)
    exact = formal_dx(e)(Xv, Tv)
    scale = max(1.0, abs(exact), e.max_abs_coeff() * math.exp(3.0))
    assert abs(fd - exact) <= 1e-6 * scale


def test_power_operator():
    assert (X + 1) ** 2 == X * X + 2 * X + 1
    assert (X + T) ** 0 == const(1)
    with pytest.raises(DomainError):
        X ** -1


# -- canonical map -------------------------------------------------------------


def test_to_canonical_examples():
    assert to_canonical(2.0, 3.0, 1, 1) == (2.0, 3.0)
    Xv, _ = to_canonical(1.0, 1.0, 1, 0.5)
    assert Xv == pytest.approx(INV_GAMMA_1_5, rel=1e-14)
    for beta in (0.25, 0.5, 1.0):
        assert to_canonical(0.0, 1.0, 0.5, beta)[0] == 0.0
    with pytest.raises(DomainError):
        to_canonical(-1.0, 1.0, 0.5, 0.5)


def test_to_canonical_vectorized():
    Xv, Tv = to_canonical(np.array([0.0, 1.0, 4.0]), np.array([1.0, 1.0, 1.0]), 1, 0.5)
    np.testing.assert_allclose(Xv, np.array([0.0, 1.0, 2.0]) * INV_GAMMA_1_5)


# -- derivatives ----------------------------------------------------------------


def test_formal_derivative_examples():
    assert formal_dx(parse_expr("X^2+2*T")) == 2 * X
    assert formal_dx(exp_linear(1.5, 0)) == 1.5 * exp_linear(1.5, 0)
    e = X * exp_linear(1, 1)
    assert formal_dx(e) == exp_linear(1, 1) + X * exp_linear(1, 1)
    assert formal_dt(parse_expr("X^2+2*T")) == const(2)


def test_power_rule_examples():
    assert power_rule_dt(T, 0.37) == const(1)
    d = power_rule_dx(X**2, 0.5)
    assert len(d) == 1 and d.terms[0].xpow == 1
    assert float(d.terms[0].coeff) == pytest.approx(FOUR_OVER_PI, rel=1e-13)
    assert not power_rule_dx(const(5), 0.5)
    assert power_rule_dx(X**3, 1.0) == formal_dx(X**3)


def test_power_rule_rejects_exponentials():
    with pytest.raises(UnsupportedConventionError):
        power_rule_dx(exp_linear(1, 0), 0.5)
    with pytest.raises(UnsupportedConventionError):
        power_rule_dt(X * exp_linear(0, 1), 0.5)


def test_convention_gap_values():
    assert convention_gap(2, 0.5) == pytest.approx(TWO_OVER_PI, abs=1e-12)
    assert convention_gap(2, 1.0) == 1.0
    assert convention_gap(3, 1.0) == 1.0
    for m in range(2, 11):
        assert convention_gap(m, 1.0) == 1.0
    with pytest.raises(DomainError):
        convention_gap(1, 0.5)


# -- evaluation and residual --------------------------------------------------


def test_evaluate_examples():
    assert evaluate(parse_expr("X^2+2*T"), 1.0, 1.0, 1, 1) == 3.0
    assert evaluate(exp_linear(1, 0), 1.0, 0.3, 0.5, 0.5) == pytest.approx(EXP_INV_GAMMA_1_5, rel=1e-13)
    assert evaluate(CanonicalExpr(), 0.4, 0.2, 0.5, 0.5) == 0.0


def test_heat_residual_examples():
    assert not heat_residual(parse_expr("X^2+2*T"))
    assert not heat_residual(exp_linear(1, 1))
    assert heat_residual(X * T) == X


def test_tolerance_helpers():
    tiny = X + const(1e-14)
    assert tiny.pruned() == X
    assert const(1e-13).is_zero()
    assert not const(1e-11).is_zero()
    assert (X * (1 + 1e-14)).allclose(X)
    assert not X.allclose(T)


def test_substitute_affine_only():
    e = X**2 * exp_linear(1, 0)
    shifted = e.substitute(X - 1, T)
    assert shifted(2.0, 0.0) == pytest.approx(e(1.0, 0.0))
    with pytest.raises(DomainError):
        e.substitute(X**2, T)


# -- grammar ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "text, expected",
    [
        ("X^2+2*T", "X^2+2*T"),
        ("2*T+X**2", "X^2+2*T"),
        ("exp(X+T)", "exp(X+T)"),
        ("-(X-1)*exp(-0.3*X+0.09*T)", "-X*exp(0.09*T-0.3*X)+exp(0.09*T-0.3*X)"),
        ("exp(1)", "2.718281828459045"),
        ("0", "0"),
        ("X*T-T*X", "0"),
    ],
)
def test_parse_and_format(text, expected):
    assert format_expr(parse_expr(text)) == expected


def test_format_with_digits():
    assert format_expr(math.e * exp_linear(1, 1), digits=8) == "2.7182818*exp(X+T)"
    assert format_expr(exp_linear(-0.3, 0.09), digits=8) == "exp(0.09*T-0.3*X)"


@pytest.mark.parametrize(
    "bad", ["", "X+", "exp(X^2)", "X^T", "X^0.5", "(X", "Y", "exp(exp(X))", "3 4"]
)
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse_expr(bad)


@settings(max_examples=150, deadline=None)
@given(exprs)
def test_print_parse_round_trip(e):
    again = parse_expr(format_expr(e))
    assert again.allclose(e, tol=1e-15)
    assert format_expr(again) == format_expr(e)
