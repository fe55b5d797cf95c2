import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclie.canonical import T, X, const, exp_linear, heat_residual, parse_expr
from fraclie.errors import ClosureError, ConstraintError, DomainError, OffShellError
from fraclie.symmetry import (
    Generator,
    Infinitesimals,
    TransformFamily,
    basis,
    bracket_table,
    decompose,
    determining_residual,
    gamma_ratios,
    infinitesimals_to_generator,
    iterate_family5,
    lie_bracket,
    prolongation_coefficients,
    source_generator,
    transform_solution,
)
from fraclie.verify import fd_heat_residual

SEEDS = ("1", "X^2+2*T", "exp(X+T)")
# 4 Γ(1.5)² / Γ(2) and Γ(1.5)² / Γ(2), from mpmath
KAPPA_TAU_HALF = 3.14159265358979323846264338328
KAPPA_PHI_HALF = 0.78539816339744830961566084582

# Structure constants worked out by hand from the corrected generators:
# entry (i, j) lists the coordinates of [v_i, v_j] in v1..v6.
EXPECTED_TABLE = {
    (1, 4): [1, 0, 0, 0, 0, 0],
    (1, 5): [0, 0, -1, 0, 0, 0],
    (1, 6): [0, 0, 0, 0, 2, 0],
    (2, 4): [0, 2, 0, 0, 0, 0],
    (2, 5): [2, 0, 0, 0, 0, 0],
    (2, 6): [0, 0, -2, 4, 0, 0],
    (4, 5): [0, 0, 0, 0, 1, 0],
    (4, 6): [0, 0, 0, 0, 0, 2],
}


# -- generators -------------------------------------------------------------------


def test_v4_from_constants():
    g = infinitesimals_to_generator(Infinitesimals((0, 0, 0, 1, 0, 0)), 0.3, 0.7)
    assert g.xi == X and g.tau == 2 * T and not g.phi_linear and not g.phi_source


def test_all_zero_constants_give_zero_generator():
    assert infinitesimals_to_generator(Infinitesimals()).is_zero()


def test_v6_tau_in_both_modes_at_classical_orders():
    c6 = Infinitesimals((0, 0, 0, 0, 0, 1))
    assert infinitesimals_to_generator(c6, 1, 1, "paper").tau == 2 * T**2
    assert infinitesimals_to_generator(c6, 1, 1, "corrected").tau == 4 * T**2


def test_gamma_ratios():
    assert gamma_ratios(1, 1, "corrected") == (4.0, 1.0)
    assert gamma_ratios(1, 1, "paper") == (2.0, 0.5)
    kt, kp = gamma_ratios(0.5, 0.5, "paper")
    assert kt == pytest.approx(KAPPA_TAU_HALF, rel=1e-13)
    assert kp == pytest.approx(KAPPA_PHI_HALF, rel=1e-13)
    with pytest.raises(DomainError):
        gamma_ratios(1, 1, "other")


def test_corrected_basis_components():
    v = basis("corrected")
    assert v[0].xi == const(1) and v[0].tau.is_zero() and v[0].phi_linear.is_zero()
    assert v[2].phi_linear == const(1)
    assert v[4].xi == 2 * T and not v[4].tau and v[4].phi_linear == -X
    assert v[5].xi == 4 * X * T
    assert v[5].tau == 4 * T**2
    assert v[5].phi_linear == -(X**2 + 2 * T)


def test_source_term_must_solve_equation():
    assert source_generator(exp_linear(1, 1)).phi_source == exp_linear(1, 1)
    with pytest.raises(ConstraintError):
        Infinitesimals(a_term=X * T)
    with pytest.raises(DomainError):
        Infinitesimals((1, 2, 3))


# -- brackets ----------------------------------------------------------------------


def test_bracket_examples():
    v = basis()
    assert lie_bracket(v[0], v[1]).is_zero()
    assert lie_bracket(v[0], v[3]) == v[0]
    b = lie_bracket(v[1], v[4])
    assert (b - v[0].scale(2)).is_zero()


def test_bracket_table_matches_hand_derivation():
    table = bracket_table("corrected")
    for i, j in product(range(1, 7), repeat=2):
        if (i, j) in EXPECTED_TABLE:
            want = np.array(EXPECTED_TABLE[(i, j)], float)
        elif (j, i) in EXPECTED_TABLE:
            want = -np.array(EXPECTED_TABLE[(j, i)], float)
        else:
            want = np.zeros(6)
        assert np.max(np.abs(table[(i, j)] - want)) < 1e-12, (i, j)


def test_bracket_labels():
    table = bracket_table()
    assert table.label(1, 4) == "v1"
    assert table.label(2, 6) == "4*v4-2*v3"
    assert table.label(2, 5) == "2*v1"
    assert all(table.label(i, i) == "0" for i in range(1, 7))


def test_bracket_antisymmetry_and_jacobi_exact():
    v = basis()
    for a, b in product(v, repeat=2):
        assert (lie_bracket(a, b) + lie_bracket(b, a)).is_zero()
    for a, b, c in product(v, repeat=3):
        jac = (
            lie_bracket(a, lie_bracket(b, c))
            + lie_bracket(b, lie_bracket(c, a))
            + lie_bracket(c, lie_bracket(a, b))
        )
        assert jac.is_zero()


def test_source_generators_form_an_ideal():
    a = exp_linear(1, 1)
    src = source_generator(a)
    for g in basis():
        br = lie_bracket(g, src)
        assert not br.xi and not br.tau and not br.phi_linear
        assert not heat_residual(br.phi_source)


def test_gamma_weighted_basis_does_not_close_at_half_orders():
    with pytest.raises(ClosureError):
        bracket_table("paper", 0.5, 0.5)


def test_decompose_outside_span():
    with pytest.raises(ClosureError):
        decompose(Generator(xi=X**3), basis())


# -- prolongation and determining equation -----------------------------------------


def test_prolongation_examples():
    u = parse_expr("X^2+2*T")
    v = basis()
    assert all(not c for c in prolongation_coefficients(v[0], u))
    pt, px, pxx = prolongation_coefficients(v[2], exp_linear(2, 3) + X * T)
    assert pt == 3 * exp_linear(2, 3) + X
    assert pxx == 4 * exp_linear(2, 3)
    pt5, _, pxx5 = prolongation_coefficients(v[4], exp_linear(1, 1))
    assert not (pt5 - pxx5)


@pytest.mark.parametrize("mode", ["paper", "corrected"])
@pytest.mark.parametrize("index", range(5))
@pytest.mark.parametrize("seed", SEEDS)
def test_determining_residual_vanishes_for_first_five(mode, index, seed):
    g = basis(mode, 0.5, 0.5)[index]
    assert not determining_residual(g, parse_expr(seed))


@pytest.mark.parametrize("seed", SEEDS)
def test_corrected_v6_is_a_symmetry(seed):
    assert not determining_residual(basis("corrected")[5], parse_expr(seed))


def test_gamma_weighted_v6_fails_determining_equation():
    res = determining_residual(basis("paper", 0.5, 0.5)[5], parse_expr("X^2+2*T"))
    assert res and res.max_abs_coeff() > 0.1


def test_determining_residual_requires_solution():
    with pytest.raises(OffShellError):
        determining_residual(basis()[0], X * T)


# -- solution maps -----------------------------------------------------------------


def test_family3_scales_coefficients():
    u = transform_solution(TransformFamily(3, 1.0), exp_linear(1, 1))
    assert float(u.terms[0].coeff) == pytest.approx(math.e, rel=1e-15)


def test_family5_constant_seed():
    u = transform_solution(TransformFamily(5, 0.3), const(2.5))
    assert u.allclose(2.5 * exp_linear(-0.3, 0.09), tol=1e-15)


def test_family7_requires_valid_source():
    with pytest.raises(ConstraintError):
        TransformFamily(7, 0.5)
    with pytest.raises(ConstraintError):
        TransformFamily(7, 0.5, X * T)
    with pytest.raises(ConstraintError):
        TransformFamily(1, 0.5, exp_linear(1, 1))
    with pytest.raises(DomainError):
        TransformFamily(8, 0.5)


def family(k, eps):
    return TransformFamily(k, eps, exp_linear(1, 1) if k == 7 else None)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 7])
@pytest.mark.parametrize("seed", SEEDS)
def test_identity_at_zero_parameter(k, seed):
    u = parse_expr(seed)
    assert transform_solution(family(k, 0.0), u) == u


def test_family6_identity_at_zero_parameter():
    u = parse_expr("X^2+2*T+exp(X+T)")
    F = transform_solution(TransformFamily(6, 0.0), u)
    Xg, Tg = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 1, 9))
    np.testing.assert_allclose(F(Xg, Tg), u(Xg, Tg), rtol=1e-12)


dyadic = st.integers(-16, 16).map(lambda k: k / 8)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1, 2]), dyadic, dyadic, st.sampled_from(["1", "X^2+2*T", "X^3+6*X*T"]))
def test_translations_compose_exactly_on_polynomials(k, e1, e2, seed):
    u = parse_expr(seed)
    twice = transform_solution(family(k, e2), transform_solution(family(k, e1), u))
    assert twice == transform_solution(family(k, e1 + e2), u)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([1, 2]), dyadic, dyadic)
def test_translations_of_exponentials_compose_to_one_rounding(k, e1, e2):
    # a shifted exponential carries the float e^shift in its coefficient
    u = parse_expr("exp(X+T)")
    twice = transform_solution(family(k, e2), transform_solution(family(k, e1), u))
    assert twice.allclose(transform_solution(family(k, e1 + e2), u), tol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([3, 4]), dyadic, dyadic, st.sampled_from(SEEDS))
def test_scalings_compose_to_rounding(k, e1, e2, seed):
    u = parse_expr(seed)
    twice = transform_solution(family(k, e2), transform_solution(family(k, e1), u))
    assert twice.allclose(transform_solution(family(k, e1 + e2), u), tol=1e-12)


@settings(max_examples=80, deadline=None)
@given(
    st.sampled_from([1, 2, 3, 4, 5, 7]),
    st.floats(-1.5, 1.5, allow_nan=False),
    st.sampled_from(SEEDS + ("X^3+6*X*T", "(X+4*T)*exp(2*X+4*T)", "exp(-X+T)-3*X")),
)
def test_solutions_map_to_solutions(k, eps, seed):
    u = transform_solution(family(k, eps), parse_expr(seed))
    assert heat_residual(u).is_zero()


@pytest.mark.parametrize("seed", SEEDS)
def test_family6_produces_solutions(seed):
    F = transform_solution(TransformFamily(6, 0.1), parse_expr(seed))
    grid = np.linspace(0.0, 1.0, 64)
    max_rel, _, _ = fd_heat_residual(F, grid, grid)
    assert max_rel < 1e-6


def test_callable_seed_matches_expression_seed():
    u = parse_expr("X^2+2*T")
    Xg, Tg = np.meshgrid(np.linspace(0, 1, 5), np.linspace(0, 1, 5))
    for k in (1, 2, 3, 4, 5, 7):
        sym = transform_solution(family(k, 0.4), u)
        num = transform_solution(family(k, 0.4), u.eval_canonical)
        np.testing.assert_allclose(num(Xg, Tg), sym(Xg, Tg), rtol=1e-13, atol=1e-13)


# -- family-5 iteration ------------------------------------------------------------


def test_iteration_first_two_steps():
    c, eps = 1.5, 0.5
    u1, u2 = iterate_family5(c, eps, 2)
    assert u1 == c * exp_linear(-eps, eps**2)
    # second step: exp(ε²T - εX) exp(ε²T - ε(X - 2εT)) = exp(4ε²T - 2εX)
    assert u2 == c * exp_linear(-2 * eps, 4 * eps**2)


def test_iteration_at_zero_parameter_is_constant():
    assert all(u == const(3) for u in iterate_family5(3.0, 0.0, 4))


@pytest.mark.parametrize("eps", [0.3, 0.5, -1.25])
def test_iterates_are_exact_solutions(eps):
    for u in iterate_family5(1.0, eps, 5):
        assert not heat_residual(u)


def test_iteration_needs_positive_count():
    with pytest.raises(DomainError):
        iterate_family5(1.0, 0.5, 0)
