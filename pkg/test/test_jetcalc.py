"""Truncated Taylor arithmetic in the derivative convention."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from higherlag.errors import ContractViolation, DomainError
from higherlag.jetcalc import (
    Jet,
    JetPoint,
    binom,
    coefficient,
    cos,
    directional_derivative,
    exp,
    gradient,
    jet_compose,
    jet_mul,
    log,
    new_tag,
    power,
    scalar_part,
    shifted,
    sin,
    sqrt,
    tanh,
)

floats = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)
ORDER = 4


def jets(order=ORDER):
    return st.lists(floats, min_size=order + 1, max_size=order + 1).map(
        lambda cs: Jet(tuple(cs))
    )


def close(a, b, tol=1e-9):
    assert len(a.coeffs) == len(b.coeffs)
    for x, y in zip(a.coeffs, b.coeffs):
        assert x == pytest.approx(y, abs=tol, rel=tol)


# ---------------------------------------------------------------------------
# Ring laws
# ---------------------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(jets(), jets(), jets())
def test_multiplication_is_associative_and_distributive(a, b, c):
    close((a * b) * c, a * (b * c), tol=1e-7)
    close(a * (b + c), a * b + a * c, tol=1e-7)


@settings(max_examples=60, deadline=None)
@given(jets(), jets())
def test_multiplication_commutes(a, b):
    close(a * b, b * a)


@settings(max_examples=60, deadline=None)
@given(jets())
def test_division_inverts_multiplication(a):
    b = Jet((2.0 + abs(a.coeffs[0]),) + a.coeffs[1:])
    close((a * b) / b, a, tol=1e-7)


def test_product_rule_in_derivative_convention():
    t = Jet.variable(2.0, 3)
    cube = t * t * t
    assert cube.coeffs == (8.0, 12.0, 12.0, 6.0)


def test_taylor_conversion():
    j = Jet((1.0, 2.0, 6.0, 24.0))
    assert j.to_taylor() == (1.0, 2.0, 3.0, 4.0)
    assert Jet.from_taylor(j.to_taylor()).coeffs == j.coeffs


# ---------------------------------------------------------------------------
# Elementary functions
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "fn,ref",
    [
        (sin, lambda n, x: math.sin(x + n * math.pi / 2)),
        (cos, lambda n, x: math.cos(x + n * math.pi / 2)),
        (exp, lambda n, x: math.exp(x)),
    ],
)
def test_function_derivatives(fn, ref):
    x = 0.7
    out = fn(Jet.variable(x, 5))
    for n in range(6):
        assert out.coeffs[n] == pytest.approx(ref(n, x), rel=1e-12)


def test_log_derivatives():
    out = log(Jet.variable(2.0, 4))
    expected = [math.log(2.0), 0.5, -0.25, 0.25, -0.375]
    assert list(out.coeffs) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.2, max_value=4.0))
def test_sqrt_squares_back(x):
    s = sqrt(Jet.variable(x, 4))
    close(s * s, Jet.variable(x, 4), tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-2.0, max_value=2.0))
def test_tanh_matches_exponential_form(x):
    t = Jet.variable(x, 4)
    e2 = exp(2.0 * t)
    close(tanh(t), (e2 - 1.0) / (e2 + 1.0), tol=1e-9)


def test_integral_power_uses_repeated_squaring():
    t = Jet.variable(3.0, 2)
    assert power(t, 2).coeffs == (9.0, 6.0, 2.0)
    assert power(2.0, 10) == 1024.0


def test_domain_errors():
    with pytest.raises(DomainError):
        log(Jet.variable(0.0, 2))
    with pytest.raises(DomainError):
        sqrt(Jet.variable(0.0, 1))
    with pytest.raises(DomainError):
        Jet.variable(1.0, 2) / Jet.constant(0.0, 2)


def test_order_mismatch_and_maximum():
    with pytest.raises(ContractViolation):
        Jet.variable(1.0, 2) + Jet.variable(1.0, 3)
    with pytest.raises(ContractViolation):
        Jet((0.0,) * 14)
    with pytest.raises(ContractViolation):
        jet_mul(Jet.variable(0.0, 1), Jet.variable(0.0, 2))


# ---------------------------------------------------------------------------
# Nesting and composition
# ---------------------------------------------------------------------------


def test_nested_tags_give_mixed_partials():
    inner, outer = new_tag(), new_tag()
    x = Jet.variable(Jet.variable(1.0, 1, inner), 1, outer)
    y = x * x * x
    mixed = coefficient(coefficient(y, outer, 1), inner, 1)
    assert mixed == pytest.approx(6.0)
    assert scalar_part(y) == 1.0


def test_shifted_extracts_derivative_jets():
    tag = new_tag()
    t = Jet.variable(1.0, 4, tag)
    v = t * t * t * t
    assert shifted(v, tag, 2, 2).coeffs == (12.0, 24.0, 24.0)


def test_jet_compose_of_a_curve():
    tag = new_tag()
    point = JetPoint((Jet.variable(0.0, 3, tag), Jet.constant(2.0, 3, tag)))
    out = jet_compose(lambda a, b: b * sin(a), point)
    assert list(out.coeffs) == pytest.approx([0.0, 2.0, 0.0, -2.0])


def test_directional_derivative_and_gradient():
    f = lambda x, y: x * x * y + exp(y)  # noqa: E731
    assert directional_derivative(f, [1.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0)
    assert list(gradient(f, [1.0, 0.0])) == pytest.approx([0.0, 2.0])


def test_binom_is_zero_outside_range():
    assert binom(5, 2) == 10
    assert binom(3, 4) == 0
    assert binom(3, -1) == 0
