import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biharm_dual import InversionError, Nonlinearity, parse_term


def test_cubic_values(cubic):
    assert cubic.f(2.0) == 8.0
    assert cubic.f_prime(2.0) == 12.0
    assert cubic.F(2.0) == 4.0
    assert cubic.h(8.0) == pytest.approx(2.0, rel=1e-15)
    assert cubic.h_prime(8.0) == pytest.approx(1.0 / 12.0, rel=1e-14)
    assert cubic.H(1.0) == pytest.approx(0.75, rel=1e-15)


def test_two_term_values():
    nl = Nonlinearity(((1.0, 4.0), (1.0, 6.0)))
    assert nl.h(2.0) == pytest.approx(1.0, rel=1e-15)
    assert nl.H(2.0) == pytest.approx(19.0 / 12.0, rel=1e-14)


def test_scalar_in_scalar_out(mixed):
    for fn in (mixed.f, mixed.f_prime, mixed.F, mixed.h, mixed.H):
        assert isinstance(fn(1.5), float)
    assert mixed.h(np.ones((2, 3))).shape == (2, 3)


def test_exponents_and_constants(mixed):
    assert (mixed.q, mixed.p, mixed.b0, mixed.c0) == (4.0, 6.0, 1.0, 0.5)
    assert mixed.dual_exponent == pytest.approx(1.2)


def test_duplicate_exponents_merge():
    nl = Nonlinearity(((1.0, 4.0), (2.0, 4.0)))
    assert nl.terms == ((3.0, 4.0),)


@pytest.mark.parametrize("terms, msg", [((), "nonlinearity required"), (((1.0, 2.0),), "exponent must exceed 2"),
                                        (((0.0, 4.0),), "coefficient must be positive")])
def test_rejects_bad_terms(terms, msg):
    with pytest.raises(ValueError, match=msg):
        Nonlinearity(terms)


@pytest.mark.parametrize("text, expected", [("1, 4", (1.0, 4.0)), ("0.5,6", (0.5, 6.0)),
                                            ("2*|t|^2 t", (2.0, 4.0)), ("1 |t|^{3} t", (1.0, 5.0))])
def test_parse_term(text, expected):
    assert parse_term(text) == expected


def test_parse_term_garbage():
    with pytest.raises(ValueError):
        parse_term("t^3")


def test_h_prime_singular_at_zero(cubic):
    with pytest.raises(ZeroDivisionError):
        cubic.h_prime(0.0)
    assert cubic.h_prime_sq(0.0) == 0.0


def test_inversion_error_type():
    assert issubclass(InversionError, ArithmeticError)


@settings(max_examples=100, deadline=None)
@given(st.floats(-1e6, 1e6))
def test_round_trips_mixed(t):
    nl = Nonlinearity(((1.0, 4.0), (0.5, 6.0), (3.0, 3.5)))
    assert abs(nl.f(nl.h(t)) - t) <= 1e-12 * (1 + abs(t))
    assert abs(nl.h(nl.f(t / 100)) - t / 100) <= 1e-10 * (1 + abs(t / 100))


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-8, 1e8))
def test_odd_and_even(t):
    nl = Nonlinearity(((1.0, 4.0), (0.5, 6.0)))
    assert nl.h(-t) == -nl.h(t)
    assert nl.H(-t) == nl.H(t)
    assert nl.H(t) > 0


def test_H_is_conjugate_of_F(mixed):
    # H(t) = sup_s (t s - F(s)); the sup is attained at s = h(t)
    for t in (0.1, 1.0, 7.0):
        s = np.linspace(0, 3 * mixed.h(t), 20001)
        assert np.max(t * s - mixed.F(s)) <= mixed.H(t) * (1 + 1e-12)


@pytest.mark.parametrize("terms", [((1.0, 4.0),), ((1.0, 4.0), (0.5, 6.0)), ((2.0, 2.5), (1.0, 9.0))])
def test_validate_passes(terms):
    report = Nonlinearity(terms).validate()
    assert all(item["passed"] for item in report.values()), report
