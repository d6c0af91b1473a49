from fractions import Fraction

import gmpy2
import pytest
from gmpy2 import mpfr

from kontinued import expr as ex
from kontinued import numerics as nu

from conftest import rel_err


@pytest.mark.parametrize(
    "text, value",
    [("3/4", Fraction(3, 4)), ("0.1", Fraction(1, 10)), ("2^-3", Fraction(1, 8)), ("-(1+2)*3", Fraction(-9)), ("2**10", 1024)],
)
def test_exact_expressions_stay_rational(text, value):
    assert ex.ConstExpr(text).exact() == value
    assert ex.ConstExpr(text).value(128) == value


def test_named_constants_and_functions(mp):
    cases = {
        "pi^2/6": mp.zeta(2),
        "gamma(1/4)^2/(2*sqrt(2*pi))": mp.pi / mp.agm(1, mp.sqrt(2)),
        "beta(1/3, 1/2)": mp.beta(mp.mpf(1) / 3, mp.mpf(1) / 2),
        "erf(1/sqrt(2))": mp.erf(1 / mp.sqrt(2)),
        "log(3) - ln(3)": 0,
        "pow(phi, phi)": mp.phi**mp.phi,
        "-e": -mp.e,
    }
    for text, ref in cases.items():
        v = ex.ConstExpr(text).evaluate(300)
        if ref == 0:
            assert abs(v) < mpfr(2) ** -290
        else:
            assert rel_err(v, ref) < 2.0**-290, text


def test_evaluation_ignores_ambient_precision():
    a = ex.ConstExpr("-pi/3").evaluate(300)
    with nu.workprec(24):
        b = ex.ConstExpr("-pi/3").evaluate(300)
    assert a == b and a.precision == 300


@pytest.mark.parametrize(
    "text, column",
    [("1 +", 4), ("foo(2)", 1), ("2 + bar", 5), ("gamma(1, 2)", 1), ("'x'", 1), ("1 if 2 else 3", 1), ("", 1)],
)
def test_parse_errors_carry_columns(text, column):
    with pytest.raises(ex.ParseError) as info:
        ex.parse(text)
    assert info.value.column == column


def test_variables_are_allowed_only_when_declared():
    ex.parse("n^2 + 1", {"n"})
    with pytest.raises(ex.ParseError):
        ex.parse("n^2 + 1")


def test_domain_errors():
    with pytest.raises(nu.DomainError):
        ex.ConstExpr("1/0").exact()
    with pytest.raises(nu.DomainError):
        ex.ConstExpr("ln(-1)").evaluate()
    with pytest.raises(nu.PoleError):
        ex.ConstExpr("gamma(-2)").evaluate()


def test_as_value():
    assert ex.as_value(3, 64) == 3
    assert ex.as_value("1/3", 64) == Fraction(1, 3)
    assert isinstance(ex.as_value("sqrt(2)", 64), mpfr)
    with pytest.raises(TypeError):
        ex.as_value(True, 64)
