from fractions import Fraction

import gmpy2
import mpmath
import pytest
from gmpy2 import mpfr

from kontinued import identities as I
from kontinued import numerics as nu
from kontinued.cf_core import Status

from conftest import rel_err

Id = I.IdentityId


def test_identity_names():
    assert [i.value for i in Id] == [f"eq{k}" for k in range(1, 10)]
    assert Id.parse("TanhCF") is Id.TANH_CF
    assert Id.parse("eq3") is Id.FUNCTIONAL_RELATION
    with pytest.raises(ValueError):
        Id.parse("eq10")


@pytest.mark.parametrize(
    "ident, params, literal",
    [
        (Id.TANH_CF, {"z": "pi/4"}, "cf(0; b(n)=n^2-2*n+2; a(n)=2*n-1)"),
        (Id.SUM_OF_PRODUCTS, {"alpha": 1}, "cf(0; b(n)=(1)/(n); a(n)=1)"),
        (Id.GAMMA_QUOTIENT, {"alpha": 1, "xi": "3/2"}, "cf(0; b(n)=-2*n^2+2; a(n)=3*n+3)"),
        (Id.SELF_POWER, {"x": 3}, "cf(2; b(n)=-(1/3)*n^2+(1/3)*n+2/3; a(n)=(4/3)*n+4/3)"),
    ],
)
def test_build_lhs_literals(ident, params, literal):
    assert I.build_lhs(ident, params).to_literal() == literal


def test_phi_self_power_coefficients():
    cf = I.build_lhs(Id.PHI_SELF_POWER)
    phi = nu.named_constant("phi", 320)
    with nu.workprec(320):
        # b(n) = (n+1)(1 - n/phi)/phi, a(n) = (n+1)(2 - 1/phi)
        for n in (1, 2, 7):
            assert rel_err(cf.b_term(n), (n + 1) * (1 - n / phi) / phi) < 2.0**-300
            assert rel_err(cf.a_term(n), (n + 1) * (2 - 1 / phi)) < 2.0**-300
    assert cf.a0 == 2


@pytest.mark.parametrize(
    "ident, params, message",
    [
        (Id.GAMMA_QUOTIENT, {"alpha": 0, "xi": 1}, "alpha"),
        (Id.SELF_POWER, {"x": 1}, "x"),
        (Id.DOUBLE_SELF_POWER, {"x": 0}, "x"),
        (Id.TANH_CF, {"z": 0}, "z"),
        (Id.SUM_OF_PRODUCTS, {}, "alpha"),
    ],
)
def test_parameter_domain(ident, params, message):
    with pytest.raises(I.ParamDomainError, match=message):
        I.build_lhs(ident, params)


def test_rhs_examples():
    # -2 + G(2)G(1/2)/(G(3/2)G(1)) = 0
    assert abs(I.rhs_value(Id.GAMMA_QUOTIENT, {"alpha": 1, "xi": "3/2"})) < mpfr(2) ** -250
    assert I.rhs_value(Id.SELF_POWER, {"x": 2}) == 2


def test_rhs_against_mpmath(mp):
    mpmath.mp.dps = 90
    a, x = mp.mpf(3), mp.mpf(5) / 2
    ref = -1 - a + mp.gamma(x + 0.5) * mp.gamma(1 / (2 * a)) / (mp.gamma(x) * mp.gamma((a + 1) / (2 * a)))
    assert rel_err(I.rhs_value(Id.GAMMA_QUOTIENT, {"alpha": 3, "xi": "5/2"}), ref) < 2.0**-250
    a, x = mp.mpf(2), mp.pi
    ref = -2 - a + 2 * mp.sqrt(2) * mp.gamma(0.25) * mp.gamma(0.75) * mp.gamma(1 + a / 4) * mp.gamma(0.75 - a / 4 + x) / (
        mp.pi * mp.gamma(0.5 + a / 4) * mp.gamma(0.25 - a / 4 + x)
    )
    assert rel_err(I.rhs_value(Id.LEMNISCATE, {"alpha": 2, "xi": "pi"}), ref) < 2.0**-250
    a, x = mp.mpf(5) / 2, mp.mpf(3)
    ref = a * (x - 1) ** (a / x - 1) * (x / (x - 1)) ** (a - 2) * mp.beta(a / x, a - a / x)
    assert rel_err(I.rhs_value(Id.FUNCTIONAL_RELATION, {"alpha": "5/2", "xi": 3}), ref) < 2.0**-250


def test_sum_of_products_table_values():
    # the alpha = -2 entry: -sqrt(pi/(2e)) erfi(1/sqrt 2) = -0.72477845900707...
    v = I.rhs_value(Id.SUM_OF_PRODUCTS, {"alpha": -2})
    assert nu.to_digits(v, 12) == "-7.24778459007e-1"
    for alpha in ("-2", "1/2", "1", "2"):
        closed = I.rhs_value(Id.SUM_OF_PRODUCTS, {"alpha": alpha})
        series = I.sum_of_products_series(alpha)
        assert rel_err(closed, series) < 2.0**-250


def test_series_domain():
    with pytest.raises(nu.DomainError):
        I.sum_of_products_series(0)
    with pytest.raises(nu.PoleError):
        I.sum_of_products_series("-1/3")


def test_verify_verdicts():
    case = I.verify(Id.PHI_SELF_POWER, {}, 256)
    assert case.verdict is I.Verdict.PASS
    phi = nu.named_constant("phi", 400)
    with nu.workprec(400):
        assert rel_err(case.lhs.value, phi**phi) < 1e-60
    # a wrong closed form would fail: compare eq6 at x = 3/2 against eq7's RHS
    wrong = I.verify(Id.SELF_POWER, {"x": "3/2"}, 256)
    assert wrong.passed
    assert abs(wrong.lhs.value - I.rhs_value(Id.DOUBLE_SELF_POWER, {"x": "3/2"})) > 1e-3


def test_no_converge_is_reported_not_raised():
    # outside any plausible domain the outcome must still be a verdict
    case = I.verify(Id.GAMMA_QUOTIENT, {"alpha": "1/3", "xi": "-5/4"}, 128, n_max=2**12)
    assert case.verdict in tuple(I.Verdict)


def test_integer_self_power_terminates():
    for m in (2, 3, 4, 5, 9):
        case = I.verify(Id.SELF_POWER, {"x": m}, 256)
        assert case.lhs.status is Status.FINITE
        assert case.lhs.depth_used == m - 1
        assert case.residual <= mpfr(2) ** -256 * abs(case.rhs)


def test_functional_relation_easy_case_is_eq4():
    fr = I.functional_relation_check("phi/(phi-1)", "phi", 256)
    assert fr.passed
    g_first, _ = fr.parts
    assert g_first.status is Status.FINITE and g_first.value == 0
    eq4 = I.verify(Id.PHI_SELF_POWER, {}, 256)
    assert rel_err(fr.lhs.value, eq4.lhs.value) < 2.0**-190


def test_eq2_at_alpha_one_is_eq1_at_alpha_two():
    for xi in ("1", "3/2", "2", "pi"):
        a = I.build_lhs(Id.LEMNISCATE, {"alpha": 1, "xi": xi})
        b = I.build_lhs(Id.GAMMA_QUOTIENT, {"alpha": 2, "xi": xi})
        assert a.to_literal(40) == b.to_literal(40)


def test_convergence_compare():
    tanh = I.convergence_compare(Id.TANH_CF, {"z": 1}, 256)
    assert tanh.cf_depth > tanh.reference_depth
    euler = I.convergence_compare(Id.SUM_OF_PRODUCTS, {"alpha": 1}, 256)
    assert euler.cf_depth < euler.reference_depth
    smoke = I.convergence_compare(Id.TANH_CF, {"z": 1}, 64)
    assert smoke.cf_depth is not None and smoke.cf_depth < 10
    with pytest.raises(ValueError):
        I.convergence_compare(Id.GAMMA_QUOTIENT, {"alpha": 1, "xi": 1})


def test_euler_convergents_are_partial_sums():
    # Euler's fraction reproduces the partial sums of the series term by term
    partial, term = Fraction(0), Fraction(1)
    conv = dict(I._euler_convergents(Fraction(1), 12, 128))
    for n in range(1, 13):
        term /= n + 1
        partial += term
        assert rel_err(conv[n], mpfr(partial, 200)) < 2.0**-120


def test_suite_order_is_stable_under_threads():
    cases = [c for c in I.DEFAULT_SUITE if c[0] in (Id.SELF_POWER, Id.SUM_OF_PRODUCTS)]
    serial = I.run_suite(cases)
    threaded = I.run_suite(cases, threads=4)
    assert [c.describe() for c in serial] == [c.describe() for c in threaded]
