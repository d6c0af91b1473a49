"""Acceptance criteria 1-10, one PASS/FAIL line each."""

import itertools
import math
import time

import gmpy2
import numpy as np
import pytest
from gmpy2 import mpfr

from kontinued import constdb, identities, miner
from kontinued import numerics as nu
from kontinued.cf_core import GCF, ONE, Poly, Status, TermRule, converge, equivalence_scale, eval_backward, eval_lentz
from kontinued.identities import IdentityId as Id
from kontinued.pslq import RelationStatus, pslq

from conftest import ACCEPTANCE_LINES

TOL_192 = mpfr(2) ** -192


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def log2(x) -> str:
    if x == 0:
        return "0"
    return f"2^{float(gmpy2.log2(abs(mpfr(x)))):.0f}"


def grid(ident):
    return [c for c in identities.DEFAULT_SUITE if c[0] is ident]


@pytest.fixture(scope="module")
def pass_cases():
    """Every case from criteria 1-6, collected for the residual-decay check."""
    return []


def run_grid(ident, cases_out):
    cases = identities.run_suite(grid(ident))
    cases_out.extend(cases)
    return cases


def test_criterion_1_gamma_quotient(pass_cases):
    t0 = time.perf_counter()
    cases = run_grid(Id.GAMMA_QUOTIENT, pass_cases)
    elapsed = time.perf_counter() - t0
    no_conv = [c.describe() for c in cases if c.verdict is identities.Verdict.NO_CONVERGE]
    ok = (
        len(cases) == 24
        and all(c.passed and c.residual <= TOL_192 for c in cases)
        and not no_conv
        and elapsed <= 120
    )
    worst = max(c.residual for c in cases)
    report(1, "gamma-quotient CF over the alpha x xi grid", ok, f"{sum(c.passed for c in cases)}/24 Pass, max residual {log2(worst)}, NoConverge {len(no_conv)}, {elapsed:.1f} s")


def test_criterion_2_lemniscate(pass_cases):
    cases = run_grid(Id.LEMNISCATE, pass_cases)
    cross = []
    for xi in ("1", "3/2", "2", "pi"):
        a = identities.verify(Id.LEMNISCATE, {"alpha": 1, "xi": xi}, 256)
        b = identities.verify(Id.GAMMA_QUOTIENT, {"alpha": 2, "xi": xi}, 256)
        with nu.workprec(320):
            cross.append(abs(a.lhs.value - b.lhs.value))
    ok = len(cases) == 16 and all(c.passed for c in cases) and all(d <= TOL_192 for d in cross)
    report(2, "lemniscate CF grid, and lemniscate(1, xi) = gamma quotient(2, xi)", ok, f"{sum(c.passed for c in cases)}/16 Pass, max |dLHS| {log2(max(cross))}")


def test_criterion_3_functional_relation(pass_cases):
    cases = run_grid(Id.FUNCTIONAL_RELATION, pass_cases)
    eq4 = identities.verify(Id.PHI_SELF_POWER, {}, 256)
    eq5 = identities.verify(Id.PHI_TWO_OVER_PHI, {}, 256)
    pass_cases.extend([eq4, eq5])
    phi = nu.named_constant("phi", 400)
    with nu.workprec(400):
        err4 = abs(eq4.lhs.value - nu.power(phi, phi, 400)) / nu.power(phi, phi, 400)
        target5 = nu.power(phi, 2 / phi, 400)
        err5 = abs(eq5.lhs.value - target5) / target5
    digits = min(-float(gmpy2.log10(err4)), -float(gmpy2.log10(err5)))
    ok = len(cases) == 7 and all(c.passed for c in cases) and eq4.passed and eq5.passed and digits >= 50
    report(3, "functional relation, easy cases, phi^phi and phi^(2/phi)", ok, f"{sum(c.passed for c in cases)}/7 Pass, phi^phi and phi^(2/phi) to {digits:.0f} digits")


def test_criterion_4_self_powers(pass_cases):
    six = run_grid(Id.SELF_POWER, pass_cases)
    seven = run_grid(Id.DOUBLE_SELF_POWER, pass_cases)
    cases = six + seven
    integer = [c for c in cases if c.params["x"] in ("2", "3", "5")]
    exact = all(
        c.lhs.status is Status.FINITE and c.residual <= mpfr(2) ** -c.prec * max(mpfr(1), abs(c.rhs)) for c in integer
    )
    # the sqrt(3) case of the x^x CF is x = 3/2
    root3 = identities.rhs_value(Id.SELF_POWER, {"x": "3/2"})
    is_root3 = abs(root3 - nu.sqrt(3, 256)) <= mpfr(2) ** -250
    ok = len(cases) == 8 and all(c.passed for c in cases) and exact and is_root3
    report(4, "self-power and double-self-power CFs, finite termination at integer x", ok, f"{sum(c.passed for c in cases)}/8 Pass, {len(integer)} integer cases exact, RHS(3/2) = sqrt 3: {is_root3}")


def test_criterion_5_tanh(pass_cases):
    cases = run_grid(Id.TANH_CF, pass_cases)
    cmp = identities.convergence_compare(Id.TANH_CF, {"z": 1}, 128)
    ok = len(cases) == 5 and all(c.passed for c in cases) and cmp.reference_depth < cmp.cf_depth
    depth = max(c.lhs.depth_used for c in cases)
    report(5, "tanh CF and convergence against the classical CF", ok, f"{sum(c.passed for c in cases)}/5 Pass at 128 bits, max depth {depth}, z=1 depths identity CF {cmp.cf_depth} vs classical {cmp.reference_depth}")


def test_criterion_6_sum_of_products(pass_cases):
    cases = run_grid(Id.SUM_OF_PRODUCTS, pass_cases)
    cmp = identities.convergence_compare(Id.SUM_OF_PRODUCTS, {"alpha": 1}, 256)
    ok = (
        len(cases) == 4
        and all(c.passed and c.residual <= TOL_192 for c in cases)
        and cmp.cf_depth < cmp.reference_depth
    )
    report(6, "sum-of-products closed forms and convergence against Euler's CF", ok, f"{sum(c.passed for c in cases)}/4 Pass, max residual {log2(max(c.residual for c in cases))}, alpha=1 depths identity CF {cmp.cf_depth} vs Euler {cmp.reference_depth}")


def _min_combination(xs, bound):
    x = np.array([float(v) for v in xs])
    r = np.arange(-bound, bound + 1)
    best = np.inf
    for a, b in itertools.product(r, r):
        vals = np.abs(a * x[0] + b * x[1] + r * x[2])
        if a == 0 and b == 0:
            vals[bound] = np.inf
        best = min(best, float(vals.min()))
    return best


def test_criterion_7_pslq():
    phi = nu.named_constant("phi", 256)
    with nu.workprec(320):
        golden = [mpfr(1), phi, phi * phi]
    logs = [nu.ln(2, 256), nu.ln(3, 256), nu.ln(6, 256)]
    timings, found = [], []
    for xs in (golden, logs):
        t0 = time.perf_counter()
        rel = pslq(xs, max_norm=10, prec=256)
        timings.append(time.perf_counter() - t0)
        found.append(rel.coefficients)
    roots = [nu.real(1, 256), nu.sqrt(2, 256), nu.sqrt(3, 256)]
    none = pslq(roots, max_norm=50, prec=256)
    brute = _min_combination(roots, 50)
    ok = (
        found == [(1, 1, -1), (1, 1, -1)]
        and max(timings) < 1.0
        and none.status is RelationStatus.EXHAUSTED
        and brute > 1e-6
    )
    report(7, "PSLQ recoveries and exhaustion", ok, f"relations {found}, slowest {1000 * max(timings):.1f} ms, (1,sqrt2,sqrt3) {none.status} with brute-force minimum {brute:.2e}")


def test_criterion_8_miner():
    db = constdb.load_default()
    first = miner.mine(miner.SPACES["tiny"], db, budget=10_000, seed=1)
    second = miner.mine(miner.SPACES["tiny"], db, budget=10_000, seed=1)
    golden = [c for c in first.confirmed_list if c.cf.to_literal() == "cf(0; b(n)=1; a(n)=1)"]
    # independent check of every confirmation: x = b/(a + x) has x = (sqrt(a^2 + 4b) - a)/2
    false = 0
    for cand in first.confirmed_list:
        b, a = int(cand.cf.b_term(2)), int(cand.cf.a_term(2))
        m = cand.matches[0]
        p, q, r = m.relation
        with nu.workprec(600):
            x = (gmpy2.sqrt(mpfr(a * a + 4 * b)) - a) / 2
            c = db.get(m.name).value(600)
            if abs(p * x + q * c + r) > mpfr(2) ** -500:
                false += 1
    ok = bool(golden) and false == 0 and first.to_text() == second.to_text()
    report(8, "tiny-space mining, seed 1, budget 10^4", ok, f"phi-1 confirmed: {bool(golden)}, {first.n_confirmed} confirmed, {false} false, reproducible: {first.to_text() == second.to_text()}")


def test_criterion_9_throughput():
    rate = miner.benchmark(n_calls=200_000, depth=256)
    report(9, "fast_eval64 throughput at depth 256", rate >= 1e5, f"{rate:,.0f} evaluations/s on one core")


def _random_pringsheim(rng):
    """Integer CF with positive terms and a_n >= 2 b_n + 1, so it converges geometrically."""
    b = Poly(tuple(int(v) for v in rng.integers(1, 10, size=rng.integers(1, 4))))
    extra = Poly(tuple(int(v) for v in rng.integers(0, 6, size=rng.integers(1, 4))))
    a = b * Poly.const(2) + ONE + extra
    return GCF(int(rng.integers(-3, 4)), TermRule(b), TermRule(a))


def test_criterion_10_properties(pass_cases):
    rng = np.random.default_rng(20240601)
    prec = 160
    bound = mpfr(2) ** -(prec - 16)

    invariance_bad = 0
    for _ in range(1000):
        cf = _random_pringsheim(rng)
        scale = Poly(tuple(int(v) for v in rng.integers(1, 8, size=rng.integers(1, 3))))
        depth = int(rng.integers(1, 48))
        x = eval_backward(cf, depth, prec)
        y = eval_backward(equivalence_scale(cf, scale), depth, prec)
        with nu.workprec(prec + 64):
            if abs(x - y) > bound * max(mpfr(1), abs(x)):
                invariance_bad += 1

    agreement_bad = 0
    for _ in range(1000):
        cf = _random_pringsheim(rng)
        lentz = eval_lentz(cf, prec)
        back = eval_backward(cf, lentz.depth_used + 32, prec)
        with nu.workprec(prec + 64):
            if lentz.status is not Status.CONVERGED or abs(lentz.value - back) > bound * max(mpfr(1), abs(back)):
                agreement_bad += 1

    # residual decay: every Pass case of criteria 1-6 re-run at twice the precision
    decay_bad = []
    for case in pass_cases:
        if not case.passed:
            continue
        again = identities.verify(case.id, case.params, 2 * case.prec)
        if case.residual == 0:
            # nothing to improve on; the doubled run must still pass
            good = again.passed
        else:
            good = again.passed and again.residual <= case.residual
        if not good:
            decay_bad.append(case.describe())
    ok = invariance_bad == 0 and agreement_bad == 0 and not decay_bad and len(pass_cases) >= 60
    report(
        10,
        "property suites",
        ok,
        f"equivalence invariance 1000 cases / {invariance_bad} bad, backward vs Lentz 1000 cases / {agreement_bad} bad, "
        f"residual decay {len(pass_cases) - len(decay_bad)}/{len(pass_cases)} cases",
    )
