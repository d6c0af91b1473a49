import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from kontinued import constdb, miner
from kontinued import numerics as nu
from kontinued.cf_core import GCF, Poly, TermRule, converge, parse_cf, simple_cf


@pytest.fixture(scope="module")
def db():
    return constdb.load_default()


def test_golden_draw():
    cf = miner.random_cf(miner.rng_stream(42), miner.SPACES["default"])
    assert cf.to_literal() == "cf(0; b(n)=-n^2+2*n+3; a(n)=4*n-1)"


def test_streams_are_independent_of_chunking():
    space = miner.SPACES["default"]
    a = miner.draw_coefficients(miner.rng_stream(7, 3), space, 100)
    b = miner.draw_coefficients(miner.rng_stream(7, 3), space, 100)
    c = miner.draw_coefficients(miner.rng_stream(7, 4), space, 100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_draws_respect_the_space():
    space = miner.SearchSpace(1, 2, (-3, 2), (1, 1))
    rows = miner.draw_coefficients(miner.rng_stream(0), space, 500)
    assert rows.shape == (500, space.width)
    assert (rows[:, 0] == 1).all()
    assert rows[:, 1:].min() >= -3 and rows[:, 1:].max() <= 2


@pytest.mark.parametrize("bad", [dict(b_degree_max=5), dict(coeff_range=(2, 1)), dict(coeff_range=(-100, 0))])
def test_space_validation(bad):
    kw = dict(b_degree_max=1, a_degree_max=1, coeff_range=(-1, 1))
    kw.update(bad)
    with pytest.raises(ValueError):
        miner.SearchSpace(**kw)


def test_fast_eval_known_values():
    # Lentz in doubles loses about one rounding per step
    v, ok = miner.fast_eval64(simple_cf(1, 1))
    assert ok and abs(v - (math.sqrt(5) - 1) / 2) < 1e-12
    v, ok = miner.fast_eval64(parse_cf("cf(0; 1+(n-1)^2; 2*n-1)"), 4096)
    assert ok and abs(v - math.tanh(math.pi / 4)) < 1e-12
    # K (1/n)/1 has a non-polynomial numerator
    v, ok = miner.fast_eval64(GCF(0, TermRule(Poly.const(1), Poly.n()), TermRule(Poly.const(1))))
    assert ok and abs(v - (math.e - 2)) < 1e-12


def test_fast_eval_flags_trouble():
    for depth in (6, 7, 8, 256, 257):
        assert miner.fast_eval64(simple_cf(-1, 1), depth)[1] is False
    # B_n cancels (the value is infinite) while the convergents look settled
    assert miner.fast_eval64(simple_cf((-1, -1), (-1, -1)))[1] is False
    # exponential growth overflows
    assert miner.fast_eval64(simple_cf((0, 0, 0, 9), (-1,)), 512)[1] is False


coef = st.integers(-5, 5)


@settings(max_examples=80, deadline=None)
@given(st.lists(coef, min_size=3, max_size=3), st.lists(coef, min_size=2, max_size=2))
@example([-1, -1, 0], [-1, -1])
def test_fast_eval_agrees_with_multiprecision_when_stable(bs, as_):
    cf = simple_cf(tuple(bs), tuple(as_))
    v, ok = miner.fast_eval64(cf)
    if not ok:
        return
    rep = converge(cf, 128, n_max=2**14)
    if rep.ok:
        assert abs(v - float(rep.value)) <= 1e-7 * max(1.0, abs(v))


def test_batch_kernel_matches_scalar():
    space = miner.SPACES["default"]
    rows = miner.draw_coefficients(miner.rng_stream(11), space, 300)
    vals, ok = miner.fast_eval64_batch(rows, space)
    for row, v, k in zip(rows, vals, ok):
        v1, k1 = miner.fast_eval64(miner.cf_from_row(row, space))
        assert k == k1
        if k:
            assert v == pytest.approx(v1, rel=1e-14, abs=1e-300)


def test_canonical_key_merges_equivalent_fractions():
    space = miner.SearchSpace(2, 1, (-9, 9))
    # (b, a) = (1, 1) scaled by c_n = n + 1 gives (n^2 + n, n + 1), same convergents
    golden = [0, 1, 0, 0, 1, 0]
    scaled = [0, 0, 1, 1, 1, 1]
    assert miner.canonical_key(golden, space) == miner.canonical_key(scaled, space)
    # (2, 2) has value 2(phi - 1): a genuinely different fraction
    assert miner.canonical_key([0, 2, 0, 0, 2, 0], space) != miner.canonical_key(golden, space)


def test_tiny_space_mining(db):
    rep = miner.mine(miner.SPACES["tiny"], db, budget=10_000, seed=1)
    lits = {c.cf.to_literal(): c for c in rep.confirmed_list}
    assert "cf(0; b(n)=1; a(n)=1)" in lits
    assert rep.n_generated >= rep.n_converged64 >= rep.n_prefilter_hits >= rep.n_unique_candidates >= rep.n_confirmed
    # every confirmation is true: b/(a + x) = x gives x = (sqrt(a^2 + 4b) - a)/2
    for cand in rep.confirmed_list:
        b, a = cand.cf.b_term(2), cand.cf.a_term(2)
        m = cand.matches[0]
        p, q, r = m.relation
        c = db.get(m.name).value(300)
        with nu.workprec(400):
            exact = (nu.sqrt(a * a + 4 * b, 300) - a) / 2
            assert abs(p * exact + q * c + r) < nu.real(2, 400) ** -280


def test_mining_is_reproducible_and_thread_independent(db):
    space = miner.SPACES["eq8"]
    a = miner.mine(space, db, budget=6000, seed=3)
    b = miner.mine(space, db, budget=6000, seed=3)
    c = miner.mine(space, db, budget=6000, seed=3, threads=3)
    assert a.to_text() == b.to_text() == c.to_text()


def test_budget_monotonicity(db):
    space = miner.SPACES["default"]
    small = miner.mine(space, db, budget=3000, seed=9)
    big = miner.mine(space, db, budget=9000, seed=9)
    # draws are a prefix of the same stream, so confirmations can only grow
    small_set = {c.cf.to_literal() for c in small.confirmed_list}
    big_set = {c.cf.to_literal() for c in big.confirmed_list}
    assert small_set <= big_set
    assert big.n_generated == 9000


def test_report_format(db):
    rep = miner.mine(miner.SPACES["tiny"], db, budget=500, seed=1)
    text = rep.to_text()
    assert "seed: 1" in text and "b_degree_max=0" in text
    for line in rep.lines():
        tag, lit, rel, residual = line.split("\t")
        assert tag == "CONFIRMED" and lit.startswith("cf(")


def test_benchmark_reports_rate():
    assert miner.benchmark(n_calls=2000) > 0
