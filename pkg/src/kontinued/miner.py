"""Random search for continued fractions whose values match known constants.

The cascade is: draw integer-coefficient CFs, evaluate them in hardware
doubles, prefilter against the constants index, then re-evaluate the
survivors at high precision and confirm the match with PSLQ.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit

from kontinued import numerics as nu
from kontinued.cf_core import GCF, ConvergenceReport, Poly, Status, TermRule, converge
from kontinued.constdb import ConstDB, confirm_match
from kontinued.pslq import MatchReport

DEFAULT_DEPTH = 256
DEFAULT_TOL = 1e-9
CHUNK = 4096


@dataclass(frozen=True)
class SearchSpace:
    b_degree_max: int
    a_degree_max: int
    coeff_range: tuple[int, int]
    a0_range: tuple[int, int] = (0, 0)

    def __post_init__(self):
        for deg in (self.b_degree_max, self.a_degree_max):
            if not 0 <= deg <= 4:
                raise ValueError("degrees must lie in 0..4")
        for lo, hi in (self.coeff_range, self.a0_range):
            if lo > hi:
                raise ValueError(f"empty range ({lo}, {hi})")
            if max(abs(lo), abs(hi)) > 99:
                raise ValueError("coefficients are bounded by |c| <= 99")

    @property
    def width(self) -> int:
        return 1 + (self.b_degree_max + 1) + (self.a_degree_max + 1)

    @property
    def size(self) -> int:
        lo, hi = self.coeff_range
        a_lo, a_hi = self.a0_range
        return (a_hi - a_lo + 1) * (hi - lo + 1) ** (self.width - 1)

    def describe(self) -> str:
        return (
            f"b_degree_max={self.b_degree_max} a_degree_max={self.a_degree_max} "
            f"coeff_range=[{self.coeff_range[0]},{self.coeff_range[1]}] "
            f"a0_range=[{self.a0_range[0]},{self.a0_range[1]}]"
        )


SPACES = {
    "tiny": SearchSpace(0, 0, (1, 3), (0, 0)),
    "default": SearchSpace(2, 1, (-5, 5), (0, 2)),
    "eq8": SearchSpace(2, 1, (-2, 2), (0, 0)),
}


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Independent PCG64 substream for (seed, stream)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1), stream])))


def draw_coefficients(rng: np.random.Generator, space: SearchSpace, count: int) -> np.ndarray:
    """Rows of [a0, b_0..b_db, a_0..a_da] (coefficients listed low degree first)."""
    a0 = rng.integers(space.a0_range[0], space.a0_range[1] + 1, size=(count, 1), dtype=np.int64)
    rest = rng.integers(
        space.coeff_range[0], space.coeff_range[1] + 1, size=(count, space.width - 1), dtype=np.int64
    )
    return np.hstack([a0, rest])


def cf_from_row(row, space: SearchSpace) -> GCF:
    nb = space.b_degree_max + 1
    a0 = int(row[0])
    b = Poly(tuple(int(c) for c in row[1 : 1 + nb]))
    a = Poly(tuple(int(c) for c in row[1 + nb :]))
    return GCF(a0, TermRule(b), TermRule(a))


def random_cf(rng: np.random.Generator, space: SearchSpace) -> GCF:
    return cf_from_row(draw_coefficients(rng, space, 1)[0], space)


# ---------------------------------------------------------------------------
# double-precision kernel


@njit(cache=True, nogil=True)
def _horner(c, x):
    acc = 0.0
    for i in range(c.shape[0] - 1, -1, -1):
        acc = acc * x + c[i]
    return acc


@njit(cache=True, nogil=True)
def _lentz64(a0, b1, bn, bd, an, ad, depth):
    tiny = 1e-300
    f = a0 if a0 != 0.0 else tiny
    c = f
    d = 0.0
    half = depth // 2
    f_half = np.nan
    f_prev = np.nan
    last_sub = 0
    # raw recurrences A_n, B_n and their majorants |a|M_{n-1} + |b|M_{n-2},
    # rescaled together; they bound the rounding error of f_n
    pa, qa, pb, qb = 1.0, a0, 0.0, 1.0
    ma0, ma, mb0, mb = 1.0, abs(a0), 0.0, 1.0
    for n in range(1, depth + 1):
        x = float(n)
        if n == 1 and not np.isnan(b1):
            b = b1
        else:
            b = _horner(bn, x) / _horner(bd, x)
        a = _horner(an, x) / _horner(ad, x)
        if b == 0.0:
            # finite termination: the previous convergent is exact
            if n == 1:
                return a0, True
            return f, np.isfinite(f)
        d = a + b * d
        if d == 0.0:
            d = tiny
            last_sub = n
        c = a + b / c
        if c == 0.0:
            c = tiny
            last_sub = n
        d = 1.0 / d
        f = f * (c * d)
        if not np.isfinite(f):
            return f, False
        pa, qa = qa, a * qa + b * pa
        pb, qb = qb, a * qb + b * pb
        ma0, ma = ma, abs(a) * ma + abs(b) * ma0
        mb0, mb = mb, abs(a) * mb + abs(b) * mb0
        m = max(ma, mb)
        if m > 1e100 or 0.0 < m < 1e-100:
            s = 1.0 / m
            pa *= s
            qa *= s
            pb *= s
            qb *= s
            ma0 *= s
            ma *= s
            mb0 *= s
            mb *= s
        if n == half:
            f_half = f
        if n == depth - 1:
            f_prev = f
    if last_sub > half:
        # zero intermediates late in the run: no trustworthy limit
        return f, False
    scale = abs(f)
    if depth * 1.2e-16 * (ma + scale * mb) > 1e-10 * max(1.0, scale) * abs(qb):
        # B_n is tiny next to its majorant: the forward recurrence cancelled
        return f, False
    stable = abs(f - f_half) <= 1e-9 * scale and abs(f - f_prev) <= 1e-9 * scale
    return f, stable


@njit(cache=True, nogil=True)
def _lentz64_rows(rows, nb, depth, out_val, out_ok):
    one = np.ones(1)
    nan = np.nan
    for i in range(rows.shape[0]):
        r = rows[i]
        bn = r[1 : 1 + nb]
        an = r[1 + nb :]
        v, ok = _lentz64(r[0], nan, bn, one, an, one, depth)
        out_val[i] = v
        out_ok[i] = ok


def _float_poly(p: Poly) -> np.ndarray:
    if p.is_zero:
        return np.zeros(1)
    return np.array([float(c) for c in p.coeffs])


def fast_eval64(cf: GCF, depth: int = DEFAULT_DEPTH) -> tuple[float, bool]:
    """Lentz evaluation in hardware doubles.

    ``stable`` is True iff the convergents at depth/2, depth-1 and depth agree
    to relative 1e-9, nothing overflowed, no zero intermediate had to be
    patched in the second half of the run, and the running error bound
    ``depth * eps * (M^A + |f| M^B) / |B|`` is below 1e-10. Here M^A and M^B
    solve the recurrence with |a_n| and |b_n|; a large bound means B_n
    cancelled, as when the limit is infinite.
    """
    if depth < 2:
        raise ValueError("depth must be >= 2")
    bn, bd = cf.b.as_fraction()
    an, ad = cf.a.as_fraction()
    b1 = float(cf.b1) if cf.b1 is not None else math.nan
    v, ok = _lentz64(
        float(cf.a0), b1, _float_poly(bn), _float_poly(bd), _float_poly(an), _float_poly(ad), depth
    )
    return float(v), bool(ok)


def fast_eval64_batch(rows: np.ndarray, space: SearchSpace, depth: int = DEFAULT_DEPTH):
    """Evaluate many integer-coefficient CFs given as coefficient rows."""
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    vals = np.empty(rows.shape[0])
    ok = np.empty(rows.shape[0], dtype=np.bool_)
    _lentz64_rows(rows, space.b_degree_max + 1, depth, vals, ok)
    return vals, ok


def benchmark(n_calls: int = 200_000, depth: int = DEFAULT_DEPTH, seed: int = 0) -> float:
    """CF evaluations per second of the double-precision kernel (after JIT warm-up)."""
    space = SearchSpace(2, 2, (1, 9), (0, 0))
    rows = draw_coefficients(rng_stream(seed), space, n_calls)
    fast_eval64_batch(rows[:16], space, depth)
    t0 = time.perf_counter()
    fast_eval64_batch(rows, space, depth)
    return n_calls / (time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# the pipeline


def canonical_key(row, space: SearchSpace, terms: int = 16):
    """Equivalence-class key: the CF rescaled so that every a_n becomes 1.

    b'_n = b_n / (a_n a_{n-1}) with a_0 = 1; two integer CFs with the same
    rescaled sequence (and a0) have identical convergents.
    """
    nb = space.b_degree_max + 1
    a0 = int(row[0])
    bc = [int(c) for c in row[1 : 1 + nb]]
    ac = [int(c) for c in row[1 + nb :]]

    def ev(cs, n):
        acc = 0
        for c in reversed(cs):
            acc = acc * n + c
        return acc

    seq, prev = [], 1
    for n in range(1, terms + 1):
        bv, av = ev(bc, n), ev(ac, n)
        if bv == 0:
            seq.append("end")
            break
        if av == 0:
            return ("raw", a0, tuple(bc), tuple(ac))
        seq.append(Fraction(bv, av * prev))
        prev = av
    return ("canon", a0, tuple(seq))


@dataclass
class Candidate:
    cf: GCF
    value64: float
    eval_status: Status
    matches: list[MatchReport] = field(default_factory=list)
    confirmed: bool = False
    first_index: int = 0
    draws: int = 1
    report: ConvergenceReport | None = None


@dataclass
class MineReport:
    seed: int
    space: SearchSpace
    budget: int
    prec_confirm: int
    depth: int = DEFAULT_DEPTH
    tol: float = DEFAULT_TOL
    n_generated: int = 0
    n_converged64: int = 0
    n_prefilter_hits: int = 0
    n_unique_candidates: int = 0
    n_confirmed: int = 0
    confirmed_list: list[Candidate] = field(default_factory=list)

    def lines(self) -> list[str]:
        """Machine-readable lines, one per confirmed candidate (its best match)."""
        out = []
        for cand in self.confirmed_list:
            m = cand.matches[0]
            rel = f"{m.name}:({m.relation[0]},{m.relation[1]},{m.relation[2]}) {m.formula(m.name)}"
            out.append(f"CONFIRMED\t{cand.cf.to_literal()}\t{rel}\t{nu.to_digits(m.residual, 6)}")
        return out

    def to_text(self) -> str:
        head = [
            "kontinued mine report",
            f"seed: {self.seed}",
            f"space: {self.space.describe()}",
            f"budget: {self.budget}",
            f"depth64: {self.depth}  tol64: {self.tol:g}  prec_confirm: {self.prec_confirm}",
            f"n_generated: {self.n_generated}",
            f"n_converged64: {self.n_converged64}",
            f"n_prefilter_hits: {self.n_prefilter_hits}",
            f"n_unique_candidates: {self.n_unique_candidates}",
            f"n_confirmed: {self.n_confirmed}",
        ]
        return "\n".join(head + self.lines()) + "\n"


def _chunk_eval(args):
    seed, j, count, space, depth = args
    # always draw a full chunk so that draw i depends on (seed, i) only
    rows = draw_coefficients(rng_stream(seed, j), space, CHUNK)[:count]
    vals, ok = fast_eval64_batch(rows, space, depth)
    return rows, vals, ok


def mine(
    space: SearchSpace,
    db: ConstDB,
    budget: int,
    seed: int = 0,
    prec_confirm: int = 256,
    depth: int = DEFAULT_DEPTH,
    tol: float = DEFAULT_TOL,
    max_norm: int = 1000,
    threads: int = 1,
    n_max: int = 2**16,
) -> MineReport:
    """Run generate -> fast_eval64 -> prefilter -> converge -> confirm.

    Draw ``i`` is row ``i % CHUNK`` of substream ``i // CHUNK`` of ``seed``,
    so the result does not depend on ``threads`` and a smaller budget sees a
    prefix of the draws of a larger one.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    nu.check_prec(prec_confirm)
    report = MineReport(seed, space, budget, prec_confirm, depth, tol)
    jobs = [
        (seed, j, min(CHUNK, budget - j * CHUNK), space, depth)
        for j in range(math.ceil(budget / CHUNK))
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_chunk_eval, jobs))
    else:
        chunks = [_chunk_eval(job) for job in jobs]

    seen: dict = {}
    unique: list[Candidate] = []
    index = 0
    for rows, vals, ok in chunks:
        for row, v, stable in zip(rows, vals, ok):
            report.n_generated += 1
            index += 1
            if not stable:
                continue
            report.n_converged64 += 1
            hits = db.prefilter_hits(float(v), tol)
            if not hits:
                continue
            report.n_prefilter_hits += 1
            key = canonical_key(row, space)
            if key in seen:
                seen[key].draws += 1
                continue
            cand = _confirm(cf_from_row(row, space), float(v), hits, prec_confirm, max_norm, n_max)
            cand.first_index = index - 1
            seen[key] = cand
            unique.append(cand)
    report.n_unique_candidates = len(unique)
    report.confirmed_list = [c for c in unique if c.confirmed]
    report.n_confirmed = len(report.confirmed_list)
    return report


def _confirm(cf: GCF, v64: float, hits, prec: int, max_norm: int, n_max: int) -> Candidate:
    rep = converge(cf, prec, n_max=n_max)
    cand = Candidate(cf, v64, rep.status, report=rep)
    if not rep.ok:
        return cand
    cache = {prec: rep.value}

    def y_at(p):
        if p not in cache:
            r = converge(cf, p, n_max=4 * n_max)
            cache[p] = r.value if r.ok else nu.real("nan", p)
        return cache[p]

    tried = set()
    for entry, *_ in hits:
        if entry.id in tried:
            continue
        tried.add(entry.id)
        m = confirm_match(y_at, entry, prec, max_norm=max_norm)
        if m.confirmed:
            cand.matches.append(m)
    cand.matches.sort(key=lambda m: (m.sup_norm, m.name))
    cand.confirmed = bool(cand.matches)
    return cand
