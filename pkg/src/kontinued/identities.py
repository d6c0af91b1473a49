"""The nine conjectured continued-fraction identities in executable form.

Each identity has a left-hand side continued fraction (``build_lhs``) and a
closed-form right-hand side (``rhs_value``). ``verify`` evaluates both and
classifies the residual.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from kontinued import numerics as nu
from kontinued.cf_core import (
    GCF,
    ONE,
    ConvergenceReport,
    Poly,
    Status,
    TermRule,
    converge,
    convergents,
    snap,
)
from kontinued.expr import as_value

N = Poly.n()
N_MAX = 2**20


class ParamDomainError(ValueError):
    pass


class IdentityId(str, enum.Enum):
    GAMMA_QUOTIENT = "eq1"
    LEMNISCATE = "eq2"
    FUNCTIONAL_RELATION = "eq3"
    PHI_SELF_POWER = "eq4"
    PHI_TWO_OVER_PHI = "eq5"
    SELF_POWER = "eq6"
    DOUBLE_SELF_POWER = "eq7"
    TANH_CF = "eq8"
    SUM_OF_PRODUCTS = "eq9"

    @property
    def title(self) -> str:
        return _TITLES[self]

    @classmethod
    def parse(cls, text: str) -> IdentityId:
        key = text.strip().lower()
        for ident in cls:
            if key in (ident.value, ident.name.lower(), ident.title.lower()):
                return ident
        raise ValueError(f"unknown identity {text!r}")

    def __str__(self) -> str:
        return self.value


_TITLES = {
    IdentityId.GAMMA_QUOTIENT: "GammaQuotient",
    IdentityId.LEMNISCATE: "Lemniscate",
    IdentityId.FUNCTIONAL_RELATION: "FunctionalRelation",
    IdentityId.PHI_SELF_POWER: "PhiSelfPower",
    IdentityId.PHI_TWO_OVER_PHI: "PhiTwoOverPhi",
    IdentityId.SELF_POWER: "SelfPower",
    IdentityId.DOUBLE_SELF_POWER: "DoubleSelfPower",
    IdentityId.TANH_CF: "TanhCF",
    IdentityId.SUM_OF_PRODUCTS: "SumOfProducts",
}

REQUIRED = {
    IdentityId.GAMMA_QUOTIENT: ("alpha", "xi"),
    IdentityId.LEMNISCATE: ("alpha", "xi"),
    IdentityId.FUNCTIONAL_RELATION: ("alpha", "xi"),
    IdentityId.PHI_SELF_POWER: (),
    IdentityId.PHI_TWO_OVER_PHI: (),
    IdentityId.SELF_POWER: ("x",),
    IdentityId.DOUBLE_SELF_POWER: ("x",),
    IdentityId.TANH_CF: ("z",),
    IdentityId.SUM_OF_PRODUCTS: ("alpha",),
}


class Verdict(str, enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    NO_CONVERGE = "NoConverge"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class IdentityCase:
    id: IdentityId
    params: dict
    prec: int
    lhs: ConvergenceReport
    rhs: mpfr
    residual: mpfr
    verdict: Verdict
    parts: tuple = field(default=(), compare=False)

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def describe(self) -> str:
        ps = " ".join(f"{k}={v}" for k, v in self.params.items())
        return (
            f"{self.id}({ps}) prec={self.prec}: {self.verdict} "
            f"residual={nu.to_digits(self.residual, 6)} depth={self.lhs.depth_used} status={self.lhs.status}"
        )


def pass_threshold(rhs, prec: int) -> mpfr:
    with nu.workprec(prec + nu.GUARD_BITS):
        return mpfr(2) ** (-prec + 64) * max(mpfr(1), abs(nu.real(rhs, prec + nu.GUARD_BITS)))


# ---------------------------------------------------------------------------
# parameters


def _params(ident: IdentityId, params: dict | None, wp: int) -> dict:
    params = dict(params or {})
    missing = [k for k in REQUIRED[ident] if k not in params]
    if missing:
        raise ParamDomainError(f"{ident} needs parameter(s) {', '.join(missing)}")
    out = {}
    for k in REQUIRED[ident]:
        v = as_value(params[k], wp)
        out[k] = snap(v, wp)
    return out


def _inv(v):
    return 1 / v if isinstance(v, Fraction) else mpfr(1) / v


def _nonzero(v, name: str, ident: IdentityId) -> None:
    if v == 0:
        raise ParamDomainError(f"{ident}: {name} must be nonzero")


def _not_one(v, name: str, ident: IdentityId) -> None:
    if v == 0 or v == 1:
        raise ParamDomainError(f"{ident}: {name} must avoid 0 and 1")


# ---------------------------------------------------------------------------
# left-hand sides


def _g(k, x, wp: int) -> GCF:
    """g(k, x) = K (n+1)(k - n - k/x)/x / (n+1)(1 + 1/x)."""
    with nu.workprec(wp):
        c = snap(k - k * _inv(x), wp)
        ix = _inv(x)
        b = Poly.linear(1, 1) * Poly.linear(c, -1) * Poly.const(ix)
        a = Poly.linear(1, 1) * Poly.const(snap(1 + ix, wp))
    return GCF(0, TermRule(b.snapped(wp)), TermRule(a.snapped(wp)))


def _self_power_cf(x, shift: int, wp: int) -> GCF:
    """2 + K (n+1)(shift*x - n - shift)/x / (n+1)(x+1)/x, shift in {1, 2}."""
    with nu.workprec(wp):
        ix = _inv(x)
        b = Poly.linear(1, 1) * Poly.linear(snap(shift * x - shift, wp), -1) * Poly.const(ix)
        a = Poly.linear(1, 1) * Poly.const(snap((x + 1) * ix, wp))
    return GCF(2, TermRule(b.snapped(wp)), TermRule(a.snapped(wp)))


def _build(ident: IdentityId, p: dict, wp: int) -> GCF:
    with nu.workprec(wp):
        if ident is IdentityId.GAMMA_QUOTIENT:
            al, xi = p["alpha"], p["xi"]
            _nonzero(al, "alpha", ident)
            b = Poly.linear(1, al) * Poly.linear(snap(2 * al * xi - 1, wp), -2 * al)
            a = Poly.linear(snap(2 + al, wp), 3 * al)
            return GCF(0, TermRule(b.snapped(wp)), TermRule(a.snapped(wp)))
        if ident is IdentityId.LEMNISCATE:
            al, xi = p["alpha"], p["xi"]
            b = Poly.linear(al, 2) * Poly.linear(snap(-4 * xi + 2 * al - 1, wp), 4) * Poly.const(-1)
            a = Poly.linear(snap(2 * al + 2, wp), 6)
            return GCF(0, TermRule(b.snapped(wp)), TermRule(a.snapped(wp)))
        if ident is IdentityId.FUNCTIONAL_RELATION:
            _not_one(p["xi"], "xi", ident)
            return _g(p["alpha"], p["xi"], wp)
        if ident is IdentityId.PHI_SELF_POWER:
            phi = nu.named_constant("phi", wp)
            b = Poly.linear(1, 1) * Poly.linear(1, -1 / phi) * Poly.const(1 / phi)
            a = Poly.linear(1, 1) * Poly.const(2 - 1 / phi)
            return GCF(2, TermRule(b), TermRule(a))
        if ident is IdentityId.PHI_TWO_OVER_PHI:
            phi = nu.named_constant("phi", wp)
            b = Poly.linear(1, 1) * Poly.linear(1 - 1 / phi, -1 / phi)
            a = Poly.linear(1, 1) * Poly.const(phi)
            return GCF(2, TermRule(b), TermRule(a))
        if ident is IdentityId.SELF_POWER:
            _not_one(p["x"], "x", ident)
            return _self_power_cf(p["x"], 1, wp)
        if ident is IdentityId.DOUBLE_SELF_POWER:
            _not_one(p["x"], "x", ident)
            return _self_power_cf(p["x"], 2, wp)
        if ident is IdentityId.TANH_CF:
            z = p["z"]
            _nonzero(z, "z", ident)
            w = snap(nu.named_constant("pi", wp) / (4 * nu.real(z, wp)), wp)
            b = ONE + Poly.linear(-1, 1) ** 2 * Poly.const(w * w)
            a = Poly.linear(-1, 2) * Poly.const(w)
            return GCF(0, TermRule(b.snapped(wp)), TermRule(a.snapped(wp)))
        if ident is IdentityId.SUM_OF_PRODUCTS:
            al = p["alpha"]
            _nonzero(al, "alpha", ident)
            return GCF(0, TermRule(ONE, Poly((0, al))), TermRule(ONE))
    raise ValueError(f"unknown identity {ident!r}")


def build_lhs(ident: IdentityId | str, params: dict | None = None, prec: int = 256) -> GCF:
    """The continued fraction on the left of the identity.

    For FunctionalRelation this is g(alpha, xi); the full left side also
    needs g(alpha, xi/(xi-1)), see ``functional_relation_check``.
    """
    ident = IdentityId.parse(ident) if isinstance(ident, str) else ident
    wp = nu.check_prec(prec) + nu.GUARD_BITS
    return _build(ident, _params(ident, params, wp), wp)


# ---------------------------------------------------------------------------
# right-hand sides


def _gamma_ratio(num_args, den_args, wp: int) -> mpfr:
    with nu.workprec(wp):
        value = mpfr(1)
        for v in num_args:
            value *= nu.gamma(v, wp)
        for v in den_args:
            value /= nu.gamma(v, wp)
        return value


def sum_of_products_series(alpha, prec: int = 256) -> mpfr:
    """sum_{n>=1} 1 / prod_{k=0}^{n} (alpha k + 1), summed directly."""
    wp = nu.check_prec(prec) + nu.GUARD_BITS
    al = as_value(alpha, wp)
    if al == 0:
        raise nu.DomainError("the series diverges at alpha = 0")
    with nu.workprec(wp):
        al = nu.real(al, wp)
        eps = mpfr(2) ** (-wp)
        term, total = mpfr(1), mpfr(0)
        n = 0
        while True:
            n += 1
            factor = al * n + 1
            if abs(factor) <= mpfr(2) ** (-wp // 2):
                raise nu.PoleError(f"alpha*{n} + 1 vanishes")
            term /= factor
            total += term
            # terms decay factorially once |alpha n + 1| > 1
            if abs(factor) > 2 and abs(term) <= eps * max(abs(total), mpfr(1)):
                return mpfr(total, prec)
            if n > 10**6:
                raise nu.DomainError("series did not settle")


def _sum_of_products_closed(al: Fraction, wp: int) -> mpfr | None:
    with nu.workprec(wp):
        e = nu.named_constant("e", wp)
        pi = nu.named_constant("pi", wp)
        r = 1 / gmpy2.sqrt(mpfr(2))
        if al == -2:
            return -gmpy2.sqrt(pi / (2 * e)) * nu.erfi(r, wp)
        if al == Fraction(1, 2):
            return (e * e - 5) / 2
        if al == 1:
            return e - 2
        if al == 2:
            return -1 + gmpy2.sqrt(e * pi / 2) * nu.erf(r, wp)
    return None


SUM_OF_PRODUCTS_TABLE = (Fraction(-2), Fraction(1, 2), Fraction(1), Fraction(2))


def _rhs(ident: IdentityId, p: dict, wp: int) -> mpfr:
    with nu.workprec(wp):
        if ident is IdentityId.GAMMA_QUOTIENT:
            al, xi = p["alpha"], p["xi"]
            _nonzero(al, "alpha", ident)
            ratio = _gamma_ratio(
                [xi + Fraction(1, 2) if isinstance(xi, Fraction) else xi + mpfr(0.5), _inv(2 * al)],
                [xi, (al + 1) * _inv(2 * al)],
                wp,
            )
            return -1 - nu.real(al, wp) + ratio
        if ident is IdentityId.LEMNISCATE:
            al, xi = p["alpha"], p["xi"]
            q = al / 4
            ratio = _gamma_ratio(
                [Fraction(1, 4), Fraction(3, 4), 1 + q, Fraction(3, 4) - q + xi],
                [Fraction(1, 2) + q, Fraction(1, 4) - q + xi],
                wp,
            )
            pi = nu.named_constant("pi", wp)
            return -2 - nu.real(al, wp) + 2 * gmpy2.sqrt(mpfr(2)) * ratio / pi
        if ident is IdentityId.FUNCTIONAL_RELATION:
            al, xi = p["alpha"], p["xi"]
            _not_one(xi, "xi", ident)
            xa, xb = nu.real(al, wp), nu.real(xi, wp)
            u = xa / xb
            return (
                xa
                * nu.power(xb - 1, u - 1, wp)
                * nu.power(xb / (xb - 1), xa - 2, wp)
                * nu.beta(u, xa - u, wp)
            )
        if ident is IdentityId.PHI_SELF_POWER:
            phi = nu.named_constant("phi", wp)
            return nu.power(phi, phi, wp)
        if ident is IdentityId.PHI_TWO_OVER_PHI:
            phi = nu.named_constant("phi", wp)
            return nu.power(phi, 2 / phi, wp)
        if ident is IdentityId.SELF_POWER:
            x = nu.real(p["x"], wp)
            _not_one(x, "x", ident)
            return nu.power(x / (x - 1), x - 1, wp)
        if ident is IdentityId.DOUBLE_SELF_POWER:
            x = nu.real(p["x"], wp)
            _not_one(x, "x", ident)
            return (x - 1) / (2 * x - 1) * (nu.power(x / (x - 1), 2 * x - 1, wp) - 1)
        if ident is IdentityId.TANH_CF:
            _nonzero(p["z"], "z", ident)
            return nu.tanh(p["z"], wp)
        if ident is IdentityId.SUM_OF_PRODUCTS:
            al = p["alpha"]
            _nonzero(al, "alpha", ident)
            if isinstance(al, Fraction) and al in SUM_OF_PRODUCTS_TABLE:
                return _sum_of_products_closed(al, wp)
            return sum_of_products_series(al, wp)
    raise ValueError(f"unknown identity {ident!r}")


def rhs_value(ident: IdentityId | str, params: dict | None = None, prec: int = 256) -> mpfr:
    """The closed form on the right of the identity.

    SumOfProducts uses the tabulated closed forms at alpha in {-2, 1/2, 1, 2}
    and the defining series elsewhere.
    """
    ident = IdentityId.parse(ident) if isinstance(ident, str) else ident
    prec = nu.check_prec(prec)
    wp = prec + nu.GUARD_BITS
    return mpfr(_rhs(ident, _params(ident, params, wp), wp), prec)


# ---------------------------------------------------------------------------
# verification


def _verdict(lhs: ConvergenceReport, residual, rhs, prec: int) -> Verdict:
    if not lhs.ok:
        return Verdict.NO_CONVERGE
    if gmpy2.is_finite(residual) and residual <= pass_threshold(rhs, prec):
        return Verdict.PASS
    return Verdict.FAIL


def _display(params: dict | None) -> dict:
    return {k: (v if isinstance(v, (str, int, Fraction)) else str(v)) for k, v in (params or {}).items()}


def verify(ident: IdentityId | str, params: dict | None = None, prec: int = 256, n_max: int = N_MAX) -> IdentityCase:
    """Evaluate both sides of an identity and classify the residual.

    Pass iff the left side converged (or terminated) and
    |lhs - rhs| <= 2^(-prec+64) * max(1, |rhs|). Out-of-domain parameters
    raise ParamDomainError; closed-form poles raise numerics.PoleError.
    """
    ident = IdentityId.parse(ident) if isinstance(ident, str) else ident
    if ident is IdentityId.FUNCTIONAL_RELATION:
        p = dict(params or {})
        return functional_relation_check(p.get("alpha"), p.get("xi"), prec, n_max=n_max)
    prec = nu.check_prec(prec)
    wp = prec + nu.GUARD_BITS
    p = _params(ident, params, wp)
    lhs = converge(_build(ident, p, wp), prec + 16, n_max=n_max)
    rhs = _rhs(ident, p, wp)
    with nu.workprec(wp):
        residual = abs(lhs.value - rhs)
    lhs = ConvergenceReport(mpfr(lhs.value, prec), lhs.depth_used, lhs.status, lhs.error_estimate)
    return IdentityCase(
        ident, _display(params), prec, lhs, mpfr(rhs, prec), mpfr(residual, prec), _verdict(lhs, residual, rhs, prec)
    )


def _worst(reports) -> Status:
    for status in (Status.DIVERGENT, Status.OSCILLATING, Status.EXHAUSTED):
        if any(r.status is status for r in reports):
            return status
    if all(r.status is Status.FINITE for r in reports):
        return Status.FINITE
    return Status.CONVERGED


def functional_relation_check(alpha, xi, prec: int = 256, n_max: int = N_MAX) -> IdentityCase:
    """2 + g(alpha, xi) + g(alpha, xi/(xi-1)) against the Beta-function closed form."""
    ident = IdentityId.FUNCTIONAL_RELATION
    if alpha is None or xi is None:
        raise ParamDomainError("eq3 needs parameters alpha and xi")
    prec = nu.check_prec(prec)
    wp = prec + nu.GUARD_BITS
    p = _params(ident, {"alpha": alpha, "xi": xi}, wp)
    al, x = p["alpha"], p["xi"]
    _not_one(x, "xi", ident)
    with nu.workprec(wp):
        x_conj = snap(x / (x - 1), wp)
    g1 = converge(_g(al, x, wp), prec + 16, n_max=n_max)
    g2 = converge(_g(al, x_conj, wp), prec + 16, n_max=n_max)
    rhs = _rhs(ident, p, wp)
    with nu.workprec(wp):
        total = 2 + g1.value + g2.value
        residual = abs(total - rhs)
    lhs = ConvergenceReport(
        mpfr(total, prec),
        max(g1.depth_used, g2.depth_used),
        _worst([g1, g2]),
        mpfr(max(g1.error_estimate, g2.error_estimate), prec),
    )
    return IdentityCase(
        ident,
        _display({"alpha": alpha, "xi": xi}),
        prec,
        lhs,
        mpfr(rhs, prec),
        mpfr(residual, prec),
        _verdict(lhs, residual, rhs, prec),
        parts=(g1, g2),
    )


# ---------------------------------------------------------------------------
# convergence comparison


@dataclass(frozen=True)
class ComparisonReport:
    id: IdentityId
    params: dict
    prec: int
    tolerance: mpfr
    cf_depth: int | None
    reference_depth: int | None
    reference: str

    @property
    def cf_faster(self) -> bool | None:
        if self.cf_depth is None or self.reference_depth is None:
            return None
        return self.cf_depth < self.reference_depth

    def describe(self) -> str:
        return (
            f"{self.id} {self.params} tol=2^{int(gmpy2.floor(gmpy2.log2(self.tolerance)))}: "
            f"identity CF depth {self.cf_depth}, {self.reference} depth {self.reference_depth}"
        )


def _depth_to(seq, limit, tol, horizon: int) -> int | None:
    """First N such that every convergent from N on (up to the horizon) is within tol.

    Iteration stops once the error has dropped below tol * 2^-32, which for
    these monotone-rate sequences settles the question.
    """
    last_bad = 0
    settled = False
    for n, f in seq:
        if n > horizon:
            break
        err = mpfr("inf") if f is None else abs(f - limit)
        if err > tol:
            last_bad = n
        elif err <= tol * mpfr(2) ** -32:
            settled = True
            break
    return last_bad + 1 if settled else None


def _euler_convergents(alpha, depth: int, prec: int):
    """Convergents of Euler's continued fraction for sum_n prod_{j<=n} r_j, r_j = 1/(alpha j + 1).

    The fraction is r_1/(1 - r_2/(1 + r_2 - r_3/(1 + r_3 - ...))); its first
    denominator is 1, so the tail from n = 2 on is evaluated as its own GCF.
    """
    wp = prec + nu.GUARD_BITS
    r = TermRule(ONE, Poly((1, alpha)))
    tail = GCF(1, TermRule(Poly.const(-1), Poly.linear(1 + alpha, alpha)), TermRule(Poly.linear(2 + alpha, alpha), Poly.linear(1 + alpha, alpha)))
    # tail = 1 + K_{m>=1} (-r_{m+1}) / (1 + r_{m+1})
    with nu.workprec(wp):
        r1 = nu.real(r(1), wp)
    yield 1, mpfr(r1, prec)
    for m, t in convergents(tail, depth - 1, prec):
        with nu.workprec(wp):
            yield m + 1, (None if t is None or t == 0 else mpfr(r1 / t, prec))


def classical_tanh_cf(z, prec: int = 256) -> GCF:
    """tanh z = z/(1 + z^2/(3 + z^2/(5 + ...)))."""
    wp = nu.check_prec(prec) + nu.GUARD_BITS
    zv = snap(as_value(z, wp), wp)
    with nu.workprec(wp):
        z2 = zv * zv
    return GCF(0, TermRule(Poly.const(z2)), TermRule(Poly.linear(-1, 2)), b1=zv)


def convergence_compare(ident: IdentityId | str, params: dict | None = None, prec: int = 256, horizon: int = 2**16) -> ComparisonReport:
    """Depth each continued fraction needs before its convergents stay within 2^(-prec+64).

    TanhCF is compared with the classical tanh fraction; SumOfProducts with
    Euler's continued fraction of the defining series.
    """
    ident = IdentityId.parse(ident) if isinstance(ident, str) else ident
    if ident not in (IdentityId.TANH_CF, IdentityId.SUM_OF_PRODUCTS):
        raise ValueError("convergence_compare supports eq8 and eq9 only")
    prec = nu.check_prec(prec)
    wp = prec + nu.GUARD_BITS
    p = _params(ident, params, wp)
    limit = _rhs(ident, p, wp + 64)
    with nu.workprec(wp):
        tol = mpfr(2) ** (-prec + 64) * max(mpfr(1), abs(limit))
    cf = _build(ident, p, wp)
    cf_depth = _depth_to(convergents(cf, horizon, wp), limit, tol, horizon)
    if ident is IdentityId.TANH_CF:
        ref_name = "classical tanh CF"
        ref_seq = convergents(classical_tanh_cf(p["z"], wp), horizon, wp)
    else:
        ref_name = "Euler CF"
        ref_seq = _euler_convergents(p["alpha"], horizon, wp)
    ref_depth = _depth_to(ref_seq, limit, tol, horizon)
    return ComparisonReport(ident, _display(params), prec, mpfr(tol, prec), cf_depth, ref_depth, ref_name)


# ---------------------------------------------------------------------------
# the certification grid


DEFAULT_SUITE: tuple[tuple[IdentityId, dict, int], ...] = (
    *(
        (IdentityId.GAMMA_QUOTIENT, {"alpha": a, "xi": x}, 256)
        for a in ("1/2", "1", "2", "3")
        for x in ("3/4", "1", "3/2", "2", "e", "pi")
    ),
    *(
        (IdentityId.LEMNISCATE, {"alpha": a, "xi": x}, 256)
        for a in ("0", "1", "2", "3")
        for x in ("1", "3/2", "2", "pi")
    ),
    *(
        (IdentityId.FUNCTIONAL_RELATION, {"alpha": a, "xi": x}, 256)
        for a, x in (("3", "2"), ("2", "phi^2"), ("5/2", "3"))
    ),
    *(
        (IdentityId.FUNCTIONAL_RELATION, {"alpha": f"({x})/(({x})-1)", "xi": x}, 256)
        for x in ("phi", "phi^2", "3/2", "4/3")
    ),
    (IdentityId.PHI_SELF_POWER, {}, 256),
    (IdentityId.PHI_TWO_OVER_PHI, {}, 256),
    *((IdentityId.SELF_POWER, {"x": x}, 256) for x in ("2", "3", "5", "3/2", "phi")),
    *((IdentityId.DOUBLE_SELF_POWER, {"x": x}, 256) for x in ("2", "3", "3/2")),
    *((IdentityId.TANH_CF, {"z": z}, 128) for z in ("pi/4", "pi/2", "pi", "1", "2")),
    *((IdentityId.SUM_OF_PRODUCTS, {"alpha": a}, 256) for a in ("-2", "1/2", "1", "2")),
)


def _run_one(item) -> IdentityCase:
    ident, params, prec = item
    return verify(ident, params, prec)


def run_suite(cases=DEFAULT_SUITE, threads: int = 1, prec: int | None = None) -> list[IdentityCase]:
    """Verify every case; results come back in grid order regardless of threading.

    ``prec`` overrides the per-case precision when given.
    """
    items = [(i, p, prec or pr) for i, p, pr in cases]
    if threads <= 1:
        return [_run_one(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_one, items))
