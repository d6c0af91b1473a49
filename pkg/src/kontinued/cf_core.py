"""Generalized continued fractions ``a0 + K_{n>=1} b_n / a_n``.

Term rules are rational functions of the index ``n``. Coefficients are
Fractions when exact, so vanishing partial numerators are detected exactly,
or mpfr values when a parameter is irrational.

Two evaluators are kept side by side on purpose: backward recurrence from a
fixed depth and forward modified Lentz. Each serves as the other's oracle.
"""

from __future__ import annotations

import ast
import enum
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import zip_longest

import gmpy2
from gmpy2 import mpfr

from kontinued import expr as ex
from kontinued import numerics as nu

N_MAX_DEFAULT = 2**20


class CFError(ArithmeticError):
    pass


class ZeroDenominatorError(CFError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"intermediate denominator vanished at n={n}")


class ZeroScaleError(CFError):
    pass


class TermPoleError(CFError):
    pass


# ---------------------------------------------------------------------------
# coefficient helpers (Fraction when exact, mpfr otherwise)


def _is_exact(c) -> bool:
    return isinstance(c, (int, Fraction))


def _lift(c):
    if isinstance(c, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(c, (int, Fraction)):
        return Fraction(c)
    if isinstance(c, mpfr):
        return c
    if isinstance(c, gmpy2.mpq):
        return Fraction(int(c.numerator), int(c.denominator))
    if isinstance(c, gmpy2.mpz):
        return Fraction(int(c))
    raise TypeError(f"unsupported coefficient {c!r}")


def _mp(c):
    return gmpy2.mpq(c.numerator, c.denominator) if isinstance(c, Fraction) else c


def _add(x, y):
    if _is_exact(x) and _is_exact(y):
        return x + y
    return mpfr(_mp(x)) + _mp(y)


def _mul(x, y):
    if _is_exact(x) and _is_exact(y):
        return x * y
    if x == 0 or y == 0:
        return Fraction(0)
    return mpfr(_mp(x)) * _mp(y)


def _neg(x):
    return -x


def _is_zero(c) -> bool:
    return c == 0


def snap(c, wp: int, max_den: int = 10**6):
    """Replace an mpfr that is a small rational up to rounding by that rational."""
    if _is_exact(c):
        return c
    if not gmpy2.is_finite(c):
        return c
    q = Fraction(*gmpy2.mpq(c).as_integer_ratio()).limit_denominator(max_den)
    with nu.workprec(wp):
        err = abs(c - _mp(q))
        scale = max(mpfr(1), abs(c))
    if err <= mpfr(2) ** (-wp + 16) * scale:
        return q
    return c


# ---------------------------------------------------------------------------
# polynomials in n


@dataclass(frozen=True)
class Poly:
    """Polynomial in n; ``coeffs[i]`` multiplies n**i. Trailing zeros are dropped."""

    coeffs: tuple = ()

    def __post_init__(self):
        cs = [_lift(c) for c in self.coeffs]
        while cs and _is_zero(cs[-1]):
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def const(cls, c) -> Poly:
        return cls((c,))

    @classmethod
    def n(cls) -> Poly:
        return cls((0, 1))

    @classmethod
    def linear(cls, c0, c1) -> Poly:
        return cls((c0, c1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_rational(self) -> bool:
        return all(_is_exact(c) for c in self.coeffs)

    def __add__(self, other: Poly) -> Poly:
        other = _as_poly(other)
        return Poly(
            tuple(_add(x, y) for x, y in zip_longest(self.coeffs, other.coeffs, fillvalue=Fraction(0)))
        )

    __radd__ = __add__

    def __neg__(self) -> Poly:
        return Poly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: Poly) -> Poly:
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> Poly:
        return _as_poly(other) - self

    def __mul__(self, other: Poly) -> Poly:
        other = _as_poly(other)
        if self.is_zero or other.is_zero:
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            for j, y in enumerate(other.coeffs):
                out[i + j] = _add(out[i + j], _mul(x, y))
        return Poly(tuple(out))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Poly:
        out = Poly.const(1)
        for _ in range(k):
            out = out * self
        return out

    def shift(self, k: int) -> Poly:
        """The polynomial n -> p(n + k)."""
        out = Poly()
        step = Poly((k, 1))
        for c in reversed(self.coeffs):
            out = out * step + Poly.const(c)
        return out

    def __call__(self, n):
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = _add(_mul(acc, n), c)
        return acc

    def snapped(self, wp: int) -> Poly:
        return Poly(tuple(snap(c, wp) for c in self.coeffs))

    def integer_form(self) -> tuple[list[int], int]:
        """Integer coefficients and a positive common denominator."""
        if not self.is_rational:
            raise ValueError("polynomial has real coefficients")
        den = math.lcm(*(c.denominator for c in self.coeffs)) if self.coeffs else 1
        return [int(c * den) for c in self.coeffs], den

    def to_str(self, digits: int = 20) -> str:
        if self.is_zero:
            return "0"
        parts = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if _is_zero(c):
                continue
            negative = c < 0
            mag = -c if negative else c
            cs = _coef_str(mag, digits)
            if i == 0:
                term = cs
            else:
                mono = "n" if i == 1 else f"n^{i}"
                if _is_exact(mag) and mag == 1:
                    term = mono
                elif _is_exact(mag) and mag.denominator == 1:
                    term = f"{cs}*{mono}"
                else:
                    term = f"({cs})*{mono}"
            sign = "-" if negative else "+"
            parts.append((sign, term))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, term in parts[1:]:
            text += sign + term
        return text


def _coef_str(c, digits: int) -> str:
    if _is_exact(c):
        return str(c)
    return nu.to_digits(c, digits)


def _as_poly(x) -> Poly:
    return x if isinstance(x, Poly) else Poly.const(x)


ONE = Poly.const(1)
ZERO = Poly()


# ---------------------------------------------------------------------------
# term rules and continued fractions


@dataclass(frozen=True)
class TermRule:
    """term(n) = scale * num(n) / den(n) + offset."""

    num: Poly
    den: Poly = ONE
    scale: object = Fraction(1)
    offset: object = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "num", _as_poly(self.num))
        object.__setattr__(self, "den", _as_poly(self.den))
        object.__setattr__(self, "scale", _lift(self.scale))
        object.__setattr__(self, "offset", _lift(self.offset))
        if self.den.is_zero:
            raise ValueError("term rule denominator is identically zero")

    @classmethod
    def const(cls, c) -> TermRule:
        return cls(Poly.const(c))

    def as_fraction(self) -> tuple[Poly, Poly]:
        """(N, D) with term(n) = N(n) / D(n)."""
        num = self.num * Poly.const(self.scale) + self.den * Poly.const(self.offset)
        return num, self.den

    @property
    def is_rational(self) -> bool:
        num, den = self.as_fraction()
        return num.is_rational and den.is_rational

    @property
    def is_zero(self) -> bool:
        return self.as_fraction()[0].is_zero

    def __call__(self, n):
        num, den = self.as_fraction()
        d = den(n)
        if d == 0:
            raise TermPoleError(f"term rule has a pole at n={n}")
        if _is_exact(d) and _is_exact(num(n)):
            return num(n) / d
        return mpfr(_mp(num(n))) / _mp(d)

    def __mul__(self, other: TermRule) -> TermRule:
        n1, d1 = self.as_fraction()
        n2, d2 = other.as_fraction()
        return TermRule(n1 * n2, d1 * d2)

    def shift(self, k: int) -> TermRule:
        num, den = self.as_fraction()
        return TermRule(num.shift(k), den.shift(k))

    def snapped(self, wp: int) -> TermRule:
        num, den = self.as_fraction()
        return TermRule(num.snapped(wp), den.snapped(wp))

    def to_str(self, digits: int = 20) -> str:
        num, den = self.as_fraction()
        if den.degree == 0 and _is_exact(den.coeffs[0]) and den.coeffs[0] == 1:
            return num.to_str(digits)
        if den.degree == 0 and _is_exact(den.coeffs[0]):
            return f"({num.to_str(digits)})/{den.coeffs[0]}"
        return f"({num.to_str(digits)})/({den.to_str(digits)})"


@dataclass(frozen=True)
class GCF:
    """a0 + b_1/(a_1 + b_2/(a_2 + ...)).

    ``b1`` optionally overrides the first partial numerator; equivalence
    transformations produce such a first term.
    """

    a0: object
    b: TermRule
    a: TermRule
    b1: object = None

    def __post_init__(self):
        object.__setattr__(self, "a0", _lift(self.a0))
        if not isinstance(self.b, TermRule):
            object.__setattr__(self, "b", _rule(self.b))
        if not isinstance(self.a, TermRule):
            object.__setattr__(self, "a", _rule(self.a))
        if self.b1 is not None:
            object.__setattr__(self, "b1", _lift(self.b1))

    def b_term(self, n: int):
        if n == 1 and self.b1 is not None:
            return self.b1
        return self.b(n)

    def a_term(self, n: int):
        return self.a(n)

    @property
    def is_rational(self) -> bool:
        return (
            _is_exact(self.a0)
            and self.a.is_rational
            and self.b.is_rational
            and (self.b1 is None or _is_exact(self.b1))
        )

    def to_literal(self, digits: int = 20) -> str:
        a0 = _coef_str(self.a0, digits) if not _is_zero(self.a0) else "0"
        parts = [a0, f"b(n)={self.b.to_str(digits)}", f"a(n)={self.a.to_str(digits)}"]
        if self.b1 is not None:
            parts.append(f"b1={_coef_str(self.b1, digits)}")
        return "cf(" + "; ".join(parts) + ")"

    def __str__(self) -> str:
        return self.to_literal()


def _rule(x) -> TermRule:
    if isinstance(x, TermRule):
        return x
    if isinstance(x, Poly):
        return TermRule(x)
    return TermRule.const(x)


def simple_cf(b, a, a0=0) -> GCF:
    """Convenience constructor; ``b`` and ``a`` may be Polys, numbers or coefficient tuples."""

    def conv(x):
        if isinstance(x, (tuple, list)):
            return TermRule(Poly(tuple(x)))
        return _rule(x)

    return GCF(a0, conv(b), conv(a))


# ---------------------------------------------------------------------------
# compiled term evaluation


class _Terms:
    """Fast term evaluation at a fixed working precision.

    Exact rules are evaluated in integers so that ``b_n == 0`` is detected
    exactly; the division is the only rounding.
    """

    def __init__(self, cf: GCF, wp: int):
        self.wp = wp
        self._b = self._compile(cf.b)
        self._a = self._compile(cf.a)
        self.b1 = None if cf.b1 is None else nu.real(cf.b1, wp)
        self.a0 = nu.real(cf.a0, wp)

    def _compile(self, rule: TermRule):
        num, den = rule.as_fraction()
        if num.is_rational and den.is_rational:
            nc, nd = num.integer_form()
            dc, dd = den.integer_form()
            nc = [c * dd for c in nc]
            dc = [c * nd for c in dc]
            if len(dc) == 1:
                d0 = dc[0]

                def term(n, nc=nc[::-1], d0=d0):
                    acc = 0
                    for c in nc:
                        acc = acc * n + c
                    if acc == 0:
                        return None
                    return mpfr(acc) / d0

                return term

            def term(n, nc=nc[::-1], dc=dc[::-1]):
                acc = 0
                for c in nc:
                    acc = acc * n + c
                if acc == 0:
                    return None
                dv = 0
                for c in dc:
                    dv = dv * n + c
                if dv == 0:
                    raise TermPoleError(f"term rule has a pole at n={n}")
                return mpfr(acc) / dv

            return term

        ncf = [nu.real(c, self.wp) for c in reversed(num.coeffs)]
        dcf = [nu.real(c, self.wp) for c in reversed(den.coeffs)]

        def term(n, ncf=ncf, dcf=dcf):
            acc = mpfr(0)
            for c in ncf:
                acc = acc * n + c
            if acc == 0:
                return None
            dv = mpfr(0)
            for c in dcf:
                dv = dv * n + c
            if dv == 0:
                raise TermPoleError(f"term rule has a pole at n={n}")
            return acc / dv

        return term

    def b(self, n: int):
        """Partial numerator, or None when it vanishes."""
        if n == 1 and self.b1 is not None:
            return None if self.b1 == 0 else self.b1
        return self._b(n)

    def a(self, n: int):
        v = self._a(n)
        return mpfr(0) if v is None else v


# ---------------------------------------------------------------------------
# evaluation


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    FINITE = "FiniteTermination"
    DIVERGENT = "Divergent"
    OSCILLATING = "Oscillating"
    EXHAUSTED = "DepthExhausted"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ConvergenceReport:
    value: mpfr
    depth_used: int
    status: Status
    error_estimate: mpfr = field(default_factory=lambda: mpfr(0))

    @property
    def ok(self) -> bool:
        return self.status in (Status.CONVERGED, Status.FINITE)


def _backward(terms: _Terms, depth: int) -> tuple[mpfr, int | None]:
    """Depth-th convergent at the context precision, plus the first index with b_n = 0."""
    t = mpfr(0)
    first_zero = None
    for n in range(depth, 0, -1):
        bn = terms.b(n)
        if bn is None:
            t = mpfr(0)
            first_zero = n
            continue
        d = terms.a(n) + t
        if d == 0:
            raise ZeroDenominatorError(n)
        t = bn / d
    return terms.a0 + t, first_zero


def eval_backward(cf: GCF, depth: int, prec: int = 256) -> mpfr:
    """The ``depth``-th convergent (tail after b_depth/a_depth set to zero)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    prec = nu.check_prec(prec)
    wp = prec + nu.GUARD_BITS
    with nu.workprec(wp):
        value, _ = _backward(_Terms(cf, wp), depth)
    return mpfr(value, prec)


def _finite_value(terms: _Terms, n_zero: int) -> mpfr:
    if n_zero <= 1:
        return terms.a0
    value, _ = _backward(terms, n_zero - 1)
    return value


def _precision_stable(cf: GCF, wp: int, depth: int, value, threshold) -> bool:
    """Re-evaluate at 64 more bits; a value that moves is cancellation, not a limit."""
    hi = wp + nu.GUARD_BITS
    with nu.workprec(hi):
        try:
            check, _ = _backward(_Terms(cf, hi), depth)
        except ZeroDenominatorError:
            return False
        return abs(check - value) <= threshold * max(mpfr(1), abs(check))


class _Watch:
    """Classifies non-convergence from successive window statistics."""

    def __init__(self, patience: int = 4):
        self.patience = patience
        self.spreads: list[float] = []
        self.sizes: list[float] = []

    def push(self, spread: float, size: float) -> Status | None:
        self.spreads.append(spread)
        self.sizes.append(size)
        p = self.patience
        if len(self.spreads) <= p:
            return None
        s, z = self.spreads[-p - 1 :], self.sizes[-p - 1 :]
        if all(math.isinf(v) or math.isnan(v) for v in z[1:]):
            return Status.DIVERGENT
        if all(z[i + 1] >= 2 * z[i] for i in range(p)) and z[-1] > 1e6:
            return Status.DIVERGENT
        no_contraction = all(s[i + 1] > 0.9 * s[i] for i in range(p))
        if no_contraction and s[-1] > 1e-6 * max(1.0, z[-1]):
            return Status.OSCILLATING
        return None


def eval_lentz(cf: GCF, prec: int = 256, tol=None, n_max: int = N_MAX_DEFAULT) -> ConvergenceReport:
    """Forward evaluation by the modified Lentz method.

    Stops when the step multiplier is within ``tol`` of 1 (default 2^-prec).
    Exact zero intermediates are replaced by a tiny value 2^(-2*wp). A
    converged value is cross-checked like in :func:`converge`.
    """
    prec = nu.check_prec(prec)
    wp = prec + nu.GUARD_BITS
    with nu.workprec(wp):
        tol = mpfr(2) ** (-prec) if tol is None else mpfr(tol)
        if tol <= 0:
            raise ValueError("tol must be positive")
        terms = _Terms(cf, wp)
        tiny = mpfr(2) ** (-2 * wp)
        f = terms.a0 if terms.a0 != 0 else tiny
        c, d = f, mpfr(0)
        watch = _Watch()
        lo = hi = None
        next_check = 64
        status = Status.EXHAUSTED
        err = mpfr("inf")
        n = 0
        while n < n_max:
            n += 1
            bn = terms.b(n)
            if bn is None:
                value = _finite_value(terms, n)
                return ConvergenceReport(mpfr(value, prec), n, Status.FINITE, mpfr(0))
            an = terms.a(n)
            d = an + bn * d
            if d == 0:
                d = tiny
            c = an + bn / c
            if c == 0:
                c = tiny
            d = 1 / d
            delta = c * d
            f_prev = f
            f = f * delta
            if not gmpy2.is_finite(f):
                return ConvergenceReport(mpfr(f, prec), n, Status.DIVERGENT, mpfr("inf"))
            err = abs(f - f_prev) / max(mpfr(1), abs(f))
            if abs(delta - 1) < tol:
                if not _precision_stable(cf, wp, n, f, max(tol, mpfr(2) ** (-prec + 48))):
                    return ConvergenceReport(mpfr(f, prec), n, Status.DIVERGENT, mpfr("inf"))
                return ConvergenceReport(mpfr(f, prec), n, Status.CONVERGED, err)
            lo = f if lo is None or f < lo else lo
            hi = f if hi is None or f > hi else hi
            if n == next_check:
                verdict = watch.push(float(hi - lo), float(max(abs(hi), abs(lo))))
                if verdict is not None:
                    return ConvergenceReport(mpfr(f, prec), n, verdict, err)
                lo = hi = None
                next_check *= 2
        return ConvergenceReport(mpfr(f, prec), n, status, err)


def converge(cf: GCF, prec: int = 256, n_max: int = N_MAX_DEFAULT, n_start: int = 64) -> ConvergenceReport:
    """Adaptive driver: compare convergents at depths N and 2N, doubling N.

    Converged when |f_N - f_2N| <= 2^(-prec+48) * max(1, |f_2N|) and f_2N
    survives re-evaluation with 64 more bits. A convergent that only agrees
    with itself because rounding swamped an exact cancellation (the limit is
    then typically infinite) is reported Divergent.
    """
    prec = nu.check_prec(prec)
    wp = prec + nu.GUARD_BITS
    with nu.workprec(wp):
        terms = _Terms(cf, wp)
        threshold = mpfr(2) ** (-prec + 48)

        def at(depth):
            # a vanishing intermediate denominator: nudge the depth
            for dd in (depth, depth + 1, depth - 1, depth + 2):
                if dd < 1:
                    continue
                try:
                    return _backward(terms, dd)
                except ZeroDenominatorError:
                    continue
            raise ZeroDenominatorError(depth)

        N = max(1, n_start)
        try:
            f_n, zero = at(N)
        except ZeroDenominatorError:
            return ConvergenceReport(mpfr("nan"), N, Status.DIVERGENT, mpfr("inf"))
        if zero is not None:
            return ConvergenceReport(mpfr(_finite_value(terms, zero), prec), zero, Status.FINITE, mpfr(0))
        watch = _Watch()
        err = mpfr("inf")
        while True:
            try:
                f_2n, zero = at(2 * N)
            except ZeroDenominatorError:
                return ConvergenceReport(mpfr(f_n, prec), N, Status.DIVERGENT, mpfr("inf"))
            if zero is not None:
                value = _finite_value(terms, zero)
                return ConvergenceReport(mpfr(value, prec), zero, Status.FINITE, mpfr(0))
            if not gmpy2.is_finite(f_2n):
                return ConvergenceReport(mpfr(f_2n, prec), 2 * N, Status.DIVERGENT, mpfr("inf"))
            diff = abs(f_n - f_2n)
            err = diff / max(mpfr(1), abs(f_2n))
            if err <= threshold:
                if not _precision_stable(cf, wp, 2 * N, f_2n, threshold):
                    return ConvergenceReport(mpfr(f_2n, prec), 2 * N, Status.DIVERGENT, mpfr("inf"))
                return ConvergenceReport(mpfr(f_2n, prec), 2 * N, Status.CONVERGED, mpfr(err, prec))
            if 4 * N > n_max:
                return ConvergenceReport(mpfr(f_2n, prec), 2 * N, Status.EXHAUSTED, mpfr(err, prec))
            verdict = watch.push(float(diff), float(abs(f_2n)))
            if verdict is not None:
                return ConvergenceReport(mpfr(f_2n, prec), 2 * N, verdict, mpfr(err, prec))
            N *= 2
            f_n = f_2n


def convergents(cf: GCF, depth: int, prec: int = 256):
    """Yield (n, f_n) for n = 1..depth by the forward three-term recurrence."""
    prec = nu.check_prec(prec)
    wp = prec + nu.GUARD_BITS
    with nu.workprec(wp):
        terms = _Terms(cf, wp)
        p_prev, p = mpfr(1), terms.a0
        q_prev, q = mpfr(0), mpfr(1)
        for n in range(1, depth + 1):
            bn = terms.b(n)
            bn = mpfr(0) if bn is None else bn
            an = terms.a(n)
            p_prev, p = p, an * p + bn * p_prev
            q_prev, q = q, an * q + bn * q_prev
            # rescale to keep exponents moderate
            if q != 0:
                s = abs(q)
                p_prev, p, q_prev, q = p_prev / s, p / s, q_prev / s, q / s
                yield n, mpfr(p / q, prec)
            else:
                yield n, None


def equivalence_scale(cf: GCF, c) -> GCF:
    """Equivalence transform b'_n = c_n c_{n-1} b_n, a'_n = c_n a_n with c_0 = 1.

    The limit (and every convergent) is unchanged.
    """
    rule = _rule(c)
    num, den = rule.as_fraction()
    if num.is_zero:
        raise ZeroScaleError("scale rule is identically zero")
    _check_no_positive_integer_root(num)
    b_first = cf.b_term(1)
    c1 = rule(1)
    new_b1 = _mul(c1, b_first)
    new_b = rule * rule.shift(-1) * cf.b
    new_a = rule * cf.a
    return GCF(cf.a0, new_b, new_a, b1=new_b1)


def _check_no_positive_integer_root(p: Poly, probe: int = 1024) -> None:
    if p.is_rational:
        coeffs, _ = p.integer_form()
        # strip the factor n^k; remaining integer roots divide the constant term
        while coeffs and coeffs[0] == 0:
            coeffs = coeffs[1:]
        c0 = abs(coeffs[0])
        roots = [d for d in range(1, int(math.isqrt(c0)) + 1) if c0 % d == 0]
        candidates = set(roots) | {c0 // d for d in roots}
        for r in sorted(candidates):
            if p(r) == 0:
                raise ZeroScaleError(f"scale rule vanishes at n={r}")
        return
    for n in range(1, probe + 1):
        if p(n) == 0:
            raise ZeroScaleError(f"scale rule vanishes at n={n}")


# ---------------------------------------------------------------------------
# textual literal: cf(a0; b(n)=<expr>; a(n)=<expr>)

_LITERAL = re.compile(r"^\s*cf\s*\((?P<body>.*)\)\s*$", re.S)


def _rational_function(node: ast.AST, prec: int, where) -> tuple[Poly, Poly]:
    if not ex.contains_name(node, "n"):
        v = ex.evaluate_node(node, prec + nu.GUARD_BITS)
        return Poly.const(v), ONE
    if isinstance(node, ast.Name):
        return Poly.n(), ONE
    if isinstance(node, ast.UnaryOp):
        num, den = _rational_function(node.operand, prec, where)
        return (-num if isinstance(node.op, ast.USub) else num), den
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            expo = ex.exact_value(node.right)
            if expo is None or expo.denominator != 1:
                raise ex.ParseError("powers of n need an integer exponent", where(node.right))
            num, den = _rational_function(node.left, prec, where)
            k = int(expo)
            return (num**k, den**k) if k >= 0 else (den ** (-k), num ** (-k))
        ln, ld = _rational_function(node.left, prec, where)
        rn, rd = _rational_function(node.right, prec, where)
        if isinstance(node.op, ast.Add):
            return ln * rd + rn * ld, ld * rd
        if isinstance(node.op, ast.Sub):
            return ln * rd - rn * ld, ld * rd
        if isinstance(node.op, ast.Mult):
            return ln * rn, ld * rd
        if isinstance(node.op, ast.Div):
            if rn.is_zero:
                raise ex.ParseError("division by zero", where(node.right))
            return ln * rd, ld * rn
    raise ex.ParseError("functions of n are not supported in term rules", where(node))


def parse_term(text: str, prec: int = 256, column: int = 1) -> TermRule:
    """Parse a rational function of n; ``column`` is where ``text`` starts in a larger literal."""
    try:
        node = ex.parse(text, {"n"})
    except ex.ParseError as exc:
        raise ex.ParseError(str(exc).rsplit(" (column", 1)[0], (exc.column or 1) + column - 1) from None

    def where(sub):
        return ex.column_of(text, sub) + column - 1

    with nu.workprec(prec + nu.GUARD_BITS):
        num, den = _rational_function(node, prec, where)
    return TermRule(num, den)


def parse_cf(literal: str, prec: int = 256) -> GCF:
    """Parse ``cf(a0; b(n)=...; a(n)=...)``; the ``b(n)=``/``a(n)=`` prefixes are optional.

    Named constants are evaluated at ``prec`` (plus guard bits).
    """
    m = _LITERAL.match(literal)
    if not m:
        raise ex.ParseError("expected cf(a0; b(n)=...; a(n)=...)", 1)
    body = m.group("body")
    base = m.start("body") + 1
    pieces, starts, pos = [], [], 0
    for chunk in body.split(";"):
        pieces.append(chunk)
        starts.append(base + pos)
        pos += len(chunk) + 1
    if len(pieces) not in (3, 4):
        raise ex.ParseError(f"expected 3 ';'-separated fields, got {len(pieces)}", base)
    fields = {}
    for idx, (chunk, start) in enumerate(zip(pieces, starts)):
        key_match = re.match(r"\s*(b\s*\(\s*n\s*\)|a\s*\(\s*n\s*\)|b1)\s*=", chunk)
        if key_match:
            key = re.sub(r"\s", "", key_match.group(1))
            text = chunk[key_match.end():]
            col = start + key_match.end()
        else:
            key = ("a0", "b(n)", "a(n)", "b1")[idx]
            text = chunk
            col = start
        if key in fields:
            raise ex.ParseError(f"duplicate field {key}", start)
        lead = len(text) - len(text.lstrip())
        fields[key] = (text, col + lead)
    missing = {"a0", "b(n)", "a(n)"} - set(fields)
    if missing:
        raise ex.ParseError(f"missing field(s) {sorted(missing)}", base)

    def scalar(key):
        text, col = fields[key]
        try:
            node = ex.parse(text)
        except ex.ParseError as exc:
            raise ex.ParseError(str(exc).rsplit(" (column", 1)[0], (exc.column or 1) + col - 1) from None
        return ex.evaluate_node(node, prec + nu.GUARD_BITS)

    a0 = scalar("a0")
    b = parse_term(*fields["b(n)"][:1], prec=prec, column=fields["b(n)"][1])
    a = parse_term(*fields["a(n)"][:1], prec=prec, column=fields["a(n)"][1])
    b1 = scalar("b1") if "b1" in fields else None
    return GCF(a0, b, a, b1=b1)
