"""Arbitrary-precision reals and the special functions used by the identities.

Reals are ``gmpy2.mpfr`` values; each carries its own precision in bits.
Every public function takes a target precision ``prec``, works internally
at ``prec + GUARD_BITS`` and returns a value rounded to ``prec`` bits.
Callers should trust roughly ``prec - 32`` bits of the result.
"""

from __future__ import annotations

import math
import threading
from contextlib import contextmanager
from fractions import Fraction
from numbers import Rational

import gmpy2
from gmpy2 import mpfr, mpq

GUARD_BITS = 64
MIN_PREC = 64


class NumericsError(ArithmeticError):
    pass


class PoleError(NumericsError):
    """Argument sits on (or within tolerance of) a pole of the gamma function."""


class DomainError(NumericsError, ValueError):
    """Argument outside the real domain of the requested function."""


class UnknownConstant(KeyError):
    pass


@contextmanager
def workprec(bits: int):
    """Temporarily set the gmpy2 context precision to ``bits``."""
    with gmpy2.context(gmpy2.get_context(), precision=int(bits)):
        yield


def check_prec(prec: int) -> int:
    prec = int(prec)
    if prec < MIN_PREC:
        raise ValueError(f"precision must be >= {MIN_PREC} bits, got {prec}")
    return prec


def real(x, prec: int) -> mpfr:
    """Convert ``x`` to an mpfr rounded to ``prec`` bits.

    Accepts ints, Fractions (and any ``numbers.Rational``), gmpy2 types,
    floats and decimal strings. Strings are read exactly and then rounded.
    """
    if isinstance(x, mpfr):
        return mpfr(x, prec)
    if isinstance(x, bool):
        raise TypeError("booleans are not reals")
    if isinstance(x, (int, gmpy2.mpz, gmpy2.mpq)):
        return mpfr(x, prec)
    if isinstance(x, Rational):
        return mpfr(mpq(x.numerator, x.denominator), prec)
    if isinstance(x, str):
        with workprec(prec):
            return mpfr(x.strip(), prec)
    if isinstance(x, float):
        return mpfr(x, prec)
    raise TypeError(f"cannot convert {type(x).__name__} to a real")


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, gmpy2.mpz, gmpy2.mpq))


def to_digits(x: mpfr, digits: int) -> str:
    """Scientific decimal string with ``digits`` significant digits."""
    if x == 0:
        return "0"
    if not gmpy2.is_finite(x):
        raise DomainError(f"non-finite value {x}")
    mant, exp, _ = x.digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1:+d}"


def digits_for(prec: int) -> int:
    """Number of decimal digits worth printing for a value computed at ``prec``."""
    return max(1, math.floor((prec - GUARD_BITS) * math.log10(2)))


# ---------------------------------------------------------------------------
# Gamma and Beta

_bernoulli_lock = threading.Lock()
_bernoulli_cache: list[Fraction] = []


def _tangent_numbers(m: int) -> list[int]:
    # Brent-Harvey integer recurrence; T[k] is the k-th tangent number.
    t = [0] * (m + 1)
    t[1] = 1
    for k in range(2, m + 1):
        t[k] = (k - 1) * t[k - 1]
    for k in range(2, m + 1):
        for j in range(k, m + 1):
            t[j] = (j - k) * t[j - 1] + (j - k + 2) * t[j]
    return t


def bernoulli_even(count: int) -> list[Fraction]:
    """Exact B_2, B_4, ..., B_{2*count}."""
    with _bernoulli_lock:
        if len(_bernoulli_cache) < count:
            m = max(count, 2 * len(_bernoulli_cache), 16)
            t = _tangent_numbers(m)
            _bernoulli_cache[:] = [
                Fraction((-1) ** (k - 1) * 2 * k * t[k], 4**k * (4**k - 1))
                for k in range(1, m + 1)
            ]
        return _bernoulli_cache[:count]


def _near_nonpositive_integer(x: mpfr, prec: int) -> bool:
    if x > 0:
        return False
    with workprec(x.precision + 8):
        nearest = gmpy2.rint(x)
        return abs(x - nearest) <= mpfr(2) ** (-(prec // 2))


def _lngamma_stirling(z: mpfr, wp: int) -> mpfr:
    # z is already shifted far enough that the asymptotic series reaches 2^-wp
    # before its terms start to grow.
    with workprec(wp):
        s = (z - mpfr(0.5)) * gmpy2.log(z) - z + gmpy2.log(2 * gmpy2.const_pi()) / 2
        eps = mpfr(2) ** (-wp) * abs(s)
        zinv2 = 1 / (z * z)
        zpow = 1 / z
        count = 32
        k = 0
        prev = None
        while True:
            if k == count:
                count *= 2
            bern = bernoulli_even(count)
            while k < count:
                b = bern[k]
                n2 = 2 * (k + 1)
                term = mpfr(mpq(b.numerator, b.denominator * n2 * (n2 - 1))) * zpow
                # the remainder is bounded by the first omitted term
                if abs(term) <= eps:
                    return s
                if prev is not None and abs(term) > abs(prev):
                    raise NumericsError("Stirling series diverged; shift too small")
                s += term
                prev = term
                zpow *= zinv2
                k += 1


def _gamma_positive(x: mpfr, prec: int) -> mpfr:
    wp = prec + GUARD_BITS
    if gmpy2.is_integer(x) and x <= 4 * wp:
        return mpfr(math.factorial(int(x) - 1), prec)
    shift_to = max(20, wp // 2)
    n_shift = max(0, math.ceil(shift_to - x))
    with workprec(wp + 16):
        z = x + n_shift
        extra = int(gmpy2.log2(z * gmpy2.log(z))) + 8
    wp2 = wp + extra + n_shift.bit_length()
    with workprec(wp2):
        z = x + n_shift
        lg = _lngamma_stirling(z, wp2)
        prod = mpfr(1)
        for j in range(n_shift):
            prod *= x + j
        return mpfr(gmpy2.exp(lg) / prod, prec)


def gamma(x, prec: int = 256) -> mpfr:
    """Gamma function of a real argument.

    Uses the Stirling series after shifting the argument upward, and the
    reflection formula below 1/2. Raises PoleError within 2^(-prec/2) of a
    non-positive integer.
    """
    prec = check_prec(prec)
    wp = prec + GUARD_BITS
    xv = x if isinstance(x, mpfr) and x.precision >= wp else real(x, wp)
    if not gmpy2.is_finite(xv):
        raise DomainError(f"gamma of non-finite value {xv}")
    if _near_nonpositive_integer(xv, prec):
        raise PoleError(f"gamma pole at {xv}")
    if xv >= 0.5:
        return _gamma_positive(xv, prec)
    # reflection: gamma(x) = pi / (sin(pi x) gamma(1 - x))
    extra = int(gmpy2.ceil(gmpy2.log2(abs(xv) + 2))) + prec // 2 + 8
    with workprec(wp + extra):
        k = gmpy2.rint(xv)
        frac = xv - k
        s = gmpy2.sin(gmpy2.const_pi() * frac)
        if int(k) % 2:
            s = -s
        g1 = _gamma_positive(1 - xv, prec + extra)
        return mpfr(gmpy2.const_pi() / (s * g1), prec)


def beta(a, b, prec: int = 256) -> mpfr:
    """Beta function B(a, b) = gamma(a) gamma(b) / gamma(a + b)."""
    prec = check_prec(prec)
    wp = prec + GUARD_BITS
    av, bv = real(a, wp), real(b, wp)
    with workprec(wp):
        s = av + bv
    ga, gb, gs = gamma(av, wp), gamma(bv, wp), gamma(s, wp)
    with workprec(wp):
        return mpfr(ga * gb / gs, prec)


# ---------------------------------------------------------------------------
# erf / erfi


def erf_erfi(x, imaginary_variant: bool = False, prec: int = 256) -> mpfr:
    """erf(x), or erfi(x) = -i erf(ix) when ``imaginary_variant`` is set.

    Maclaurin series 2/sqrt(pi) * sum (-+1)^k x^(2k+1) / (k! (2k+1)). The
    alternating erf series is summed with enough extra bits to absorb the
    cancellation (about x^2 log2(e) bits).
    """
    prec = check_prec(prec)
    wp = prec + GUARD_BITS
    xv = real(x, wp)
    if not gmpy2.is_finite(xv):
        raise DomainError(f"erf of non-finite value {xv}")
    if xv == 0:
        return mpfr(0, prec)
    negative = xv < 0
    with workprec(wp):
        ax = abs(xv)
    t_float = float(ax) ** 2
    extra = 16 + (0 if imaginary_variant else math.ceil(t_float * 1.4427))
    wp2 = wp + extra
    with workprec(wp2):
        ax = mpfr(ax, wp2)
        t = ax * ax
        term = ax
        total = ax
        k = 0
        while True:
            k += 1
            term = term * t / k
            piece = term / (2 * k + 1)
            if imaginary_variant:
                total += piece
            elif k % 2:
                total -= piece
            else:
                total += piece
            # once t/(k+1) <= 1/2 the tail is at most twice the next piece
            if k + 1 >= 2 * t_float + 2 and 2 * piece <= mpfr(2) ** (-wp) * abs(total):
                break
        result = 2 * total / gmpy2.sqrt(gmpy2.const_pi())
        if negative:
            result = -result
        return mpfr(result, prec)


def erf(x, prec: int = 256) -> mpfr:
    return erf_erfi(x, False, prec)


def erfi(x, prec: int = 256) -> mpfr:
    return erf_erfi(x, True, prec)


# ---------------------------------------------------------------------------
# Elementary functions (MPFR, correctly rounded at the working precision)


def elementary(kind: str, *args, prec: int = 256) -> mpfr:
    prec = check_prec(prec)
    wp = prec + GUARD_BITS
    vals = [real(a, wp) for a in args]
    arity = 2 if kind == "pow" else 1
    if len(vals) != arity:
        raise TypeError(f"{kind} takes {arity} argument(s), got {len(vals)}")
    with workprec(wp):
        if kind == "exp":
            out = gmpy2.exp(vals[0])
        elif kind == "ln":
            if vals[0] <= 0:
                raise DomainError(f"ln of non-positive value {vals[0]}")
            out = gmpy2.log(vals[0])
        elif kind == "tanh":
            out = gmpy2.tanh(vals[0])
        elif kind == "sqrt":
            if vals[0] < 0:
                raise DomainError(f"sqrt of negative value {vals[0]}")
            out = gmpy2.sqrt(vals[0])
        elif kind == "pow":
            base, expo = vals
            if base < 0 and not gmpy2.is_integer(expo):
                raise DomainError(f"pow with negative base {base} and non-integer exponent")
            if base == 0 and expo <= 0:
                raise DomainError("pow(0, y) with y <= 0")
            out = base**expo
        else:
            raise ValueError(f"unknown elementary function {kind!r}")
    if not gmpy2.is_finite(out):
        raise DomainError(f"{kind}{tuple(args)} is not finite")
    return mpfr(out, prec)


def exp(x, prec: int = 256) -> mpfr:
    return elementary("exp", x, prec=prec)


def ln(x, prec: int = 256) -> mpfr:
    return elementary("ln", x, prec=prec)


def tanh(x, prec: int = 256) -> mpfr:
    return elementary("tanh", x, prec=prec)


def sqrt(x, prec: int = 256) -> mpfr:
    return elementary("sqrt", x, prec=prec)


def power(base, expo, prec: int = 256) -> mpfr:
    return elementary("pow", base, expo, prec=prec)


# ---------------------------------------------------------------------------
# Named constants


def _lemniscate(wp: int) -> mpfr:
    g = gamma(Fraction(1, 4), wp)
    with workprec(wp):
        return g * g / (2 * gmpy2.sqrt(2 * gmpy2.const_pi()))


def _phi(wp: int) -> mpfr:
    with workprec(wp):
        return (1 + gmpy2.sqrt(mpfr(5))) / 2


def _simple(fn):
    def inner(wp):
        with workprec(wp):
            return fn()

    return inner


_CONSTANTS = {
    "pi": _simple(gmpy2.const_pi),
    "e": _simple(lambda: gmpy2.exp(mpfr(1))),
    "phi": _phi,
    "sqrt2": _simple(lambda: gmpy2.sqrt(mpfr(2))),
    "sqrt3": _simple(lambda: gmpy2.sqrt(mpfr(3))),
    "lemniscate": _lemniscate,
    "euler_gamma": _simple(gmpy2.const_euler),
    "ln2": _simple(gmpy2.const_log2),
    "catalan": _simple(gmpy2.const_catalan),
    "zeta3": _simple(lambda: gmpy2.zeta(mpfr(3))),
}

_local = threading.local()


def register_constant(name: str, fn) -> None:
    """Add a constant; ``fn(wp)`` must return the value at ``wp`` bits."""
    _CONSTANTS[name] = fn


def constant_names() -> list[str]:
    return sorted(_CONSTANTS)


def named_constant(name: str, prec: int = 256) -> mpfr:
    prec = check_prec(prec)
    try:
        fn = _CONSTANTS[name]
    except KeyError:
        raise UnknownConstant(name) from None
    cache = getattr(_local, "cache", None)
    if cache is None:
        cache = _local.cache = {}
    key = (name, prec)
    if key not in cache:
        cache[key] = mpfr(fn(prec + GUARD_BITS), prec)
    return cache[key]
