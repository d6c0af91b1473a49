"""PSLQ integer relation detection and linear-rational constant matching."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from kontinued import numerics as nu

GAMMA = 2 / math.sqrt(3)


class PrecisionTooLow(ValueError):
    pass


class RelationStatus(str, enum.Enum):
    FOUND = "Found"
    EXHAUSTED = "Exhausted"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class RelationCandidate:
    coefficients: tuple[int, ...] | None
    residual: mpfr | None
    sup_norm: int
    status: RelationStatus
    norm_bound: mpfr
    iterations: int = 0

    @property
    def found(self) -> bool:
        return self.status is RelationStatus.FOUND


def detection_threshold(x, prec: int) -> mpfr:
    with nu.workprec(prec + nu.GUARD_BITS):
        return mpfr(2) ** (-prec + 64) * max(abs(v) for v in x)


def relation_residual(coeffs, x, prec: int) -> mpfr:
    with nu.workprec(prec + nu.GUARD_BITS):
        return abs(sum((mpfr(c) * v for c, v in zip(coeffs, x)), mpfr(0)))


def _nint(v: mpfr) -> int:
    return int(gmpy2.rint(v))


def pslq(x, max_norm: int = 1000, prec: int = 256, max_iter: int | None = None) -> RelationCandidate:
    """Find integers m (not all zero) with |sum m_i x_i| below the detection threshold.

    Returns Found with the relation, or Exhausted once PSLQ has proven that
    every relation has Euclidean norm above sqrt(k) * max_norm (so none has
    sup norm <= max_norm), or after ``200 k^2`` iterations.
    """
    prec = nu.check_prec(prec)
    k = len(x)
    if k < 2:
        raise ValueError("need at least two numbers")
    if max_norm < 1:
        raise ValueError("max_norm must be >= 1")
    if k * math.log2(max_norm) > prec / 2:
        raise PrecisionTooLow(
            f"{k} numbers with max_norm={max_norm} need more than {prec} bits"
        )
    max_iter = 200 * k * k if max_iter is None else max_iter
    wp = prec + nu.GUARD_BITS
    with nu.workprec(wp):
        xs = [nu.real(v, wp) for v in x]
        if any(v == 0 for v in xs):
            raise ValueError("all inputs must be nonzero")
        threshold = detection_threshold(xs, prec)
        target_bound = mpfr(max_norm) * gmpy2.sqrt(mpfr(k))

        norm = gmpy2.sqrt(sum((v * v for v in xs), mpfr(0)))
        y = [v / norm for v in xs]
        rel_eps = mpfr(2) ** (-prec + 64)
        s = [mpfr(0)] * k
        acc = mpfr(0)
        for j in range(k - 1, -1, -1):
            acc += y[j] * y[j]
            s[j] = gmpy2.sqrt(acc)

        # H is k x (k-1), lower trapezoidal
        H = [[mpfr(0)] * (k - 1) for _ in range(k)]
        for i in range(k):
            for j in range(min(i + 1, k - 1)):
                if i == j:
                    H[i][j] = s[j + 1] / s[j]
                else:
                    H[i][j] = -y[i] * y[j] / (s[j] * s[j + 1])
        A = [[int(i == j) for j in range(k)] for i in range(k)]
        B = [[int(i == j) for j in range(k)] for i in range(k)]

        def reduce_rows(start: int):
            for i in range(start, k):
                for j in range(min(i - 1, k - 2), -1, -1):
                    if H[j][j] == 0:
                        continue
                    t = _nint(H[i][j] / H[j][j])
                    if t == 0:
                        continue
                    y[j] += t * y[i]
                    for c in range(j + 1):
                        H[i][c] -= t * H[j][c]
                    for c in range(k):
                        A[i][c] -= t * A[j][c]
                        B[c][j] += t * B[c][i]

        reduce_rows(1)
        bound = mpfr(0)
        gamma = mpfr(GAMMA)
        for it in range(1, max_iter + 1):
            # pick the row maximising gamma^i |H_ii|
            best, m = mpfr(-1), 0
            gp = mpfr(1)
            for i in range(k - 1):
                gp *= gamma
                v = gp * abs(H[i][i])
                if v > best:
                    best, m = v, i
            y[m], y[m + 1] = y[m + 1], y[m]
            H[m], H[m + 1] = H[m + 1], H[m]
            A[m], A[m + 1] = A[m + 1], A[m]
            for r in range(k):
                B[r][m], B[r][m + 1] = B[r][m + 1], B[r][m]
            if m < k - 2:
                t0 = gmpy2.sqrt(H[m][m] ** 2 + H[m][m + 1] ** 2)
                t1, t2 = H[m][m] / t0, H[m][m + 1] / t0
                for i in range(m, k):
                    t3, t4 = H[i][m], H[i][m + 1]
                    H[i][m] = t1 * t3 + t2 * t4
                    H[i][m + 1] = -t2 * t3 + t1 * t4
            reduce_rows(m + 1)

            # a tiny y_j marks column j of B as a relation
            for j in range(k):
                if abs(y[j]) <= rel_eps:
                    coeffs = tuple(B[r][j] for r in range(k))
                    if any(coeffs):
                        res = relation_residual(coeffs, xs, prec)
                        if res <= threshold:
                            return _found(coeffs, res, bound, it)
            hmax = max(abs(H[i][i]) for i in range(k - 1))
            if hmax == 0:
                break
            bound = max(bound, 1 / hmax)
            if bound > target_bound:
                return RelationCandidate(None, None, 0, RelationStatus.EXHAUSTED, mpfr(bound, prec), it)
        return RelationCandidate(None, None, 0, RelationStatus.EXHAUSTED, mpfr(bound, prec), max_iter)


def _found(coeffs, residual, bound, iterations) -> RelationCandidate:
    g = math.gcd(*coeffs)
    coeffs = tuple(c // g for c in coeffs)
    # sign convention: first nonzero coefficient positive
    lead = next(c for c in coeffs if c)
    if lead < 0:
        coeffs = tuple(-c for c in coeffs)
    return RelationCandidate(
        coeffs,
        residual,
        max(abs(c) for c in coeffs),
        RelationStatus.FOUND,
        bound,
        iterations,
    )


# ---------------------------------------------------------------------------
# matching a value against named constants


@dataclass(frozen=True)
class MatchReport:
    """``p*y + q*c + r = 0`` for the constant named ``name``; i.e. y = -(q c + r)/p."""

    name: str
    relation: tuple[int, int, int]
    residual: mpfr
    sup_norm: int
    confirmed: bool = False
    details: dict = field(default_factory=dict, compare=False)

    @property
    def multiplier(self) -> Fraction:
        p, q, _ = self.relation
        return Fraction(-q, p)

    @property
    def shift(self) -> Fraction:
        p, _, r = self.relation
        return Fraction(-r, p)

    def formula(self, symbol: str | None = None) -> str:
        c = symbol or self.name
        q, r = self.multiplier, self.shift
        if q == 1:
            text = c
        elif q == -1:
            text = f"-{c}"
        elif q.denominator == 1:
            text = f"{q}*{c}"
        else:
            text = f"({q})*{c}"
        if r > 0:
            text += f" + {r}"
        elif r < 0:
            text += f" - {-r}"
        return "y = " + text


def match_value(y, candidates, pattern: str = "linear_rational", max_norm: int = 1000, prec: int = 256):
    """Run PSLQ on (y, c, 1) for every candidate constant c.

    Only relations involving both y and c are reported (p != 0 and q != 0);
    a relation with q = 0 just says y is rational. Hits are sorted by sup
    norm, then residual.
    """
    if pattern != "linear_rational":
        raise ValueError(f"unsupported match pattern {pattern!r}")
    hits = []
    for name, c in candidates:
        try:
            rel = pslq([y, c, 1], max_norm=max_norm, prec=prec)
        except ValueError:
            # a zero input (y == 0 or c == 0) has no meaningful match
            continue
        if not rel.found:
            continue
        p, q, r = rel.coefficients
        if p == 0 or q == 0 or rel.sup_norm > max_norm:
            continue
        if p < 0:
            p, q, r = -p, -q, -r
        hits.append(MatchReport(name, (p, q, r), rel.residual, rel.sup_norm))
    hits.sort(key=lambda h: (h.sup_norm, h.residual))
    return hits
