"""Constants databases: build from a source file, persist, prefilter, confirm.

Source files are line oriented::

    # comment
    phi = (1+sqrt(5))/2 | algebraic golden | the golden ratio
    gamma_quotient_grid(xi in {1/4..2 step 1/4})
    grid(tanh_{k}pi_4, tanh({k}*pi/4), k in {1..4})

Each entry line is ``id = expr [| tags [| description]]``. Built databases
are stored as ``id<TAB>expr<TAB>digits<TAB>tags<TAB>description``.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np
from gmpy2 import mpfr

from kontinued import expr as ex
from kontinued import numerics as nu
from kontinued.pslq import MatchReport, match_value, relation_residual

DB_PREC = 3400  # >= 1000 cached digits
AFFINE_BOUND = 4
AFFINE_DENOMINATORS = (1, 2, 3, 4)
ENV_DB = "KONTINUED_DB"


class DBParseError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class EvalError(ArithmeticError):
    def __init__(self, entry_id: str, cause: Exception):
        self.entry_id = entry_id
        super().__init__(f"cannot evaluate entry {entry_id!r}: {cause}")


@dataclass(frozen=True)
class ConstantEntry:
    id: str
    expr: ex.ConstExpr
    cached_value: str
    tags: tuple[str, ...] = ()
    description: str = ""

    @cached_property
    def float_value(self) -> float:
        return float(mpfr(self.cached_value, 80))

    @property
    def cached_bits(self) -> int:
        digits = len(re.sub(r"[^0-9]", "", self.cached_value.split("e")[0]))
        return int(digits * math.log2(10)) - 8

    def value(self, prec: int = 256) -> mpfr:
        """Value at ``prec`` bits, from the cached digits when they suffice."""
        if prec <= self.cached_bits:
            return nu.real(self.cached_value, prec)
        return self.expr.evaluate(prec)


@dataclass
class ConstDB:
    entries: list[ConstantEntry]
    prec: int = DB_PREC
    _index: tuple = field(init=False, repr=False, default=None)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.id in seen:
                raise ValueError(f"duplicate id {e.id!r}")
            seen.add(e.id)
        self._index = _build_index(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, entry_id: str) -> ConstantEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

    def prefilter_hits(self, y64: float, tol: float = 1e-9) -> list[tuple[ConstantEntry, int, int, int]]:
        """All (entry, p, q, r) with |(q c + r)/p - y64| <= tol."""
        if not math.isfinite(y64):
            return []
        vals, idx, p, q, r = self._index
        lo = np.searchsorted(vals, y64 - tol, side="left")
        hi = np.searchsorted(vals, y64 + tol, side="right")
        return [(self.entries[idx[i]], int(p[i]), int(q[i]), int(r[i])) for i in range(lo, hi)]

    def prefilter_lookup(self, y64: float, tol: float = 1e-9) -> list[ConstantEntry]:
        """Entries c for which some affine image (q c + r)/p lies within tol of y64."""
        out, seen = [], set()
        hits = sorted(self.prefilter_hits(y64, tol), key=lambda h: abs((h[2] * h[0].float_value + h[3]) / h[1] - y64))
        for entry, *_ in hits:
            if entry.id not in seen:
                seen.add(entry.id)
                out.append(entry)
        return out


def _affine_table():
    rows = set()
    for p in AFFINE_DENOMINATORS:
        lim = AFFINE_BOUND * p
        for q in range(-lim, lim + 1):
            if q == 0:
                continue
            for r in range(-lim, lim + 1):
                g = math.gcd(math.gcd(p, abs(q)), abs(r))
                rows.add((p // g, q // g, r // g))
    return np.array(sorted(rows), dtype=np.int64)


_AFFINE = _affine_table()


def _build_index(entries):
    if not entries:
        empty = np.empty(0)
        return empty, empty.astype(np.int64), empty, empty, empty
    c = np.array([e.float_value for e in entries])
    p, q, r = _AFFINE[:, 0], _AFFINE[:, 1], _AFFINE[:, 2]
    vals = (q[None, :] * c[:, None] + r[None, :]) / p[None, :]
    idx = np.repeat(np.arange(len(entries)), len(_AFFINE))
    vals = vals.ravel()
    pp, qq, rr = (np.tile(a, len(entries)) for a in (p, q, r))
    keep = np.isfinite(vals) & (np.repeat(c, len(_AFFINE)) != 0)
    order = np.argsort(vals[keep], kind="stable")
    return vals[keep][order], idx[keep][order], pp[keep][order], qq[keep][order], rr[keep][order]


# ---------------------------------------------------------------------------
# source parsing

_ENTRY = re.compile(r"^(?P<id>[A-Za-z_][A-Za-z0-9_]*)\s*=\s*(?P<rest>.+)$")
_GEN = re.compile(r"^(?P<name>[a-z_]+)\s*\((?P<args>.*)\)\s*(?:\|(?P<tags>.*))?$")
_SET = re.compile(r"^\s*(?P<var>[a-z_]\w*)\s+in\s+\{(?P<body>.*)\}\s*$")


def _parse_set(text: str, line: int) -> tuple[str, list[str]]:
    m = _SET.match(text)
    if not m:
        raise DBParseError(f"bad range {text.strip()!r}", line)
    body = m.group("body").strip()
    rng = re.match(r"^(?P<lo>.+?)\.\.(?P<hi>.+?)(?:\s+step\s+(?P<step>.+))?$", body)
    if rng:
        try:
            lo = ex.ConstExpr(rng.group("lo")).exact()
            hi = ex.ConstExpr(rng.group("hi")).exact()
            step = ex.ConstExpr(rng.group("step") or "1").exact()
        except ex.ParseError as exc:
            raise DBParseError(str(exc), line) from None
        if lo is None or hi is None or step is None or step <= 0:
            raise DBParseError("range bounds and step must be rationals (step > 0)", line)
        values, v = [], lo
        while v <= hi:
            values.append(str(v))
            v += step
        return m.group("var"), values
    return m.group("var"), [v.strip() for v in body.split(",") if v.strip()]


def _slug(value: str) -> str:
    s = value.replace("-", "m").replace("/", "_").replace("*", "").replace(" ", "")
    s = re.sub(r"[^A-Za-z0-9_]", "", s)
    return s


def _split_args(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        if ch == "," and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    out.append(cur)
    return [a.strip() for a in out]


_GENERATORS = {
    "gamma_quotient_grid": ("gq_{xi}", "gamma({xi}+1/2)/gamma({xi})", ("gamma", "quotient")),
    "sqrt_grid": ("sqrt{k}", "sqrt({k})", ("algebraic",)),
    "ln_grid": ("ln{k}", "ln({k})", ("log",)),
}


def parse_source(text: str) -> list[tuple[str, str, tuple[str, ...], str, int]]:
    """Parse a source file into (id, expr, tags, description, line) tuples."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _ENTRY.match(line)
        if m:
            parts = [p.strip() for p in m.group("rest").split("|")]
            if len(parts) > 3:
                raise DBParseError("too many '|' fields", lineno)
            expr_text = parts[0]
            tags = tuple(t for t in re.split(r"[,\s]+", parts[1]) if t) if len(parts) > 1 else ()
            desc = parts[2] if len(parts) > 2 else ""
            rows.append((m.group("id"), expr_text, tags, desc, lineno))
            continue
        g = _GEN.match(line)
        if not g:
            raise DBParseError(f"cannot parse {line!r}", lineno)
        name = g.group("name")
        extra_tags = tuple(t for t in re.split(r"[,\s]+", g.group("tags") or "") if t)
        args = _split_args(g.group("args"))
        if name == "grid":
            if len(args) != 3:
                raise DBParseError("grid(id_template, expr_template, var in {...})", lineno)
            id_tpl, expr_tpl, rng = args
            tags = ("generated",)
        elif name in _GENERATORS:
            if len(args) != 1:
                raise DBParseError(f"{name} takes one range argument", lineno)
            id_tpl, expr_tpl, tags = _GENERATORS[name]
            rng = args[0]
            tags = tags + ("generated",)
        else:
            raise DBParseError(f"unknown generator {name!r}", lineno)
        var, values = _parse_set(rng, lineno)
        for v in values:
            if name == "sqrt_grid" and Fraction(v).denominator == 1 and math.isqrt(int(Fraction(v))) ** 2 == int(Fraction(v)):
                continue
            entry_id = id_tpl.replace("{" + var + "}", _slug(v))
            e_text = expr_tpl.replace("{" + var + "}", f"({v})")
            rows.append((entry_id, e_text, tags + extra_tags, "", lineno))
    return rows


def build(source, prec: int = DB_PREC) -> ConstDB:
    """Evaluate every entry of a source file (path or text) at ``prec`` bits."""
    prec = nu.check_prec(prec)
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and os.path.exists(source)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    digits = nu.digits_for(prec)
    entries, seen = [], {}
    for entry_id, expr_text, tags, desc, lineno in parse_source(text):
        if entry_id in seen:
            raise DBParseError(f"duplicate id {entry_id!r} (first on line {seen[entry_id]})", lineno)
        seen[entry_id] = lineno
        try:
            cexpr = ex.ConstExpr(expr_text)
        except ex.ParseError as exc:
            raise DBParseError(str(exc), lineno) from None
        try:
            value = cexpr.evaluate(prec)
        except (ArithmeticError, ValueError) as exc:
            raise EvalError(entry_id, exc) from exc
        entries.append(ConstantEntry(entry_id, cexpr, nu.to_digits(value, digits), tags, desc))
    return ConstDB(entries, prec)


def save(db: ConstDB, path) -> None:
    lines = [f"# kontinued constants db v1 prec={db.prec}"]
    for e in db.entries:
        lines.append("\t".join([e.id, e.expr.text, e.cached_value, ",".join(e.tags), e.description]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load(path) -> ConstDB:
    prec = DB_PREC
    entries = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if raw.startswith("#"):
            m = re.search(r"prec=(\d+)", raw)
            if m:
                prec = int(m.group(1))
            continue
        if not raw.strip():
            continue
        cols = raw.split("\t")
        if len(cols) < 3:
            raise DBParseError("expected id, expr, digits[, tags[, description]]", lineno)
        entry_id, expr_text, digits = cols[:3]
        tags = tuple(t for t in cols[3].split(",") if t) if len(cols) > 3 else ()
        desc = cols[4] if len(cols) > 4 else ""
        try:
            cexpr = ex.ConstExpr(expr_text)
        except ex.ParseError as exc:
            raise DBParseError(str(exc), lineno) from None
        entries.append(ConstantEntry(entry_id, cexpr, digits, tags, desc))
    return ConstDB(entries, prec)


def base_source_path() -> Path:
    return Path(str(resources.files("kontinued") / "data" / "base.spec"))


def default_db_path() -> Path:
    env = os.environ.get(ENV_DB)
    if env:
        return Path(env)
    return Path(str(resources.files("kontinued") / "data" / "base.tsv"))


def load_default() -> ConstDB:
    return load(default_db_path())


# ---------------------------------------------------------------------------
# confirmation


def _value_at(y, prec: int) -> mpfr:
    if callable(y):
        return y(prec)
    if isinstance(y, (str, ex.ConstExpr)):
        v = ex.as_value(y, prec)
        return nu.real(v, prec + nu.GUARD_BITS)
    return nu.real(y, max(prec + nu.GUARD_BITS, getattr(y, "precision", 0)))


def confirm_match(y, entry: ConstantEntry, prec: int = 256, max_norm: int = 1000) -> MatchReport:
    """PSLQ match of y against one entry, re-verified at twice the precision.

    ``y`` may be a number, an expression string or a callable ``prec -> mpfr``.
    A plain number is taken as exact, so it must carry enough bits for the
    2*prec re-check to mean anything.
    """
    prec = nu.check_prec(prec)
    yv = _value_at(y, prec)
    c = entry.value(prec)
    hits = match_value(yv, [(entry.id, c)], max_norm=max_norm, prec=prec)
    if not hits:
        return MatchReport(entry.id, (0, 0, 0), mpfr("inf"), 0, confirmed=False)
    hit = hits[0]
    p2 = 2 * prec
    y2 = _value_at(y, p2)
    c2 = entry.value(p2)
    residual2 = relation_residual(hit.relation, [y2, c2, 1], p2)
    with nu.workprec(p2 + nu.GUARD_BITS):
        bound = mpfr(2) ** (-p2 + 64) * max(abs(y2), abs(c2), mpfr(1))
    ok = residual2 <= bound
    return MatchReport(
        entry.id,
        hit.relation,
        mpfr(residual2, p2),
        hit.sup_norm,
        confirmed=bool(ok),
        details={"residual_first_pass": hit.residual, "recheck_prec": p2},
    )
