"""Closed-form constant expressions such as ``gamma(1/4)^2/(2*sqrt(2*pi))``.

Expressions are parsed with :mod:`ast` (``^`` is accepted as power) and
evaluated either exactly, when they only involve rationals, or numerically
through :mod:`kontinued.numerics`.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr

from kontinued import numerics as nu


class ExprError(ValueError):
    def __init__(self, message: str, column: int | None = None):
        self.column = column
        where = f" (column {column})" if column is not None else ""
        super().__init__(message + where)


class ParseError(ExprError):
    pass


FUNCTIONS = {
    "gamma": 1,
    "beta": 2,
    "erf": 1,
    "erfi": 1,
    "exp": 1,
    "ln": 1,
    "log": 1,
    "sqrt": 1,
    "tanh": 1,
    "pow": 2,
}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


def _rewrite(text: str):
    """Python source for ``text`` plus a map from source offsets to columns of ``text``."""
    stripped = text.strip()
    lead = len(text) - len(text.lstrip())
    src, origin = [], []
    for i, ch in enumerate(stripped):
        piece = "**" if ch == "^" else ch
        src.append(piece)
        origin.extend([i + lead + 1] * len(piece))

    def column(offset):
        if offset is None or offset < 1 or offset > len(origin):
            return lead + len(stripped) + 1
        return origin[offset - 1]

    return "".join(src), column


def column_of(text: str, node: ast.AST) -> int:
    """1-based column in ``text`` of a node produced by ``parse(text)``."""
    return _rewrite(text)[1](getattr(node, "col_offset", 0) + 1)


def parse(text: str, variables: frozenset[str] | set[str] = frozenset()) -> ast.expr:
    """Parse and validate; returns the expression body of the AST.

    ``^`` is accepted for powers; reported columns refer to ``text``.
    """
    if not text.strip():
        raise ParseError("empty expression", 1)
    src, column = _rewrite(text)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}", column(exc.offset)) from None
    try:
        _validate(tree.body, set(variables))
    except ParseError as exc:
        raise ParseError(str(exc).rsplit(" (column", 1)[0], column(exc.column)) from None
    return tree.body


def _validate(node: ast.AST, variables: set[str]) -> None:
    col = getattr(node, "col_offset", 0) + 1
    if isinstance(node, ast.BinOp):
        if not isinstance(node.op, _BINOPS):
            raise ParseError(f"operator {type(node.op).__name__} not allowed", col)
        _validate(node.left, variables)
        _validate(node.right, variables)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise ParseError(f"operator {type(node.op).__name__} not allowed", col)
        _validate(node.operand, variables)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ParseError(f"bad literal {node.value!r}", col)
    elif isinstance(node, ast.Name):
        if node.id not in variables and node.id not in nu.constant_names():
            raise ParseError(f"unknown name {node.id!r}", col)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ParseError(f"unknown function {ast.unparse(node.func)!r}", col)
        if node.keywords or len(node.args) != FUNCTIONS[node.func.id]:
            raise ParseError(f"{node.func.id} takes {FUNCTIONS[node.func.id]} argument(s)", col)
        for arg in node.args:
            _validate(arg, variables)
    else:
        raise ParseError(f"unsupported syntax {type(node).__name__}", col)


def literal(node: ast.Constant) -> Fraction:
    # float literals are read from their source text so 0.1 means 1/10
    if isinstance(node.value, int):
        return Fraction(node.value)
    return Fraction(repr(node.value))


def contains_name(node: ast.AST, name: str) -> bool:
    return any(isinstance(n, ast.Name) and n.id == name for n in ast.walk(node))


def exact_value(node: ast.AST, env: dict | None = None) -> Fraction | None:
    """Exact rational value of ``node`` or None if it is not (visibly) rational."""
    env = env or {}
    if isinstance(node, ast.Constant):
        return literal(node)
    if isinstance(node, ast.Name):
        v = env.get(node.id)
        if isinstance(v, (int, Fraction)):
            return Fraction(v)
        return None
    if isinstance(node, ast.UnaryOp):
        v = exact_value(node.operand, env)
        if v is None:
            return None
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        left = exact_value(node.left, env)
        right = exact_value(node.right, env)
        if left is None or right is None:
            return None
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            if right == 0:
                raise nu.DomainError("division by zero", node.col_offset + 1)
            return left / right
        if isinstance(node.op, ast.Pow) and right.denominator == 1:
            if left == 0 and right < 0:
                raise nu.DomainError("zero to a negative power")
            return left ** int(right)
    return None


def evaluate_node(node: ast.AST, prec: int, env: dict | None = None):
    """Evaluate at ``prec`` bits; returns a Fraction when the value is exact."""
    env = env or {}
    exact = exact_value(node, env)
    if exact is not None:
        return exact
    wp = prec + nu.GUARD_BITS
    return nu.real(_num(node, wp, env), prec)


def _num(node: ast.AST, wp: int, env: dict) -> mpfr:
    exact = exact_value(node, env)
    if exact is not None:
        return nu.real(exact, wp)
    if isinstance(node, ast.Name):
        if node.id in env:
            v = env[node.id]
            if isinstance(v, ConstExpr):
                return v.evaluate(wp)
            if isinstance(v, str):
                return ConstExpr(v).evaluate(wp)
            return nu.real(v, wp)
        return nu.named_constant(node.id, wp)
    if isinstance(node, ast.UnaryOp):
        v = _num(node.operand, wp, env)
        with nu.workprec(wp):
            return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            expo = exact_value(node.right, env)
            base = _num(node.left, wp, env)
            if expo is not None and expo.denominator == 1:
                with nu.workprec(wp):
                    if base == 0 and expo < 0:
                        raise nu.DomainError("zero to a negative power")
                    return base ** int(expo)
            return nu.power(base, _num(node.right, wp, env), wp)
        left = _num(node.left, wp, env)
        right = _num(node.right, wp, env)
        with nu.workprec(wp):
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if right == 0:
                raise nu.DomainError("division by zero")
            return left / right
    if isinstance(node, ast.Call):
        name = node.func.id
        args = [_num(a, wp, env) for a in node.args]
        if name == "gamma":
            return nu.gamma(args[0], wp)
        if name == "beta":
            return nu.beta(args[0], args[1], wp)
        if name == "erf":
            return nu.erf(args[0], wp)
        if name == "erfi":
            return nu.erfi(args[0], wp)
        if name == "pow":
            return nu.power(args[0], args[1], wp)
        kind = "ln" if name == "log" else name
        return nu.elementary(kind, args[0], prec=wp)
    raise ExprError(f"cannot evaluate {ast.unparse(node)}")


@dataclass(frozen=True)
class ConstExpr:
    """A parsed closed-form expression over literals, named constants and functions."""

    text: str
    tree: ast.expr = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tree", parse(self.text))

    def __str__(self) -> str:
        return self.text

    def exact(self) -> Fraction | None:
        return exact_value(self.tree)

    def evaluate(self, prec: int = 256) -> mpfr:
        nu.check_prec(prec)
        return nu.real(_num(self.tree, prec + nu.GUARD_BITS, {}), prec)

    def value(self, prec: int = 256):
        """Fraction when exact, otherwise an mpfr at ``prec`` bits."""
        exact = self.exact()
        return exact if exact is not None else self.evaluate(prec)


def as_value(v, prec: int):
    """Coerce a user-supplied parameter (number, string expression, ConstExpr)."""
    if isinstance(v, bool):
        raise TypeError("booleans are not numbers")
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, ConstExpr):
        return v.value(prec)
    if isinstance(v, str):
        return ConstExpr(v).value(prec)
    if isinstance(v, mpfr):
        return v
    if isinstance(v, gmpy2.mpq):
        return Fraction(int(v.numerator), int(v.denominator))
    if isinstance(v, float):
        return Fraction(v)
    raise TypeError(f"unsupported parameter type {type(v).__name__}")
