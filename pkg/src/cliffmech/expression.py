"""Hamiltonian expressions: parsing, evaluation and symbolic differentiation.

Surface grammar (whitespace is ignored)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" ["-"] INTEGER)?
    primary := NUMBER | VARIABLE | FUNC "(" expr ")" | "(" expr ")"

``VARIABLE`` is ``x`` followed by a coordinate index (``x0``, ``x17``) and
``FUNC`` is one of ``sin cos exp sqrt``. Exponents must be integer literals.
Constants in a tree are never negative; a negative value is represented as
``Neg(Const(...))`` so that printing and re-parsing reproduce the same tree.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import EvaluationError, InvalidArgumentError, ParseError

FUNCTIONS = ("sin", "cos", "exp", "sqrt")
BINARY_OPS = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
_SYMBOL_TO_OP = {v: k for k, v in BINARY_OPS.items()}

# binding strength used by the printer
_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2}
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


class Expression:
    """Base class of expression tree nodes. Nodes are immutable."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True)
class Const(Expression):
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v < 0:
            raise InvalidArgumentError(f"constants must be finite and non-negative, got {v}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Var(Expression):
    index: int


@dataclass(frozen=True)
class Neg(Expression):
    arg: Expression


@dataclass(frozen=True)
class Func(Expression):
    name: str
    arg: Expression

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise InvalidArgumentError(f"unknown function {self.name!r}")


@dataclass(frozen=True)
class Binary(Expression):
    op: str
    left: Expression
    right: Expression

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise InvalidArgumentError(f"unknown binary operator {self.op!r}")


@dataclass(frozen=True)
class Pow(Expression):
    base: Expression
    exponent: int

    def __post_init__(self):
        if isinstance(self.exponent, bool) or not isinstance(self.exponent, int):
            raise InvalidArgumentError("exponents must be integer literals")


# ----------------------------------------------------------------------------
# tokenizer / parser

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>x\d+)
  | (?P<name>[A-Za-z_]\w*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, {"expression"}, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


_PRIMARY_EXPECTED = frozenset({"number", "variable", "function", "("})


class _Parser:
    def __init__(self, text: str, dimension: int):
        self.text = text
        self.dimension = dimension
        self.tokens = _tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str, expected) -> ParseError:
        return ParseError(message, self.tok.offset, expected, self.text)

    def advance(self) -> _Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect_op(self, symbol: str) -> None:
        if self.tok.kind == "op" and self.tok.text == symbol:
            self.advance()
            return
        found = repr(self.tok.text) if self.tok.kind != "end" else "end of input"
        raise self.error(f"expected {symbol!r}, found {found}", {symbol})

    def parse(self) -> Expression:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(
                f"unexpected {self.tok.text!r}", {"+", "-", "*", "/", "^", "end of input"}
            )
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = _SYMBOL_TO_OP[self.advance().text]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = _SYMBOL_TO_OP[self.advance().text]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expression:
        base = self.primary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            negative = False
            if self.tok.kind == "op" and self.tok.text == "-":
                self.advance()
                negative = True
            tok = self.tok
            if tok.kind != "number" or not tok.text.isdigit():
                raise self.error("exponent must be an integer literal", {"integer"})
            self.advance()
            exponent = int(tok.text)
            return Pow(base, -exponent if negative else exponent)
        return base

    def primary(self) -> Expression:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal {tok.text!r} overflows", tok.offset, {"number"}, self.text)
            return Const(value)
        if tok.kind == "var":
            index = int(tok.text[1:])
            if index >= self.dimension:
                raise ParseError(
                    f"variable {tok.text} out of range for dimension {self.dimension} "
                    f"(valid: x0..x{self.dimension - 1})",
                    tok.offset, {"variable"}, self.text,
                )
            self.advance()
            return Var(index)
        if tok.kind == "name":
            if tok.text not in FUNCTIONS:
                raise self.error(f"unknown function {tok.text!r}", set(FUNCTIONS))
            self.advance()
            self.expect_op("(")
            arg = self.expr()
            self.expect_op(")")
            return Func(tok.text, arg)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise self.error(f"expected an operand, found {found}", _PRIMARY_EXPECTED)


def parse(text: str, dimension: int) -> Expression:
    """Parse ``text`` into a tree whose variables are ``x0 .. x{dimension-1}``.

    Raises:
        ParseError: on bad syntax or an out-of-range variable; ``offset``
            points at the offending token (``len(text)`` for a premature end).
    """
    if dimension < 1:
        raise InvalidArgumentError(f"dimension must be positive, got {dimension}")
    return _Parser(text, dimension).parse()


# ----------------------------------------------------------------------------
# printing


def _prec(e: Expression) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Pow):
        return _PREC_POW
    return _PREC_ATOM


def to_string(e: Expression) -> str:
    """Render ``e`` in surface syntax with the fewest parentheses that still re-parse to ``e``."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        return "-" + (f"({inner})" if _prec(e.arg) < _PREC_NEG else inner)
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) < _PREC_ATOM:
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Binary):
        p = _PREC[e.op]
        left, right = to_string(e.left), to_string(e.right)
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left}{BINARY_OPS[e.op]}{right}"
    raise TypeError(f"not an expression node: {e!r}")


# ----------------------------------------------------------------------------
# evaluation

_UNARY_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
}


def _checked(value: float, node: Expression) -> float:
    if not math.isfinite(value):
        raise EvaluationError("non-finite intermediate value", node)
    return value


def evaluate(e: Expression, x: Sequence[float]) -> float:
    """Evaluate ``e`` at the point ``x`` in double precision.

    Raises:
        EvaluationError: division by zero, ``sqrt`` of a negative number,
            overflow, or any other non-finite intermediate; ``subtree`` is the
            failing node.
    """
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.index >= len(x):
            raise InvalidArgumentError(f"point has length {len(x)} but expression uses x{e.index}")
        return float(x[e.index])
    if isinstance(e, Neg):
        return -evaluate(e.arg, x)
    if isinstance(e, Func):
        arg = evaluate(e.arg, x)
        if e.name == "sqrt" and arg < 0:
            raise EvaluationError(f"sqrt of negative value {arg!r}", e)
        try:
            return _checked(_UNARY_FUNCS[e.name](arg), e)
        except OverflowError:
            raise EvaluationError("overflow", e) from None
    if isinstance(e, Pow):
        base = evaluate(e.base, x)
        if base == 0 and e.exponent < 0:
            raise EvaluationError("division by zero", e)
        try:
            return _checked(base ** e.exponent, e)
        except OverflowError:
            raise EvaluationError("overflow", e) from None
    if isinstance(e, Binary):
        a, b = evaluate(e.left, x), evaluate(e.right, x)
        if e.op == "add":
            return _checked(a + b, e)
        if e.op == "sub":
            return _checked(a - b, e)
        if e.op == "mul":
            return _checked(a * b, e)
        if b == 0:
            raise EvaluationError("division by zero", e)
        return _checked(a / b, e)
    raise TypeError(f"not an expression node: {e!r}")


def _to_python(e: Expression) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x[{e.index}]"
    if isinstance(e, Neg):
        return f"(-{_to_python(e.arg)})"
    if isinstance(e, Func):
        return f"_{e.name}({_to_python(e.arg)})"
    if isinstance(e, Pow):
        return f"({_to_python(e.base)}**{e.exponent})"
    return f"({_to_python(e.left)}{BINARY_OPS[e.op]}{_to_python(e.right)})"


def compile_expression(e: Expression) -> Callable[[Sequence[float]], float]:
    """Compile ``e`` to a Python callable for repeated evaluation.

    Failures are re-run through :func:`evaluate` so that the raised
    :class:`EvaluationError` names the offending subtree.
    """
    namespace = {f"_{name}": fn for name, fn in _UNARY_FUNCS.items()}
    code = compile(f"lambda x: {_to_python(e)}", "<hamiltonian>", "eval")
    fast = eval(code, namespace)  # noqa: S307 - source is generated from a validated tree

    def fn(x):
        # plain floats so overflow raises instead of warning
        xs = x.tolist() if hasattr(x, "tolist") else [float(v) for v in x]
        try:
            value = fast(xs)
        except (ZeroDivisionError, ValueError, OverflowError):
            return evaluate(e, x)
        if not math.isfinite(value):
            return evaluate(e, x)
        return value

    return fn


# ----------------------------------------------------------------------------
# simplification (constant folding and 0/1 identities)


def constant(value: float) -> Expression:
    return Neg(Const(-value)) if value < 0 else Const(value)


def _const_value(e: Expression) -> float | None:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg) and isinstance(e.arg, Const):
        return -e.arg.value
    return None


_ARITH = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


def _fold(fn: Callable[[], float]) -> Expression | None:
    try:
        value = fn()
    except (ZeroDivisionError, ValueError, OverflowError):
        return None
    return constant(value) if math.isfinite(value) else None


def make_neg(a: Expression) -> Expression:
    ca = _const_value(a)
    if ca is not None:
        return constant(-ca) if ca != 0 else Const(0.0)
    return Neg(a)


def make_binary(op: str, a: Expression, b: Expression) -> Expression:
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None:
        folded = _fold(lambda: _ARITH[op](ca, cb))
        if folded is not None:
            return folded
    if op == "add":
        if ca == 0:
            return b
        if cb == 0:
            return a
    elif op == "sub":
        if cb == 0:
            return a
        if ca == 0:
            return make_neg(b)
    elif op == "mul":
        if ca == 0 or cb == 0:
            return Const(0.0)
        if ca == 1:
            return b
        if cb == 1:
            return a
        if ca is not None and isinstance(b, Binary) and b.op == "mul":
            inner = _const_value(b.left)
            if inner is not None:
                return make_binary("mul", constant(ca * inner), b.right)
    elif op == "div":
        if cb == 1:
            return a
        if ca == 0 and cb != 0:
            return Const(0.0)
    return Binary(op, a, b)


def make_pow(base: Expression, exponent: int) -> Expression:
    if exponent == 0:
        return Const(1.0)
    if exponent == 1:
        return base
    cb = _const_value(base)
    if cb is not None:
        folded = _fold(lambda: cb ** exponent)
        if folded is not None:
            return folded
    return Pow(base, exponent)


def make_func(name: str, arg: Expression) -> Expression:
    ca = _const_value(arg)
    if ca is not None:
        folded = _fold(lambda: _UNARY_FUNCS[name](ca))
        if folded is not None:
            return folded
    return Func(name, arg)


def simplify(e: Expression) -> Expression:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        return make_neg(simplify(e.arg))
    if isinstance(e, Func):
        return make_func(e.name, simplify(e.arg))
    if isinstance(e, Pow):
        return make_pow(simplify(e.base), e.exponent)
    return make_binary(e.op, simplify(e.left), simplify(e.right))


# ----------------------------------------------------------------------------
# differentiation

_ZERO = Const(0.0)
_ONE = Const(1.0)


def _d(e: Expression, a: int) -> Expression:
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.index == a else _ZERO
    if isinstance(e, Neg):
        return make_neg(_d(e.arg, a))
    if isinstance(e, Binary):
        u, v = e.left, e.right
        du, dv = _d(u, a), _d(v, a)
        if e.op in ("add", "sub"):
            return make_binary(e.op, du, dv)
        if e.op == "mul":
            return make_binary("add", make_binary("mul", du, v), make_binary("mul", u, dv))
        # quotient rule
        if dv == _ZERO:
            return make_binary("div", du, v)
        numerator = make_binary("sub", make_binary("mul", du, v), make_binary("mul", u, dv))
        return make_binary("div", numerator, make_pow(v, 2))
    if isinstance(e, Pow):
        du = _d(e.base, a)
        if du == _ZERO:
            return _ZERO
        k = e.exponent
        return make_binary("mul", make_binary("mul", constant(k), make_pow(e.base, k - 1)), du)
    if isinstance(e, Func):
        u = e.arg
        du = _d(u, a)
        if du == _ZERO:
            return _ZERO
        if e.name == "sin":
            return make_binary("mul", make_func("cos", u), du)
        if e.name == "cos":
            return make_neg(make_binary("mul", make_func("sin", u), du))
        if e.name == "exp":
            return make_binary("mul", e, du)
        return make_binary("div", du, make_binary("mul", Const(2.0), e))
    raise TypeError(f"not an expression node: {e!r}")


def differentiate(e: Expression, a: int) -> Expression:
    """Symbolic partial derivative of ``e`` with respect to ``x{a}``."""
    return simplify(_d(e, a))


def gradient(e: Expression, dimension: int) -> list[Expression]:
    return [differentiate(e, a) for a in range(dimension)]


def variables(e: Expression) -> set[int]:
    """Indices of all variables occurring in ``e``."""
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Const):
        return set()
    if isinstance(e, (Neg, Func)):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.left) | variables(e.right)


def finite_difference_gradient(f: Callable[[Sequence[float]], float], x: Sequence[float]) -> list[float]:
    """Central differences with step ``1e-6 * max(1, |x_a|)`` per coordinate."""
    x = [float(v) for v in x]
    grad = []
    for a in range(len(x)):
        h = 1e-6 * max(1.0, abs(x[a]))
        xp, xm = list(x), list(x)
        xp[a] += h
        xm[a] -= h
        grad.append((f(xp) - f(xm)) / (2 * h))
    return grad
