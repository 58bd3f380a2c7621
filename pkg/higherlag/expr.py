"""The expression language for structure functions, Lagrangians and paths.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | 'pi' | IDENT | FUNC '(' expr ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so ``-x^2``
is ``-(x^2)`` and ``2^-1`` is ``0.5``. ``FUNC`` is one of ``sin cos exp log
sqrt tanh``. Identifiers match ``[A-Za-z][A-Za-z0-9_]*``.

Evaluation is generic over the numeric ring: bind identifiers to floats and
get a float, bind them to :class:`~higherlag.jetcalc.Jet` values and get a jet.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Union

from . import jetcalc
from .errors import (
    DomainError,
    ExprSyntaxError,
    SchemaError,
    UnboundIdentifierError,
    UnknownFunctionError,
)

FUNCTION_NAMES = tuple(sorted(jetcalc.FUNCTIONS))

Binding = Mapping[str, Any]


# --------------------------------------------------------------------------- #
# AST
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Num:
    value: float

    def evaluate(self, env: Binding) -> Any:
        return self.value


@dataclass(frozen=True)
class Pi:
    def evaluate(self, env: Binding) -> Any:
        return math.pi


@dataclass(frozen=True)
class Var:
    name: str

    def evaluate(self, env: Binding) -> Any:
        try:
            return env[self.name]
        except KeyError:
            raise UnboundIdentifierError(self.name) from None


@dataclass(frozen=True)
class Neg:
    operand: "Expr"

    def evaluate(self, env: Binding) -> Any:
        return -self.operand.evaluate(env)


def _add(a: Any, b: Any) -> Any:
    return a + b


def _sub(a: Any, b: Any) -> Any:
    return a - b


def _mul(a: Any, b: Any) -> Any:
    return a * b


_BINARY: Dict[str, Callable[[Any, Any], Any]] = {
    "+": _add,
    "-": _sub,
    "*": _mul,
    "/": jetcalc.divide,
    "^": jetcalc.power,
}


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def evaluate(self, env: Binding) -> Any:
        lhs = self.left.evaluate(env)
        rhs = self.right.evaluate(env)
        try:
            return _BINARY[self.op](lhs, rhs)
        except ZeroDivisionError as exc:
            raise DomainError(str(exc)) from exc


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"

    def evaluate(self, env: Binding) -> Any:
        return jetcalc.FUNCTIONS[self.func](self.arg.evaluate(env))


Expr = Union[Num, Pi, Var, Neg, BinOp, Call]

ZERO = Num(0.0)
ONE = Num(1.0)


# --------------------------------------------------------------------------- #
# Tokenizer
# --------------------------------------------------------------------------- #

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number", "ident", an operator character, or "end"
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(source: str) -> List[_Token]:
    tokens: List[_Token] = []
    pos = 0
    byte = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ExprSyntaxError(
                f"unexpected character {source[pos]!r}",
                byte,
                ("NUMBER", "IDENT", "(", "-"),
            )
        kind = m.lastgroup
        text = m.group()
        if kind == "op":
            tokens.append(_Token(text, text, byte))
        elif kind != "ws":
            tokens.append(_Token(kind, text, byte))
        pos = m.end()
        byte += len(text.encode("utf-8"))
    tokens.append(_Token("end", "", byte))
    return tokens


# --------------------------------------------------------------------------- #
# Parser
# --------------------------------------------------------------------------- #

_PRIMARY_START = ("NUMBER", "IDENT", "pi", "(", "-")


class _Parser:
    def __init__(self, source: str) -> None:
        self.tokens = _tokenize(source)
        self.i = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> _Token:
        if self.current.kind != kind:
            self.fail((kind,))
        return self.advance()

    def fail(self, expected: Iterable[str]) -> None:
        tok = self.current
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {found}", tok.offset, expected)

    def parse(self) -> Expr:
        node = self.expr()
        if self.current.kind != "end":
            self.fail(("+", "-", "*", "/", "^", "end of input"))
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.current.kind in ("+", "-"):
            op = self.advance().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.current.kind in ("*", "/"):
            op = self.advance().kind
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.current.kind == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.current.kind == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expr:
        tok = self.current
        if tok.kind == "number":
            self.advance()
            value = float(tok.text)
            if value == float("inf"):
                raise ExprSyntaxError("numeric literal overflows", tok.offset)
            return Num(value)
        if tok.kind == "ident":
            self.advance()
            if self.current.kind == "(":
                if tok.text not in jetcalc.FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function {tok.text!r}", tok.offset, FUNCTION_NAMES
                    )
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            if tok.text in jetcalc.FUNCTIONS:
                self.fail(("(",))
            if tok.text == "pi":
                return Pi()
            return Var(tok.text)
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        self.fail(_PRIMARY_START)
        raise AssertionError("unreachable")


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression tree.

    Raises:
        ExprSyntaxError: with the byte ``offset`` and the ``expected`` tokens.
        UnknownFunctionError: for a call to an unsupported function.
    """
    if not isinstance(source, str):
        raise SchemaError(f"expression must be a string, got {type(source).__name__}")
    return _Parser(source).parse()


def as_expr(value: Union[str, int, float, Expr]) -> Expr:
    """Accept expression source, a plain number, or an existing tree."""
    if isinstance(value, (Num, Pi, Var, Neg, BinOp, Call)):
        return value
    if isinstance(value, bool):
        raise SchemaError("booleans are not expressions")
    if isinstance(value, (int, float)):
        return Num(float(value))
    return parse(value)


# --------------------------------------------------------------------------- #
# Tree utilities
# --------------------------------------------------------------------------- #


def evaluate(e: Expr, env: Binding) -> Any:
    """Evaluate ``e`` in the ring of the bound values."""
    return e.evaluate(env)


def free_vars(e: Expr) -> FrozenSet[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Neg):
        return free_vars(e.operand)
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Call):
        return free_vars(e.arg)
    return frozenset()


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (used to rename product coordinates)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Neg):
        return Neg(substitute(e.operand, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, mapping))
    return e


def is_zero(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


def to_source(e: Expr) -> str:
    """Fully parenthesized source that parses back to the same tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_source(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    return f"{e.func}({to_source(e.arg)})"


# --------------------------------------------------------------------------- #
# Coordinate naming
# --------------------------------------------------------------------------- #


def base_names(m: int) -> List[str]:
    """``x1 .. xm``."""
    return [f"x{a + 1}" for a in range(m)]


def fiber_name(i: int, alpha: int) -> str:
    """Name of ``y^{i,(alpha)}`` for a zero-based fiber index ``i``."""
    return f"y{i + 1}_{alpha}"


def fiber_names(r: int, k: int) -> List[str]:
    return [fiber_name(i, alpha) for i in range(r) for alpha in range(k)]


def require_names(e: Expr, allowed: Iterable[str], what: str) -> None:
    """Raise :class:`SchemaError` if ``e`` uses names outside ``allowed``."""
    extra = sorted(free_vars(e) - set(allowed))
    if extra:
        raise SchemaError(f"{what} uses unknown identifier(s): {', '.join(extra)}")
