"""Arithmetic expressions in one variable ``x`` for initial data.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('-')* power
    power  := atom ('^' power)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so
``-2^2 == -4``.  There is no implicit multiplication.

Parsed expressions are immutable.  Each one carries two compiled
evaluators: a scalar one built on :mod:`math` (used in the cascade hot
loop) and a vectorised one built on numpy (used by quadrature and the
Picard oracle).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import DomainError, ExpressionError

__all__ = [
    "Num", "Var", "Const", "Neg", "BinOp", "Call",
    "Expression", "parse", "evaluate", "to_source",
]

FUNCTIONS = {
    "sin": (math.sin, np.sin),
    "cos": (math.cos, np.cos),
    "tan": (math.tan, np.tan),
    "exp": (math.exp, np.exp),
    "tanh": (math.tanh, np.tanh),
    "sqrt": (math.sqrt, np.sqrt),
    "abs": (abs, np.abs),
}
CONSTANTS = {"pi": math.pi, "e": math.e}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]


# ---------------------------------------------------------------- tokenizer

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_PUNCT = {"+", "-", "*", "/", "^", "(", ")", ","}
# typographic minus is accepted as '-'
_ALIASES = {"−": "-"}


@dataclass
class _Token:
    kind: str  # 'num', 'ident', punctuation char, or 'end'
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    i = 0
    byte = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            byte += len(ch.encode("utf-8"))
            i += 1
            continue
        m = _NUMBER.match(source, i)
        if m:
            tokens.append(_Token("num", m.group(), byte))
        else:
            m = _IDENT.match(source, i)
            if m:
                tokens.append(_Token("ident", m.group(), byte))
            else:
                c = _ALIASES.get(ch, ch)
                if c not in _PUNCT:
                    raise ExpressionError(f"unexpected character {ch!r}", offset=byte)
                tokens.append(_Token(c, ch, byte))
                byte += len(ch.encode("utf-8"))
                i += 1
                continue
        byte += len(m.group().encode("utf-8"))
        i = m.end()
    tokens.append(_Token("end", "", byte))
    return tokens


# ---------------------------------------------------------------- parser

class _Parser:
    def __init__(self, source):
        self.tokens = _tokenize(source)
        self.pos = 0

    @property
    def tok(self):
        return self.tokens[self.pos]

    def advance(self):
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind, description):
        if self.tok.kind != kind:
            raise ExpressionError(f"unexpected {self._describe(self.tok)}",
                                  offset=self.tok.offset, expected=description)
        return self.advance()

    @staticmethod
    def _describe(tok):
        return "end of input" if tok.kind == "end" else repr(tok.text)

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ExpressionError(f"unexpected {self._describe(self.tok)}",
                                  offset=self.tok.offset,
                                  expected="operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.kind in ("*", "/"):
            op = self.advance().kind
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        count = 0
        while self.tok.kind == "-":
            self.advance()
            count += 1
        node = self.power()
        for _ in range(count):
            node = Neg(node)
        return node

    def power(self):
        base = self.atom()
        if self.tok.kind == "^":
            self.advance()
            return BinOp("^", base, self.power())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            value = float(tok.text)
            if not math.isfinite(value):
                raise ExpressionError(f"numeric literal {tok.text!r} overflows", offset=tok.offset)
            return Num(value)
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")", "')'")
            return node
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if name in FUNCTIONS:
                if self.tok.kind != "(":
                    raise ExpressionError(
                        f"function {name!r} takes exactly one argument",
                        offset=self.tok.offset, expected="'('")
                self.advance()
                if self.tok.kind == ")":
                    raise ExpressionError(
                        f"function {name!r} takes exactly one argument, got 0",
                        offset=self.tok.offset)
                arg = self.expr()
                if self.tok.kind == ",":
                    raise ExpressionError(
                        f"function {name!r} takes exactly one argument",
                        offset=self.tok.offset)
                self.expect(")", "')'")
                return Call(name, arg)
            if name == "x" or name in CONSTANTS:
                if self.tok.kind == "(":
                    raise ExpressionError(f"{name!r} is not a function",
                                          offset=self.tok.offset)
                return Var() if name == "x" else Const(name)
            raise ExpressionError(f"unknown identifier {name!r}", offset=tok.offset)
        raise ExpressionError(f"unexpected {self._describe(tok)}", offset=tok.offset,
                              expected="number, identifier or '('")


# ---------------------------------------------------------------- compilation

def _compile_scalar(node: Node) -> Callable[[float], float]:
    if isinstance(node, Num):
        v = node.value
        return lambda x: v
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda x: v
    if isinstance(node, Neg):
        f = _compile_scalar(node.operand)
        return lambda x: -f(x)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func][0]
        f = _compile_scalar(node.arg)
        return lambda x: fn(f(x))
    a = _compile_scalar(node.left)
    b = _compile_scalar(node.right)
    if node.op == "+":
        return lambda x: a(x) + b(x)
    if node.op == "-":
        return lambda x: a(x) - b(x)
    if node.op == "*":
        return lambda x: a(x) * b(x)
    if node.op == "/":
        return lambda x: a(x) / b(x)
    return lambda x: math.pow(a(x), b(x))


def _compile_array(node: Node):
    if isinstance(node, Num):
        v = node.value
        return lambda x: np.full(np.shape(x), v)
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda x: np.full(np.shape(x), v)
    if isinstance(node, Neg):
        f = _compile_array(node.operand)
        return lambda x: -f(x)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.func][1]
        f = _compile_array(node.arg)
        return lambda x: fn(f(x))
    a = _compile_array(node.left)
    b = _compile_array(node.right)
    op = {"+": np.add, "-": np.subtract, "*": np.multiply,
          "/": np.divide, "^": np.power}[node.op]
    return lambda x: op(a(x), b(x))


def _uses_x(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, Neg):
        return _uses_x(node.operand)
    if isinstance(node, Call):
        return _uses_x(node.arg)
    return _uses_x(node.left) or _uses_x(node.right)


class Expression:
    """A parsed expression in ``x``; call it like a function."""

    __slots__ = ("source", "root", "_scalar", "_array", "depends_on_x")

    def __init__(self, source: str, root: Node):
        self.source = source
        self.root = root
        self._scalar = _compile_scalar(root)
        self._array = _compile_array(root)
        self.depends_on_x = _uses_x(root)

    def __call__(self, x: float) -> float:
        try:
            y = self._scalar(x)
        except ZeroDivisionError:
            raise DomainError(f"division by zero in {self.source!r} at x={x!r}") from None
        except (ValueError, OverflowError) as exc:
            raise DomainError(f"{exc} in {self.source!r} at x={x!r}") from None
        if not math.isfinite(y):
            raise DomainError(f"non-finite value in {self.source!r} at x={x!r}")
        return y

    def vectorized(self, x: np.ndarray) -> np.ndarray:
        """Evaluate on an array; raises DomainError if any entry is invalid."""
        x = np.asarray(x, dtype=float)
        try:
            with np.errstate(divide="raise", invalid="raise", over="raise", under="ignore"):
                y = np.asarray(self._array(x), dtype=float)
        except FloatingPointError as exc:
            raise DomainError(f"{exc} in {self.source!r}") from None
        if not np.all(np.isfinite(y)):
            raise DomainError(f"non-finite value in {self.source!r}")
        return y

    def constant_value(self):
        """The value of an expression that does not involve ``x``, else None."""
        return None if self.depends_on_x else self(0.0)

    def __reduce__(self):
        return (parse, (self.source,))

    def __eq__(self, other):
        return isinstance(other, Expression) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def __repr__(self):
        return f"Expression({self.source!r})"


def parse(source: str) -> Expression:
    """Parse ``source`` into an :class:`Expression`.

    Raises :class:`ExpressionError` with the byte offset of the offending token.
    """
    if not isinstance(source, str):
        raise ExpressionError(f"expression must be a string, got {type(source).__name__}")
    return Expression(source, _Parser(source).parse())


def evaluate(e: Expression, x: float) -> float:
    return e(x)


def to_source(e: Union[Expression, Node]) -> str:
    """Canonical printout: fully parenthesised, floats in round-trip form."""
    node = e.root if isinstance(e, Expression) else e
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
