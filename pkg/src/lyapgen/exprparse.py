"""Arithmetic expressions for vector fields and maps.

Grammar (whitespace is insignificant)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?
    primary := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"
    NUMBER  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
             | "." digits [exponent]
    NAME    := "x1" .. "xn" | "t"
    FUNC    := "sin" | "cos" | "exp" | "tanh" | "abs" | "sqrt"

Binary operators are parsed by precedence climbing. ``^`` binds tighter
than unary minus (``-2^2 == -4``) and is right associative; the other
binary operators are left associative.

Expressions evaluate over numpy arrays, so one parsed tree serves both
single points and whole batches of points.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Union

import numpy as np

__all__ = [
    "Const",
    "Var",
    "Unary",
    "Binary",
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ArityError",
    "EvaluationError",
    "parse_expression",
    "eval_expr",
    "evaluate_array",
    "FUNCTIONS",
]


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class EvaluationError(ArithmeticError):
    """Raised when an expression produces NaN (division by zero, sqrt of a negative...)."""


def _safe_divide(a, b):
    return np.where(b == 0, np.nan, np.divide(a, b))


# callers evaluate inside np.errstate(all="ignore"); NaN marks failure
FUNCTIONS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "abs": np.abs,
    "sqrt": np.sqrt,
}

_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": _safe_divide,
    "^": np.power,
}

# (precedence, right associative); "^" is handled in unary() so that it
# binds tighter than a leading minus
_BINARY_PRECEDENCE = {
    "+": (1, False),
    "-": (1, False),
    "*": (2, False),
    "/": (2, False),
}


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a function name
    operand: "Expr"

    def __str__(self) -> str:
        if self.op == "neg":
            return f"(-{self.operand})"
        return f"{self.op}({self.operand})"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


Expr = Union[Const, Var, Unary, Binary]


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    byte_pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", byte_pos)
        kind = m.lastgroup
        text = m.group()
        if kind != "ws":
            tokens.append(_Token(kind, text, byte_pos))
        pos = m.end()
        byte_pos += len(text.encode("utf-8"))
    tokens.append(_Token("eof", "", byte_pos))
    return tokens


class _Parser:
    def __init__(self, src: str, arity: int):
        self.tokens = _tokenize(src)
        self.pos = 0
        self.arity = arity

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> None:
        tok = self.current
        if tok.text != text:
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", tok.offset)
        self.advance()

    def parse(self) -> Expr:
        expr = self.binary(1)
        tok = self.current
        if tok.kind != "eof":
            raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.offset)
        return expr

    def binary(self, min_prec: int) -> Expr:
        left = self.unary()
        while True:
            tok = self.current
            if tok.kind != "op" or tok.text not in _BINARY_PRECEDENCE:
                return left
            prec, right_assoc = _BINARY_PRECEDENCE[tok.text]
            if prec < min_prec:
                return left
            self.advance()
            right = self.binary(prec if right_assoc else prec + 1)
            left = Binary(tok.text, left, right)

    def _continue_power(self, base: Expr) -> Expr:
        self.expect("^")
        # unary() consumes any further "^", which makes the chain right associative
        return Binary("^", base, self.unary())

    def unary(self) -> Expr:
        if self.current.text == "-":
            self.advance()
            return Unary("neg", self.unary())
        base = self.primary()
        if self.current.text == "^":
            return self._continue_power(base)
        return base

    def primary(self) -> Expr:
        tok = self.current
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.binary(1)
                self.expect(")")
                return Unary(tok.text, arg)
            return self.variable(tok)
        if tok.text == "(":
            self.advance()
            inner = self.binary(1)
            self.expect(")")
            return inner
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ExprSyntaxError(f"expected operand, found {found}", tok.offset)

    def variable(self, tok: _Token) -> Var:
        name = tok.text
        if name == "t":
            return Var(name)
        m = re.fullmatch(r"x([1-9]\d*)", name)
        if m is None:
            raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.offset)
        if int(m.group(1)) > self.arity:
            raise ArityError(
                f"variable {name!r} exceeds dimension {self.arity}", tok.offset
            )
        return Var(name)


def parse_expression(src: str, arity: int) -> Expr:
    """Parse ``src`` into an expression over ``x1..x{arity}`` and ``t``."""
    if arity < 1:
        raise ValueError("arity must be a positive integer")
    return _Parser(src, arity).parse()


def variables(expr: Expr) -> set[str]:
    """Names of all variables referenced by ``expr``."""
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Unary):
        return variables(expr.operand)
    if isinstance(expr, Binary):
        return variables(expr.left) | variables(expr.right)
    return set()


@lru_cache(maxsize=None)
def compile_expr(expr: Expr) -> Callable:
    """Turn the tree into nested closures taking a variable environment."""
    if isinstance(expr, Const):
        value = np.float64(expr.value)
        return lambda env: value
    if isinstance(expr, Var):
        name = expr.name
        return lambda env: env[name]
    if isinstance(expr, Unary):
        inner = compile_expr(expr.operand)
        fn = np.negative if expr.op == "neg" else FUNCTIONS[expr.op]
        return lambda env: fn(inner(env))
    left, right = compile_expr(expr.left), compile_expr(expr.right)
    op = _BINARY[expr.op]
    return lambda env: op(left(env), right(env))


def evaluate_array(expr: Expr, env: Mapping[str, np.ndarray]):
    """Evaluate ``expr`` elementwise; failures show up as NaN entries.

    ``env`` maps variable names to arrays (or scalars) of a common shape.
    """
    with np.errstate(all="ignore"):
        return compile_expr(expr)(env)


def point_env(point, time: float = 0.0) -> dict[str, np.ndarray]:
    """Variable bindings for a point given as a sequence or an (m, n) array."""
    arr = np.asarray(point, dtype=np.float64)
    env = {"t": np.float64(time)}
    cols = arr.T if arr.ndim == 2 else arr
    for i, col in enumerate(cols):
        env[f"x{i + 1}"] = col
    return env


def eval_expr(expr: Expr, point, time: float = 0.0) -> float:
    """Evaluate at a single point; raises EvaluationError on a NaN result."""
    value = float(evaluate_array(expr, point_env(point, time)))
    if math.isnan(value):
        raise EvaluationError(f"evaluation failed for {expr} at {list(point)}")
    return value
