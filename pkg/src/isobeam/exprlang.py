"""A tiny expression language for closed-form functions of one variable ``z``.

Grammar (whitespace ignored)::

    expression := term (('+' | '-') term)*
    term       := factor (('*' | '/') factor)*
    factor     := '-' factor | power
    power      := atom ('^' factor)?
    atom       := number | 'z' | fn '(' expression ')' | '(' expression ')'
    fn         := sin | cos | exp | log | sqrt

``^`` is right-associative and unary minus binds looser than ``^``, so
``-z^2`` is ``-(z^2)`` and ``2^-z`` is ``2^(-z)``.  There is no implicit
multiplication.

Parsed trees evaluate on floats, numpy arrays, :class:`~isobeam.jets.Jet`
and :class:`~isobeam.jets.Jet2` values alike.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ContractViolation, EvaluationError, ParseError, SingularPointError
from .jets import DEFAULT_ORDER, Jet, Jet2, elementary

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "ExprAst"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "ExprAst"


ExprAst = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = len(text) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", len(text[:start].encode()))
        kind = m.lastgroup
        offset = len(text[: m.start(kind)].encode())
        tokens.append((kind, m.group(kind), offset))
        pos = m.end()
    tokens.append(("end", "", len(text.encode())))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, offset = self.take()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", offset)

    def expression(self) -> ExprAst:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> ExprAst:
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> ExprAst:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self) -> ExprAst:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> ExprAst:
        kind, text, offset = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "z":
                return Var()
            if text not in FUNCTIONS:
                raise ParseError(f"unknown function or variable {text!r}", offset)
            self.expect("(")
            arg = self.expression()
            self.expect(")")
            return Call(text, arg)
        if text == "(":
            node = self.expression()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", offset)


def parse(text: str) -> ExprAst:
    """Parse ``text`` into an expression tree; raises :class:`ParseError` with a byte offset."""
    p = _Parser(text)
    node = p.expression()
    kind, tok, offset = p.peek()
    if kind != "end":
        msg = "unbalanced ')'" if tok == ")" else f"unexpected {tok!r}"
        raise ParseError(msg, offset)
    return node


def unparse(node: ExprAst) -> str:
    """Fully parenthesised text that parses back to an identical tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "z"
    if isinstance(node, Neg):
        return f"(-{unparse(node.operand)})"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({unparse(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def depends_on_z(node: ExprAst) -> bool:
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return depends_on_z(node.operand)
    if isinstance(node, BinOp):
        return depends_on_z(node.left) or depends_on_z(node.right)
    return depends_on_z(node.arg)


def _apply(fn: str, x, p=None):
    if isinstance(x, np.ndarray):
        if fn == "pow":
            return np.power(x, p)
        return getattr(np, fn)(x)
    return elementary(fn, x, p)


def evaluate(node: ExprAst, z):
    """Evaluate ``node`` with ``z`` bound to a float, array, Jet or Jet2."""
    try:
        return _eval(node, z)
    except SingularPointError as exc:
        raise EvaluationError(f"{exc} while evaluating {unparse(node)}", node) from exc


def _eval(node: ExprAst, z):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return z
    if isinstance(node, Neg):
        return -_eval(node.operand, z)
    if isinstance(node, Call):
        arg = _eval(node.arg, z)
        try:
            return _apply(node.fn, arg)
        except SingularPointError as exc:
            raise EvaluationError(f"{exc} at node {unparse(node)}", node) from exc
    left = _eval(node.left, z)
    if node.op == "^" and not depends_on_z(node.right):
        p = float(_eval(node.right, 0.0))
        try:
            return _apply("pow", left, p)
        except SingularPointError as exc:
            raise EvaluationError(f"{exc} at node {unparse(node)}", node) from exc
    right = _eval(node.right, z)
    try:
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            if not isinstance(right, (Jet, Jet2, np.ndarray)) and right == 0:
                raise SingularPointError("division by zero")
            return left / right
        # variable exponent: a^b = exp(b log a)
        return _apply("exp", right * _apply("log", left))
    except SingularPointError as exc:
        raise EvaluationError(f"{exc} at node {unparse(node)}", node) from exc


def eval_jet(node: ExprAst, z0: float, order: int, max_order: int | None = DEFAULT_ORDER) -> Jet:
    """Jet of the expression at ``z0``.  ``max_order=None`` lifts the order cap."""
    if order < 0:
        raise ContractViolation("order must be non-negative")
    if max_order is not None and order > max_order:
        raise ContractViolation(f"requested order {order} exceeds cap {max_order}")
    out = evaluate(node, Jet.variable(z0, order))
    if not isinstance(out, Jet):
        out = Jet.constant(float(out), z0, order)
    return out


def as_ast(expr) -> ExprAst:
    if isinstance(expr, str):
        return parse(expr)
    if isinstance(expr, (int, float)):
        return Num(float(expr))
    if isinstance(expr, (Num, Var, Neg, BinOp, Call)):
        return expr
    raise TypeError(f"cannot interpret {expr!r} as an expression")


def jet_function(expr):
    """Turn text, a tree, a number or an existing jet function into ``f(z0, order) -> Jet``."""
    if callable(expr) and not isinstance(expr, (Num, Var, Neg, BinOp, Call)):
        return expr
    node = as_ast(expr)

    def f(z0: float, order: int) -> Jet:
        return eval_jet(node, z0, order, max_order=None)

    f.ast = node
    return f
