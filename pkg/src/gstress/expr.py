"""Expression language for immersion components.

Grammar (whitespace-insensitive)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | base ("^" ["-"] integer)?
    base   := number | ident | ident "(" expr ")" | "(" expr ")"

Unary minus binds looser than ``^`` so ``-u1^2`` is ``-(u1^2)``.
Identifiers ``u1`` .. ``u4`` are chart variables, ``pi`` is the constant,
the names in :data:`FUNCTIONS` must be called with parentheses, and every
other identifier is a parameter reference.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

from . import jets
from .errors import ArityError, ExprSyntaxError, UnknownIdentifierError

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh")
MAX_VARIABLES = 4


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Var:
    index: int  # zero based; printed as u{index+1}


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


Node = Union[Const, Param, Var, Call, Neg, BinOp, Pow]

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
  | (?P<newline>\n)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            toks.append(_Tok(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    toks.append(_Tok("end", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, params):
        self.toks = _tokenize(text)
        self.i = 0
        self.params = params

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg, cls=ExprSyntaxError, tok=None):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.col)

    def advance(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected token {self.tok.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.tok.text == "-":
            self.advance()
            return Neg(self.factor())
        node = self.base()
        if self.tok.text == "^":
            self.advance()
            sign = 1
            if self.tok.text == "-":
                self.advance()
                sign = -1
            t = self.tok
            if t.kind != "number" or not t.text.isdigit():
                raise self.error("exponent must be an integer literal")
            self.advance()
            node = Pow(node, sign * int(t.text))
        return node

    def base(self) -> Node:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return Const(float(t.text))
        if t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "ident":
            self.advance()
            name = t.text
            if name in FUNCTIONS:
                if self.tok.text != "(":
                    raise self.error(f"function {name!r} requires parentheses")
                self.advance()
                arg = self.expr()
                if self.tok.text == ",":
                    raise self.error(f"function {name!r} takes exactly one argument", ArityError)
                self.expect(")")
                return Call(name, arg)
            if self.tok.text == "(":
                raise self.error(f"{name!r} is not a function", UnknownIdentifierError, t)
            var = re.fullmatch(r"u([1-9]\d*)", name)
            if var:
                idx = int(var.group(1))
                if idx > MAX_VARIABLES:
                    raise self.error(f"chart variable {name!r} beyond u{MAX_VARIABLES}", UnknownIdentifierError, t)
                return Var(idx - 1)
            if name == "pi":
                return Const(math.pi)
            if self.params is not None and name not in self.params:
                raise self.error(f"unknown identifier {name!r}", UnknownIdentifierError, t)
            return Param(name)
        raise self.error(f"unexpected token {t.text or 'end of input'!r}")


def parse_expression(text: str, params=None) -> Node:
    """Parse ``text`` into an AST.

    When ``params`` is given, identifiers that are neither chart variables nor
    functions must be among its names.
    """
    return _Parser(text, params).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def to_string(node: Node) -> str:
    """Print an AST so that ``parse_expression(to_string(a)) == a``."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Var):
        return f"u{node.index + 1}"
    if isinstance(node, Call):
        return f"{node.fn}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        return f"-{inner}" if _prec(node.arg) >= 3 else f"-({inner})"
    if isinstance(node, Pow):
        inner = to_string(node.base)
        return f"{inner}^{node.exponent}" if _prec(node.base) == 5 else f"({inner})^{node.exponent}"
    p = _PREC[node.op]
    left = to_string(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = to_string(node.right)
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left}{node.op}{right}"


def variables_used(node: Node) -> set[int]:
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, (Call, Neg)):
        return variables_used(node.arg)
    if isinstance(node, Pow):
        return variables_used(node.base)
    if isinstance(node, BinOp):
        return variables_used(node.left) | variables_used(node.right)
    return set()


def params_used(node: Node) -> set[str]:
    if isinstance(node, Param):
        return {node.name}
    if isinstance(node, (Call, Neg)):
        return params_used(node.arg)
    if isinstance(node, Pow):
        return params_used(node.base)
    if isinstance(node, BinOp):
        return params_used(node.left) | params_used(node.right)
    return set()


def bind(node: Node, params: Mapping[str, float]) -> Node:
    """Replace parameter references by constants."""
    if isinstance(node, Param):
        if node.name not in params:
            raise UnknownIdentifierError(f"unbound parameter {node.name!r}")
        return Const(float(params[node.name]))
    if isinstance(node, Call):
        return Call(node.fn, bind(node.arg, params))
    if isinstance(node, Neg):
        return Neg(bind(node.arg, params))
    if isinstance(node, Pow):
        return Pow(bind(node.base, params), node.exponent)
    if isinstance(node, BinOp):
        return BinOp(node.op, bind(node.left, params), bind(node.right, params))
    return node


def evaluate(node: Node, u, params: Mapping[str, float] | None = None):
    """Evaluate an AST on chart variables ``u`` (arrays or jets)."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return u[node.index]
    if isinstance(node, Param):
        if params is None or node.name not in params:
            raise UnknownIdentifierError(f"unbound parameter {node.name!r}")
        return params[node.name]
    if isinstance(node, Call):
        return jets.ELEMENTARY[node.fn](evaluate(node.arg, u, params))
    if isinstance(node, Neg):
        return -evaluate(node.arg, u, params)
    if isinstance(node, Pow):
        return jets.pow_int(evaluate(node.base, u, params), node.exponent)
    a = evaluate(node.left, u, params)
    b = evaluate(node.right, u, params)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return a / b
