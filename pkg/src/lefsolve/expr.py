"""Arithmetic expressions over ``r`` and ``theta``.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := base ("^" unary)?
    base   := number | "r" | "theta" | ident "(" expr ")" | "(" expr ")"
    ident  := "ln" | "exp" | "sin" | "cos"

``^`` binds tighter than unary minus and is right-associative, so
``-r^2`` is ``-(r^2)`` and ``r^-4`` is ``r^(-4)``.
"""

from dataclasses import dataclass
import re

import numpy as np

from .errors import ExprSyntaxError

FUNCTIONS = {"ln": np.log, "exp": np.exp, "sin": np.sin, "cos": np.cos}
VARIABLES = ("r", "theta")

_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


def _tokenize(source):
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, source):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, value, pos = self.take()
        if value != text or kind != "op":
            found = "end of input" if kind == "end" else repr(value)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {value!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            node = BinOp("^", node, self.unary())
        return node

    def base(self):
        kind, value, pos = self.take()
        if kind == "num":
            return Num(float(value))
        if kind == "ident":
            if value in VARIABLES:
                return Var(value)
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            raise ExprSyntaxError(f"unknown identifier {value!r}", pos)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(value)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def parse_expr(source):
    """Parse ``source`` into an expression tree.

    Raises ExprSyntaxError carrying the offending position.
    """
    if not isinstance(source, str):
        raise TypeError("expression source must be a string")
    return _Parser(source).parse()


def evaluate(node, r, theta=0.0):
    """Evaluate a tree with numpy broadcasting over ``r`` and ``theta``."""
    with np.errstate(all="ignore"):
        return _eval(node, np.asarray(r, dtype=float), np.asarray(theta, dtype=float))


def _eval(node, r, theta):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        return r if node.name == "r" else theta
    if isinstance(node, Neg):
        return -_eval(node.arg, r, theta)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, r, theta))
    return _BINARY[node.op](_eval(node.left, r, theta), _eval(node.right, r, theta))


def to_source(node):
    """Fully parenthesised source text; ``parse_expr`` reads it back."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    return f"({to_source(node.left)}{node.op}{to_source(node.right)})"


def variables(node):
    """Set of variable names the tree refers to."""
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, (Neg, Call)):
        return variables(node.arg)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    return set()


def is_zero_constant(node):
    return isinstance(node, Num) and node.value == 0.0
