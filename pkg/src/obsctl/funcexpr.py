"""Arithmetic expressions in x1, x2 for user-defined problem data.

Grammar (lowest to highest precedence)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | "+" unary | power
    power   := primary ("^" unary)?          # right associative
    primary := NUMBER | NAME | NAME "(" args ")" | "(" expr ")"
    pred    := expr ("<" | "<=" | ">" | ">=") expr

``cond(pred, a, b)`` is the only place a predicate may appear.  Names are
``x1``, ``x2`` and ``pi``; functions are sin, cos, exp, abs, min, max, sq and
cond.  Evaluation is vectorized over numpy arrays.
"""

import re
from dataclasses import dataclass

import numpy as np


class ExprSyntaxError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnknownIdentifierError(ExprSyntaxError):
    pass


class EvaluationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


VARIABLES = ("x1", "x2")
CONSTANTS = {"pi": np.pi}
FUNCTIONS = {  # name -> arity
    "sin": 1, "cos": 1, "exp": 1, "abs": 1, "sq": 1, "min": 2, "max": 2, "cond": 3,
}

_TOKEN = re.compile(r"""
    (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|[-+*/^(),<>])
  | (?P<ws>\s+)
""", re.VERBOSE)


def tokenize(src):
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src):
        self.tokens = tokenize(src)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def accept(self, *values):
        if self.tok[0] == "op" and self.tok[1] in values:
            self.i += 1
            return self.tokens[self.i - 1][1]
        return None

    def expect(self, value):
        if self.accept(value) is None:
            raise ExprSyntaxError(f"expected {value!r}, found {self.tok[1] or 'end of input'!r}",
                                  self.tok[2])

    def parse(self):
        node = self.expr()
        if self.tok[0] != "end":
            raise ExprSyntaxError(f"unexpected {self.tok[1]!r}", self.tok[2])
        return node

    def expr(self):
        node = self.term()
        while (op := self.accept("+", "-")) is not None:
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while (op := self.accept("*", "/")) is not None:
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.accept("-") is not None:
            return Neg(self.unary())
        if self.accept("+") is not None:
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.accept("^") is not None:
            return BinOp("^", base, self.unary())
        return base

    def primary(self):
        kind, text, pos = self.tok
        if kind == "num":
            self.i += 1
            return Num(float(text))
        if kind == "name":
            self.i += 1
            if self.accept("(") is not None:
                if text not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {text!r}", pos)
                args = self.arguments(text)
                if len(args) != FUNCTIONS[text]:
                    raise ExprSyntaxError(
                        f"{text} takes {FUNCTIONS[text]} arguments, got {len(args)}", pos)
                return Call(text, tuple(args))
            if text in VARIABLES or text in CONSTANTS:
                return Var(text)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos)
        if self.accept("(") is not None:
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", pos)

    def arguments(self, name):
        args = []
        if name == "cond":
            left = self.expr()
            op = self.accept("<", "<=", ">", ">=")
            if op is None:
                raise ExprSyntaxError("cond expects a comparison as first argument", self.tok[2])
            args.append(Compare(op, left, self.expr()))
            self.expect(",")
        if self.accept(")") is not None:
            return args
        while True:
            args.append(self.expr())
            if self.accept(")") is not None:
                return args
            self.expect(",")


def parse(src):
    """Parse ``src`` into an expression tree."""
    return _Parser(src).parse()


def _check(values, what):
    if not np.all(np.isfinite(values)):
        raise EvaluationError(f"{what} produced a non-finite value")
    return values


def _eval(node, x1, x2):
    if isinstance(node, Num):
        return np.full(x1.shape, node.value)
    if isinstance(node, Var):
        if node.name == "x1":
            return x1.copy()
        if node.name == "x2":
            return x2.copy()
        return np.full(x1.shape, CONSTANTS[node.name])
    if isinstance(node, Neg):
        return -_eval(node.operand, x1, x2)
    if isinstance(node, BinOp):
        a = _eval(node.left, x1, x2)
        b = _eval(node.right, x1, x2)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(b == 0):
                raise EvaluationError("division by zero")
            return a / b
        with np.errstate(all="ignore"):
            return _check(np.power(a, b), "power")
    if isinstance(node, Compare):
        a = _eval(node.left, x1, x2)
        b = _eval(node.right, x1, x2)
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[node.op]
    if isinstance(node, Call):
        if node.name == "cond":
            mask = _eval(node.args[0], x1, x2)
            out = np.empty(x1.shape)
            if mask.any():
                out[mask] = _eval(node.args[1], x1[mask], x2[mask])
            if (~mask).any():
                out[~mask] = _eval(node.args[2], x1[~mask], x2[~mask])
            return out
        args = [_eval(a, x1, x2) for a in node.args]
        with np.errstate(all="ignore"):
            if node.name == "sin":
                return np.sin(args[0])
            if node.name == "cos":
                return np.cos(args[0])
            if node.name == "exp":
                return _check(np.exp(args[0]), "exp")
            if node.name == "abs":
                return np.abs(args[0])
            if node.name == "sq":
                return args[0] * args[0]
            if node.name == "min":
                return np.minimum(*args)
            if node.name == "max":
                return np.maximum(*args)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(expr, x1, x2):
    """Evaluate at scalar or array coordinates; returns float or ndarray."""
    scalar = np.ndim(x1) == 0 and np.ndim(x2) == 0
    a1, a2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    a1 = np.ascontiguousarray(a1).ravel()
    a2 = np.ascontiguousarray(a2).ravel()
    out = _check(_eval(expr, a1, a2), "expression")
    return float(out[0]) if scalar else out.reshape(np.broadcast(np.asarray(x1), np.asarray(x2)).shape)


def to_source(node):
    """Fully parenthesized source text; ``parse(to_source(e)) == e``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Compare):
        # predicates only occur as the first argument of cond, unparenthesized
        return f"{to_source(node.left)} {node.op} {to_source(node.right)}"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


class ExprFunction:
    """A parsed expression usable wherever a data function g(x1, x2) is expected."""

    def __init__(self, src):
        self.src = src
        self.expr = parse(src)

    def __call__(self, x1, x2):
        return evaluate(self.expr, x1, x2)

    def __repr__(self):
        return f"ExprFunction({self.src!r})"
