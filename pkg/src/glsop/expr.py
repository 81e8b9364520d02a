"""Small infix expression language for user-supplied kernels, functions and
generating functions.

Grammar (EBNF)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | "+" , unary | power ;
    power   = atom , [ ("^" | "**") , unary ] ;
    atom    = number | name | name , "(" , expr , { "," , expr } , ")"
            | "(" , expr , ")" ;

Power binds tighter than unary minus (``-x^2 == -(x^2)``) and is right
associative. Functions: ``exp``, ``log``, ``abs`` (one argument), ``min``,
``max`` (two or more). The only named constant is ``pi``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

UNARY_FUNCS = ("exp", "log", "abs")
VARIADIC_FUNCS = ("min", "max")
CONSTANTS = {"pi": math.pi}


class ExpressionError(ValueError):
    """Raised for malformed expressions. ``offset`` is a byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class NonFiniteValue(ArithmeticError):
    """A pointwise evaluation produced no finite real number."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
    """,
    re.VERBOSE,
)


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group(kind)
            if tok == "**":
                tok = "^"
            tokens.append((kind, tok, _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.tokens = tokenize(text)
        self.i = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, tok, off = self.advance()
        if tok != value or kind == "end":
            found = "end of input" if kind == "end" else repr(tok)
            raise ExpressionError(f"expected {value!r}, found {found}", off)

    def parse(self) -> Node:
        node = self.expr()
        kind, tok, off = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected token {tok!r}", off)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, tok, _ = self.peek()
        if kind == "op" and tok == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and tok == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, tok, off = self.advance()
        if kind == "num":
            value = float(tok)
            if not math.isfinite(value):
                raise ExpressionError(f"numeric literal {tok!r} overflows", off)
            return Num(value)
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(tok, off)
            if tok in self.variables:
                return Var(tok)
            if tok in CONSTANTS:
                return Num(CONSTANTS[tok])
            raise ExpressionError(f"unknown identifier {tok}", off)
        if kind == "op" and tok == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(tok)
        raise ExpressionError(f"unexpected {found}", off)

    def call(self, name: str, off: int) -> Node:
        if name not in UNARY_FUNCS and name not in VARIADIC_FUNCS:
            raise ExpressionError(f"unknown function {name}", off)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[1] == "," and self.peek()[0] == "op":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if name in UNARY_FUNCS and len(args) != 1:
            raise ExpressionError(f"{name} takes exactly one argument, got {len(args)}", off)
        if name in VARIADIC_FUNCS and len(args) < 2:
            raise ExpressionError(f"{name} needs at least two arguments, got {len(args)}", off)
        return Call(name, tuple(args))


def parse(text: str, variables: Sequence[str]) -> Node:
    """Parse ``text`` into an expression tree over the given variable names."""
    if not text or not text.strip():
        raise ExpressionError("empty expression", 0)
    return _Parser(text, variables).parse()


def to_text(node: Node) -> str:
    """Print a tree so that ``parse(to_text(t)) == t``."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_text(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def variables_of(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return variables_of(node.arg)
    if isinstance(node, BinOp):
        return variables_of(node.left) | variables_of(node.right)
    if isinstance(node, Call):
        out: set[str] = set()
        for a in node.args:
            out |= variables_of(a)
        return out
    return set()


def evaluate(node: Node, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorized evaluation with numpy semantics (non-finite results pass through)."""
    with np.errstate(all="ignore"):
        return np.asarray(_eval_array(node, env), dtype=float)


def _eval_array(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return np.asarray(env[node.name], dtype=float)
    if isinstance(node, Neg):
        return -_eval_array(node.arg, env)
    if isinstance(node, BinOp):
        a = _eval_array(node.left, env)
        b = _eval_array(node.right, env)
        if node.op == "+":
            return np.add(a, b)
        if node.op == "-":
            return np.subtract(a, b)
        if node.op == "*":
            return np.multiply(a, b)
        if node.op == "/":
            return np.divide(a, b)
        return np.power(np.asarray(a, dtype=float), b)
    if isinstance(node, Call):
        args = [_eval_array(a, env) for a in node.args]
        if node.func == "exp":
            return np.exp(args[0])
        if node.func == "log":
            return np.log(args[0])
        if node.func == "abs":
            return np.abs(args[0])
        reduce = np.minimum if node.func == "min" else np.maximum
        out = args[0]
        for a in args[1:]:
            out = reduce(out, a)
        return out
    raise TypeError(f"not an expression node: {node!r}")


def evaluate_point(node: Node, env: Mapping[str, float]) -> float:
    """Scalar evaluation that raises :class:`NonFiniteValue` with a reason."""
    value = _eval_scalar(node, env)
    if not math.isfinite(value):
        raise NonFiniteValue("overflow")
    return value


def _eval_scalar(node, env) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return float(env[node.name])
    if isinstance(node, Neg):
        return -_eval_scalar(node.arg, env)
    if isinstance(node, BinOp):
        a = _eval_scalar(node.left, env)
        b = _eval_scalar(node.right, env)
        try:
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                if b == 0.0:
                    raise NonFiniteValue("division by zero")
                return a / b
            if a == 0.0 and b < 0:
                raise NonFiniteValue("division by zero")
            if a < 0 and not float(b).is_integer():
                raise NonFiniteValue("negative base with non-integer exponent")
            return math.pow(a, b)
        except OverflowError:
            raise NonFiniteValue("overflow") from None
    if isinstance(node, Call):
        args = [_eval_scalar(a, env) for a in node.args]
        if node.func == "exp":
            try:
                return math.exp(args[0])
            except OverflowError:
                raise NonFiniteValue("overflow") from None
        if node.func == "log":
            if args[0] <= 0:
                raise NonFiniteValue("log of nonpositive")
            return math.log(args[0])
        if node.func == "abs":
            return abs(args[0])
        return min(args) if node.func == "min" else max(args)
    raise TypeError(f"not an expression node: {node!r}")
