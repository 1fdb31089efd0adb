"""Arithmetic expressions in x, y, z, u with a symbolic derivative in u.

The nonlinearity ``f(x, u)`` of the boundary value problem is given as text,
parsed into an immutable tree, evaluated (pointwise or vectorised over numpy
arrays) and differentiated with respect to ``u``.

Grammar::

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

so ``^`` binds tighter than unary minus (``-u^2 == -(u^2)``) and is
right-associative, while ``2^-u`` is accepted.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Mapping

import numpy as np

from .errors import UniqcertError

__all__ = [
    "VARIABLES",
    "FUNCTIONS",
    "Expr",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "ExprError",
    "ExprSyntaxError",
    "UnknownIdentifierError",
    "ExprDomainError",
    "NotDifferentiableError",
    "parse",
    "evaluate",
    "differentiate_u",
    "to_text",
]

VARIABLES = ("x", "y", "z", "u")
FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "abs")


class ExprError(UniqcertError, ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, position):
        self.position = position
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name, position):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", position)


class ExprDomainError(ExprError, ArithmeticError):
    """Evaluation left the real domain (1/0, log of x <= 0, overflow, ...).

    ``index`` is the flat index of the first offending entry when the
    expression was evaluated over arrays, else ``None``.
    """

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message if index is None else f"{message} (entry {index})")


class NotDifferentiableError(ExprError):
    pass


# ---------------------------------------------------------------------------
# tree

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


class Expr:
    """Base class of expression nodes. Nodes are immutable."""

    __slots__ = ()

    def children(self) -> tuple["Expr", ...]:
        return ()

    @cached_property
    def variables(self) -> frozenset:
        out = frozenset()
        for c in self.children():
            out |= c.variables
        return out

    @cached_property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children())

    def walk(self) -> Iterator["Expr"]:
        yield self
        for c in self.children():
            yield from c.walk()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))

    @cached_property
    def variables(self):
        return frozenset()


@dataclass(frozen=True)
class Var(Expr):
    name: str

    @cached_property
    def variables(self):
        return frozenset((self.name,))


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def children(self):
        return (self.arg,)


# ---------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.factor())
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "ident":
            if val in VARIABLES:
                return Var(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise UnknownIdentifierError(val, pos)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises `ExprSyntaxError` (with the character position) on malformed
    input and `UnknownIdentifierError` for names outside x, y, z, u and the
    supported functions.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# printing

def _format_number(v):
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _prec(node):
    if isinstance(node, BinOp):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL}.get(node.op, _PREC_POW)
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Const) and (node.value < 0 or math.copysign(1.0, node.value) < 0):
        return _PREC_NEG
    return _PREC_ATOM


def _wrap(node, parens):
    s = to_text(node)
    return f"({s})" if parens else s


def to_text(e: Expr) -> str:
    """Render ``e`` with minimal parentheses; ``parse(to_text(e)) == e``."""
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _prec(e.arg) < _PREC_NEG)
    p = _prec(e)
    if e.op == "^":
        left = _wrap(e.left, _prec(e.left) <= _PREC_POW)
        right = _wrap(e.right, _prec(e.right) < _PREC_NEG)
        return f"{left}^{right}"
    left = _wrap(e.left, _prec(e.left) < p)
    right = _wrap(e.right, _prec(e.right) <= p)
    sep = " " if p == _PREC_ADD else ""
    return f"{left}{sep}{e.op}{sep}{right}"


# ---------------------------------------------------------------------------
# evaluation

def _first_bad(mask):
    mask = np.asarray(mask)
    if mask.ndim == 0:
        return None
    return int(np.flatnonzero(mask)[0])


def _check_finite(value, what):
    ok = np.isfinite(value)
    if not np.all(ok):
        raise ExprDomainError(f"non-finite result in {what}", _first_bad(~ok))
    return value


def _power(base, expo):
    if np.ndim(expo) == 0 and float(expo).is_integer():
        k = int(expo)
        if k < 0 and np.any(base == 0):
            raise ExprDomainError("zero raised to a negative power", _first_bad(base == 0))
        return np.power(base, float(k)) if k not in (1, 2) else (base if k == 1 else base * base)
    frac = expo != np.floor(expo)
    bad = (base < 0) & frac
    if np.any(bad):
        raise ExprDomainError("fractional power of a negative number", _first_bad(bad))
    bad = (base == 0) & (expo < 0)
    if np.any(bad):
        raise ExprDomainError("zero raised to a negative power", _first_bad(bad))
    return np.power(base, expo)


def _eval(node, env):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_eval(node.arg, env)
    if isinstance(node, Call):
        a = _eval(node.arg, env)
        f = node.func
        if f == "log":
            if np.any(a <= 0):
                raise ExprDomainError("log of a non-positive number", _first_bad(a <= 0))
            return np.log(a)
        if f == "sqrt":
            if np.any(a < 0):
                raise ExprDomainError("sqrt of a negative number", _first_bad(a < 0))
            return np.sqrt(a)
        return _check_finite(getattr(np, f)(a), f)
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    op = node.op
    if op == "+":
        r = a + b
    elif op == "-":
        r = a - b
    elif op == "*":
        r = a * b
    elif op == "/":
        if np.any(b == 0):
            raise ExprDomainError("division by zero", _first_bad(np.broadcast_to(b, np.broadcast(a, b).shape) == 0))
        r = a / b
    else:
        r = _power(a, b)
    return _check_finite(r, repr(op))


def evaluate(e: Expr, binding: Mapping[str, object]):
    """Evaluate ``e`` with the variable values in ``binding``.

    Values may be floats or numpy arrays (broadcast together). Returns a float
    for scalar bindings, otherwise an array of the broadcast shape.
    """
    missing = e.variables - set(binding)
    if missing:
        raise ExprError(f"unbound variable(s): {', '.join(sorted(missing))}")
    env = {k: np.asarray(binding[k], dtype=np.float64) for k in binding}
    shape = np.broadcast_shapes(*(v.shape for v in env.values())) if env else ()
    # full-shape operands keep error indices meaningful
    env = {k: np.broadcast_to(v, shape) for k, v in env.items()}
    with np.errstate(all="ignore"):
        out = np.asarray(_eval(e, env), dtype=np.float64)
    if shape == ():
        return float(out)
    return np.array(np.broadcast_to(out, shape))


# ---------------------------------------------------------------------------
# differentiation

def _num(v):
    v = float(v)
    if v == 0:
        v = 0.0
    return Neg(Const(-v)) if v < 0 else Const(v)


def _value(node):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg) and isinstance(node.arg, Const):
        return -node.arg.value
    return None


def _fold(node):
    # only variable-free subtrees fold; failures leave the tree untouched
    if node.variables:
        return node
    try:
        v = evaluate(node, {})
    except ExprDomainError:
        return node
    return _num(v)


def _add(a, b):
    if _value(a) == 0:
        return b
    if _value(b) == 0:
        return a
    return _fold(BinOp("+", a, b))


def _sub(a, b):
    if _value(b) == 0:
        return a
    if _value(a) == 0:
        return _neg(b)
    return _fold(BinOp("-", a, b))


def _mul(a, b):
    if _value(a) == 0 or _value(b) == 0:
        return Const(0.0)
    if _value(a) == 1:
        return b
    if _value(b) == 1:
        return a
    return _fold(BinOp("*", a, b))


def _div(a, b):
    if _value(a) == 0:
        return Const(0.0)
    if _value(b) == 1:
        return a
    return _fold(BinOp("/", a, b))


def _pow(a, b):
    if _value(b) == 1:
        return a
    if _value(b) == 0:
        return Const(1.0)
    return _fold(BinOp("^", a, b))


def _neg(a):
    if isinstance(a, Neg):
        return a.arg
    return _fold(Neg(a))


def _d(e):
    if "u" not in e.variables:
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0)
    if isinstance(e, Neg):
        return _neg(_d(e.arg))
    if isinstance(e, Call):
        a, da = e.arg, _d(e.arg)
        if e.func == "sin":
            return _mul(Call("cos", a), da)
        if e.func == "cos":
            return _mul(_neg(Call("sin", a)), da)
        if e.func == "exp":
            return _mul(e, da)
        if e.func == "log":
            return _div(da, a)
        if e.func == "sqrt":
            return _div(da, _mul(Const(2.0), e))
        raise NotDifferentiableError(f"{e.func}({to_text(a)}) is not differentiable in u")
    a, b = e.left, e.right
    if e.op == "+":
        return _add(_d(a), _d(b))
    if e.op == "-":
        return _sub(_d(a), _d(b))
    if e.op == "*":
        return _add(_mul(_d(a), b), _mul(a, _d(b)))
    if e.op == "/":
        if "u" not in b.variables:
            return _div(_d(a), b)
        return _div(_sub(_mul(_d(a), b), _mul(a, _d(b))), _pow(b, Const(2.0)))
    # power
    if "u" not in b.variables:
        return _mul(_mul(b, _pow(a, _sub(b, Const(1.0)))), _d(a))
    return _mul(e, _add(_mul(_d(b), Call("log", a)), _div(_mul(b, _d(a)), a)))


def differentiate_u(e: Expr) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to ``u``.

    The result is not simplified beyond folding of variable-free subtrees and
    dropping 0/1 identities. ``abs`` of a u-dependent argument raises
    `NotDifferentiableError`.
    """
    return _d(e)
