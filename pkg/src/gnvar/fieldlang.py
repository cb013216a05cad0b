"""Closed-form field definitions: parsing and jet evaluation.

Grammar (whitespace-insensitive)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | atom ("^" integer)?
    atom   := number | "x0".."x3" | ident | "(" expr ")"
            | ("sin" | "cos" | "exp") "(" expr ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

from . import jets
from .jets import Jet, JetOrderError

MAX_EVAL_ORDER = 4

FUNCTIONS = ("sin", "cos", "exp")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, src: str = ""):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.src = src


class UnknownIdentifier(ExprSyntaxError):
    pass


class UnboundConstant(KeyError):
    pass


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int

    def __post_init__(self):
        if self.index not in (0, 1, 2, 3):
            raise ValueError(f"variable index {self.index} outside 0..3")


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Const, Var, Name, Neg, BinOp, Pow, Call]


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str):
    pos = 0
    out = []
    n = len(src)
    while pos < n:
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[start]!r}", start, src)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", n))
    return out


class _Parser:
    def __init__(self, src: str, names):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0
        self.names = names

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, off = self.take()
        if val != text:
            raise ExprSyntaxError(f"expected {text!r}, found {val or 'end of input'!r}", off, self.src)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", off, self.src)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.factor())
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Pow(base, self.integer())
        return base

    def integer(self) -> int:
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        kind, val, off = self.take()
        if kind != "num":
            raise ExprSyntaxError("exponent must be an integer literal", off, self.src)
        if not re.fullmatch(r"\d+", val):
            raise ExprSyntaxError(f"non-integer exponent {val!r}", off, self.src)
        return sign * int(val)

    def atom(self) -> Expr:
        kind, val, off = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "id":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            m = re.fullmatch(r"x(\d+)", val)
            if m:
                k = int(m.group(1))
                if k > 3 or m.group(1) != str(k):
                    raise UnknownIdentifier(f"unknown identifier {val!r}", off, self.src)
                return Var(k)
            if self.names is not None and val not in self.names:
                raise UnknownIdentifier(f"unknown identifier {val!r}", off, self.src)
            return Name(val)
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", off, self.src)


def parse_expression(src: str, names: Sequence[str] | None = None) -> Expr:
    """Parse ``src`` into an expression tree.

    ``names`` optionally restricts which named constants may appear.
    """
    return _Parser(src, None if names is None else set(names)).parse()


def constant_names(e: Expr) -> set[str]:
    if isinstance(e, Name):
        return {e.name}
    if isinstance(e, (Neg, Call)):
        return constant_names(e.arg)
    if isinstance(e, Pow):
        return constant_names(e.base)
    if isinstance(e, BinOp):
        return constant_names(e.left) | constant_names(e.right)
    return set()


def to_source(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Name):
        return e.name
    if isinstance(e, Neg):
        return f"-({to_source(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_source(e.left)} {e.op} {to_source(e.right)})"
    if isinstance(e, Pow):
        return f"({to_source(e.base)})^{e.exponent}"
    return f"{e.fn}({to_source(e.arg)})"


def eval_jet(e: Expr, point: Sequence[float], order: int,
             consts: Mapping[str, float] | None = None) -> Jet:
    """Taylor jet of ``e`` at ``point`` through ``order``."""
    if not 0 <= order <= MAX_EVAL_ORDER:
        raise JetOrderError(f"evaluation order {order} outside [0, {MAX_EVAL_ORDER}]")
    consts = consts or {}
    point = tuple(float(p) for p in point)

    def ev(node: Expr) -> Jet:
        if isinstance(node, Const):
            return Jet.constant(node.value, order)
        if isinstance(node, Var):
            return Jet.variable(node.index, point, order)
        if isinstance(node, Name):
            try:
                return Jet.constant(float(consts[node.name]), order)
            except KeyError:
                raise UnboundConstant(f"named constant {node.name!r} is not bound") from None
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Pow):
            return ev(node.base) ** node.exponent
        if isinstance(node, Call):
            return jets.UNARY[node.fn](ev(node.arg))
        a, b = ev(node.left), ev(node.right)
        return jet_arith(a, b, node.op)

    return ev(e)


def evaluate(e: Expr, point: Sequence[float], consts: Mapping[str, float] | None = None) -> float:
    return float(eval_jet(e, point, 0, consts).value)


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    raise ValueError(f"unknown operator {op!r}")


def jet_apply(fn: str | Callable[[Jet], Jet], a: Jet) -> Jet:
    if isinstance(fn, str):
        fn = jets.UNARY[fn]
    return fn(a)


# -- sections and jet-space coordinates ---------------------------------------

def field_jets(fields: Sequence[Expr], point: Sequence[float], order: int,
               consts: Mapping[str, float] | None = None) -> Jet:
    """Stack the jets of each field component: shape ``(ncomp,)``."""
    return jets.stack([eval_jet(f, point, order, consts) for f in fields])


def slot_indices(lag_order: int) -> tuple[tuple[int, ...], ...]:
    """Jet coordinates ``y_alpha`` read by a Lagrangian of the given order."""
    return jets.multi_indices(lag_order)


def section_slots(field: Jet, lag_order: int, order: int) -> Jet:
    """Jet coordinates ``y^i_alpha(x)`` along a section, as x-jets.

    ``field`` holds the section's jets (shape ``(ncomp,)``) of order at least
    ``order + lag_order``; the result has shape ``(ncomp, nslot)`` and order
    ``order``.
    """
    if field.order < order + lag_order:
        raise JetOrderError(
            f"need field jets of order {order + lag_order}, have {field.order}"
        )
    base = field.truncate(order + lag_order)
    cols = []
    for alpha in slot_indices(lag_order):
        j = base
        for mu, k in enumerate(alpha):
            for _ in range(k):
                j = j.partial(mu)
        cols.append(j.truncate(order))
    return jets.stack(cols, axis=-1)


def coordinate_jets(point: Sequence[float], order: int) -> Jet:
    return jets.stack([Jet.variable(mu, point, order) for mu in range(4)])


LagrangianFn = Callable[[Jet, Jet], Jet]


def total_derivative(L: LagrangianFn, fields: Jet, point: Sequence[float], gamma: int,
                     lag_order: int = 1) -> Jet:
    """``D_gamma L`` along the section ``fields``; one order lower than
    the composite ``L(x, j y)`` that the section supports."""
    order = fields.order - lag_order
    if order < 1:
        raise JetOrderError("total derivative needs field jets of order lag_order + 1")
    x = coordinate_jets(point, order)
    composite = L(x, section_slots(fields, lag_order, order))
    return composite.partial(gamma)
