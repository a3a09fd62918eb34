"""Canonical printer; its output parses back to an alpha-equal term.

Decorations on pairs and projections are not printed (the type checker
re-infers them). Function definitions always print as ``letrec``.
"""

from __future__ import annotations

import math

from dpl.primitives import REGISTRY
from dpl.syntax import (
    Add,
    BoolConst,
    Const,
    Fst,
    FunApp,
    If,
    Let,
    LetRec,
    Pair,
    PredApp,
    PrimApp,
    Prod,
    Rd,
    Real,
    Snd,
    Unit,
    UnitVal,
    Var,
)

# precedence levels
_BINDING, _SUM, _PRODUCT, _UNARY, _ATOM = range(5)


def print_type(t) -> str:
    match t:
        case Real():
            return "real"
        case Unit():
            return "unit"
        case Prod(left, right):
            n = _real_power(t)
            if n is not None:
                return f"real^{n}"
            r = print_type(right)
            if isinstance(right, Prod) and _real_power(right) is None:
                r = f"({r})"
            return f"{print_type(left)} * {r}"
    raise TypeError(f"not a type: {t!r}")


def _real_power(t) -> int | None:
    n = 0
    while isinstance(t, Prod) and isinstance(t.right, Real):
        n += 1
        t = t.left
    return n + 1 if n and isinstance(t, Real) else None


def format_number(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "1e999" if x > 0 else "-1e999"
    if x == 0:
        return "-0" if math.copysign(1.0, x) < 0 else "0"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def print_term(m) -> str:
    return _Printer(multiline=False).show(m, _BINDING)


def print_trace(c) -> str:
    """Like :func:`print_term`, but the outer ``let`` spine is laid out one binding per line."""
    return _Printer(multiline=True).show(c, _BINDING)


def print_bool(b) -> str:
    return _Printer(multiline=False).bool_(b)


class _Printer:
    def __init__(self, multiline: bool):
        self.multiline = multiline

    def show(self, m, level: int) -> str:
        if _level(m) < level:
            return f"({self.show(m, _BINDING)})"
        match m:
            case Let() | LetRec() | If():
                return self.spine(m)
            case Add(a, PrimApp("neg", b)):
                return f"{self.show(a, _SUM)} - {self.show(b, _PRODUCT)}"
            case Add(a, b):
                return f"{self.show(a, _SUM)} + {self.show(b, _PRODUCT)}"
            case PrimApp("mul", Pair(a, b)):
                return f"{self.show(a, _PRODUCT)} * {self.show(b, _UNARY)}"
            case Fst(a) | Snd(a):
                word = "fst" if isinstance(m, Fst) else "snd"
                return f"{word} {self.show(a, _UNARY)}"
            case Const(x):
                return format_number(x)
            case Var(name):
                return name
            case UnitVal():
                return "()"
            case Pair():
                return "<" + ", ".join(self.show(c, _BINDING) for c in _tuple_items(m)) + ">"
            case PrimApp(op, a) | FunApp(op, a):
                return f"{op}({self.show(a, _BINDING)})"
            case Rd(x, t, body, at, cot):
                return (
                    f"rd({x}: {print_type(t)}. {self.show(body, _BINDING)})"
                    f"({self.show(at, _BINDING)})({self.show(cot, _BINDING)})"
                )
        raise TypeError(f"not a term: {m!r}")

    def spine(self, m) -> str:
        parts = []
        sep = "\n" if self.multiline else " "
        while True:
            match m:
                case Let(x, t, bound, body):
                    parts.append(f"let {x}: {print_type(t)} = {self.inline(bound)} in")
                    m = body
                case LetRec(f, x, t, u, body, scope):
                    parts.append(
                        f"letrec {f}({x}: {print_type(t)}): {print_type(u)} = {self.inline(body)} in"
                    )
                    m = scope
                case If(c, t, e):
                    parts.append(f"if {self.bool_(c)} then {self.inline(t)} else")
                    m = e
                case _:
                    parts.append(self.show(m, _SUM))
                    return sep.join(parts)

    def inline(self, m) -> str:
        return _Printer(False).show(m, _BINDING)

    def bool_(self, b) -> str:
        match b:
            case BoolConst(v):
                return "true" if v else "false"
            case PredApp(p, Pair(a, c)) if REGISTRY.has_pred(p):
                sym = REGISTRY.pred(p).symbol
                return f"{self.inline_at(a, _SUM)} {sym} {self.inline_at(c, _SUM)}"
            case PredApp(p, a):
                return f"{p}({self.inline(a)})"
        raise TypeError(f"not a boolean term: {b!r}")

    def inline_at(self, m, level: int) -> str:
        return _Printer(False).show(m, level)


def _tuple_items(m) -> list:
    items = []
    while isinstance(m, Pair):
        items.append(m.snd)
        m = m.fst
    items.append(m)
    items.reverse()
    return items


def _level(m) -> int:
    match m:
        case Let() | LetRec() | If():
            return _BINDING
        case Add():
            return _SUM
        case PrimApp("mul", Pair()):
            return _PRODUCT
        case Fst() | Snd():
            return _UNARY
        case Const(x):
            return _UNARY if (x < 0 or math.copysign(1.0, x) < 0) else _ATOM
        case _:
            return _ATOM
