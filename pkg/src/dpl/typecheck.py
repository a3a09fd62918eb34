"""Type checking and decoration of terms.

``infer_term`` computes the unique type of a term and returns a copy in
which every pair and projection carries its type subscripts. Annotations
already present are checked against the inferred ones.
"""

from __future__ import annotations

from typing import Mapping, Optional

from dpl.primitives import REGISTRY, UnknownPrimitive
from dpl.syntax import (
    REAL,
    UNIT,
    Add,
    BoolConst,
    BoolTerm,
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
    Snd,
    Term,
    Type,
    UnitVal,
    Var,
    free_vars,
)

TypeEnv = Mapping[str, Type]
FunTypeEnv = Mapping[str, tuple[Type, Type]]


class TypeCheckError(Exception):
    """Base class; ``node`` is the offending AST node (used for source spans)."""

    def __init__(self, message: str, node=None):
        super().__init__(message)
        self.node = node


class UnboundVariable(TypeCheckError):
    pass


class TypeMismatch(TypeCheckError):
    def __init__(self, expected, found, node=None, what: str = ""):
        msg = f"type mismatch{' in ' + what if what else ''}: expected {expected}, found {found}"
        super().__init__(msg, node)
        self.expected = expected
        self.found = found


class GlobalVariableInFunctionBody(TypeCheckError):
    pass


class ArityMismatch(TypeCheckError):
    pass


class UnknownPrimitiveError(TypeCheckError):
    pass


class ValueNotClosed(TypeCheckError):
    pass


def infer_term(phi: FunTypeEnv, gamma: TypeEnv, m: Term) -> tuple[Type, Term]:
    return _infer(dict(phi), dict(gamma), m)


def type_of(m: Term, gamma: Optional[TypeEnv] = None, phi: Optional[FunTypeEnv] = None) -> Type:
    return infer_term(phi or {}, gamma or {}, m)[0]


def infer_bool(phi: FunTypeEnv, gamma: TypeEnv, b: BoolTerm) -> BoolTerm:
    return _infer_bool(dict(phi), dict(gamma), b)


def _expect(expected: Type, found: Type, node, what: str = "") -> None:
    if expected != found:
        raise TypeMismatch(expected, found, node, what)


def _check_decoration(given: Optional[Type], actual: Type, node) -> None:
    if given is not None and given != actual:
        raise TypeMismatch(given, actual, node, "annotation")


def _infer(phi: dict, gamma: dict, m: Term) -> tuple[Type, Term]:
    match m:
        case Var(name):
            try:
                return gamma[name], m
            except KeyError:
                raise UnboundVariable(f"unbound variable {name}", m) from None
        case Const():
            return REAL, m
        case UnitVal():
            return UNIT, m
        case Add(a, b):
            ta, a2 = _infer(phi, gamma, a)
            _expect(REAL, ta, a, "addition")
            tb, b2 = _infer(phi, gamma, b)
            _expect(REAL, tb, b, "addition")
            return REAL, (m if a2 is a and b2 is b else Add(a2, b2))
        case PrimApp(op, a):
            try:
                prim = REGISTRY.op(op)
            except UnknownPrimitive:
                raise UnknownPrimitiveError(f"unknown operation {op}", m) from None
            ta, a2 = _infer(phi, gamma, a)
            if ta != prim.arg_type:
                raise ArityMismatch(f"{op} expects {prim.arg_type}, got {ta}", m)
            return prim.res_type, (m if a2 is a else PrimApp(op, a2))
        case Let(x, t, a, b):
            ta, a2 = _infer(phi, gamma, a)
            _expect(t, ta, m, f"let {x}")
            tb, b2 = _infer(phi, {**gamma, x: t}, b)
            return tb, (m if a2 is a and b2 is b else Let(x, t, a2, b2))
        case Pair(a, b, lt, rt):
            ta, a2 = _infer(phi, gamma, a)
            tb, b2 = _infer(phi, gamma, b)
            _check_decoration(lt, ta, m)
            _check_decoration(rt, tb, m)
            if a2 is a and b2 is b and lt is not None and rt is not None:
                return Prod(ta, tb), m
            return Prod(ta, tb), Pair(a2, b2, ta, tb)
        case Fst(a, lt, rt) | Snd(a, lt, rt):
            ta, a2 = _infer(phi, gamma, a)
            if not isinstance(ta, Prod):
                raise TypeMismatch("a product", ta, m, "projection")
            _check_decoration(lt, ta.left, m)
            _check_decoration(rt, ta.right, m)
            cls = type(m)
            result = ta.left if cls is Fst else ta.right
            if a2 is a and lt is not None and rt is not None:
                return result, m
            return result, cls(a2, ta.left, ta.right)
        case If(c, t, e):
            c2 = _infer_bool(phi, gamma, c)
            tt, t2 = _infer(phi, gamma, t)
            te, e2 = _infer(phi, gamma, e)
            _expect(tt, te, e, "conditional branches")
            return tt, (m if c2 is c and t2 is t and e2 is e else If(c2, t2, e2))
        case LetRec(f, x, pt, rt, body, scope):
            stray = free_vars(body)[0] - {x}
            if stray:
                names = ", ".join(sorted(stray))
                raise GlobalVariableInFunctionBody(f"function {f} uses global variable(s) {names}", m)
            inner = {**phi, f: (pt, rt)}
            tb, body2 = _infer(inner, {x: pt}, body)
            _expect(rt, tb, body, f"body of {f}")
            ts, scope2 = _infer(inner, gamma, scope)
            if body2 is body and scope2 is scope:
                return ts, m
            return ts, LetRec(f, x, pt, rt, body2, scope2)
        case FunApp(f, a):
            try:
                pt, rt = phi[f]
            except KeyError:
                raise UnboundVariable(f"unbound function {f}", m) from None
            ta, a2 = _infer(phi, gamma, a)
            _expect(pt, ta, a, f"argument of {f}")
            return rt, (m if a2 is a else FunApp(f, a2))
        case Rd(x, t, body, at, cot):
            tu, body2 = _infer(phi, {**gamma, x: t}, body)
            tat, at2 = _infer(phi, gamma, at)
            _expect(t, tat, at, "rd point")
            tc, cot2 = _infer(phi, gamma, cot)
            _expect(tu, tc, cot, "rd cotangent")
            if body2 is body and at2 is at and cot2 is cot:
                return t, m
            return t, Rd(x, t, body2, at2, cot2)
    raise TypeError(f"not a term: {m!r}")


def _infer_bool(phi: dict, gamma: dict, b: BoolTerm) -> BoolTerm:
    match b:
        case BoolConst():
            return b
        case PredApp(p, a):
            try:
                pred = REGISTRY.pred(p)
            except UnknownPrimitive:
                raise UnknownPrimitiveError(f"unknown predicate {p}", b) from None
            ta, a2 = _infer(phi, gamma, a)
            if ta != pred.arity:
                raise ArityMismatch(f"{pred.symbol} expects {pred.arity}, got {ta}", b)
            return b if a2 is a else PredApp(p, a2)
    raise TypeError(f"not a boolean term: {b!r}")


def type_of_closed_value(v: Term) -> Type:
    """The unique type of a closed value, computed without environments."""
    match v:
        case Const():
            return REAL
        case UnitVal():
            return UNIT
        case Pair(a, b, _, _):
            return Prod(type_of_closed_value(a), type_of_closed_value(b))
        case Var(name):
            raise ValueNotClosed(f"value mentions variable {name}", v)
    raise TypeError(f"not a value: {v!r}")


def decorate_value(v: Term) -> Term:
    """Fill in pair decorations of a closed value."""
    match v:
        case Pair(a, b, _, _):
            a2, b2 = decorate_value(a), decorate_value(b)
            return Pair(a2, b2, type_of_closed_value(a2), type_of_closed_value(b2))
    return v
