"""Abstract syntax: types, terms, boolean terms, values and trace terms.

Terms are immutable frozen dataclasses. Values and trace terms are not
separate classes; they are the subsets of terms recognised by
:func:`is_value` and :func:`is_trace_term`, which makes the injections into
``Term`` the identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Union


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True, slots=True)
class Real:
    def __str__(self) -> str:
        return "real"


@dataclass(frozen=True, slots=True)
class Unit:
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True, slots=True)
class Prod:
    left: "Type"
    right: "Type"

    def __str__(self) -> str:
        from dpl.frontend.printer import print_type

        return print_type(self)


Type = Union[Real, Unit, Prod]

REAL = Real()
UNIT = Unit()


def iterated_product(types: Iterable[Type]) -> Type:
    """``T0 x ... x Tn-1``: unit when empty, left-associated otherwise."""
    types = list(types)
    if not types:
        return UNIT
    result = types[0]
    for t in types[1:]:
        result = Prod(result, t)
    return result


def real_power(n: int) -> Type:
    return iterated_product([REAL] * n)


def type_size(t: Type) -> int:
    """Number of ``real`` leaves, i.e. the dimension of the type's denotation."""
    match t:
        case Real():
            return 1
        case Unit():
            return 0
        case Prod(left, right):
            return type_size(left) + type_size(right)
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True, slots=True)
class Var:
    name: str


@dataclass(frozen=True, slots=True)
class Const:
    value: float


@dataclass(frozen=True, slots=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True, slots=True)
class PrimApp:
    op: str
    arg: "Term"


@dataclass(frozen=True, slots=True)
class Let:
    name: str
    type: Type
    bound: "Term"
    body: "Term"


@dataclass(frozen=True, slots=True)
class UnitVal:
    pass


@dataclass(frozen=True, slots=True)
class Pair:
    fst: "Term"
    snd: "Term"
    ltype: Optional[Type] = None
    rtype: Optional[Type] = None


@dataclass(frozen=True, slots=True)
class Fst:
    arg: "Term"
    ltype: Optional[Type] = None
    rtype: Optional[Type] = None


@dataclass(frozen=True, slots=True)
class Snd:
    arg: "Term"
    ltype: Optional[Type] = None
    rtype: Optional[Type] = None


@dataclass(frozen=True, slots=True)
class If:
    cond: "BoolTerm"
    then: "Term"
    orelse: "Term"


@dataclass(frozen=True, slots=True)
class LetRec:
    fname: str
    param: str
    ptype: Type
    rtype: Type
    body: "Term"
    scope: "Term"


@dataclass(frozen=True, slots=True)
class FunApp:
    fname: str
    arg: "Term"


@dataclass(frozen=True, slots=True)
class Rd:
    """``rd(x:T. body)(at)(cotangent)``: reverse-mode derivative."""

    var: str
    vtype: Type
    body: "Term"
    at: "Term"
    cotangent: "Term"


@dataclass(frozen=True, slots=True)
class BoolConst:
    value: bool


@dataclass(frozen=True, slots=True)
class PredApp:
    pred: str
    arg: "Term"


TRUE = BoolConst(True)
FALSE = BoolConst(False)

Term = Union[Var, Const, Add, PrimApp, Let, UnitVal, Pair, Fst, Snd, If, LetRec, FunApp, Rd]
BoolTerm = Union[BoolConst, PredApp]
Value = Union[Var, Const, UnitVal, Pair]
# conditional-, call- and derivative-free terms
TraceTerm = Union[Var, Const, Add, PrimApp, Let, UnitVal, Pair, Fst, Snd]

UNIT_VAL = UnitVal()

_TRACE_NODES = (Var, Const, Add, PrimApp, Let, UnitVal, Pair, Fst, Snd)


_ATOMS = frozenset((Var, Const, UnitVal))


def is_value(m: object) -> bool:
    # exact type tests: the node classes are final dataclasses
    while type(m) is Pair:
        if not is_value(m.fst):
            return False
        m = m.snd
    return type(m) in _ATOMS


def is_closed_value(m: object) -> bool:
    while isinstance(m, Pair):
        if not is_closed_value(m.fst):
            return False
        m = m.snd
    return isinstance(m, (Const, UnitVal))


def is_trace_term(m: object) -> bool:
    stack = [m]
    while stack:
        node = stack.pop()
        if not isinstance(node, _TRACE_NODES):
            return False
        match node:
            case Add(a, b) | Let(_, _, a, b) | Pair(a, b, _, _):
                stack.append(a)
                stack.append(b)
            case PrimApp(_, a) | Fst(a, _, _) | Snd(a, _, _):
                stack.append(a)
    return True


# ---------------------------------------------------------------------------
# Variables


class VarSupply:
    """Source of fresh ordinary/function variable names.

    Generated names live in the ``%`` namespace, which the parser accepts but
    surface programs never need; names passed to :meth:`reserve` are skipped.
    """

    def __init__(self, prefix: str = "%", avoid: Iterable[str] = ()):
        self.prefix = prefix
        self.counter = 0
        self._avoid = set(avoid)

    def reserve(self, names: Iterable[str]) -> None:
        self._avoid.update(names)

    def fresh(self, hint: str = "") -> str:
        while True:
            name = f"{self.prefix}{hint}{self.counter}"
            self.counter += 1
            if name not in self._avoid:
                self._avoid.add(name)
                return name


def free_vars(m: Term | BoolTerm) -> tuple[frozenset[str], frozenset[str]]:
    """Free ordinary variables and free function variables of a term."""
    fv: set[str] = set()
    ffv: set[str] = set()
    _free(m, frozenset(), frozenset(), fv, ffv)
    return frozenset(fv), frozenset(ffv)


def _free(m, bound, fbound, fv, ffv) -> None:
    while True:
        match m:
            case Var(name):
                if name not in bound:
                    fv.add(name)
                return
            case Const() | UnitVal() | BoolConst():
                return
            case Add(a, b) | Pair(a, b, _, _):
                _free(a, bound, fbound, fv, ffv)
                m = b
            case PrimApp(_, a) | Fst(a, _, _) | Snd(a, _, _) | PredApp(_, a):
                m = a
            case Let(x, _, a, b):
                _free(a, bound, fbound, fv, ffv)
                bound = bound | {x}
                m = b
            case If(c, t, e):
                _free(c, bound, fbound, fv, ffv)
                _free(t, bound, fbound, fv, ffv)
                m = e
            case LetRec(f, x, _, _, body, scope):
                inner = fbound | {f}
                _free(body, bound | {x}, inner, fv, ffv)
                fbound = inner
                m = scope
            case FunApp(f, a):
                if f not in fbound:
                    ffv.add(f)
                m = a
            case Rd(x, _, body, at, cot):
                _free(body, bound | {x}, fbound, fv, ffv)
                _free(at, bound, fbound, fv, ffv)
                m = cot
            case _:
                raise TypeError(f"not a term: {m!r}")


def all_names(m: Term | BoolTerm) -> set[str]:
    """Every variable name occurring anywhere (free, bound or binding)."""
    names: set[str] = set()
    stack = [m]
    while stack:
        node = stack.pop()
        match node:
            case Var(name):
                names.add(name)
            case Const() | UnitVal() | BoolConst():
                pass
            case Add(a, b) | Pair(a, b, _, _):
                stack += (a, b)
            case PrimApp(_, a) | Fst(a, _, _) | Snd(a, _, _) | PredApp(_, a):
                stack.append(a)
            case Let(x, _, a, b):
                names.add(x)
                stack += (a, b)
            case If(c, t, e):
                stack += (c, t, e)
            case LetRec(f, x, _, _, body, scope):
                names.update((f, x))
                stack += (body, scope)
            case FunApp(f, a):
                names.add(f)
                stack.append(a)
            case Rd(x, _, body, at, cot):
                names.add(x)
                stack += (body, at, cot)
    return names


def substitute_var(m: Term, old: str, new: str) -> Term:
    """Rename free occurrences of ordinary variable ``old`` to ``new``.

    ``new`` must not be bound anywhere in ``m`` (callers pass fresh names),
    so no capture can occur.
    """
    match m:
        case Var(name):
            return Var(new) if name == old else m
        case Const() | UnitVal():
            return m
        case Add(a, b):
            return Add(substitute_var(a, old, new), substitute_var(b, old, new))
        case PrimApp(op, a):
            return PrimApp(op, substitute_var(a, old, new))
        case Let(x, t, a, b):
            a2 = substitute_var(a, old, new)
            return Let(x, t, a2, b if x == old else substitute_var(b, old, new))
        case Pair(a, b, lt, rt):
            return Pair(substitute_var(a, old, new), substitute_var(b, old, new), lt, rt)
        case Fst(a, lt, rt):
            return Fst(substitute_var(a, old, new), lt, rt)
        case Snd(a, lt, rt):
            return Snd(substitute_var(a, old, new), lt, rt)
        case If(c, t, e):
            c2 = c if isinstance(c, BoolConst) else PredApp(c.pred, substitute_var(c.arg, old, new))
            return If(c2, substitute_var(t, old, new), substitute_var(e, old, new))
        case LetRec(f, x, pt, rt, body, scope):
            # function bodies have no free ordinary variables besides x
            return LetRec(f, x, pt, rt, body, substitute_var(scope, old, new))
        case FunApp(f, a):
            return FunApp(f, substitute_var(a, old, new))
        case Rd(x, t, body, at, cot):
            body2 = body if x == old else substitute_var(body, old, new)
            return Rd(x, t, body2, substitute_var(at, old, new), substitute_var(cot, old, new))
    raise TypeError(f"not a term: {m!r}")


def rename_fun(m: Term, old: str, new: str) -> Term:
    """Rename free occurrences of function variable ``old`` to ``new``."""
    match m:
        case Var() | Const() | UnitVal():
            return m
        case Add(a, b):
            return Add(rename_fun(a, old, new), rename_fun(b, old, new))
        case PrimApp(op, a):
            return PrimApp(op, rename_fun(a, old, new))
        case Let(x, t, a, b):
            return Let(x, t, rename_fun(a, old, new), rename_fun(b, old, new))
        case Pair(a, b, lt, rt):
            return Pair(rename_fun(a, old, new), rename_fun(b, old, new), lt, rt)
        case Fst(a, lt, rt):
            return Fst(rename_fun(a, old, new), lt, rt)
        case Snd(a, lt, rt):
            return Snd(rename_fun(a, old, new), lt, rt)
        case If(c, t, e):
            c2 = c if isinstance(c, BoolConst) else PredApp(c.pred, rename_fun(c.arg, old, new))
            return If(c2, rename_fun(t, old, new), rename_fun(e, old, new))
        case LetRec(f, x, pt, rt, body, scope):
            if f == old:
                return m
            return LetRec(f, x, pt, rt, rename_fun(body, old, new), rename_fun(scope, old, new))
        case FunApp(f, a):
            return FunApp(new if f == old else f, rename_fun(a, old, new))
        case Rd(x, t, body, at, cot):
            return Rd(x, t, rename_fun(body, old, new), rename_fun(at, old, new), rename_fun(cot, old, new))
    raise TypeError(f"not a term: {m!r}")


# ---------------------------------------------------------------------------
# Alpha equivalence


def alpha_eq(m: Term | BoolTerm, n: Term | BoolTerm) -> bool:
    """Structural equality up to renaming of bound variables.

    Decorations on pairs and projections take part in the comparison only
    when present on both sides.
    """
    return _alpha(m, n, {}, {}, {}, {}, itertools.count())


def _ty_eq(a: Optional[Type], b: Optional[Type]) -> bool:
    return a is None or b is None or a == b


def _alpha(m, n, left, right, fleft, fright, counter) -> bool:
    while True:
        match m, n:
            case Var(a), Var(b):
                return left.get(a, a) == right.get(b, b) if (a in left) == (b in right) else False
            case Const(a), Const(b):
                return a == b or (a != a and b != b)
            case UnitVal(), UnitVal():
                return True
            case BoolConst(a), BoolConst(b):
                return a == b
            case Add(a1, b1), Add(a2, b2):
                if not _alpha(a1, a2, left, right, fleft, fright, counter):
                    return False
                m, n = b1, b2
            case PrimApp(o1, a1), PrimApp(o2, a2):
                if o1 != o2:
                    return False
                m, n = a1, a2
            case PredApp(o1, a1), PredApp(o2, a2):
                if o1 != o2:
                    return False
                m, n = a1, a2
            case Let(x1, t1, a1, b1), Let(x2, t2, a2, b2):
                if t1 != t2 or not _alpha(a1, a2, left, right, fleft, fright, counter):
                    return False
                k = f"#{next(counter)}"
                left, right = {**left, x1: k}, {**right, x2: k}
                m, n = b1, b2
            case Pair(a1, b1, l1, r1), Pair(a2, b2, l2, r2):
                if not (_ty_eq(l1, l2) and _ty_eq(r1, r2)):
                    return False
                if not _alpha(a1, a2, left, right, fleft, fright, counter):
                    return False
                m, n = b1, b2
            case (Fst(a1, l1, r1), Fst(a2, l2, r2)) | (Snd(a1, l1, r1), Snd(a2, l2, r2)):
                if not (_ty_eq(l1, l2) and _ty_eq(r1, r2)):
                    return False
                m, n = a1, a2
            case If(c1, t1, e1), If(c2, t2, e2):
                if not (_alpha(c1, c2, left, right, fleft, fright, counter)
                        and _alpha(t1, t2, left, right, fleft, fright, counter)):
                    return False
                m, n = e1, e2
            case LetRec(f1, x1, p1, r1, body1, s1), LetRec(f2, x2, p2, r2, body2, s2):
                if p1 != p2 or r1 != r2:
                    return False
                fk = f"#{next(counter)}"
                xk = f"#{next(counter)}"
                fl, fr = {**fleft, f1: fk}, {**fright, f2: fk}
                if not _alpha(body1, body2, {x1: xk}, {x2: xk}, fl, fr, counter):
                    return False
                fleft, fright = fl, fr
                m, n = s1, s2
            case FunApp(f1, a1), FunApp(f2, a2):
                if (f1 in fleft) != (f2 in fright) or fleft.get(f1, f1) != fright.get(f2, f2):
                    return False
                m, n = a1, a2
            case Rd(x1, t1, body1, at1, c1), Rd(x2, t2, body2, at2, c2):
                if t1 != t2:
                    return False
                k = f"#{next(counter)}"
                if not _alpha(body1, body2, {**left, x1: k}, {**right, x2: k}, fleft, fright, counter):
                    return False
                if not _alpha(at1, at2, left, right, fleft, fright, counter):
                    return False
                m, n = c1, c2
            case _:
                return False


def strip_decorations(m: Term | BoolTerm) -> Term | BoolTerm:
    """Drop the type subscripts on pairs and projections."""
    match m:
        case Var() | Const() | UnitVal() | BoolConst():
            return m
        case Add(a, b):
            return Add(strip_decorations(a), strip_decorations(b))
        case PrimApp(op, a):
            return PrimApp(op, strip_decorations(a))
        case PredApp(p, a):
            return PredApp(p, strip_decorations(a))
        case Let(x, t, a, b):
            return Let(x, t, strip_decorations(a), strip_decorations(b))
        case Pair(a, b, _, _):
            return Pair(strip_decorations(a), strip_decorations(b))
        case Fst(a, _, _):
            return Fst(strip_decorations(a))
        case Snd(a, _, _):
            return Snd(strip_decorations(a))
        case If(c, t, e):
            return If(strip_decorations(c), strip_decorations(t), strip_decorations(e))
        case LetRec(f, x, pt, rt, body, scope):
            return LetRec(f, x, pt, rt, strip_decorations(body), strip_decorations(scope))
        case FunApp(f, a):
            return FunApp(f, strip_decorations(a))
        case Rd(x, t, body, at, cot):
            return Rd(x, t, strip_decorations(body), strip_decorations(at), strip_decorations(cot))
    raise TypeError(f"not a term: {m!r}")


def term_size(m: Term | BoolTerm) -> int:
    count = 0
    stack = [m]
    while stack:
        node = stack.pop()
        count += 1
        match node:
            case Add(a, b) | Pair(a, b, _, _) | Let(_, _, a, b):
                stack += (a, b)
            case PrimApp(_, a) | Fst(a, _, _) | Snd(a, _, _) | PredApp(_, a) | FunApp(_, a):
                stack.append(a)
            case If(c, t, e):
                stack += (c, t, e)
            case LetRec(_, _, _, _, body, scope):
                stack += (body, scope)
            case Rd(_, _, body, at, cot):
                stack += (body, at, cot)
    return count


class UnboundVariableError(LookupError):
    pass


def apply_env_value(rho: dict[str, Term], v: Term) -> Term:
    """Substitute closed environment values for the variables of a value."""
    match v:
        case Var(name):
            try:
                return rho[name]
            except KeyError:
                raise UnboundVariableError(name) from None
        case Const() | UnitVal():
            return v
        case Pair(a, b, lt, rt):
            a2 = apply_env_value(rho, a)
            b2 = apply_env_value(rho, b)
            if a2 is a and b2 is b:
                return v
            return Pair(a2, b2, lt, rt)
    raise TypeError(f"not a value: {v!r}")


def flatten_value(v: Term) -> list[float]:
    """Real leaves of a closed value, left to right."""
    out: list[float] = []
    stack = [v]
    while stack:
        node = stack.pop()
        match node:
            case Const(c):
                out.append(c)
            case UnitVal():
                pass
            case Pair(a, b, _, _):
                stack.append(b)
                stack.append(a)
            case _:
                raise TypeError(f"not a closed value: {node!r}")
    return out


def unflatten_value(t: Type, xs) -> Term:
    """Inverse of :func:`flatten_value` at type ``t`` (pairs come out decorated)."""
    it = iter(xs)
    value = _unflatten(t, it)
    if next(it, None) is not None:
        raise ValueError("too many leaves for type")
    return value


def _unflatten(t: Type, it) -> Term:
    match t:
        case Real():
            return Const(float(next(it)))
        case Unit():
            return UNIT_VAL
        case Prod(left, right):
            a = _unflatten(left, it)
            return Pair(a, _unflatten(right, it), left, right)
    raise TypeError(f"not a type: {t!r}")
