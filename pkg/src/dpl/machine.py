"""Ordinary and symbolic evaluation.

Both relations are driven by the same loop: a term is split into an
evaluation context and a redex (:func:`decompose`), the redex is contracted,
and pending work lives on an explicit continuation stack rather than the
host call stack. The continuation frames correspond one-to-one to the
premises of the context rules (evaluate the redex, bind its value to a fresh
variable, continue with ``E[x]``) and of the ``let``/call/``rd`` rules of
symbolic evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from dpl.errors import Budget, FuelExhausted, InternalError, Stuck
from dpl.primitives import REGISTRY, UnknownPrimitive
from dpl.symdiff import rdiff
from dpl.syntax import (
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
    Rd,
    Snd,
    Term,
    Type,
    UnboundVariableError,
    UnitVal,
    Var,
    VarSupply,
    all_names,
    apply_env_value,
    free_vars,
    is_value,
    substitute_var,
)
from dpl.typecheck import infer_term, type_of_closed_value

DEFAULT_FUEL = 10**6

__all__ = [
    "Closure",
    "Machine",
    "DEFAULT_FUEL",
    "decompose",
    "decompose_bool",
    "plug",
    "eval_term",
    "eval_bool",
    "sym_eval",
    "FuelExhausted",
    "Stuck",
    "InternalError",
]


# ---------------------------------------------------------------------------
# Evaluation contexts


@dataclass(frozen=True, slots=True)
class AddL:
    right: Term

    def fill(self, m):
        return Add(m, self.right)


@dataclass(frozen=True, slots=True)
class AddR:
    left: Term

    def fill(self, m):
        return Add(self.left, m)


@dataclass(frozen=True, slots=True)
class OpArg:
    op: str

    def fill(self, m):
        return PrimApp(self.op, m)


@dataclass(frozen=True, slots=True)
class LetBound:
    name: str
    type: Type
    body: Term

    def fill(self, m):
        return Let(self.name, self.type, m, self.body)


@dataclass(frozen=True, slots=True)
class PairL:
    snd: Term
    ltype: Optional[Type]
    rtype: Optional[Type]

    def fill(self, m):
        return Pair(m, self.snd, self.ltype, self.rtype)


@dataclass(frozen=True, slots=True)
class PairR:
    fst: Term
    ltype: Optional[Type]
    rtype: Optional[Type]

    def fill(self, m):
        return Pair(self.fst, m, self.ltype, self.rtype)


@dataclass(frozen=True, slots=True)
class FstArg:
    ltype: Optional[Type]
    rtype: Optional[Type]

    def fill(self, m):
        return Fst(m, self.ltype, self.rtype)


@dataclass(frozen=True, slots=True)
class SndArg:
    ltype: Optional[Type]
    rtype: Optional[Type]

    def fill(self, m):
        return Snd(m, self.ltype, self.rtype)


@dataclass(frozen=True, slots=True)
class IfCond:
    """``if [ ] then M else N``; the hole takes a boolean term."""

    then: Term
    orelse: Term

    def fill(self, b):
        return If(b, self.then, self.orelse)


@dataclass(frozen=True, slots=True)
class PredArg:
    """``pred([ ])``; plugging yields a boolean term."""

    pred: str

    def fill(self, m):
        return PredApp(self.pred, m)


@dataclass(frozen=True, slots=True)
class FunArg:
    fname: str

    def fill(self, m):
        return FunApp(self.fname, m)


@dataclass(frozen=True, slots=True)
class RdAt:
    var: str
    vtype: Type
    body: Term
    cotangent: Term

    def fill(self, m):
        return Rd(self.var, self.vtype, self.body, m, self.cotangent)


@dataclass(frozen=True, slots=True)
class RdCot:
    var: str
    vtype: Type
    body: Term
    at: Term

    def fill(self, m):
        return Rd(self.var, self.vtype, self.body, self.at, m)


Context = tuple  # layers, outermost first


def plug(ctx: Context, m):
    for layer in reversed(ctx):
        m = layer.fill(m)
    return m


@dataclass(frozen=True, slots=True)
class IsValue:
    value: Union[Term, BoolConst]


@dataclass(frozen=True, slots=True)
class TermRedex:
    context: Context
    redex: Term


@dataclass(frozen=True, slots=True)
class BoolRedex:
    context: Context
    redex: PredApp


Decomposition = Union[IsValue, TermRedex, BoolRedex]


def decompose(m: Term) -> Decomposition:
    """Split a term into its unique evaluation context and redex."""
    if is_value(m):
        return IsValue(m)
    return _descend(m, [])


def decompose_bool(b: BoolTerm) -> Decomposition:
    match b:
        case BoolConst():
            return IsValue(b)
        case PredApp(p, a):
            if is_value(a):
                return BoolRedex((), b)
            return _descend(a, [PredArg(p)])
    raise TypeError(f"not a boolean term: {b!r}")


def _descend(m: Term, ctx: list) -> Decomposition:
    # m is known not to be a value
    while True:
        match m:
            case Add(a, b):
                if not is_value(a):
                    ctx.append(AddL(b))
                    m = a
                elif not is_value(b):
                    ctx.append(AddR(a))
                    m = b
                else:
                    return TermRedex(tuple(ctx), m)
            case PrimApp(op, a) | FunApp(op, a):
                if is_value(a):
                    return TermRedex(tuple(ctx), m)
                ctx.append(OpArg(op) if isinstance(m, PrimApp) else FunArg(op))
                m = a
            case Let(x, t, a, body):
                if is_value(a):
                    return TermRedex(tuple(ctx), m)
                ctx.append(LetBound(x, t, body))
                m = a
            case Pair(a, b, lt, rt):
                if not is_value(a):
                    ctx.append(PairL(b, lt, rt))
                    m = a
                else:
                    ctx.append(PairR(a, lt, rt))
                    m = b
            case Fst(a, lt, rt):
                if is_value(a):
                    return TermRedex(tuple(ctx), m)
                ctx.append(FstArg(lt, rt))
                m = a
            case Snd(a, lt, rt):
                if is_value(a):
                    return TermRedex(tuple(ctx), m)
                ctx.append(SndArg(lt, rt))
                m = a
            case If(BoolConst(), _, _) | LetRec():
                return TermRedex(tuple(ctx), m)
            case If(PredApp(p, a) as cond, t, e):
                ctx.append(IfCond(t, e))
                if is_value(a):
                    return BoolRedex(tuple(ctx), cond)
                ctx.append(PredArg(p))
                m = a
            case Rd(x, t, body, at, cot):
                if not is_value(at):
                    ctx.append(RdAt(x, t, body, cot))
                    m = at
                elif not is_value(cot):
                    ctx.append(RdCot(x, t, body, at))
                    m = cot
                else:
                    return TermRedex(tuple(ctx), m)
            case _:
                raise TypeError(f"not a term: {m!r}")


# ---------------------------------------------------------------------------
# Environments


@dataclass(frozen=True, eq=False)
class Closure:
    """``<phi, f, x, T, U, M>``: a recursive function with its defining environment."""

    env: dict
    fname: str
    param: str
    ptype: Type
    rtype: Type
    body: Term

    def __post_init__(self):
        fv, ffv = free_vars(self.body)
        if not fv <= {self.param}:
            raise InternalError(f"closure for {self.fname} has free variables {sorted(fv - {self.param})}")
        missing = ffv - {self.fname} - self.env.keys()
        if missing:
            raise InternalError(f"closure for {self.fname} refers to unknown functions {sorted(missing)}")


# ---------------------------------------------------------------------------
# The machine

EVAL, SYM, BOOL = "eval", "sym", "bool"

# continuation tags of the trace evaluator
_T_LET, _T_ADD_L, _T_ADD_R, _T_PAIR_L, _T_PAIR_R, _T_ARG = range(6)


@dataclass(slots=True)
class _EvalCtx:
    ctx: Context
    phi: dict
    rho: dict
    mode: str


@dataclass(slots=True)
class _SymCtx:
    ctx: Context
    phi: dict
    rho: dict


@dataclass(slots=True)
class _SymCtxValue:
    ctx: Context
    phi: dict
    rho: dict
    trace: Term


@dataclass(slots=True)
class _Wrap:
    name: str
    type: Type
    bound: Term


@dataclass(slots=True)
class _RdFinish:
    var: str
    vtype: Type
    at: Term
    cotangent: Term
    rho: dict


@dataclass(slots=True)
class _EvalTrace:
    phi: dict
    rho: dict


class Machine:
    """One evaluation session: a fresh-name supply and a fuel budget.

    ``check_transform`` re-type-checks every output of the derivative
    transform against the admissible typing rule and counts the checks in
    ``transform_checks``.

    ``fast_paths`` enables shortcuts for redexes at the top of an ordinary
    evaluation and a context-free evaluator for trace terms; they contract
    the same redexes in the same order (same results, errors and step
    counts) and differ from the general route only in the fresh names used.
    """

    def __init__(
        self,
        fuel: int = DEFAULT_FUEL,
        supply: Optional[VarSupply] = None,
        check_transform: bool = False,
        fast_paths: bool = True,
    ):
        self.budget = Budget(fuel)
        self.fast_paths = fast_paths
        self.supply = supply or VarSupply()
        self.check_transform = check_transform
        self.transform_calls = 0
        self.transform_checks = 0

    @property
    def steps(self) -> int:
        return self.budget.spent

    def eval(self, phi: dict, rho: dict, m: Term) -> Term:
        return self._start(EVAL, phi, rho, m)

    def eval_bool(self, phi: dict, rho: dict, b: BoolTerm) -> BoolConst:
        return self._start(BOOL, phi, rho, b)

    def sym_eval(self, phi: dict, rho: dict, m: Term) -> Term:
        return self._start(SYM, phi, rho, m)

    def _start(self, mode, phi, rho, m):
        self.supply.reserve(all_names(m))
        self.supply.reserve(rho.keys())
        for cl in _closures(phi):
            self.supply.reserve(all_names(cl.body) | {cl.param, cl.fname})
        try:
            return self._run(mode, dict(phi), dict(rho), m)
        except UnboundVariableError as exc:
            raise InternalError(f"unbound variable {exc.args[0]}") from None
        except RecursionError:
            raise InternalError("term too deeply nested for the host stack") from None

    def _value(self, rho: dict, v: Term) -> Term:
        return apply_env_value(rho, v)

    def _run(self, mode: str, phi: dict, rho: dict, m):
        stack: list = []
        tick = self.budget.tick
        fast = self.fast_paths
        while True:
            if fast and mode == EVAL:
                # fast paths for redexes at the top of an ordinary evaluation; each
                # charges exactly the contractions the general route would
                kind = type(m)
                if kind is Let:
                    bound = m.bound
                    if is_value(bound):
                        tick()
                        rho = {**rho, m.name: self._value(rho, bound)}
                        m = m.body
                        continue
                    if _is_direct(bound):
                        tick()
                        v = self._direct(rho, bound)
                        tick()
                        rho = {**rho, m.name: v}
                        m = m.body
                        continue
                elif kind is If and type(m.cond) is PredApp and is_value(m.cond.arg):
                    tick()
                    b = self._bev(rho, m.cond)
                    tick()
                    m = m.then if b.value else m.orelse
                    continue
                elif kind is FunApp and is_value(m.arg):
                    tick()
                    cl, phi, rho = self._call(phi, rho, m)
                    m = cl.body
                    continue
                elif kind is LetRec:
                    tick()
                    phi = {**phi, m.fname: Closure(phi, m.fname, m.param, m.ptype, m.rtype, m.body)}
                    m = m.scope
                    continue
            if fast and mode == EVAL and _is_direct(m):
                tick()
                result = self._direct(rho, m)
            else:
                d = decompose_bool(m) if mode == BOOL else decompose(m)
                if isinstance(d, IsValue):
                    result = self._value(rho, d.value) if mode == EVAL else d.value
                elif isinstance(d, BoolRedex):
                    tick()
                    m = plug(d.context, self._bev(rho, d.redex))
                    continue
                else:
                    ctx, r = d.context, d.redex
                    if ctx:
                        if mode == SYM:
                            stack.append(_SymCtx(ctx, phi, rho))
                        else:
                            stack.append(_EvalCtx(ctx, phi, rho, mode))
                            mode = EVAL
                        m = r
                        continue
                    tick()
                    step = self._contract_eval(r, phi, rho, stack) if mode == EVAL else self._contract_sym(r, phi, rho, stack)
                    if step[0] == "task":
                        _, mode, phi, rho, m = step
                        continue
                    result = step[1]

            # hand the result to pending continuations
            while True:
                if not stack:
                    return result
                frame = stack.pop()
                if isinstance(frame, _Wrap):
                    result = Let(frame.name, frame.type, frame.bound, result)
                elif isinstance(frame, _EvalCtx):
                    x = self.supply.fresh()
                    mode, phi, rho = frame.mode, frame.phi, {**frame.rho, x: result}
                    m = plug(frame.ctx, Var(x))
                    break
                elif isinstance(frame, _SymCtx):
                    # the redex's trace is evaluated to the value it stands for
                    stack.append(_SymCtxValue(frame.ctx, frame.phi, frame.rho, result))
                    if not fast:
                        mode, phi, rho, m = EVAL, frame.phi, frame.rho, result
                        break
                    result = self._eval_trace(frame.rho, result)
                elif isinstance(frame, _SymCtxValue):
                    x = self.supply.fresh()
                    stack.append(_Wrap(x, type_of_closed_value(result), frame.trace))
                    mode, phi, rho = SYM, frame.phi, {**frame.rho, x: result}
                    m = plug(frame.ctx, Var(x))
                    break
                elif isinstance(frame, _RdFinish):
                    result = self._transform(frame, result)
                elif isinstance(frame, _EvalTrace):
                    # a transform output is a trace term, which needs no contexts
                    # beyond its own shape
                    mode, phi, rho = EVAL, frame.phi, frame.rho
                    if not fast:
                        m = result
                        break
                    result = self._eval_trace(rho, result)
                else:
                    raise InternalError(f"unknown frame {frame!r}")

    def _direct(self, rho: dict, r: Term) -> Term:
        match r:
            case Add(a, b):
                x, y = self._value(rho, a), self._value(rho, b)
                if not (isinstance(x, Const) and isinstance(y, Const)):
                    raise InternalError("addition of non-reals")
                return Const(x.value + y.value)
            case PrimApp(op, a):
                return self._prim(rho, op, a)
        return self._project(rho, r)

    def _eval_trace(self, rho: dict, m: Term) -> Term:
        """Evaluate a trace term, contracting (and charging) redexes in machine order."""
        tick = self.budget.tick
        stack: list = []
        while True:
            while True:
                kind = type(m)
                if kind is Let:
                    stack.append((_T_LET, m, rho))
                    m = m.bound
                elif kind is Add:
                    stack.append((_T_ADD_L, m, rho))
                    m = m.left
                elif kind is PrimApp or kind is Fst or kind is Snd:
                    stack.append((_T_ARG, m, rho))
                    m = m.arg
                elif kind is Pair and not is_value(m):
                    stack.append((_T_PAIR_L, m, rho))
                    m = m.fst
                elif kind is Var or kind is Const or kind is UnitVal or kind is Pair:
                    v = self._value(rho, m)
                    break
                else:
                    raise InternalError(f"not a trace term: {type(m).__name__}")
            while True:
                if not stack:
                    return v
                tag, node, saved = stack.pop()
                if tag == _T_LET:
                    tick()
                    rho = {**saved, node.name: v}
                    m = node.body
                    break
                if tag == _T_ADD_L:
                    stack.append((_T_ADD_R, node, v))
                    rho = saved
                    m = node.right
                    break
                if tag == _T_PAIR_L:
                    stack.append((_T_PAIR_R, node, v))
                    rho = saved
                    m = node.snd
                    break
                if tag == _T_PAIR_R:
                    v = Pair(saved, v, node.ltype, node.rtype)
                    continue
                tick()
                if tag == _T_ADD_R:
                    if not (type(saved) is Const and type(v) is Const):
                        raise InternalError("addition of non-reals")
                    v = Const(saved.value + v.value)
                elif type(node) is PrimApp:
                    v = self._prim({}, node.op, v)
                else:
                    if type(v) is not Pair:
                        raise InternalError(f"projection of non-pair {v!r}")
                    v = v.fst if type(node) is Fst else v.snd

    def _bev(self, rho: dict, b: PredApp) -> BoolConst:
        arg = self._value(rho, b.arg)
        try:
            out = REGISTRY.pred(b.pred).eval(arg)
        except UnknownPrimitive:
            raise InternalError(f"unknown predicate {b.pred}") from None
        if out is None:
            raise Stuck("pred", REGISTRY.pred(b.pred).symbol, arg)
        return out

    def _prim(self, rho: dict, op: str, v: Term) -> Term:
        arg = self._value(rho, v)
        try:
            out = REGISTRY.op(op).eval(arg)
        except UnknownPrimitive:
            raise InternalError(f"unknown operation {op}") from None
        if out is None:
            raise Stuck("op", op, arg)
        return out

    def _project(self, rho: dict, r: Fst | Snd) -> Term:
        pair = self._value(rho, r.arg)
        if not isinstance(pair, Pair):
            raise InternalError(f"projection of non-pair {pair!r}")
        return pair.fst if isinstance(r, Fst) else pair.snd

    def _call(self, phi: dict, rho: dict, r: FunApp):
        try:
            cl = phi[r.fname]
        except KeyError:
            raise InternalError(f"unbound function {r.fname}") from None
        arg = self._value(rho, r.arg)
        return cl, {**cl.env, r.fname: cl}, {cl.param: arg}

    def _contract_eval(self, r: Term, phi: dict, rho: dict, stack: list):
        match r:
            case Add(a, b):
                x, y = self._value(rho, a), self._value(rho, b)
                if not (isinstance(x, Const) and isinstance(y, Const)):
                    raise InternalError("addition of non-reals")
                return ("value", Const(x.value + y.value))
            case PrimApp(op, a):
                return ("value", self._prim(rho, op, a))
            case Let(x, _, a, body):
                return ("task", EVAL, phi, {**rho, x: self._value(rho, a)}, body)
            case Fst() | Snd():
                return ("value", self._project(rho, r))
            case If(BoolConst(b), t, e):
                return ("task", EVAL, phi, rho, t if b else e)
            case LetRec(f, x, pt, rt, body, scope):
                return ("task", EVAL, {**phi, f: Closure(phi, f, x, pt, rt, body)}, rho, scope)
            case FunApp():
                cl, phi2, rho2 = self._call(phi, rho, r)
                return ("task", EVAL, phi2, rho2, cl.body)
            case Rd():
                stack.append(_EvalTrace(phi, rho))
                return self._contract_sym(r, phi, rho, stack)
        raise InternalError(f"not a redex: {r!r}")

    def _contract_sym(self, r: Term, phi: dict, rho: dict, stack: list):
        match r:
            case Add() | PrimApp() | Fst() | Snd():
                return ("value", r)
            case Let(x, t, a, body):
                stack.append(_Wrap(x, t, a))
                return ("task", SYM, phi, {**rho, x: self._value(rho, a)}, body)
            case If(BoolConst(b), t, e):
                return ("task", SYM, phi, rho, t if b else e)
            case LetRec(f, x, pt, rt, body, scope):
                return ("task", SYM, {**phi, f: Closure(phi, f, x, pt, rt, body)}, rho, scope)
            case FunApp(_, a):
                cl, phi2, rho2 = self._call(phi, rho, r)
                stack.append(_Wrap(cl.param, cl.ptype, a))
                return ("task", SYM, phi2, rho2, cl.body)
            case Rd(x, t, body, at, cot):
                if x in free_vars(at)[0] or x in free_vars(cot)[0]:
                    fresh = self.supply.fresh()
                    body = substitute_var(body, x, fresh)
                    x = fresh
                stack.append(_RdFinish(x, t, at, cot, rho))
                return ("task", SYM, phi, {**rho, x: self._value(rho, at)}, body)
        raise InternalError(f"not a redex: {r!r}")

    def _transform(self, frame: _RdFinish, trace: Term) -> Term:
        self.transform_calls += 1
        out = rdiff(frame.var, frame.vtype, trace, frame.at, frame.cotangent, self.supply, self.budget)
        if self.check_transform:
            gamma = {name: type_of_closed_value(v) for name, v in frame.rho.items()}
            got, _ = infer_term({}, gamma, out)
            if got != frame.vtype:
                raise InternalError(f"derivative transform produced type {got}, expected {frame.vtype}")
            self.transform_checks += 1
        return out


def _is_direct(m: Term) -> bool:
    """A redex whose contraction yields a value without further evaluation."""
    t = type(m)
    if t is Add:
        return is_value(m.left) and is_value(m.right)
    if t is PrimApp or t is Fst or t is Snd:
        return is_value(m.arg)
    return False


def _closures(phi: dict):
    seen: set[int] = set()
    stack = list(phi.values())
    while stack:
        cl = stack.pop()
        if id(cl) in seen:
            continue
        seen.add(id(cl))
        yield cl
        stack.extend(cl.env.values())


def eval_term(m: Term, rho: Optional[dict] = None, phi: Optional[dict] = None, fuel: int = DEFAULT_FUEL) -> Term:
    return Machine(fuel).eval(phi or {}, rho or {}, m)


def eval_bool(b: BoolTerm, rho: Optional[dict] = None, phi: Optional[dict] = None, fuel: int = DEFAULT_FUEL) -> BoolConst:
    return Machine(fuel).eval_bool(phi or {}, rho or {}, b)


def sym_eval(m: Term, rho: Optional[dict] = None, phi: Optional[dict] = None, fuel: int = DEFAULT_FUEL) -> Term:
    return Machine(fuel).sym_eval(phi or {}, rho or {}, m)
