"""Registry of operation and predicate symbols.

Shipped operations and their open domains of definition:

========  ===========================  ==========================
name      arity                        defined where
========  ===========================  ==========================
neg       real -> real                 everywhere
mul       real * real -> real          everywhere
div       real * real -> real          denominator != 0
exp       real -> real                 everywhere
log       real -> real                 argument > 0
sin       real -> real                 everywhere
cos       real -> real                 everywhere
DProdN    real^N * real^N -> real      everywhere (N = 1..8)
========  ===========================  ==========================

For every registered ``op : T -> U`` the name ``op_r`` resolves to an
operation ``T * U -> T`` computing the transposed-Jacobian action at a point;
its domain is that of ``op``. Because ``op_r`` is itself registered, the
suffix may be repeated (``mul_r_r``) to any depth.

Predicates ``lt`` (written ``<.``) and ``gt`` (``>.``) take ``real^2`` and
are undefined when both arguments are equal.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from dpl.scalar import GRAPH, ScalarFn
from dpl.syntax import (
    REAL,
    BoolConst,
    Prod,
    Term,
    Type,
    flatten_value,
    real_power,
    type_size,
    unflatten_value,
)


class UnknownPrimitive(KeyError):
    pass


@dataclass(frozen=True)
class PrimOp:
    name: str
    arg_type: Type
    res_type: Type
    fn: ScalarFn = field(repr=False)

    @property
    def reverse_name(self) -> str:
        return self.name + "_r"

    def eval(self, v: Term) -> Optional[Term]:
        out = self.fn(flatten_value(v))
        if out is None:
            return None
        return unflatten_value(self.res_type, out)


@dataclass(frozen=True)
class PrimPred:
    name: str
    symbol: str
    arity: Type
    fn: Callable[[list[float]], Optional[bool]] = field(repr=False)

    def eval(self, v: Term) -> Optional[BoolConst]:
        out = self.fn(flatten_value(v))
        return None if out is None else BoolConst(out)


def _unary(kind: str, guard: Optional[str] = None) -> ScalarFn:
    x = GRAPH.input(0)
    guards = [(guard, x)] if guard else []
    return ScalarFn(1, [GRAPH.unary(kind, x)], guards)


def _dprod(n: int) -> ScalarFn:
    xs = [GRAPH.input(i) for i in range(2 * n)]
    acc = GRAPH.mul(xs[0], xs[n])
    for i in range(1, n):
        acc = GRAPH.add(acc, GRAPH.mul(xs[i], xs[n + i]))
    return ScalarFn(2 * n, [acc])


def _base_ops() -> dict[str, PrimOp]:
    real2 = Prod(REAL, REAL)
    x0, x1 = GRAPH.input(0), GRAPH.input(1)
    ops = [
        PrimOp("neg", REAL, REAL, _unary("neg")),
        PrimOp("mul", real2, REAL, ScalarFn(2, [GRAPH.mul(x0, x1)])),
        PrimOp("div", real2, REAL, ScalarFn(2, [GRAPH.div(x0, x1)], [("nonzero", x1)])),
        PrimOp("exp", REAL, REAL, _unary("exp")),
        PrimOp("log", REAL, REAL, _unary("log", "pos")),
        PrimOp("sin", REAL, REAL, _unary("sin")),
        PrimOp("cos", REAL, REAL, _unary("cos")),
    ]
    for n in range(1, 9):
        vec = real_power(n)
        ops.append(PrimOp(f"DProd{n}", Prod(vec, vec), REAL, _dprod(n)))
    return {op.name: op for op in ops}


def _lt(xs: list[float]) -> Optional[bool]:
    a, b = xs
    if a < b:
        return True
    if a > b:
        return False
    return None


def _gt(xs: list[float]) -> Optional[bool]:
    a, b = xs
    if a > b:
        return True
    if a < b:
        return False
    return None


class Registry:
    def __init__(self):
        self._ops = _base_ops()
        self._lock = threading.Lock()
        real2 = Prod(REAL, REAL)
        self._preds = {
            "lt": PrimPred("lt", "<.", real2, _lt),
            "gt": PrimPred("gt", ">.", real2, _gt),
        }

    def op(self, name: str) -> PrimOp:
        op = self._ops.get(name)
        if op is not None:
            return op
        if not name.endswith("_r"):
            raise UnknownPrimitive(name)
        base = self.op(name[:-2])
        with self._lock:
            op = self._ops.get(name)
            if op is None:
                op = PrimOp(name, Prod(base.arg_type, base.res_type), base.arg_type, base.fn.reverse())
                self._ops[name] = op
        return op

    def has_op(self, name: str) -> bool:
        try:
            self.op(name)
        except UnknownPrimitive:
            return False
        return True

    def pred(self, name: str) -> PrimPred:
        try:
            return self._preds[name]
        except KeyError:
            raise UnknownPrimitive(name) from None

    def has_pred(self, name: str) -> bool:
        return name in self._preds

    def pred_by_symbol(self, symbol: str) -> PrimPred:
        for p in self._preds.values():
            if p.symbol == symbol:
                return p
        raise UnknownPrimitive(symbol)

    @property
    def base_op_names(self) -> list[str]:
        return [n for n in self._ops if not n.endswith("_r")]

    @property
    def pred_names(self) -> list[str]:
        return list(self._preds)


REGISTRY = Registry()


def prim_eval(op: str, v: Term) -> Optional[Term]:
    """``ev(op, V)``; ``None`` when ``V`` is outside the op's domain."""
    return REGISTRY.op(op).eval(v)


def prim_reverse_eval(op: str, v: Term, w: Term) -> Optional[Term]:
    """``ev(op_r, <V, W>)``: the transposed Jacobian of ``op`` at ``V`` applied to ``W``."""
    base = REGISTRY.op(op)
    rev = REGISTRY.op(base.reverse_name)
    out = rev.fn(flatten_value(v) + flatten_value(w))
    if out is None:
        return None
    return unflatten_value(base.arg_type, out)


def prim_bool_eval(pred: str, v: Term) -> Optional[BoolConst]:
    """``bev(pred, V)``; ``None`` exactly on the predicate's boundary."""
    return REGISTRY.pred(pred).eval(v)


def arg_size(op: str) -> int:
    return type_size(REGISTRY.op(op).arg_type)
