"""Straight-line scalar tapes for fast repeated evaluation of trace terms.

A trace term has no control flow, so once its free differentiation variable
is flattened to real inputs it denotes a fixed sequence of scalar
operations. :func:`lower` compiles a trace into such a tape; pairs,
projections and ``let`` are resolved at compile time, every primitive is
expanded into the scalar graph it is defined by, and every domain guard is
kept (nothing is dead-code eliminated, so the tape is undefined exactly
where the trace is).

Tapes are evaluated in batches by a compiled kernel when the extension
module is available and by a pure-Python kernel otherwise; both use the
same floating-point operations in the same order as the machine, so all
three agree bit for bit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from dpl.primitives import REGISTRY
from dpl.syntax import Add, Const, Fst, Let, Pair, PrimApp, Snd, Term, Type, UnitVal, Var

# opcodes (shared with the kernels)
INPUT, CONST, ADD, MUL, DIV, NEG, EXP, LOG, SIN, COS, GUARD_POS, GUARD_NZ = range(12)

_UNARY_CODES = {"neg": NEG, "exp": EXP, "log": LOG, "sin": SIN, "cos": COS}
_BINARY_CODES = {"add": ADD, "mul": MUL, "div": DIV}


def _load_kernel():
    if os.environ.get("DPL_PURE_PYTHON"):
        from dpl import _tape_py

        return _tape_py, "python"
    try:
        from dpl import _tape_ext

        return _tape_ext, "compiled"
    except ImportError:
        from dpl import _tape_py

        return _tape_py, "python"


_kernel, BACKEND = _load_kernel()


class LoweringError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class Tape:
    ops: np.ndarray  # int32, one instruction per slot
    arg0: np.ndarray  # int32 operand slot (or input index for INPUT)
    arg1: np.ndarray  # int32 operand slot
    consts: np.ndarray  # float64, value of CONST slots
    n_inputs: int
    outputs: np.ndarray  # int32 slots of the flattened result

    def __len__(self) -> int:
        return len(self.ops)

    def batch(self, xs, kernel=None) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate at each row of ``xs``; returns ``(values, defined)``."""
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        if xs.ndim != 2:
            xs = xs.reshape(1, self.n_inputs)
        k = kernel or _kernel
        return k.run_tape(self.ops, self.arg0, self.arg1, self.consts, self.outputs, xs)

    def __call__(self, xs: Sequence[float]) -> Optional[list[float]]:
        values, ok = self.batch(np.asarray(xs, dtype=np.float64).reshape(1, self.n_inputs))
        return values[0].tolist() if ok[0] else None


class _Builder:
    def __init__(self):
        self.ops: list[int] = []
        self.arg0: list[int] = []
        self.arg1: list[int] = []
        self.consts: list[float] = []
        self._const_slots: dict[str, int] = {}

    def emit(self, op: int, a: int = 0, b: int = 0, c: float = 0.0) -> int:
        self.ops.append(op)
        self.arg0.append(a)
        self.arg1.append(b)
        self.consts.append(c)
        return len(self.ops) - 1

    def const(self, c: float) -> int:
        key = repr(c)
        slot = self._const_slots.get(key)
        if slot is None:
            slot = self._const_slots[key] = self.emit(CONST, c=c)
        return slot


def _leaves(shape) -> list[int]:
    out: list[int] = []
    stack = [shape]
    while stack:
        s = stack.pop()
        if isinstance(s, tuple):
            stack.append(s[1])
            stack.append(s[0])
        elif s is not None:
            out.append(s)
    return out


def _rebuild(t: Type, it):
    from dpl.syntax import Prod, Real, Unit

    match t:
        case Real():
            return next(it)
        case Unit():
            return None
        case Prod(left, right):
            a = _rebuild(left, it)
            return (a, _rebuild(right, it))
    raise LoweringError(f"not a type: {t!r}")


def _input_shape(t: Type, b: _Builder, counter: list[int]):
    from dpl.syntax import Prod, Real, Unit

    match t:
        case Real():
            counter[0] += 1
            return b.emit(INPUT, counter[0] - 1)
        case Unit():
            return None
        case Prod(left, right):
            a = _input_shape(left, b, counter)
            return (a, _input_shape(right, b, counter))
    raise LoweringError(f"not a type: {t!r}")


def _const_shape(v: Term, b: _Builder):
    match v:
        case Const(c):
            return b.const(c)
        case UnitVal():
            return None
        case Pair(x, y, _, _):
            return (_const_shape(x, b), _const_shape(y, b))
    raise LoweringError(f"environment value is not closed: {v!r}")


def lower(c: Term, inputs: Sequence[tuple[str, Type]], env: Optional[dict] = None) -> Tape:
    """Compile trace ``c``; ``inputs`` become tape inputs, ``env`` supplies constants.

    Inputs are flattened in order, each left to right.
    """
    b = _Builder()
    scope: dict = {}
    for name, v in (env or {}).items():
        scope[name] = _const_shape(v, b)
    counter = [0]
    for name, t in inputs:
        scope[name] = _input_shape(t, b, counter)
    out = _lower(c, scope, b)
    i32 = np.int32
    return Tape(
        np.asarray(b.ops, dtype=i32),
        np.asarray(b.arg0, dtype=i32),
        np.asarray(b.arg1, dtype=i32),
        np.asarray(b.consts, dtype=np.float64),
        counter[0],
        np.asarray(_leaves(out), dtype=i32),
    )


def _lower(c: Term, scope: dict, b: _Builder):
    # let spines are walked iteratively; other nesting is shallow
    while isinstance(c, Let):
        scope = {**scope, c.name: _lower(c.bound, scope, b)}
        c = c.body
    match c:
        case Var(name):
            try:
                return scope[name]
            except KeyError:
                raise LoweringError(f"free variable {name} has no value") from None
        case Const(x):
            return b.const(x)
        case UnitVal():
            return None
        case Add(x, y):
            return b.emit(ADD, _lower(x, scope, b), _lower(y, scope, b))
        case Pair(x, y, _, _):
            return (_lower(x, scope, b), _lower(y, scope, b))
        case Fst(x, _, _):
            return _lower(x, scope, b)[0]
        case Snd(x, _, _):
            return _lower(x, scope, b)[1]
        case PrimApp(op, x):
            return _lower_prim(op, _lower(x, scope, b), b)
    raise LoweringError(f"not a trace term: {type(c).__name__}")


def _lower_prim(name: str, arg, b: _Builder):
    prim = REGISTRY.op(name)
    fn = prim.fn
    xs = _leaves(arg)
    slot: dict[int, int] = {}
    for node in fn.order:
        k = node.kind
        if k == "in":
            s = xs[node.value]
        elif k == "const":
            s = b.const(node.value)
        elif k in _BINARY_CODES:
            s = b.emit(_BINARY_CODES[k], slot[node.args[0].uid], slot[node.args[1].uid])
        elif k in _UNARY_CODES:
            s = b.emit(_UNARY_CODES[k], slot[node.args[0].uid])
        else:
            raise LoweringError(f"unknown scalar node {k}")
        slot[node.uid] = s
    for kind, g in fn.guards:
        b.emit(GUARD_POS if kind == "pos" else GUARD_NZ, slot[g.uid])
    return _rebuild(prim.res_type, iter([slot[o.uid] for o in fn.outputs]))
