"""Scalar expression graphs backing the primitive operations.

Every primitive is a vector of scalar expressions over its flattened input
leaves. Reverse partners are obtained by symbolic reverse accumulation over
the graph, so ``op_r``, ``(op_r)_r`` and so on are all available.

Arithmetic helpers here are the single source of floating-point behaviour:
the machine and both tape kernels call exactly these operations in the same
order, which keeps their results bit-identical.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

# ---------------------------------------------------------------------------
# IEEE-style helpers (math raises where C would return inf/nan)


def f_exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def f_log(a: float) -> float:
    try:
        return math.log(a)
    except ValueError:
        return math.nan


def f_sin(a: float) -> float:
    try:
        return math.sin(a)
    except ValueError:
        return math.nan


def f_cos(a: float) -> float:
    try:
        return math.cos(a)
    except ValueError:
        return math.nan


class Undefined(Exception):
    """A scalar computation left the (open) domain of definition."""


def f_div(a: float, b: float) -> float:
    if b == 0.0:
        raise Undefined
    return a / b


# ---------------------------------------------------------------------------
# Expression graph


class Expr:
    """A hash-consed node; build nodes through :class:`Graph` only."""

    __slots__ = ("kind", "args", "value", "uid")

    def __init__(self, kind: str, args: tuple, value, uid: int):
        self.kind = kind
        self.args = args
        self.value = value
        self.uid = uid

    def __repr__(self) -> str:
        if self.kind == "in":
            return f"x{self.value}"
        if self.kind == "const":
            return repr(self.value)
        return f"{self.kind}({', '.join(map(repr, self.args))})"


UNARY = ("neg", "exp", "log", "sin", "cos")
BINARY = ("add", "mul", "div")


class Graph:
    """Interning table with light algebraic simplification."""

    def __init__(self):
        self._table: dict = {}

    def _node(self, kind, args=(), value=None) -> Expr:
        # repr keeps 0.0 and -0.0 apart
        key = (kind, tuple(a.uid for a in args), repr(value))
        node = self._table.get(key)
        if node is None:
            node = Expr(kind, tuple(args), value, len(self._table))
            self._table[key] = node
        return node

    def input(self, i: int) -> Expr:
        return self._node("in", (), i)

    def const(self, c: float) -> Expr:
        return self._node("const", (), float(c))

    def _zero(self) -> Expr:
        return self._node("const", (), 0.0)

    @staticmethod
    def _is_const(e: Expr, c: float) -> bool:
        return e.kind == "const" and e.value == c

    def add(self, a: Expr, b: Expr) -> Expr:
        if self._is_const(a, 0.0):
            return b
        if self._is_const(b, 0.0):
            return a
        return self._node("add", (a, b))

    def mul(self, a: Expr, b: Expr) -> Expr:
        if self._is_const(a, 1.0):
            return b
        if self._is_const(b, 1.0):
            return a
        if self._is_const(a, 0.0) or self._is_const(b, 0.0):
            return self._zero()
        return self._node("mul", (a, b))

    def div(self, a: Expr, b: Expr) -> Expr:
        if self._is_const(b, 1.0):
            return a
        return self._node("div", (a, b))

    def neg(self, a: Expr) -> Expr:
        if a.kind == "neg":
            return a.args[0]
        if self._is_const(a, 0.0):
            return a
        return self._node("neg", (a,))

    def unary(self, kind: str, a: Expr) -> Expr:
        if kind == "neg":
            return self.neg(a)
        return self._node(kind, (a,))


GRAPH = Graph()


class ScalarFn:
    """Outputs as expressions over inputs ``0..arity-1`` plus domain guards.

    A guard ``("pos", e)`` requires ``e > 0``; ``("nonzero", e)`` requires
    ``e != 0``. A point is in the domain iff every guard holds and no
    division by exact zero occurs along the way.
    """

    def __init__(self, arity: int, outputs: Sequence[Expr], guards: Sequence[tuple[str, Expr]] = ()):
        self.arity = arity
        self.outputs = tuple(outputs)
        self.guards = tuple(guards)
        self._order = topological(list(self.outputs) + [g for _, g in self.guards])

    @property
    def order(self) -> list[Expr]:
        return self._order

    def __call__(self, xs: Sequence[float]) -> Optional[list[float]]:
        """Evaluate at a point; ``None`` outside the domain."""
        vals = evaluate(self._order, xs)
        if vals is None:
            return None
        for kind, g in self.guards:
            v = vals[g.uid]
            if kind == "pos":
                if not v > 0.0:
                    return None
            elif v == 0.0:
                return None
        return [vals[o.uid] for o in self.outputs]

    def reverse(self) -> "ScalarFn":
        """The vector-Jacobian product ``(x, c) |-> J_x^T c`` as a new function."""
        n = self.arity
        cot = [GRAPH.input(n + k) for k in range(len(self.outputs))]
        adj: dict[int, Expr] = {}
        for o, c in zip(self.outputs, cot):
            adj[o.uid] = GRAPH.add(adj[o.uid], c) if o.uid in adj else c
        for node in reversed(topological(list(self.outputs))):
            g = adj.get(node.uid)
            if g is None:
                continue
            for arg, contrib in _partials(node, g):
                prev = adj.get(arg.uid)
                adj[arg.uid] = contrib if prev is None else GRAPH.add(prev, contrib)
        zero = GRAPH.const(0.0)
        outs = [adj.get(GRAPH.input(i).uid, zero) for i in range(n)]
        return ScalarFn(n + len(self.outputs), outs, self.guards)


def _partials(node: Expr, g: Expr):
    G = GRAPH
    match node.kind:
        case "add":
            a, b = node.args
            return [(a, g), (b, g)]
        case "mul":
            a, b = node.args
            return [(a, G.mul(g, b)), (b, G.mul(g, a))]
        case "div":
            a, b = node.args
            # d(a/b)/db = -(a/b)/b
            return [(a, G.div(g, b)), (b, G.neg(G.div(G.mul(g, node), b)))]
        case "neg":
            return [(node.args[0], G.neg(g))]
        case "exp":
            return [(node.args[0], G.mul(g, node))]
        case "log":
            return [(node.args[0], G.div(g, node.args[0]))]
        case "sin":
            a = node.args[0]
            return [(a, G.mul(g, G.unary("cos", a)))]
        case "cos":
            a = node.args[0]
            return [(a, G.neg(G.mul(g, G.unary("sin", a))))]
        case _:
            return []


def topological(roots: list[Expr]) -> list[Expr]:
    seen: set[int] = set()
    order: list[Expr] = []
    stack = [(r, False) for r in reversed(roots)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if node.uid in seen:
            continue
        seen.add(node.uid)
        stack.append((node, True))
        for a in reversed(node.args):
            if a.uid not in seen:
                stack.append((a, False))
    return order


def evaluate(order: list[Expr], xs: Sequence[float]) -> Optional[dict[int, float]]:
    vals: dict[int, float] = {}
    try:
        for node in order:
            k = node.kind
            if k == "in":
                v = xs[node.value]
            elif k == "const":
                v = node.value
            elif k == "add":
                v = vals[node.args[0].uid] + vals[node.args[1].uid]
            elif k == "mul":
                v = vals[node.args[0].uid] * vals[node.args[1].uid]
            elif k == "div":
                v = f_div(vals[node.args[0].uid], vals[node.args[1].uid])
            elif k == "neg":
                v = -vals[node.args[0].uid]
            elif k == "exp":
                v = f_exp(vals[node.args[0].uid])
            elif k == "log":
                v = f_log(vals[node.args[0].uid])
            elif k == "sin":
                v = f_sin(vals[node.args[0].uid])
            elif k == "cos":
                v = f_cos(vals[node.args[0].uid])
            else:
                raise ValueError(k)
            vals[node.uid] = v
    except Undefined:
        return None
    return vals
