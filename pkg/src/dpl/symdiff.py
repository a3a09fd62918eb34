"""Symbolic reverse-mode differentiation of trace terms.

``rdiff(x, T, C, V, W)`` builds a trace term denoting the transposed
Jacobian of ``x:T |-> C`` at ``V`` applied to the cotangent ``W``. The
output is never simplified: the ``let`` bindings that force evaluation of
subterms (including the unused binding in the projection clauses) are kept,
so the result is undefined exactly where ``C`` is.
"""

from __future__ import annotations

from dpl.errors import Budget
from dpl.derived import add_at_type, elab_tuple_let, zero_of_type
from dpl.primitives import REGISTRY
from dpl.syntax import (
    Add,
    Const,
    Fst,
    Let,
    Pair,
    PrimApp,
    Prod,
    Snd,
    Term,
    Type,
    UnitVal,
    Var,
    VarSupply,
    free_vars,
    substitute_var,
)


class TransformError(Exception):
    """A precondition of the transform was violated by its caller."""


def rdiff(x: str, t: Type, c: Term, v: Term, w: Term, supply: VarSupply, budget: Budget | None = None) -> Term:
    """Reverse derivative of ``x:T |-> c`` at ``v`` applied to ``w``, as a trace term.

    Each clause application is charged to ``budget`` when one is given; the
    output can be exponentially larger than ``c`` (the let clause recurses
    into its body twice), so callers running untrusted programs should pass
    one.
    """
    if x in free_vars(w)[0]:
        raise TransformError(f"differentiation variable {x} occurs in the cotangent")
    if x in free_vars(v)[0] and v != Var(x):
        raise TransformError(f"differentiation variable {x} occurs in the point")
    return _rd(x, t, c, v, w, supply, budget.tick if budget is not None else _no_tick)


def _no_tick(n: int = 1) -> None:
    pass


def _fv(*terms: Term) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for m in terms:
        out = out | free_vars(m)[0]
    return out


def _rd(x: str, t: Type, c: Term, v: Term, w: Term, supply: VarSupply, tick) -> Term:
    tick()
    match c:
        case Var(name):
            return w if name == x else zero_of_type(t)
        case Const():
            return zero_of_type(t)
        case Add(d, e):
            return add_at_type(t, _rd(x, t, d, v, w, supply, tick), _rd(x, t, e, v, w, supply, tick), supply)
        case PrimApp(op, d):
            prim = REGISTRY.op(op)
            y = supply.fresh()
            back = PrimApp(prim.reverse_name, Pair(d, w, prim.arg_type, prim.res_type))
            return Let(x, t, v, Let(y, prim.arg_type, back, _rd(x, t, d, v, Var(y), supply, tick)))
        case Let(y, s, d, e):
            if y == x or y in _fv(v, w, d):
                y2 = supply.fresh()
                e = substitute_var(e, y, y2)
                y = y2
            ybar = supply.fresh()
            through_body = _rd(x, t, e, v, w, supply, tick)
            through_bound = Let(ybar, s, _rd(y, s, e, Var(y), w, supply, tick), _rd(x, t, d, v, Var(ybar), supply, tick))
            return Let(x, t, v, Let(y, s, d, add_at_type(t, through_body, through_bound, supply)))
        case UnitVal():
            return zero_of_type(t)
        case Pair(d, e, u, s):
            if u is None or s is None:
                raise TransformError("undecorated pair in trace term")
            y, z = supply.fresh(), supply.fresh()
            summed = add_at_type(t, _rd(x, t, d, v, Var(y), supply, tick), _rd(x, t, e, v, Var(z), supply, tick), supply)
            return elab_tuple_let([(y, u), (z, s)], w, summed, supply)
        case Fst(d, u, s):
            if u is None or s is None:
                raise TransformError("undecorated projection in trace term")
            y = supply.fresh()
            cot = Pair(w, zero_of_type(s), u, s)
            return Let(x, t, v, Let(y, Prod(u, s), d, _rd(x, t, d, v, cot, supply, tick)))
        case Snd(d, u, s):
            if u is None or s is None:
                raise TransformError("undecorated projection in trace term")
            y = supply.fresh()
            cot = Pair(zero_of_type(u), w, u, s)
            return Let(x, t, v, Let(y, Prod(u, s), d, _rd(x, t, d, v, cot, supply, tick)))
    raise TransformError(f"not a trace term: {type(c).__name__}")


def transform_cost(c: Term) -> int:
    """Number of clause applications :func:`rdiff` performs on ``c`` (computed in linear time).

    A ``let`` costs its body twice, so the cost is exponential in the
    nesting depth of ``let`` bodies.
    """
    cost: dict[int, int] = {}
    stack: list[tuple[Term, bool]] = [(c, False)]
    while stack:
        node, done = stack.pop()
        kids = _children(node)
        if not done:
            stack.append((node, True))
            stack.extend((k, False) for k in kids)
            continue
        if isinstance(node, Let):
            cost[id(node)] = 1 + cost[id(node.bound)] + 2 * cost[id(node.body)]
        else:
            cost[id(node)] = 1 + sum(cost[id(k)] for k in kids)
    return cost[id(c)]


def _children(c: Term) -> tuple:
    match c:
        case Add(a, b) | Pair(a, b, _, _):
            return (a, b)
        case Let(_, _, a, b):
            return (a, b)
        case PrimApp(_, a) | Fst(a, _, _) | Snd(a, _, _):
            return (a,)
        case Var() | Const() | UnitVal():
            return ()
    raise TransformError(f"not a trace term: {type(c).__name__}")
