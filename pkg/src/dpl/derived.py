"""Derived forms: zeros, addition at every type, tuple-let, grad and fd."""

from __future__ import annotations

from typing import Sequence

from dpl.syntax import (
    REAL,
    UNIT,
    UNIT_VAL,
    Add,
    Const,
    Fst,
    Let,
    Pair,
    Prod,
    Rd,
    Real,
    Snd,
    Term,
    Type,
    Unit,
    Var,
    VarSupply,
    free_vars,
    iterated_product,
    real_power,
)


def zero_of_type(t: Type) -> Term:
    match t:
        case Real():
            return Const(0.0)
        case Unit():
            return UNIT_VAL
        case Prod(left, right):
            return Pair(zero_of_type(left), zero_of_type(right), left, right)
    raise TypeError(f"not a type: {t!r}")


def add_at_type(t: Type, m: Term, n: Term, supply: VarSupply) -> Term:
    """``M +_T N``: componentwise sum through tuple-lets."""
    match t:
        case Real():
            return Add(m, n)
        case Unit():
            x, y = supply.fresh(), supply.fresh()
            return Let(x, UNIT, m, Let(y, UNIT, n, UNIT_VAL))
        case Prod(left, right):
            x1, x2, y1, y2 = (supply.fresh() for _ in range(4))
            body = Pair(
                add_at_type(left, Var(x1), Var(y1), supply),
                add_at_type(right, Var(x2), Var(y2), supply),
                left,
                right,
            )
            inner = elab_tuple_let([(y1, left), (y2, right)], n, body, supply)
            return elab_tuple_let([(x1, left), (x2, right)], m, inner, supply)
    raise TypeError(f"not a type: {t!r}")


class DuplicateBinder(ValueError):
    pass


def elab_tuple_let(bindings: Sequence[tuple[str, Type]], m: Term, n: Term, supply: VarSupply) -> Term:
    """``let <x0:T0, ..., xk:Tk> = M in N`` over a left-associated product."""
    names = [x for x, _ in bindings]
    if len(set(names)) != len(names):
        raise DuplicateBinder(f"duplicate binder in tuple-let: {names}")
    if not bindings:
        return Let(supply.fresh(), UNIT, m, n)
    if len(bindings) == 1:
        x, t = bindings[0]
        return Let(x, t, m, n)
    init = bindings[:-1]
    last_name, last_type = bindings[-1]
    init_type = iterated_product(t for _, t in init)
    z = supply.fresh()
    whole = Prod(init_type, last_type)
    rest = Let(last_name, last_type, Snd(Var(z), init_type, last_type), n)
    return Let(z, whole, m, elab_tuple_let(init, Fst(Var(z), init_type, last_type), rest, supply))


def elab_grad(x: str, n: int, body: Term, at: Term) -> Term:
    """Gradient of ``x:real^n |-> body`` at ``at``: ``rd(x. body)(at)(1)``."""
    return Rd(x, real_power(n), body, at, Const(1.0))


def elab_fd(x: str, t: Type, body: Term, u: Type, at: Term, tangent: Term, supply: VarSupply) -> Term:
    """Forward derivative as nested reverse derivatives.

    ``fd(x:T. N)(U, L)(M) = rd(y:U. rd(x:T. N)(L)(y))(0_U)(M)``
    """
    avoid = free_vars(body)[0] | free_vars(at)[0] | free_vars(tangent)[0] | {x}
    supply.reserve(avoid)
    y = supply.fresh()
    return Rd(y, u, Rd(x, t, body, at, Var(y)), zero_of_type(u), tangent)


def is_real_power(t: Type) -> int | None:
    """``n`` if ``t`` is ``real^n`` (n >= 1), else ``None``."""
    n = 0
    while isinstance(t, Prod):
        if t.right != REAL:
            return None
        n += 1
        t = t.left
    return n + 1 if t == REAL else None
