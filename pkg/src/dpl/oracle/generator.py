"""Random well-typed programs.

Generation is type-directed: ``gen_program(seed, gamma, T, depth)`` returns
a term that checks at ``T`` under ``gamma``, and the same seed always gives
the same term. Every constructor of the language is produced, including
nested ``rd``, function definitions, recursion and conditionals on dotted
predicates.

Recursion always follows a counting pattern that terminates,

    letrec f(p: S * real): U = if snd p <. 0.5 then BASE else f(<STEP, snd p - 1>) in f(<ARG, K>)

with ``K`` a small constant, so that most programs finish well within the
default fuel. Constants are drawn from continuous distributions, so exact
boundary hits (``a <. a``-style ties aside) happen with probability zero.

With ``smooth=True`` partial primitives only appear in forms that keep
their arguments inside the domain (``log(c + a*a)``, ``div(a, c + b*b)``)
and ``exp`` only sees bounded arguments; the unrestricted forms are used
otherwise, so that generated programs also exercise undefinedness.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from dpl.syntax import (
    REAL,
    UNIT,
    UNIT_VAL,
    Add,
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
    Term,
    Type,
    Unit,
    Var,
    real_power,
    unflatten_value,
    type_size,
)

__all__ = ["gen_program", "gen_value", "gen_type", "Generator"]


@dataclass
class _Scope:
    gamma: dict[str, Type]
    phi: dict[str, tuple[Type, Type]]
    rd_depth: int = 0


@dataclass
class Generator:
    rng: random.Random
    smooth: bool = False
    allow_rd: bool = True
    allow_functions: bool = True
    max_rd_nesting: int = 2
    leaf_bias: float = 0.3
    counter: int = field(default=0)

    def name(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    # -- types and values

    def small_type(self, allow_unit: bool = True) -> Type:
        r = self.rng.random()
        if r < 0.6:
            return REAL
        if r < 0.8:
            return real_power(2)
        if r < 0.9 and allow_unit:
            return Prod(REAL, UNIT)
        if allow_unit and r < 0.95:
            return UNIT
        return real_power(3)

    def constant(self) -> float:
        return self.rng.uniform(0.1, 2.0)

    def value(self, t: Type, lo: float = -2.0, hi: float = 2.0) -> Term:
        return unflatten_value(t, [self.rng.uniform(lo, hi) for _ in range(type_size(t))])

    # -- terms

    def term(self, t: Type, depth: int, scope: _Scope) -> Term:
        if depth <= 0 or self.rng.random() < self.leaf_bias:
            return self.leaf(t, scope)
        choices = self.choices(t, scope)
        weights = [w for w, _ in choices]
        make = self.rng.choices([f for _, f in choices], weights)[0]
        return make(t, depth - 1, scope)

    def leaf(self, t: Type, scope: _Scope) -> Term:
        paths = self.paths_of_type(t, scope.gamma)
        if paths and self.rng.random() < 0.75:
            return self.rng.choice(paths)
        match t:
            case Real():
                return Const(self.constant())
            case Unit():
                return UNIT_VAL
            case Prod(left, right):
                return Pair(self.leaf(left, scope), self.leaf(right, scope))
        raise TypeError(t)

    def paths_of_type(self, t: Type, gamma: dict[str, Type]) -> list[Term]:
        out: list[Term] = []
        for name in sorted(gamma):
            stack: list[tuple[Term, Type, int]] = [(Var(name), gamma[name], 0)]
            while stack:
                m, s, d = stack.pop()
                if s == t:
                    out.append(m)
                if isinstance(s, Prod) and d < 3:
                    stack.append((Snd(m), s.right, d + 1))
                    stack.append((Fst(m), s.left, d + 1))
        return out

    def choices(self, t: Type, scope: _Scope):
        out = [(2.0, self.gen_let), (1.5, self.gen_if), (0.8, self.gen_proj)]
        if self.allow_rd and scope.rd_depth < self.max_rd_nesting:
            out.append((1.0, self.gen_rd))
        if self.allow_functions:
            out.append((0.7, self.gen_fun))
            out.append((0.5, self.gen_letrec))
            if any(u == t for _, u in scope.phi.values()):
                out.append((1.5, self.gen_call))
        match t:
            case Real():
                out += [(3.0, self.gen_add), (4.0, self.gen_op), (1.0, self.gen_dprod)]
            case Prod():
                out.append((4.0, self.gen_pair))
        return out

    def gen_add(self, t, depth, scope):
        a, b = self.term(REAL, depth, scope), self.term(REAL, depth, scope)
        if self.rng.random() < 0.3:
            return Add(a, PrimApp("neg", b))
        return Add(a, b)

    def gen_op(self, t, depth, scope):
        a = self.term(REAL, depth, scope)
        kind = self.rng.choice(["neg", "mul", "sin", "cos", "exp", "log", "div"])
        match kind:
            case "neg" | "sin" | "cos":
                return PrimApp(kind, a)
            case "mul":
                return PrimApp("mul", Pair(a, self.term(REAL, depth, scope)))
            case "exp":
                if self.smooth:
                    return PrimApp("exp", PrimApp(self.rng.choice(["sin", "cos"]), a))
                return PrimApp("exp", a)
            case "log":
                if self.smooth or self.rng.random() < 0.7:
                    c = Const(self.constant())
                    return PrimApp("log", Add(c, PrimApp("mul", Pair(a, a))))
                return PrimApp("log", a)
            case "div":
                b = self.term(REAL, depth, scope)
                if self.smooth or self.rng.random() < 0.7:
                    c = Const(self.constant())
                    return PrimApp("div", Pair(a, Add(c, PrimApp("mul", Pair(b, b)))))
                return PrimApp("div", Pair(a, b))
        raise AssertionError(kind)

    def gen_dprod(self, t, depth, scope):
        n = self.rng.randint(1, 3)
        vec = real_power(n)
        return PrimApp(f"DProd{n}", Pair(self.term(vec, depth, scope), self.term(vec, depth, scope)))

    def gen_pair(self, t, depth, scope):
        return Pair(self.term(t.left, depth, scope), self.term(t.right, depth, scope))

    def gen_proj(self, t, depth, scope):
        other = self.small_type()
        if self.rng.random() < 0.5:
            return Fst(self.term(Prod(t, other), depth, scope))
        return Snd(self.term(Prod(other, t), depth, scope))

    def gen_let(self, t, depth, scope):
        s = self.small_type()
        x = self.name("a")
        bound = self.term(s, depth, scope)
        body = self.term(t, depth, _Scope({**scope.gamma, x: s}, scope.phi, scope.rd_depth))
        return Let(x, s, bound, body)

    def guard(self, depth, scope):
        a = self.term(REAL, depth, scope)
        b = self.term(REAL, depth, scope)
        return PredApp(self.rng.choice(["lt", "gt"]), Pair(a, b))

    def gen_if(self, t, depth, scope):
        return If(self.guard(depth, scope), self.term(t, depth, scope), self.term(t, depth, scope))

    def gen_rd(self, t, depth, scope):
        x = self.name("r")
        u = REAL if self.rng.random() < 0.7 else self.small_type()
        inner = _Scope({**scope.gamma, x: t}, scope.phi, scope.rd_depth + 1)
        body = self.term(u, min(depth, 2), inner)
        at = self.term(t, min(depth, 2), scope)
        cot = self.term(u, min(depth, 2), scope)
        return Rd(x, t, body, at, cot)

    def gen_fun(self, t, depth, scope):
        """A non-recursive definition followed by a scope that may call it."""
        f, p = self.name("g"), self.name("p")
        s, u = self.small_type(), self.small_type()
        body = self.term(u, min(depth, 3), _Scope({p: s}, scope.phi, scope.rd_depth))
        inner_phi = {**scope.phi, f: (s, u)}
        rest = self.term(t, depth, _Scope(scope.gamma, inner_phi, scope.rd_depth))
        if f not in _called(rest):
            rest = Let(self.name("a"), u, FunApp(f, self.term(s, min(depth, 2), scope)), rest)
        return LetRec(f, p, s, u, body, rest)

    def gen_letrec(self, t, depth, scope):
        f, p = self.name("f"), self.name("p")
        s = self.small_type()
        ptype = Prod(s, REAL)
        fscope = _Scope({p: ptype}, scope.phi, scope.rd_depth)
        base = self.term(t, min(depth, 2), fscope)
        step = self.term(s, min(depth, 2), fscope)
        counter = Snd(Var(p))
        cond = PredApp("lt", Pair(counter, Const(0.5)))
        recurse = FunApp(f, Pair(step, Add(counter, PrimApp("neg", Const(1.0)))))
        body = If(cond, base, recurse)
        call = FunApp(f, Pair(self.term(s, depth, scope), Const(self.rng.uniform(0.0, 3.0))))
        return LetRec(f, p, ptype, t, body, call)

    def gen_call(self, t, depth, scope):
        names = sorted(f for f, (_, u) in scope.phi.items() if u == t)
        f = self.rng.choice(names)
        s, _ = scope.phi[f]
        return FunApp(f, self.term(s, depth, scope))


def _called(m: Term) -> set[str]:
    from dpl.syntax import free_vars

    return set(free_vars(m)[1])


def gen_type(rng: random.Random, allow_unit: bool = True) -> Type:
    return Generator(rng).small_type(allow_unit)


def gen_value(rng: random.Random, t: Type, lo: float = -2.0, hi: float = 2.0) -> Term:
    return Generator(rng).value(t, lo, hi)


def gen_program(
    seed: int, gamma: Optional[dict[str, Type]], t: Type, depth: int, smooth: bool = False,
    allow_rd: bool = True, allow_functions: bool = True,
) -> Term:
    """A term of type ``t`` under ``gamma``; deterministic in ``seed``."""
    rng = random.Random(seed)
    g = Generator(rng, smooth=smooth, allow_rd=allow_rd, allow_functions=allow_functions)
    return g.term(t, depth, _Scope(dict(gamma or {}), {}))
