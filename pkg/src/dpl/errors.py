"""Evaluation outcomes other than a value."""

from __future__ import annotations

import math


class EvaluationError(Exception):
    pass


class Stuck(EvaluationError):
    """Semantic undefinedness: a primitive applied outside its domain."""

    def __init__(self, kind: str, name: str, arg):
        self.kind = kind  # "op" or "pred"
        self.name = name
        self.arg = arg
        super().__init__(f"undefined: {name} at {format_point(arg)}")


def format_point(v) -> str:
    """Render a closed value as a plain tuple of numbers, e.g. ``(0, 0)``."""
    from dpl.syntax import Const, Pair, UnitVal

    match v:
        case Const(x):
            return _num(x)
        case UnitVal():
            return "()"
        case Pair(a, b, _, _):
            return f"({format_point(a)}, {format_point(b)})"
    return str(v)


def _num(x: float) -> str:
    if math.isfinite(x) and x == int(x) and abs(x) < 1e16:
        return "-0" if str(x).startswith("-") and x == 0 else str(int(x))
    return repr(x)


class FuelExhausted(EvaluationError):
    """The step budget ran out; says nothing about the program's meaning."""


class InternalError(EvaluationError):
    """An invariant the type checker should have guaranteed was violated."""


class Budget:
    """A shared, decreasing step counter."""

    __slots__ = ("remaining", "spent")

    def __init__(self, limit: int):
        self.remaining = limit
        self.spent = 0

    def tick(self, n: int = 1) -> None:
        self.remaining -= n
        self.spent += n
        if self.remaining < 0:
            raise FuelExhausted(f"fuel exhausted after {self.spent} steps")
