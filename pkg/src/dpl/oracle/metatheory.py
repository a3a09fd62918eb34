"""Executable versions of the metatheory: interpolation, type safety, locality.

Each check runs in fresh machine sessions and classifies the outcome; fuel
exhaustion on any side makes a check inconclusive rather than failed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from dpl.errors import FuelExhausted, Stuck
from dpl.machine import DEFAULT_FUEL, Machine
from dpl.syntax import Term, alpha_eq, flatten_value, is_trace_term, unflatten_value, type_size
from dpl.typecheck import TypeCheckError, infer_term, type_of_closed_value

AGREE_VALUE = "agree-value"
AGREE_STUCK = "agree-stuck"
INCONCLUSIVE = "inconclusive"
VIOLATION = "violation"


@dataclass(frozen=True)
class Verdict:
    kind: str
    detail: str = ""
    transform_checks: int = 0

    @property
    def ok(self) -> bool:
        return self.kind != VIOLATION


def bits(v: Term) -> tuple[str, ...]:
    """Exact float identity of a closed value (distinguishes -0.0 and NaN payloads)."""
    return tuple(x.hex() if not math.isnan(x) else "nan" for x in flatten_value(v))


def check_interpolation(phi: dict, rho: dict, m: Term, fuel: int = DEFAULT_FUEL, expected=None) -> Verdict:
    """``eval M = V`` iff ``sym_eval M = C`` and ``eval C = V`` (values compared bit for bit).

    With ``expected`` given, type safety is checked on the same runs: ``V``
    has type ``expected`` and ``C`` checks at it under the environment's
    types.
    """
    checks = 0

    def run(mode: str, term: Term, env: dict):
        nonlocal checks
        mach = Machine(fuel, check_transform=True)
        try:
            out = mach.eval(phi, env, term) if mode == "eval" else mach.sym_eval(phi, env, term)
            return "ok", out
        except Stuck as exc:
            return "stuck", exc
        except FuelExhausted:
            return "fuel", None
        finally:
            checks += mach.transform_checks

    direct = run("eval", m, rho)
    if direct[0] == "fuel":
        return Verdict(INCONCLUSIVE, "fuel (eval)", checks)
    traced = run("sym", m, rho)
    if traced[0] == "fuel":
        return Verdict(INCONCLUSIVE, "fuel (sym_eval)", checks)
    if traced[0] == "ok":
        trace = traced[1]
        if not is_trace_term(trace):
            return Verdict(VIOLATION, "symbolic evaluation returned a non-trace term", checks)
        if expected is not None:
            problem = _trace_type_problem(rho, trace, expected)
            if problem:
                return Verdict(VIOLATION, problem, checks)
        replay = run("eval", trace, rho)
        if replay[0] == "fuel":
            return Verdict(INCONCLUSIVE, "fuel (eval of trace)", checks)
    else:
        replay = traced
    if direct[0] == "stuck" and replay[0] == "stuck":
        return Verdict(AGREE_STUCK, "", checks)
    if direct[0] == "ok" and replay[0] == "ok":
        if expected is not None and type_of_closed_value(direct[1]) != expected:
            got = type_of_closed_value(direct[1])
            return Verdict(VIOLATION, f"type safety: value has type {got}, expected {expected}", checks)
        if bits(direct[1]) == bits(replay[1]):
            return Verdict(AGREE_VALUE, "", checks)
        return Verdict(VIOLATION, f"values differ: {bits(direct[1])} vs {bits(replay[1])}", checks)
    return Verdict(VIOLATION, f"eval {direct[0]} but trace path {replay[0]}", checks)


def _trace_type_problem(rho: dict, trace: Term, expected) -> str:
    gamma = {k: type_of_closed_value(v) for k, v in rho.items()}
    try:
        got, _ = infer_term({}, gamma, trace)
    except TypeCheckError as exc:
        return f"type safety: trace does not type-check: {exc}"
    if got != expected:
        return f"type safety: trace has type {got}, expected {expected}"
    return ""


def check_type_safety(phi: dict, rho: dict, m: Term, expected, fuel: int = DEFAULT_FUEL) -> Verdict:
    """Values have the program's type; traces check at it under the environment's types."""
    return check_interpolation(phi, rho, m, fuel, expected)


def check_locality(
    phi: dict, rho: dict, m: Term, rng: random.Random, radius: float = 1e-6, samples: int = 4,
    rtol: float = 1e-9, fuel: int = DEFAULT_FUEL,
) -> Verdict:
    """The trace at ``rho`` computes the program at nearby environments.

    Perturbed environments whose own trace differs from the one at ``rho``
    (a branch or a domain boundary was crossed) are not compared.
    """
    try:
        c = Machine(fuel).sym_eval(phi, rho, m)
    except Stuck:
        return Verdict(AGREE_STUCK)
    except FuelExhausted:
        return Verdict(INCONCLUSIVE, "fuel")
    for _ in range(samples):
        moved = {}
        for k, v in rho.items():
            t = type_of_closed_value(v)
            xs = [x + rng.uniform(-radius, radius) * max(1.0, abs(x)) for x in flatten_value(v)]
            moved[k] = unflatten_value(t, xs)
        try:
            if not alpha_eq(Machine(fuel).sym_eval(phi, moved, m), c):
                continue
            a = flatten_value(Machine(fuel).eval(phi, moved, m))
            b = flatten_value(Machine(fuel).eval({}, moved, c))
        except (Stuck, FuelExhausted):
            continue
        for p, q in zip(a, b):
            if not _close(p, q, rtol):
                return Verdict(VIOLATION, f"program {p!r} vs trace {q!r} near the point")
    return Verdict(AGREE_VALUE)


def _close(p: float, q: float, rtol: float) -> bool:
    if math.isnan(p) or math.isnan(q):
        return math.isnan(p) and math.isnan(q)
    if p == q:
        return True
    return abs(p - q) <= rtol * max(abs(p), abs(q))


def env_for(rng: random.Random, gamma: dict) -> dict:
    return {k: unflatten_value(t, [rng.uniform(-2.0, 2.0) for _ in range(type_size(t))]) for k, t in gamma.items()}


__all__ = [
    "AGREE_STUCK",
    "AGREE_VALUE",
    "INCONCLUSIVE",
    "VIOLATION",
    "Verdict",
    "bits",
    "check_interpolation",
    "check_locality",
    "check_type_safety",
    "env_for",
]
