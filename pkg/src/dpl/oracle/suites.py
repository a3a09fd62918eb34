"""Randomised property suites over generated programs.

Each suite is a list of independent cases; case ``i`` of a suite run with
seed ``s`` depends only on ``(s, i)``, so suites can be sharded across
processes and their reports are reproducible line for line.

- ``vjp``: transform output versus finite differences on traces.
- ``interpolation``: ``eval`` versus ``sym_eval`` followed by ``eval``, plus
  type safety of both results.
- ``adjoint``: forward mode (nested ``rd``) versus reverse mode through the
  adjoint identity, both versus finite differences of the program.
"""

from __future__ import annotations

import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable

from dpl.errors import FuelExhausted, Stuck
from dpl.machine import Machine
from dpl.oracle.fd import ProbeUndefined, check_adjoint_identity, check_vjp, checked_rdiff
from dpl.oracle.generator import Generator, _Scope
from dpl.oracle.metatheory import VIOLATION, check_interpolation, env_for
from dpl.symdiff import transform_cost
from dpl.syntax import REAL, UNIT, Type
from dpl.typecheck import TypeCheckError, infer_term

SUITE_FUEL = 100_000
MAX_ATTEMPTS = 50
# traces whose transform would take more clause applications than this are regenerated
MAX_TRANSFORM_COST = 5_000
# adjoint candidates whose plain evaluation needs more steps than this are regenerated
SCREEN_FUEL = 5_000

PASS, FAIL, SKIP, DISCARDED = "pass", "fail", "skip", "discarded"


@dataclass(frozen=True)
class CaseResult:
    index: int
    outcome: str
    line: str
    transform_checks: int = 0
    discarded: int = 0


@dataclass(frozen=True)
class SuiteReport:
    name: str
    seed: int
    cases: tuple[CaseResult, ...]

    def counts(self) -> Counter:
        return Counter(c.outcome for c in self.cases)

    @property
    def transform_checks(self) -> int:
        return sum(c.transform_checks for c in self.cases)

    @property
    def discarded_attempts(self) -> int:
        return sum(c.discarded for c in self.cases)

    def summary(self) -> str:
        counts = ", ".join(f"{k}={v}" for k, v in sorted(self.counts().items()))
        return (
            f"# {self.name} seed={self.seed} cases={len(self.cases)} {counts} "
            f"regenerated={self.discarded_attempts} transform_checks={self.transform_checks}"
        )

    def text(self) -> str:
        return "\n".join([*(c.line for c in self.cases), self.summary()]) + "\n"


def _input_type(g: Generator) -> Type:
    """A small input type with at least one real leaf."""
    t = g.small_type()
    return REAL if t == UNIT else t


def vjp_case(seed: int, index: int, depth: int = 4, fuel: int = SUITE_FUEL) -> CaseResult:
    """One (trace, point, cotangent) triple: the trace of a smooth program at a random point."""
    name = f"vjp[{index}]"
    for attempt in range(MAX_ATTEMPTS):
        rng = random.Random(f"vjp/{seed}/{index}/{attempt}")
        g = Generator(rng, smooth=True)
        t = _input_type(g)
        u = REAL if rng.random() < 0.6 else g.small_type()
        m = g.term(u, depth, _Scope({"x": t}, {}))
        v, w = g.value(t), g.value(u)
        try:
            _, m = infer_term({}, {"x": t}, m)
            tracer = Machine(fuel, check_transform=True)
            c = tracer.sym_eval({}, {"x": v}, m)
            if transform_cost(c) > MAX_TRANSFORM_COST:
                continue
            report = check_vjp("x", t, c, v, w, name=name, fuel=fuel)
        except (Stuck, FuelExhausted):
            continue
        except ProbeUndefined:
            return CaseResult(index, SKIP, f"{name} verdict=skip (probe undefined)", tracer.transform_checks, attempt)
        return CaseResult(index, report.verdict if report.verdict == PASS else FAIL, report.line(),
                          report.transform_checks + tracer.transform_checks, attempt)
    return CaseResult(index, DISCARDED, f"{name} verdict=discarded", 0, MAX_ATTEMPTS)


def interpolation_case(seed: int, index: int, depth: int = 6, fuel: int = SUITE_FUEL) -> CaseResult:
    """A random program under a random environment: interpolation and type safety."""
    name = f"interp[{index}]"
    rng = random.Random(f"interp/{seed}/{index}")
    g = Generator(rng)
    gamma = {f"x{k}": g.small_type() for k in range(rng.randint(0, 2))}
    t = g.small_type()
    m = g.term(t, depth, _Scope(dict(gamma), {}))
    try:
        got, m = infer_term({}, gamma, m)
    except TypeCheckError as exc:
        return CaseResult(index, VIOLATION, f"{name} verdict=violation generator produced ill-typed term: {exc}")
    if got != t:
        return CaseResult(index, VIOLATION, f"{name} verdict=violation generator produced type {got}, wanted {t}")
    rho = env_for(rng, gamma)
    verdict = check_interpolation({}, rho, m, fuel, expected=t)
    detail = f" {verdict.detail}" if verdict.detail else ""
    return CaseResult(index, verdict.kind, f"{name} verdict={verdict.kind}{detail}", verdict.transform_checks)


def _adjoint_affordable(m, t: Type, v, w, fuel: int) -> bool:
    """Screen out programs whose nested transforms would be too expensive to check.

    Forward mode differentiates the output of the reverse transform again,
    so both the trace and its reverse derivative are bounded.
    """
    Machine(fuel, check_transform=True).eval({}, {"x": v}, m)
    trace = Machine(fuel, check_transform=True).sym_eval({}, {"x": v}, m)
    if transform_cost(trace) > MAX_TRANSFORM_COST:
        return False
    reverse = checked_rdiff("x", t, trace, v, w, {}, fuel)
    return transform_cost(reverse) <= MAX_TRANSFORM_COST


def adjoint_case(seed: int, index: int, depth: int = 3, fuel: int = SUITE_FUEL) -> CaseResult:
    """A random smooth unary program checked through the adjoint identity."""
    name = f"adjoint[{index}]"
    for attempt in range(MAX_ATTEMPTS):
        rng = random.Random(f"adjoint/{seed}/{index}/{attempt}")
        g = Generator(rng, smooth=True)
        t = _input_type(g)
        out = REAL if rng.random() < 0.6 else g.small_type()
        m = g.term(out, depth, _Scope({"x": t}, {}))
        v, tangent, cotangent = g.value(t), g.value(t), g.value(out)
        try:
            _, m = infer_term({}, {"x": t}, m)
            if not _adjoint_affordable(m, t, v, cotangent, min(fuel, SCREEN_FUEL)):
                continue
            report = check_adjoint_identity(m, "x", t, v, tangent, cotangent, name=name, fuel=fuel)
        except (Stuck, FuelExhausted):
            continue
        except ProbeUndefined:
            return CaseResult(index, SKIP, f"{name} verdict=skip (probe undefined or branch change)", 0, attempt)
        return CaseResult(index, report.verdict if report.verdict == PASS else FAIL, report.line(),
                          report.transform_checks, attempt)
    return CaseResult(index, DISCARDED, f"{name} verdict=discarded", 0, MAX_ATTEMPTS)


SUITES: dict[str, Callable[..., CaseResult]] = {
    "vjp": vjp_case,
    "interpolation": interpolation_case,
    "adjoint": adjoint_case,
}

DEFAULT_DEPTH = {"vjp": 4, "interpolation": 6, "adjoint": 3}


def _run_case(fn, seed, depth, fuel, index):
    return fn(seed, index, depth, fuel)


def run_suite(name: str, n: int, seed: int = 0, depth: int | None = None, fuel: int = SUITE_FUEL,
              jobs: int = 1) -> SuiteReport:
    fn = SUITES[name]
    depth = DEFAULT_DEPTH[name] if depth is None else depth
    work = partial(_run_case, fn, seed, depth, fuel)
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            cases = list(pool.map(work, range(n), chunksize=max(1, n // (4 * jobs))))
    else:
        cases = [work(i) for i in range(n)]
    return SuiteReport(name, seed, tuple(cases))
