"""Finite-difference ground truth for derivatives.

Everything here is independent of the derivative transform: functions are
probed only through ordinary evaluation (of a program, or of a trace via its
compiled tape), and the resulting central-difference Jacobians are compared
with what the transform computes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from dpl.derived import elab_fd
from dpl.errors import Budget, InternalError, Stuck
from dpl.machine import DEFAULT_FUEL, Machine
from dpl.symdiff import rdiff
from dpl.syntax import (
    Rd,
    Term,
    Type,
    VarSupply,
    alpha_eq,
    all_names,
    flatten_value,
    type_size,
    unflatten_value,
)
from dpl.tape import lower
from dpl.typecheck import infer_term, type_of_closed_value

RTOL = 1e-4
ATOL = 1e-7
STEP = 1e-5
SAFETY_FACTOR = 10.0


class ProbeUndefined(Exception):
    """The point is too close to a domain boundary for finite differences."""


@dataclass(frozen=True)
class RealFn:
    """A partial map ``R^n -> R^m`` obtained by flattening typed values."""

    n_in: int
    n_out: int
    fn: Callable[[np.ndarray], Optional[np.ndarray]]
    batch_fn: Optional[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = None

    def __call__(self, x) -> Optional[np.ndarray]:
        return self.fn(np.asarray(x, dtype=np.float64))

    def batch(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Rows of ``xs`` evaluated; undefined rows are flagged and filled with NaN."""
        if self.batch_fn is not None:
            return self.batch_fn(xs)
        values = np.full((len(xs), self.n_out), np.nan)
        ok = np.zeros(len(xs), dtype=bool)
        for i, row in enumerate(xs):
            y = self.fn(row)
            if y is not None:
                values[i] = y
                ok[i] = True
        return values, ok

    @classmethod
    def from_trace(cls, x: str, t: Type, c: Term, rho: Optional[dict] = None) -> "RealFn":
        """``a |-> C[a/x]`` with the other free variables of ``C`` taken from ``rho``."""
        tape = lower(c, [(x, t)], rho)
        n_out = len(tape.outputs)

        def one(a: np.ndarray) -> Optional[np.ndarray]:
            values, ok = tape.batch(a.reshape(1, -1))
            return values[0] if ok[0] else None

        return cls(tape.n_inputs, n_out, one, tape.batch)

    @classmethod
    def from_program(
        cls, x: str, t: Type, m: Term, out_type: Type, rho: Optional[dict] = None, phi: Optional[dict] = None,
        fuel: int = DEFAULT_FUEL,
    ) -> "RealFn":
        """``a |-> eval(M)`` under ``rho[a/x]``; Stuck points are undefined, fuel exhaustion propagates."""
        rho = dict(rho or {})
        phi = dict(phi or {})

        def one(a: np.ndarray) -> Optional[np.ndarray]:
            env = {**rho, x: unflatten_value(t, a.tolist())}
            try:
                v = Machine(fuel, check_transform=True).eval(phi, env, m)
            except Stuck:
                return None
            return np.asarray(flatten_value(v), dtype=np.float64)

        return cls(type_size(t), type_size(out_type), one)


def steps_for(x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    if h is not None:
        return np.full(len(x), float(h))
    return STEP * np.maximum(1.0, np.abs(x))


def fd_jacobian(f: RealFn, x: Sequence[float], h: Optional[float] = None) -> Optional[np.ndarray]:
    """Central-difference Jacobian (``m`` rows, ``n`` columns); ``None`` if a probe is undefined."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n == 0:
        return np.zeros((f.n_out, 0))
    hs = steps_for(x, h)
    probes = np.repeat(x[None, :], 2 * n, axis=0)
    for j in range(n):
        probes[2 * j, j] += hs[j]
        probes[2 * j + 1, j] -= hs[j]
    values, ok = f.batch(probes)
    if not ok.all():
        return None
    jac = np.empty((f.n_out, n))
    for j in range(n):
        jac[:, j] = (values[2 * j] - values[2 * j + 1]) / (2.0 * hs[j])
    return jac


def probe_safe(f: RealFn, x: Sequence[float]) -> bool:
    """Defined and finite at ``x`` and at ``x +- h e_j``, ``x +- 10h e_j`` for every ``j``."""
    x = np.asarray(x, dtype=np.float64)
    hs = steps_for(x)
    rows = [x]
    for j in range(len(x)):
        for k in (1.0, -1.0, SAFETY_FACTOR, -SAFETY_FACTOR):
            p = x.copy()
            p[j] += k * hs[j]
            rows.append(p)
    values, ok = f.batch(np.asarray(rows).reshape(len(rows), len(x)))
    return bool(ok.all() and np.isfinite(values).all())


@dataclass(frozen=True)
class FDReport:
    name: str
    point: tuple[float, ...]
    analytic: tuple[float, ...]
    numeric: tuple[float, ...]
    max_rel_error: float
    rtol: float = RTOL
    atol: float = ATOL
    verdict: str = field(default="")
    transform_checks: int = field(default=0, compare=False)

    @classmethod
    def compare(cls, name: str, point, analytic, numeric, rtol: float = RTOL, atol: float = ATOL) -> "FDReport":
        a = tuple(float(v) for v in analytic)
        n = tuple(float(v) for v in numeric)
        if len(a) != len(n):
            raise ValueError("analytic and numeric vectors differ in length")
        err = max((relative_error(p, q, rtol, atol) for p, q in zip(a, n)), default=0.0)
        verdict = "pass" if err <= rtol else "fail"
        return cls(name, tuple(float(v) for v in point), a, n, err, rtol, atol, verdict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def line(self) -> str:
        point = ",".join(repr(v) for v in self.point)
        return f"{self.name} point=({point}) maxRelError={self.max_rel_error!r} verdict={self.verdict}"

    def describe(self) -> str:
        a = ", ".join(f"{v:.10g}" for v in self.analytic)
        n = ", ".join(f"{v:.10g}" for v in self.numeric)
        return f"{self.line()}\n  analytic: [{a}]\n  numeric:  [{n}]\n  tolerance: rel {self.rtol:g}, abs {self.atol:g}"


def relative_error(a: float, n: float, rtol: float = RTOL, atol: float = ATOL) -> float:
    """``|a - n| / max(|a|, |n|, atol/rtol)``: at most ``rtol`` iff within ``max(rtol*scale, atol)``."""
    if math.isnan(a) or math.isnan(n):
        return math.inf
    diff = abs(a - n)
    if diff == 0.0:
        return 0.0
    return diff / max(abs(a), abs(n), atol / rtol)


def _env_types(rho: dict) -> dict:
    return {k: type_of_closed_value(v) for k, v in rho.items()}


class TransformTypeError(InternalError):
    """The derivative transform produced a term that does not check at the binder type."""


def checked_rdiff(x: str, t: Type, c: Term, v: Term, w: Term, gamma: dict, fuel: int = DEFAULT_FUEL) -> Term:
    """Run the transform and re-check its output at ``t`` (the admissible typing rule)."""
    supply = VarSupply()
    supply.reserve(all_names(c) | all_names(v) | all_names(w) | set(gamma) | {x})
    out = rdiff(x, t, c, v, w, supply, Budget(fuel))
    got, _ = infer_term({}, gamma, out)
    if got != t:
        raise TransformTypeError(f"transform output has type {got}, expected {t}")
    return out


def check_vjp(
    x: str, t: Type, c: Term, v: Term, w: Term, rho: Optional[dict] = None, name: str = "vjp",
    fuel: int = DEFAULT_FUEL,
) -> FDReport:
    """Compare the transform's ``J^T w`` at ``v`` with central differences of ``C`` in ``x``.

    ``C`` is a trace term whose free variables other than ``x`` are bound by
    ``rho``. Raises :class:`ProbeUndefined` when ``v`` is within ten steps of
    the trace's domain boundary along some axis.
    """
    rho = dict(rho or {})
    gamma = _env_types(rho)
    _, c = infer_term({}, {**gamma, x: t}, c)
    point = flatten_value(v)
    f = RealFn.from_trace(x, t, c, rho)
    if not probe_safe(f, point):
        raise ProbeUndefined(f"{name}: trace undefined or not finite near {point}")
    jac = fd_jacobian(f, point)
    assert jac is not None  # implied by probe safety
    numeric = jac.T @ np.asarray(flatten_value(w), dtype=np.float64)
    transformed = checked_rdiff(x, t, c, v, w, gamma, fuel)
    try:
        analytic = flatten_value(Machine(fuel).eval({}, rho, transformed))
    except Stuck as exc:
        # the trace is defined at v, so its derivative must be too
        return FDReport(name, tuple(point), (), tuple(numeric), math.inf, verdict=f"fail ({exc})",
                        transform_checks=1)
    return replace(FDReport.compare(name, point, analytic, numeric), transform_checks=1)


def check_program_vjp(
    m: Term, x: str, t: Type, v: Term, w: Term, rho: Optional[dict] = None, phi: Optional[dict] = None,
    name: str = "vjp", fuel: int = DEFAULT_FUEL,
) -> FDReport:
    """``rd(x:T. M)(v)(w)`` evaluated by the machine against ``J^T w`` from differences of ``M``.

    Raises :class:`ProbeUndefined` when a probe is undefined or takes a
    different branch than the point itself; :class:`dpl.errors.Stuck` when
    the program is undefined at the point.
    """
    rho = dict(rho or {})
    phi = dict(phi or {})
    gamma = _env_types(rho)
    out_type, m = infer_term({}, {**gamma, x: t}, m)
    point = flatten_value(v)
    mach = Machine(fuel, check_transform=True)
    _, rd_term = infer_term({}, gamma, Rd(x, t, m, v, w))
    analytic = flatten_value(mach.eval(phi, rho, rd_term))
    f = RealFn.from_program(x, t, m, out_type, rho, phi, fuel)
    if not _branch_stable(m, x, t, point, rho, phi, fuel) or not probe_safe(f, point):
        raise ProbeUndefined(f"{name}: program not smooth at {point}")
    jac = fd_jacobian(f, point)
    assert jac is not None
    numeric = jac.T @ np.asarray(flatten_value(w), dtype=np.float64)
    return replace(FDReport.compare(name, point, analytic, numeric), transform_checks=mach.transform_checks)


def inner(a: Sequence[float], b: Sequence[float]) -> float:
    total = 0.0
    for p, q in zip(a, b, strict=True):
        total += p * q
    return total


def check_adjoint_identity(
    m: Term, x: str, t: Type, v: Term, u: Term, w: Term, rho: Optional[dict] = None, phi: Optional[dict] = None,
    name: str = "adjoint", fuel: int = DEFAULT_FUEL,
) -> FDReport:
    """``<w, J u>`` (forward mode via nested ``rd``) against ``<J^T w, u>`` (reverse mode).

    The forward and reverse results are also compared with ``J u`` and
    ``J^T w`` from central differences of the program itself. The analytic
    vector is ``(<w, fwd>, fwd..., rev...)`` and the numeric one
    ``(<rev, u>, Ju..., J^T w...)``. Raises :class:`ProbeUndefined` when a
    probe is undefined or takes a different branch than the point itself.
    """
    rho = dict(rho or {})
    phi = dict(phi or {})
    gamma = _env_types(rho)
    out_type, m = infer_term({}, {**gamma, x: t}, m)
    point = flatten_value(v)
    f = RealFn.from_program(x, t, m, out_type, rho, phi, fuel)
    if not _branch_stable(m, x, t, point, rho, phi, fuel) or not probe_safe(f, point):
        raise ProbeUndefined(f"{name}: program not smooth at {point}")
    jac = fd_jacobian(f, point)
    assert jac is not None

    supply = VarSupply()
    supply.reserve(all_names(m) | set(rho) | {x})
    forward = elab_fd(x, t, m, out_type, v, u, supply)
    reverse = Rd(x, t, m, v, w)
    mach = Machine(fuel, check_transform=True)
    try:
        fwd = flatten_value(mach.eval(phi, rho, infer_term({}, gamma, forward)[1]))
        rev = flatten_value(mach.eval(phi, rho, infer_term({}, gamma, reverse)[1]))
    except Stuck as exc:
        return FDReport(name, tuple(point), (), (), math.inf, verdict=f"fail ({exc})",
                        transform_checks=mach.transform_checks)
    uu = np.asarray(flatten_value(u), dtype=np.float64)
    ww = np.asarray(flatten_value(w), dtype=np.float64)
    analytic = [inner(ww.tolist(), fwd), *fwd, *rev]
    numeric = [inner(rev, uu.tolist()), *(jac @ uu), *(jac.T @ ww)]
    report = FDReport.compare(name, point, analytic, numeric)
    return replace(report, transform_checks=mach.transform_checks)


def _branch_stable(m: Term, x: str, t: Type, point, rho: dict, phi: dict, fuel: int) -> bool:
    """The trace at ``x +- 10h e_j`` is the trace at the point (same branches, same calls)."""
    def trace_at(p) -> Optional[Term]:
        try:
            return Machine(fuel, check_transform=True).sym_eval(phi, {**rho, x: unflatten_value(t, p)}, m)
        except Stuck:
            return None

    center = trace_at(point)
    if center is None:
        return False
    hs = steps_for(np.asarray(point, dtype=np.float64))
    for j in range(len(point)):
        for k in (SAFETY_FACTOR, -SAFETY_FACTOR):
            p = list(point)
            p[j] += k * hs[j]
            other = trace_at(p)
            if other is None or not alpha_eq(center, other):
                return False
    return True
