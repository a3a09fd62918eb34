"""Numerical ground truth and randomised metatheory checks."""

from dpl.oracle.fd import (
    ATOL,
    RTOL,
    FDReport,
    ProbeUndefined,
    RealFn,
    TransformTypeError,
    check_adjoint_identity,
    check_program_vjp,
    check_vjp,
    fd_jacobian,
    probe_safe,
    relative_error,
)
from dpl.oracle.generator import Generator, gen_program, gen_type, gen_value
from dpl.oracle.metatheory import Verdict, check_interpolation, check_locality, check_type_safety
from dpl.oracle.suites import SuiteReport, run_suite

__all__ = [
    "ATOL",
    "RTOL",
    "FDReport",
    "Generator",
    "ProbeUndefined",
    "RealFn",
    "SuiteReport",
    "TransformTypeError",
    "Verdict",
    "check_adjoint_identity",
    "check_interpolation",
    "check_locality",
    "check_program_vjp",
    "check_type_safety",
    "check_vjp",
    "fd_jacobian",
    "gen_program",
    "gen_type",
    "gen_value",
    "probe_safe",
    "relative_error",
    "run_suite",
]
