"""A first-order differentiable programming language.

The package provides the abstract syntax, a type checker, ordinary and
symbolic evaluation, a reverse-mode derivative transform on execution
traces, a finite-difference oracle and property suites, and a concrete
syntax with a command-line driver.
"""

from dpl.errors import FuelExhausted, InternalError, Stuck
from dpl.machine import Machine, eval_bool, eval_term, sym_eval
from dpl.symdiff import rdiff
from dpl.typecheck import TypeCheckError, infer_term, type_of

__all__ = [
    "FuelExhausted",
    "InternalError",
    "Machine",
    "Stuck",
    "TypeCheckError",
    "eval_bool",
    "eval_term",
    "infer_term",
    "rdiff",
    "sym_eval",
    "type_of",
]
