import math
from pathlib import Path

import pytest

from dpl.frontend import ParseError, format_number, parse, parse_file, parse_term, parse_type, print_term, print_type
from dpl.oracle.generator import gen_program, gen_type
from dpl.syntax import (
    REAL,
    UNIT,
    UNIT_VAL,
    Add,
    Const,
    FunApp,
    LetRec,
    PrimApp,
    Prod,
    Rd,
    Var,
    alpha_eq,
    real_power,
    strip_decorations,
)
from dpl.typecheck import infer_term

PROGRAMS = sorted((Path(__file__).resolve().parent.parent / "programs").glob("*.dpl"))


def test_rd_syntax():
    m = parse_term("rd(x: real. x + x)(3)(1)")
    assert m == Rd("x", REAL, Add(Var("x"), Var("x")), Const(3.0), Const(1.0))


def test_let_abbreviates_non_recursive_letrec():
    m = parse_term("let f(x: real): real = if x <. 0 then 0 else x in f(2)")
    assert isinstance(m, LetRec) and m.fname == "f"
    assert m.scope == FunApp("f", Const(2.0))


def test_let_function_may_shadow_itself():
    # the defined name is not in scope in its own body when written with let
    m = parse_term("let f(x: real): real = 1 in let f(y: real): real = f(y) + 1 in f(0)")
    from dpl.machine import eval_term

    assert eval_term(infer_term({}, {}, m)[1]) == Const(2.0)


def test_primitives_and_functions_share_call_syntax():
    assert parse_term("exp(1)") == PrimApp("exp", Const(1.0))
    m = parse_term("letrec exp(x: real): real = x in exp(1)")
    assert m.scope == FunApp("exp", Const(1.0))


def test_operator_precedence_and_associativity():
    assert parse_term("1 + 2 * 3") == Add(Const(1.0), PrimApp("mul", _pair(Const(2.0), Const(3.0))))
    assert parse_term("1 - 2 - 3") == Add(Add(Const(1.0), PrimApp("neg", Const(2.0))), PrimApp("neg", Const(3.0)))


def _pair(a, b):
    from dpl.syntax import Pair

    return Pair(a, b)


def test_negative_literal():
    assert parse_term("-2") == Const(-2.0)
    assert parse_term("-x") == PrimApp("neg", Var("x"))


def test_types():
    assert parse_type("real^3") == real_power(3)
    assert parse_type("real * unit") == Prod(REAL, UNIT)
    assert parse_type("real * (real * real)") == Prod(REAL, Prod(REAL, REAL))
    nested = Prod(REAL, Prod(REAL, UNIT))
    assert print_type(nested) == "real * (real * unit)"
    assert parse_type(print_type(Prod(REAL, real_power(2)))) == Prod(REAL, real_power(2))
    assert print_type(real_power(2)) == "real^2"


def test_syntax_errors_carry_positions():
    with pytest.raises(ParseError) as info:
        parse("let x: real = 1 in\n  x +")
    assert (info.value.line, info.value.col) >= (2, 1)
    with pytest.raises(ParseError):
        parse("1 $ 2")


def test_spans_are_recorded():
    src = parse("let x: real = 1 in\n  foo")
    m = src.parsed
    assert src.span_of(m.body) == (2, 3)


def test_printing_constants():
    assert print_term(Const(3.0)) == "3"
    assert print_term(UNIT_VAL) == "()"
    assert format_number(0.1) == "0.1"
    assert format_number(-0.0) == "-0"
    assert float(format_number(math.inf)) == math.inf
    assert format_number(math.nan) == "nan"


@pytest.mark.parametrize("path", PROGRAMS, ids=lambda p: p.name)
def test_shipped_programs_round_trip(path):
    src = parse_file(path)
    again = parse(print_term(src.parsed)).parsed
    assert alpha_eq(again, src.parsed)


def test_training_program_type_checks():
    src = parse_file(Path(PROGRAMS[0]).parent / "train.dpl")
    t, _ = infer_term({}, {}, src.parsed)
    assert t == REAL


@pytest.mark.parametrize("seed", range(1000))
def test_generated_programs_round_trip(seed):
    import random

    rng = random.Random(seed)
    gamma = {"x": gen_type(rng)}
    t = gen_type(rng)
    m = gen_program(seed, gamma, t, depth=5)
    _, decorated = infer_term({}, gamma, m)
    text = print_term(decorated)
    again = parse(text).parsed
    assert alpha_eq(strip_decorations(again), strip_decorations(decorated)), text
    assert infer_term({}, gamma, again)[0] == t
