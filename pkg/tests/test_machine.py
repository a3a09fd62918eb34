import pytest

from dpl.errors import FuelExhausted, Stuck
from dpl.frontend import parse_bool, parse_term
from dpl.machine import (
    AddL,
    IfCond,
    IsValue,
    BoolRedex,
    Machine,
    TermRedex,
    decompose,
    eval_bool,
    eval_term,
    plug,
    sym_eval,
)
from dpl.syntax import REAL, TRUE, Add, Const, Let, Pair, PrimApp, Var, alpha_eq, is_trace_term
from dpl.typecheck import infer_bool, infer_term


def prog(src, gamma=None):
    return infer_term({}, gamma or {}, parse_term(src))[1]


def test_decompose_value():
    assert decompose(Const(3.0)) == IsValue(Const(3.0))


def test_decompose_sum_in_left_operand():
    m = Add(Add(Const(1.0), Const(2.0)), Var("x"))
    d = decompose(m)
    assert d == TermRedex((AddL(Var("x")),), Add(Const(1.0), Const(2.0)))
    assert plug(d.context, d.redex) == m


def test_decompose_conditional_reaches_boolean_redex():
    m = parse_term("if 1 <. 0 then 2 else 3")
    d = decompose(m)
    assert isinstance(d, BoolRedex)
    assert isinstance(d.context[0], IfCond)
    assert plug(d.context, d.redex) == m


def test_nested_differentiation():
    assert eval_term(prog("rd(x: real. x * rd(y: real. x + y)(1)(1))(1)(1)")) == Const(1.0)


def test_nested_differentiation_through_a_call():
    src = "letrec f(x: real): real = rd(y: real. x + y)(1)(1) in rd(x: real. x + f(x))(1)(1)"
    assert eval_term(prog(src)) == Const(1.0)


def test_relu_is_stuck_at_zero():
    with pytest.raises(Stuck) as info:
        eval_term(prog("let f(x: real): real = if x <. 0 then 0 else x in f(0)"))
    assert str(info.value) == "undefined: <. at (0, 0)"


def test_boolean_evaluation():
    assert eval_bool(parse_bool("true")) == TRUE
    b = infer_bool({}, {}, parse_bool("1 + 1 <. 3"))
    assert eval_bool(b) == TRUE
    with pytest.raises(Stuck):
        eval_bool(infer_bool({}, {"x": REAL}, parse_bool("x <. x")), {"x": Const(0.0)})


def test_sym_eval_resolves_conditionals():
    assert sym_eval(prog("if true then 3 else x", {"x": REAL}), {"x": Const(1.0)}) == Const(3.0)


def test_sym_eval_of_a_call_binds_the_parameter():
    c = sym_eval(prog("letrec f(x: real): real = x * x in f(2)"))
    expected = Let("x", REAL, Const(2.0), PrimApp("mul", Pair(Var("x"), Var("x"), REAL, REAL)))
    assert alpha_eq(c, expected)


def test_sym_eval_keeps_lets():
    c = sym_eval(prog("let x: real = 2 in x + x"))
    assert alpha_eq(c, Let("x", REAL, Const(2.0), Add(Var("x"), Var("x"))))


def test_sym_eval_output_is_a_trace():
    src = "letrec f(p: real^2): real = if snd p <. 0.5 then fst p else f(<fst p * 2, snd p - 1>) in f(<x, 3>)"
    c = sym_eval(prog(src, {"x": REAL}), {"x": Const(1.5)})
    assert is_trace_term(c)
    assert eval_term(c, {"x": Const(1.5)}) == Const(12.0)


def test_rd_in_sym_mode_differentiates_the_trace():
    m = prog("rd(y: real. x * y)(x)(1)", {"x": REAL})
    c = sym_eval(m, {"x": Const(3.0)})
    assert is_trace_term(c)
    assert eval_term(c, {"x": Const(3.0)}) == Const(3.0)


def test_fuel_exhaustion_is_distinct_from_stuck():
    loop = prog("letrec f(x: real): real = f(x) in f(1)")
    with pytest.raises(FuelExhausted):
        eval_term(loop, fuel=1000)


def test_fuel_counts_steps_deterministically():
    m = prog("rd(x: real. x * rd(y: real. x + y)(1)(1))(1)(1)")
    a, b = Machine(), Machine()
    a.eval({}, {}, m)
    b.eval({}, {}, m)
    assert a.steps == b.steps > 0


def test_deep_let_chain_runs_without_host_recursion():
    m = Const(0.0)
    for i in range(20000):
        m = Let(f"v{i}", REAL, Add(Var("x"), Const(1.0)), m) if i else Let("v0", REAL, Const(1.0), m)
    assert eval_term(m, {"x": Const(1.0)}) == Const(0.0)


def test_transform_outputs_can_be_checked():
    mach = Machine(check_transform=True)
    mach.eval({}, {}, prog("rd(x: real^2. DProd2(<x, x>))(<1, 2>)(1)"))
    assert mach.transform_checks == mach.transform_calls == 1
