import pytest

from dpl.frontend import parse_term
from dpl.syntax import (
    REAL,
    TRUE,
    UNIT,
    UNIT_VAL,
    Add,
    Const,
    Fst,
    FunApp,
    If,
    LetRec,
    Pair,
    PredApp,
    Prod,
    Rd,
    Var,
    real_power,
)
from dpl.typecheck import (
    ArityMismatch,
    GlobalVariableInFunctionBody,
    TypeCheckError,
    TypeMismatch,
    UnboundVariable,
    ValueNotClosed,
    infer_bool,
    infer_term,
    type_of,
    type_of_closed_value,
)


def test_rd_of_real_function_is_real():
    m = Rd("x", REAL, Add(Var("x"), Var("x")), Const(3.0), Const(1.0))
    assert type_of(m) == REAL


def test_rd_result_has_the_variable_type():
    body = parse_term("DProd2(<x, x>)")
    m = Rd("x", real_power(2), body, Pair(Const(1.0), Const(2.0)), Const(1.0))
    assert type_of(m) == real_power(2)


def test_relu_approximation_is_real():
    m = If(PredApp("lt", Pair(Var("x"), Const(0.0))), Const(0.0), Var("x"))
    assert type_of(m, {"x": REAL}) == REAL


def test_function_bodies_cannot_see_global_variables():
    m = LetRec("f", "x", REAL, REAL, Var("y"), FunApp("f", Const(0.0)))
    with pytest.raises(GlobalVariableInFunctionBody):
        type_of(m, {"y": REAL})


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        type_of(Var("nope"))


def test_rd_cotangent_must_have_body_type():
    m = Rd("x", REAL, Var("x"), Const(1.0), Pair(Const(1.0), Const(1.0)))
    with pytest.raises(TypeMismatch):
        type_of(m)


def test_boolean_terms():
    assert infer_bool({}, {}, TRUE) == TRUE
    infer_bool({}, {"x": REAL}, PredApp("lt", Pair(Var("x"), Const(0.0))))
    with pytest.raises(ArityMismatch):
        infer_bool({}, {"x": REAL}, PredApp("lt", Var("x")))


def test_closed_value_types():
    assert type_of_closed_value(Const(3.5)) == REAL
    assert type_of_closed_value(Pair(Const(1.0), UNIT_VAL)) == Prod(REAL, UNIT)
    with pytest.raises(ValueNotClosed):
        type_of_closed_value(Var("x"))


def test_decorations_are_filled():
    _, m = infer_term({}, {"p": Prod(REAL, UNIT)}, Pair(Fst(Var("p")), Const(1.0)))
    assert m.ltype == REAL and m.rtype == REAL
    assert m.fst.ltype == REAL and m.fst.rtype == UNIT


def test_wrong_decoration_is_rejected():
    with pytest.raises(TypeCheckError):
        type_of(Fst(Var("p"), UNIT, REAL), {"p": Prod(REAL, UNIT)})


def test_inference_is_idempotent_on_decorated_terms():
    src = "letrec f(p: real * unit): real = fst p in let q: real^2 = <1, 2> in f(<snd q, ()>)"
    t, m = infer_term({}, {}, parse_term(src))
    t2, m2 = infer_term({}, {}, m)
    assert t == t2 == REAL and m2 == m
