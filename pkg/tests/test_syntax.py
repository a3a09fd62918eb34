import pytest

from dpl.derived import (
    DuplicateBinder,
    add_at_type,
    elab_fd,
    elab_grad,
    elab_tuple_let,
    is_real_power,
    zero_of_type,
)
from dpl.machine import eval_term
from dpl.syntax import (
    REAL,
    UNIT,
    UNIT_VAL,
    Add,
    Const,
    Fst,
    FunApp,
    Let,
    LetRec,
    Pair,
    PrimApp,
    Prod,
    Rd,
    Snd,
    UnboundVariableError,
    Var,
    VarSupply,
    alpha_eq,
    apply_env_value,
    flatten_value,
    free_vars,
    is_closed_value,
    is_trace_term,
    is_value,
    real_power,
    type_size,
    unflatten_value,
)
from dpl.typecheck import type_of_closed_value


def test_real_power_associates_left():
    assert real_power(1) == REAL
    assert real_power(3) == Prod(Prod(REAL, REAL), REAL)
    assert is_real_power(real_power(4)) == 4
    assert is_real_power(Prod(REAL, Prod(REAL, REAL))) is None


@pytest.mark.parametrize(
    "t, n",
    [(REAL, 1), (UNIT, 0), (Prod(REAL, UNIT), 1), (real_power(5), 5), (Prod(Prod(UNIT, UNIT), UNIT), 0)],
)
def test_type_size_counts_real_leaves(t, n):
    assert type_size(t) == n


def test_zero_of_type():
    assert zero_of_type(REAL) == Const(0.0)
    assert zero_of_type(UNIT) == UNIT_VAL
    z = zero_of_type(Prod(REAL, UNIT))
    assert alpha_eq(z, Pair(Const(0.0), UNIT_VAL))
    assert is_closed_value(z)


@pytest.mark.parametrize("t", [REAL, UNIT, Prod(REAL, UNIT), real_power(3), Prod(UNIT, real_power(2))])
def test_zero_has_its_type(t):
    assert type_of_closed_value(zero_of_type(t)) == t


def test_add_at_real_is_plain_sum():
    assert add_at_type(REAL, Var("x"), Var("y"), VarSupply()) == Add(Var("x"), Var("y"))


def test_add_at_unit_sequences_both_sides():
    m = add_at_type(UNIT, Var("m"), Var("n"), VarSupply())
    assert alpha_eq(m, Let("a", UNIT, Var("m"), Let("b", UNIT, Var("n"), UNIT_VAL)))


def test_add_at_pair_is_componentwise():
    real2 = real_power(2)
    m = add_at_type(real2, Var("m"), Var("n"), VarSupply())
    s = VarSupply()
    expected = elab_tuple_let(
        [("x1", REAL), ("x2", REAL)],
        Var("m"),
        elab_tuple_let(
            [("y1", REAL), ("y2", REAL)],
            Var("n"),
            Pair(Add(Var("x1"), Var("y1")), Add(Var("x2"), Var("y2")), REAL, REAL),
            s,
        ),
        s,
    )
    assert alpha_eq(m, expected)
    v = eval_term(m, {"m": Pair(Const(1.0), Const(2.0)), "n": Pair(Const(10.0), Const(20.0))})
    assert flatten_value(v) == [11.0, 22.0]


def test_tuple_let_zero_binders_binds_a_fresh_unit():
    m = elab_tuple_let([], Var("m"), Var("n"), VarSupply())
    assert isinstance(m, Let) and m.type == UNIT and m.name not in free_vars(Var("n"))[0]


def test_tuple_let_one_binder_is_a_let():
    assert elab_tuple_let([("x", REAL)], Var("m"), Var("n"), VarSupply()) == Let("x", REAL, Var("m"), Var("n"))


def test_tuple_let_two_binders():
    m = elab_tuple_let([("x", REAL), ("y", REAL)], Var("m"), Var("n"), VarSupply())
    z = Var("z")
    expected = Let("z", real_power(2), Var("m"), Let("x", REAL, Fst(z, REAL, REAL), Let("y", REAL, Snd(z, REAL, REAL), Var("n"))))
    assert alpha_eq(m, expected)


def test_tuple_let_three_binders_projects_left_associated():
    m = elab_tuple_let([("a", REAL), ("b", REAL), ("c", REAL)], Var("v"), Pair(Pair(Var("c"), Var("b")), Var("a")), VarSupply())
    v = eval_term(m, {"v": unflatten_value(real_power(3), [1.0, 2.0, 3.0])})
    assert flatten_value(v) == [3.0, 2.0, 1.0]


def test_tuple_let_rejects_duplicates():
    with pytest.raises(DuplicateBinder):
        elab_tuple_let([("x", REAL), ("x", REAL)], Var("m"), Var("n"), VarSupply())


def test_elab_grad():
    body = Add(Var("x"), Var("x"))
    assert elab_grad("x", 1, body, Const(3.0)) == Rd("x", REAL, body, Const(3.0), Const(1.0))
    dprod = PrimApp("DProd2", Pair(Var("w"), Var("w")))
    assert elab_grad("w", 2, dprod, Var("L")) == Rd("w", real_power(2), dprod, Var("L"), Const(1.0))


def test_elab_fd_is_nested_rd():
    body = Add(Var("x"), Var("x"))
    m = elab_fd("x", REAL, body, REAL, Const(3.0), Const(1.0), VarSupply())
    expected = Rd("y", REAL, Rd("x", REAL, body, Const(3.0), Var("y")), Const(0.0), Const(1.0))
    assert alpha_eq(m, expected)
    assert eval_term(m) == Const(2.0)


def test_elab_fd_of_constant_is_zero():
    m = elab_fd("x", REAL, Const(5.0), real_power(1), Const(3.0), Const(1.0), VarSupply())
    assert eval_term(m) == Const(0.0)


def test_free_vars_examples():
    assert free_vars(Var("x")) == ({"x"}, set())
    assert free_vars(Rd("x", REAL, Add(Var("x"), Var("y")), Var("z"), Var("w"))) == ({"y", "z", "w"}, set())
    m = LetRec("f", "x", REAL, REAL, FunApp("f", Var("x")), FunApp("f", Var("y")))
    assert free_vars(m) == ({"y"}, set())
    assert free_vars(FunApp("g", Const(1.0))) == (set(), {"g"})


def test_apply_env_value_examples():
    assert apply_env_value({"x": Const(3.0)}, Pair(Var("x"), Const(2.0))) == Pair(Const(3.0), Const(2.0))
    assert apply_env_value({}, Const(5.0)) == Const(5.0)
    pair = Pair(Const(1.0), Const(2.0), REAL, REAL)
    assert apply_env_value({"x": pair}, Var("x")) == pair
    with pytest.raises(UnboundVariableError):
        apply_env_value({}, Var("x"))


def test_values_and_traces_are_terms():
    assert is_value(Pair(Var("x"), Const(1.0)))
    assert not is_value(Add(Const(1.0), Const(2.0)))
    assert is_trace_term(Let("y", REAL, PrimApp("exp", Var("x")), Add(Var("y"), Var("y"))))
    assert not is_trace_term(Rd("x", REAL, Var("x"), Const(1.0), Const(1.0)))


def test_alpha_eq_ignores_binder_names_only():
    a = Let("x", REAL, Const(1.0), Var("x"))
    assert alpha_eq(a, Let("y", REAL, Const(1.0), Var("y")))
    assert not alpha_eq(a, Let("y", REAL, Const(1.0), Var("x")))
    assert not alpha_eq(Var("x"), Var("y"))


def test_var_supply_avoids_reserved_names():
    s = VarSupply()
    s.reserve({"%0", "%1"})
    assert s.fresh() == "%2"
    assert len({s.fresh() for _ in range(100)}) == 100


def test_flatten_round_trip():
    t = Prod(Prod(REAL, UNIT), real_power(2))
    v = unflatten_value(t, [1.0, 2.0, 3.0])
    assert flatten_value(v) == [1.0, 2.0, 3.0]
    assert type_of_closed_value(v) == t
