import math

import numpy as np
import pytest

from dpl.oracle.fd import RealFn, fd_jacobian
from dpl.primitives import REGISTRY, prim_bool_eval, prim_eval, prim_reverse_eval
from dpl.syntax import FALSE, TRUE, Const, Pair, Prod, flatten_value, real_power, type_size, unflatten_value


def vec(*xs):
    return unflatten_value(real_power(len(xs)), list(xs))


def test_dprod2():
    a, b, a2, b2 = 1.5, -2.0, 3.0, 0.25
    assert prim_eval("DProd2", Pair(vec(a, b), vec(a2, b2))) == Const(a * a2 + b * b2)


def test_log_is_undefined_off_its_domain():
    assert prim_eval("log", Const(-1.0)) is None
    assert prim_eval("log", Const(0.0)) is None
    assert prim_eval("log", Const(math.e)) == Const(1.0)


def test_div_is_undefined_at_zero_denominator():
    assert prim_eval("div", vec(1.0, 0.0)) is None
    assert prim_eval("div", vec(1.0, 4.0)) == Const(0.25)


def test_mul():
    assert prim_eval("mul", vec(3.0, 4.0)) == Const(12.0)


def test_dprod2_reverse():
    a, b, a2, b2, c = 1.5, -2.0, 3.0, 0.25, 2.0
    out = prim_reverse_eval("DProd2", Pair(vec(a, b), vec(a2, b2)), Const(c))
    assert flatten_value(out) == [c * a2, c * b2, c * a, c * b]


def test_mul_reverse():
    assert flatten_value(prim_reverse_eval("mul", vec(3.0, 4.0), Const(1.0))) == [4.0, 3.0]


def test_neg_reverse():
    assert prim_reverse_eval("neg", Const(5.0), Const(2.5)) == Const(-2.5)


def test_dotted_less_than():
    assert prim_bool_eval("lt", vec(-1.0, 0.0)) == TRUE
    assert prim_bool_eval("lt", vec(0.0, 0.0)) is None
    assert prim_bool_eval("lt", vec(2.0, 0.0)) == FALSE
    assert prim_bool_eval("gt", vec(2.0, 0.0)) == TRUE
    assert prim_bool_eval("gt", vec(1.0, 1.0)) is None


def test_reverse_ops_have_the_stated_arity():
    for name in REGISTRY.base_op_names:
        op = REGISTRY.op(name)
        rev = REGISTRY.op(op.reverse_name)
        assert rev.arg_type == Prod(op.arg_type, op.res_type)
        assert rev.res_type == op.arg_type
        # and second-order partners exist too
        assert REGISTRY.op(rev.reverse_name).res_type == rev.arg_type


def _op_fn(name):
    op = REGISTRY.op(name)
    n, m = type_size(op.arg_type), type_size(op.res_type)

    def one(x):
        out = op.eval(unflatten_value(op.arg_type, list(x)))
        return None if out is None else np.asarray(flatten_value(out))

    return RealFn(n, m, one), n, m


@pytest.mark.parametrize("name", ["neg", "mul", "div", "exp", "log", "sin", "cos", "DProd1", "DProd3",
                                  "mul_r", "div_r", "exp_r", "log_r", "sin_r", "cos_r", "DProd2_r", "mul_r_r"])
def test_reverse_ops_match_finite_differences(name):
    rng = np.random.default_rng(7)
    f, n, m = _op_fn(name)
    op = REGISTRY.op(name)
    for _ in range(5):
        x = rng.uniform(0.5, 2.0, size=n)
        w = rng.uniform(-1.0, 1.0, size=m)
        jac = fd_jacobian(f, x)
        rev = prim_reverse_eval(name, unflatten_value(op.arg_type, list(x)), unflatten_value(op.res_type, list(w)))
        np.testing.assert_allclose(flatten_value(rev), jac.T @ w, rtol=1e-6, atol=1e-8)


def test_reverse_of_partial_op_inherits_its_domain():
    assert prim_reverse_eval("log", Const(-1.0), Const(1.0)) is None
    assert prim_reverse_eval("div", vec(1.0, 0.0), Const(1.0)) is None
