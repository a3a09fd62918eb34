import numpy as np
import pytest

from dpl import _tape_py, tape
from dpl.frontend import parse_term
from dpl.machine import Machine
from dpl.errors import Stuck
from dpl.syntax import REAL, Const, Pair, flatten_value, real_power, unflatten_value
from dpl.tape import lower
from dpl.typecheck import infer_term


def typed(src, gamma):
    return infer_term({}, gamma, parse_term(src))[1]


def test_backend_is_reported():
    assert tape.BACKEND in ("compiled", "python")


def test_square():
    t = lower(typed("x * x", {"x": REAL}), [("x", REAL)])
    assert t([3.0]) == [9.0]


def test_guards_make_rows_undefined():
    t = lower(typed("let y: real = log(x) in 1", {"x": REAL}), [("x", REAL)])
    values, ok = t.batch(np.array([[1.0], [-1.0], [0.0], [2.0]]))
    assert ok.tolist() == [True, False, False, True]
    assert np.isnan(values[1]).all()


def test_environment_values_become_constants():
    c = typed("<DProd2(<x, a>), fst a>", {"x": real_power(2), "a": real_power(2)})
    t = lower(c, [("x", real_power(2))], {"a": Pair(Const(2.0), Const(3.0))})
    assert t([1.0, 1.0]) == [5.0, 2.0]


@pytest.mark.parametrize("src", [
    "sin(x) * cos(x) + exp(neg(x))",
    "div(<x, 1 + x * x>) - log(2 + x)",
    "let y: real^2 = <x, x * x> in DProd2(<y, y>)",
])
def test_kernels_agree_with_the_machine_bit_for_bit(src):
    c = typed(src, {"x": REAL})
    t = lower(c, [("x", REAL)])
    xs = np.linspace(-1.7, 2.3, 41).reshape(-1, 1)
    fast, ok_fast = t.batch(xs)
    slow, ok_slow = t.batch(xs, kernel=_tape_py)
    assert ok_fast.all() and ok_slow.all()
    for row, a, b in zip(xs, fast, slow):
        v = flatten_value(Machine().eval({}, {"x": Const(float(row[0]))}, c))
        assert a.tolist() == b.tolist() == v


def test_kernels_agree_on_undefinedness():
    c = typed("div(<1, x>) + log(x)", {"x": REAL})
    t = lower(c, [("x", REAL)])
    xs = np.array([[-1.0], [0.0], [0.5]])
    for kernel in (None, _tape_py):
        _, ok = t.batch(xs, kernel=kernel)
        assert ok.tolist() == [False, False, True]
    with pytest.raises(Stuck):
        Machine().eval({}, {"x": Const(0.0)}, c)


def test_vector_input():
    t3 = real_power(3)
    c = typed("DProd3(<x, x>)", {"x": t3})
    tp = lower(c, [("x", t3)])
    assert tp.n_inputs == 3
    assert tp([1.0, 2.0, 3.0]) == [14.0]
    v = unflatten_value(t3, [1.0, 2.0, 3.0])
    assert flatten_value(Machine().eval({}, {"x": v}, c)) == [14.0]
