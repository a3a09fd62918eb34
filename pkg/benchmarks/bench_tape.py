"""Compare the compiled tape kernel with the pure-Python fallback.

A trace is obtained by symbolically evaluating a small program, lowered to a
tape, and evaluated on a batch of random points by both kernels. The outputs
are checked to agree bit for bit before timings are reported.

    python3 benchmarks/bench_tape.py [--batch N] [--repeat R]
"""

import argparse
import time

import numpy as np

from dpl import _tape_py, tape
from dpl.frontend import parse_term
from dpl.machine import Machine
from dpl.syntax import Const, Pair, real_power
from dpl.typecheck import infer_term

PROGRAM = """
let a: real = fst x * snd x in
let b: real = sin(a) + cos(fst x) in
let c: real = div(<exp(b * 0.5), 1 + a * a>) in
let d: real = log(1 + c * c) * b - a in
<d * c + sin(d), a * b - cos(c * d)>
"""


def build_tape():
    t = real_power(2)
    _, m = infer_term({}, {"x": t}, parse_term(PROGRAM))
    trace = Machine().sym_eval({}, {"x": Pair(Const(0.3), Const(0.7))}, m)
    return tape.lower(trace, [("x", t)])


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    tp = build_tape()
    xs = np.random.default_rng(0).uniform(-2.0, 2.0, size=(args.batch, tp.n_inputs))
    print(f"tape: {len(tp)} instructions, batch {args.batch}, best of {args.repeat}")
    if tape.BACKEND != "compiled":
        print("compiled kernel not built; only the pure-Python kernel is available")
    t_py, (out_py, ok_py) = best_of(lambda: tp.batch(xs, kernel=_tape_py), args.repeat)
    print(f"python   : {t_py * 1e3:9.2f} ms")
    if tape.BACKEND == "compiled":
        t_c, (out_c, ok_c) = best_of(lambda: tp.batch(xs), args.repeat)
        assert out_c.tobytes() == out_py.tobytes() and np.array_equal(ok_c, ok_py)
        print(f"compiled : {t_c * 1e3:9.2f} ms   speed-up x{t_py / t_c:.1f} (outputs bit-identical)")


if __name__ == "__main__":
    main()
