"""Pure-Python tape kernel (fallback when the compiled extension is absent)."""

from __future__ import annotations

import math

import numpy as np

from dpl.scalar import f_cos, f_exp, f_log, f_sin

INPUT, CONST, ADD, MUL, DIV, NEG, EXP, LOG, SIN, COS, GUARD_POS, GUARD_NZ = range(12)


def run_tape(ops, arg0, arg1, consts, outputs, xs):
    ops_l = ops.tolist()
    a_l = arg0.tolist()
    b_l = arg1.tolist()
    c_l = consts.tolist()
    out_l = outputs.tolist()
    n_rows = xs.shape[0]
    values = np.zeros((n_rows, len(out_l)), dtype=np.float64)
    ok = np.zeros(n_rows, dtype=bool)
    program = list(zip(ops_l, a_l, b_l, c_l))
    for r in range(n_rows):
        row = xs[r].tolist()
        slots = [0.0] * len(program)
        defined = True
        for i, (op, a, b, c) in enumerate(program):
            if op == INPUT:
                v = row[a]
            elif op == CONST:
                v = c
            elif op == ADD:
                v = slots[a] + slots[b]
            elif op == MUL:
                v = slots[a] * slots[b]
            elif op == DIV:
                d = slots[b]
                if d == 0.0:
                    defined = False
                    break
                v = slots[a] / d
            elif op == NEG:
                v = -slots[a]
            elif op == EXP:
                v = f_exp(slots[a])
            elif op == LOG:
                v = f_log(slots[a])
            elif op == SIN:
                v = f_sin(slots[a])
            elif op == COS:
                v = f_cos(slots[a])
            elif op == GUARD_POS:
                if not slots[a] > 0.0:
                    defined = False
                    break
                v = 0.0
            else:  # GUARD_NZ
                if slots[a] == 0.0:
                    defined = False
                    break
                v = 0.0
            slots[i] = v
        if defined:
            ok[r] = True
            for j, s in enumerate(out_l):
                values[r, j] = slots[s]
        else:
            values[r, :] = math.nan
    return values, ok
