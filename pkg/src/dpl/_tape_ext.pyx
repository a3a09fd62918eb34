# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tape kernel; same semantics as ``dpl._tape_py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, log, sin, NAN

cnp.import_array()

cdef enum:
    INPUT = 0
    CONST = 1
    ADD = 2
    MUL = 3
    DIV = 4
    NEG = 5
    EXP = 6
    LOG = 7
    SIN = 8
    COS = 9
    GUARD_POS = 10
    GUARD_NZ = 11


def run_tape(int[::1] ops, int[::1] arg0, int[::1] arg1, double[::1] consts,
             int[::1] outputs, double[:, ::1] xs):
    cdef Py_ssize_t n_rows = xs.shape[0]
    cdef Py_ssize_t n = ops.shape[0]
    cdef Py_ssize_t m = outputs.shape[0]
    values_arr = np.empty((n_rows, m), dtype=np.float64)
    ok_arr = np.zeros(n_rows, dtype=np.bool_)
    cdef double[:, ::1] values = values_arr
    cdef cnp.npy_bool[::1] ok = ok_arr
    cdef double[::1] slots = np.zeros(max(n, 1), dtype=np.float64)
    cdef Py_ssize_t r, i, j
    cdef int op
    cdef double v, d
    cdef bint defined
    with nogil:
        for r in range(n_rows):
            defined = True
            for i in range(n):
                op = ops[i]
                if op == INPUT:
                    v = xs[r, arg0[i]]
                elif op == CONST:
                    v = consts[i]
                elif op == ADD:
                    v = slots[arg0[i]] + slots[arg1[i]]
                elif op == MUL:
                    v = slots[arg0[i]] * slots[arg1[i]]
                elif op == DIV:
                    d = slots[arg1[i]]
                    if d == 0.0:
                        defined = False
                        break
                    v = slots[arg0[i]] / d
                elif op == NEG:
                    v = -slots[arg0[i]]
                elif op == EXP:
                    v = exp(slots[arg0[i]])
                elif op == LOG:
                    v = log(slots[arg0[i]])
                elif op == SIN:
                    v = sin(slots[arg0[i]])
                elif op == COS:
                    v = cos(slots[arg0[i]])
                elif op == GUARD_POS:
                    if not slots[arg0[i]] > 0.0:
                        defined = False
                        break
                    v = 0.0
                else:
                    if slots[arg0[i]] == 0.0:
                        defined = False
                        break
                    v = 0.0
                slots[i] = v
            if defined:
                ok[r] = True
                for j in range(m):
                    values[r, j] = slots[outputs[j]]
            else:
                for j in range(m):
                    values[r, j] = NAN
    return values_arr, ok_arr
