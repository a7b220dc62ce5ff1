# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled segment reduction; contract documented in _fallback.py."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def reduce_skyline(cnp.float64_t[::1] xs, cnp.float64_t[::1] hs,
                   cnp.int64_t[::1] starts, cnp.float64_t[::1] x0,
                   cnp.float64_t[::1] h0, bint want_beyond):
    cdef Py_ssize_t n = starts.shape[0] - 1
    tan_max_a = np.zeros(n)
    arg_a = np.full(n, -1, dtype=np.int64)
    n_before_a = np.zeros(n, dtype=np.int64)
    tan_beyond_a = np.zeros(n)
    cdef cnp.float64_t[::1] tan_max = tan_max_a
    cdef cnp.int64_t[::1] arg = arg_a
    cdef cnp.int64_t[::1] n_before = n_before_a
    cdef cnp.float64_t[::1] tan_beyond = tan_beyond_a

    cdef Py_ssize_t r, j, lo, hi, bj, k
    cdef double ox, oh, dx, dh, t, best, bestx, besth, b2
    for r in range(n):
        lo = starts[r]
        hi = starts[r + 1]
        ox = x0[r]
        oh = h0[r]
        best = 0.0
        bestx = 0.0
        bj = -1
        for j in range(lo, hi):
            dx = xs[j] - ox
            dh = hs[j] - oh
            if dx > 0.0 and dh > 0.0:
                t = dh / dx
                if t > best or (t == best and bj >= 0 and xs[j] < bestx):
                    best = t
                    bestx = xs[j]
                    bj = j
        if bj < 0:
            continue
        tan_max[r] = best
        arg[r] = bj
        besth = hs[bj]
        k = 0
        b2 = 0.0
        for j in range(lo, hi):
            if xs[j] < bestx:
                k += 1
            if want_beyond and xs[j] > bestx and hs[j] > besth:
                t = (hs[j] - besth) / (xs[j] - bestx)
                if t > b2:
                    b2 = t
        n_before[r] = k
        if want_beyond:
            tan_beyond[r] = b2
    return tan_max_a, arg_a, n_before_a, tan_beyond_a
