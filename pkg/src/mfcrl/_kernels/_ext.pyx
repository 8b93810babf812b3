# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled moment kernels.

Same contracts as ``_py.batched_moments`` and ``_py.lions_weights``. Each
particle's power table lives in a small scratch buffer, so no
(B, M, L, d, d) temporaries are materialized.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void _fill_powers(const double[:, :, ::1] x, Py_ssize_t b, Py_ssize_t j,
                              double[:, ::1] pw, Py_ssize_t order) noexcept nogil:
    cdef Py_ssize_t i, e
    for i in range(x.shape[2]):
        pw[i, 0] = 1.0
        for e in range(1, order + 1):
            pw[i, e] = pw[i, e - 1] * x[b, j, i]


def batched_moments(x, exps):
    cdef const double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] ev = np.ascontiguousarray(exps, dtype=np.int64)
    cdef Py_ssize_t B = xv.shape[0], M = xv.shape[1], d = xv.shape[2]
    cdef Py_ssize_t L = ev.shape[0]
    cdef Py_ssize_t order = max(int(np.max(exps)), 1)
    out = np.zeros((B, L), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double[:, ::1] pw = np.empty((d, order + 1), dtype=np.float64)
    cdef Py_ssize_t b, j, l, i
    cdef double mono
    with nogil:
        for b in range(B):
            for j in range(M):
                _fill_powers(xv, b, j, pw, order)
                for l in range(L):
                    mono = 1.0
                    for i in range(d):
                        mono = mono * pw[i, ev[l, i]]
                    ov[b, l] += mono
            for l in range(L):
                ov[b, l] = ov[b, l] / M
    return out


def lions_weights(x, exps, gbar):
    cdef const double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] ev = np.ascontiguousarray(exps, dtype=np.int64)
    cdef const double[:, ::1] gv = np.ascontiguousarray(gbar, dtype=np.float64)
    cdef Py_ssize_t B = xv.shape[0], M = xv.shape[1], d = xv.shape[2]
    cdef Py_ssize_t L = ev.shape[0]
    cdef Py_ssize_t order = max(int(np.max(exps)), 1)
    w1 = np.zeros((B, M, d), dtype=np.float64)
    w2 = np.zeros((B, M, d, d), dtype=np.float64)
    cdef double[:, :, ::1] w1v = w1
    cdef double[:, :, :, ::1] w2v = w2
    cdef double[:, ::1] pw = np.empty((d, order + 1), dtype=np.float64)
    cdef Py_ssize_t b, j, l, i, k, q
    cdef long ei, ek
    cdef double g, v
    with nogil:
        for b in range(B):
            for j in range(M):
                _fill_powers(xv, b, j, pw, order)
                for l in range(L):
                    g = gv[b, l]
                    for i in range(d):
                        ei = ev[l, i]
                        if ei == 0:
                            continue
                        # first partial in coordinate i
                        v = ei * pw[i, ei - 1]
                        for q in range(d):
                            if q != i:
                                v = v * pw[q, ev[l, q]]
                        w1v[b, j, i] += g * v
                        # diagonal second partial
                        if ei >= 2:
                            v = ei * (ei - 1) * pw[i, ei - 2]
                            for q in range(d):
                                if q != i:
                                    v = v * pw[q, ev[l, q]]
                            w2v[b, j, i, i] += g * v
                        # off-diagonal second partials
                        for k in range(d):
                            ek = ev[l, k]
                            if k == i or ek == 0:
                                continue
                            v = ei * ek * pw[i, ei - 1] * pw[k, ek - 1]
                            for q in range(d):
                                if q != i and q != k:
                                    v = v * pw[q, ev[l, q]]
                            w2v[b, j, i, k] += g * v
    return w1, w2
