# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled belief recurrence and batched symbolic runs."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def belief_forward(const double[::1] mu, const double[:, :, ::1] trans, const double[:, :, ::1] sig):
    cdef Py_ssize_t n = sig.shape[0], length = sig.shape[1], ns = sig.shape[2], nq = mu.shape[0]
    out_arr = np.empty((n, length + 1, nq))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, i, j, p, r
    cdef double w, qp
    with nogil:
        for b in range(n):
            for r in range(nq):
                out[b, 0, r] = mu[r]
            for i in range(length):
                for r in range(nq):
                    out[b, i + 1, r] = 0.0
                for j in range(ns):
                    w = sig[b, i, j]
                    if w == 0.0:
                        continue
                    for p in range(nq):
                        qp = w * out[b, i, p]
                        if qp == 0.0:
                            continue
                        for r in range(nq):
                            out[b, i + 1, r] += qp * trans[j, p, r]
    return out_arr


def belief_backward(const double[:, :, ::1] trans, const double[:, :, ::1] sig,
                    const double[:, :, ::1] q, const double[:, :, ::1] gq):
    cdef Py_ssize_t n = sig.shape[0], length = sig.shape[1], ns = sig.shape[2], nq = trans.shape[1]
    dtrans_arr = np.zeros((ns, nq, nq))
    dsig_arr = np.empty((n, length, ns))
    dmu_arr = np.zeros(nq)
    g_arr = np.empty(nq)
    gprev_arr = np.empty(nq)
    cdef double[:, :, ::1] dtrans = dtrans_arr
    cdef double[:, :, ::1] dsig = dsig_arr
    cdef double[::1] dmu = dmu_arr
    cdef double[::1] g = g_arr
    cdef double[::1] gprev = gprev_arr
    cdef Py_ssize_t b, i, j, p, r
    cdef double w, acc, tg
    with nogil:
        for b in range(n):
            for r in range(nq):
                g[r] = gq[b, length, r]
            for i in range(length, 0, -1):
                for p in range(nq):
                    gprev[p] = gq[b, i - 1, p]
                for j in range(ns):
                    w = sig[b, i - 1, j]
                    acc = 0.0
                    for p in range(nq):
                        tg = 0.0
                        for r in range(nq):
                            tg += trans[j, p, r] * g[r]
                            dtrans[j, p, r] += w * q[b, i - 1, p] * g[r]
                        acc += q[b, i - 1, p] * tg
                        gprev[p] += w * tg
                    dsig[b, i - 1, j] = acc
                for p in range(nq):
                    g[p] = gprev[p]
            for r in range(nq):
                dmu[r] += g[r]
    return dmu_arr, dtrans_arr, dsig_arr


def symbolic_runs(const cnp.int64_t[:, ::1] delta, cnp.int64_t initial, const cnp.int64_t[:, ::1] traces):
    cdef Py_ssize_t n = traces.shape[0], length = traces.shape[1]
    out_arr = np.empty((n, length + 1), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    cdef Py_ssize_t b, i
    cdef cnp.int64_t s
    with nogil:
        for b in range(n):
            s = initial
            out[b, 0] = s
            for i in range(length):
                s = delta[s, traces[b, i]]
                out[b, i + 1] = s
    return out_arr
