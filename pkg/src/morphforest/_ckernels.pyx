# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, INFINITY

cnp.import_array()


def segment_softmax(x, ptr):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const cnp.int64_t[::1] pv = np.ascontiguousarray(ptr, dtype=np.int64)
    cdef Py_ssize_t nseg = pv.shape[0] - 1
    if nseg <= 0:
        return np.zeros(0), np.zeros(0)
    lse_arr = np.empty(nseg)
    probs_arr = np.empty(xv.shape[0])
    cdef double[::1] lse = lse_arr
    cdef double[::1] probs = probs_arr
    cdef Py_ssize_t s, j, a, b
    cdef double m, acc
    for s in range(nseg):
        a = pv[s]
        b = pv[s + 1]
        m = xv[a]
        for j in range(a + 1, b):
            if xv[j] > m:
                m = xv[j]
        acc = 0.0
        for j in range(a, b):
            probs[j] = exp(xv[j] - m)
            acc += probs[j]
        for j in range(a, b):
            probs[j] /= acc
        lse[s] = m + log(acc)
    return lse_arr, probs_arr


cdef inline double _value(const double[::1] costs, const cnp.int64_t[::1] aff_ptr,
                          const cnp.int64_t[::1] aff_idx, const double[::1] penalty,
                          Py_ssize_t j) nogil:
    cdef double v = costs[j]
    cdef Py_ssize_t t
    for t in range(aff_ptr[j], aff_ptr[j + 1]):
        v += penalty[aff_idx[t]]
    return v


def choose(costs, word_ptr, aff_ptr, aff_idx, penalty):
    cdef const double[::1] c = np.ascontiguousarray(costs, dtype=np.float64)
    cdef const cnp.int64_t[::1] wp = np.ascontiguousarray(word_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ap = np.ascontiguousarray(aff_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ai = np.ascontiguousarray(aff_idx, dtype=np.int64)
    cdef const double[::1] pen = np.ascontiguousarray(penalty, dtype=np.float64)
    cdef Py_ssize_t n = wp.shape[0] - 1
    if n <= 0:
        return np.zeros(0, dtype=np.int64), 0.0
    choice_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] choice = choice_arr
    cdef Py_ssize_t i, j, best
    cdef double v, bv, total = 0.0
    with nogil:
        for i in range(n):
            best = wp[i]
            bv = _value(c, ap, ai, pen, best)
            for j in range(wp[i] + 1, wp[i + 1]):
                v = _value(c, ap, ai, pen, j)
                if v < bv:
                    bv = v
                    best = j
            choice[i] = best - wp[i]
            total += bv
    return choice_arr, total


def closure_losses(costs, word_ptr, aff_ptr, aff_idx, penalty, choice):
    cdef const double[::1] c = np.ascontiguousarray(costs, dtype=np.float64)
    cdef const cnp.int64_t[::1] wp = np.ascontiguousarray(word_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ap = np.ascontiguousarray(aff_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ai = np.ascontiguousarray(aff_idx, dtype=np.int64)
    cdef const double[::1] pen = np.ascontiguousarray(penalty, dtype=np.float64)
    cdef const cnp.int64_t[::1] ch = np.ascontiguousarray(choice, dtype=np.int64)
    cdef Py_ssize_t K = pen.shape[0]
    loss_arr = np.zeros(K)
    cdef double[::1] loss = loss_arr
    cdef Py_ssize_t n = wp.shape[0] - 1
    cdef Py_ssize_t i, j, t, u, sel, k
    cdef double cur, alt, v
    cdef bint has
    with nogil:
        for i in range(n):
            sel = wp[i] + ch[i]
            if ap[sel] == ap[sel + 1]:
                continue
            cur = _value(c, ap, ai, pen, sel)
            for t in range(ap[sel], ap[sel + 1]):
                k = ai[t]
                alt = INFINITY
                for j in range(wp[i], wp[i + 1]):
                    has = False
                    for u in range(ap[j], ap[j + 1]):
                        if ai[u] == k:
                            has = True
                            break
                    if has:
                        continue
                    v = _value(c, ap, ai, pen, j)
                    if v < alt:
                        alt = v
                loss[k] += alt - cur
    return loss_arr
