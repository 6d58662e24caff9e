# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; see ``_kernels_py`` for the reference twin."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1, fabs, log, log1p, sqrt, INFINITY
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

IMPLEMENTATION = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M50 = 2.0 ** -50
cdef double TWO_M53 = 2.0 ** -53


cdef inline uint64_t _next(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] += GOLDEN
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline int64_t _draw(uint64_t* state, const uint64_t* th, Py_ssize_t nth) nogil:
    cdef uint64_t u = _next(state)
    cdef int64_t i = 0
    while i < nth and th[i] <= u:
        i += 1
    return i


def mix64(z):
    z &= 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def splitmix_block(state, Py_ssize_t count):
    cdef uint64_t st = state
    out = np.empty(count, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef Py_ssize_t k
    with nogil:
        for k in range(count):
            o[k] = _next(&st)
    return out, int(st)


def sample_indices(state, thresholds, Py_ssize_t count):
    cdef uint64_t st = state
    th_arr = np.ascontiguousarray(thresholds, dtype=np.uint64)
    cdef const uint64_t[::1] th = th_arr
    cdef Py_ssize_t nth = th.shape[0]
    out = np.empty(count, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef Py_ssize_t k
    cdef const uint64_t* thp = &th[0] if nth > 0 else NULL
    with nogil:
        for k in range(count):
            o[k] = _draw(&st, thp, nth)
    return out, int(st)


def degree_walk_final(state, thresholds, logdegs, Py_ssize_t n, chunk=None):
    cdef uint64_t st = state
    th_arr = np.ascontiguousarray(thresholds, dtype=np.uint64)
    cdef const uint64_t[::1] th = th_arr
    cdef Py_ssize_t nth = th.shape[0]
    cdef Py_ssize_t s = len(logdegs)
    counts = np.zeros(s, dtype=np.int64)
    cdef int64_t[::1] c = counts
    cdef Py_ssize_t k
    cdef const uint64_t* thp = &th[0] if nth > 0 else NULL
    with nogil:
        for k in range(n):
            c[_draw(&st, thp, nth)] += 1
    return counts, int(st)


def lil_walk_extrema(state, thresholds, logdegs, Py_ssize_t n_max, double log_delta,
                     double sigma, Py_ssize_t n_min=16, chunk=None):
    cdef uint64_t st = state
    th_arr = np.ascontiguousarray(thresholds, dtype=np.uint64)
    ld_arr = np.ascontiguousarray(logdegs, dtype=np.float64)
    cdef const uint64_t[::1] th = th_arr
    cdef const double[::1] ld = ld_arr
    cdef Py_ssize_t nth = th.shape[0]
    cdef Py_ssize_t s = ld.shape[0]
    cnt_arr = np.zeros(s, dtype=np.int64)
    cdef int64_t[::1] cnt = cnt_arr
    cdef double best_hi = -INFINITY, best_lo = INFINITY, w, x, nn
    cdef Py_ssize_t arg_hi = 0, arg_lo = 0, n, i
    cdef const uint64_t* thp = &th[0] if nth > 0 else NULL
    with nogil:
        for n in range(1, n_max + 1):
            cnt[_draw(&st, thp, nth)] += 1
            if n < n_min:
                continue
            w = 0.0
            for i in range(s):
                w += cnt[i] * ld[i]
            nn = <double> n
            x = (w - nn * log_delta) / (sigma * sqrt(2.0 * nn * log(log(nn))))
            if x > best_hi:
                best_hi = x
                arg_hi = n
            if x < best_lo:
                best_lo = x
                arg_lo = n
    return best_hi, best_lo, arg_hi, arg_lo, int(st)


cdef inline void _log_step(double* lam_x, double* lam_y, int* sgn, double* eta, double* eta_y,
                           int d, const double* ratios, double log_lead, int lead_sign) nogil:
    cdef double lx = exp(lam_x[0])
    cdef double u = -lx * (-expm1(lam_y[0] - lam_x[0]))
    cdef double eps = 0.0, eps_abs = 0.0, t, r, corr, new_lam, new_lam_y
    cdef int i, k
    for i in range(d):
        r = ratios[i]
        if r != 0.0:
            k = d - i
            t = r * exp(k * u)
            if sgn[0] < 0 and (k & 1):
                t = -t
            eps += t
            eps_abs += fabs(t)
    corr = (log_lead + log1p(eps)) / (d * lx)
    new_lam = log(<double> d) + lam_x[0] + log1p(corr)
    new_lam_y = log(<double> d) + lam_y[0]
    if sgn[0] < 0 and (d & 1):
        sgn[0] = -lead_sign
    else:
        sgn[0] = lead_sign
    eta[0] = (eta[0] * (1.0 + 2.0 * fabs(corr) + 4.0 * eps_abs)
              + 4.0 * eps_abs * eta_y[0]
              + TWO_M50 * (fabs(corr) + eps_abs)
              + 8.0 * TWO_M53 * (fabs(new_lam) + 1.0))
    if lam_y[0] == -INFINITY:
        eta_y[0] = 0.0
    else:
        eta_y[0] = eta_y[0] + 4.0 * TWO_M53 * (fabs(new_lam_y) + 1.0)
    lam_x[0] = new_lam
    lam_y[0] = new_lam_y


def log_step(lam_x, lam_y, sgn, eta, eta_y, int d, ratios, double log_lead, int lead_sign):
    cdef double lx = lam_x, ly = lam_y, e = eta, ey = eta_y
    cdef int sg = sgn
    r_arr = np.ascontiguousarray(ratios, dtype=np.float64)
    cdef const double[::1] r = r_arr
    _log_step(&lx, &ly, &sg, &e, &ey, d, &r[0], log_lead, lead_sign)
    return lx, ly, sg, e, ey


def log_chain(state, seq, degs, ratio_table, log_leads, lead_signs, record=False):
    cdef double lx = state[0], ly = state[1], e = state[3], ey = state[4]
    cdef int sg = state[2]
    seq_arr = np.ascontiguousarray(seq, dtype=np.int64)
    deg_arr = np.ascontiguousarray(degs, dtype=np.int32)
    rt_arr = np.ascontiguousarray(ratio_table, dtype=np.float64)
    ll_arr = np.ascontiguousarray(log_leads, dtype=np.float64)
    ls_arr = np.ascontiguousarray(lead_signs, dtype=np.int32)
    cdef const int64_t[::1] sq = seq_arr
    cdef const int[::1] dg = deg_arr
    cdef const double[:, ::1] rt = rt_arr
    cdef const double[::1] ll = ll_arr
    cdef const int[::1] ls = ls_arr
    cdef Py_ssize_t m = sq.shape[0], k
    cdef int64_t j
    cdef bint rec = record
    rec_arr = np.empty((m if rec else 0, 5), dtype=np.float64)
    cdef double[:, ::1] out = rec_arr
    with nogil:
        for k in range(m):
            j = sq[k]
            _log_step(&lx, &ly, &sg, &e, &ey, dg[j], &rt[j, 0], ll[j], ls[j])
            if rec:
                out[k, 0] = lx
                out[k, 1] = ly
                out[k, 2] = sg
                out[k, 3] = e
                out[k, 4] = ey
    if rec:
        return [(r[0], r[1], int(r[2]), r[3], r[4]) for r in rec_arr.tolist()]
    return (lx, ly, sg, e, ey)
