# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled best-response dynamics kernel.

Same operation order as ``_pykernel`` so results are bit-identical.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()

cdef enum:
    JACOBI = 0
    GAUSS_SEIDEL = 1
    ASYNC = 2

BACKEND = "cython"


cdef inline Py_ssize_t _best_row(const double[:, ::1] h, const double[:, :, ::1] g,
                                 double sigma2, double[:, ::1] p, Py_ssize_t k,
                                 Py_ssize_t n, Py_ssize_t d, double gstar, double p_max,
                                 double tie_rtol, double* power, bint* clamped,
                                 bint* tie) noexcept nogil:
    cdef Py_ssize_t l, j, best = 0
    cdef double s, r, rbest = INFINITY, second = INFINITY
    for l in range(d):
        s = sigma2
        for j in range(n):
            if j != k:
                s += g[j, k, l] * p[j, l]
        r = gstar * s / h[k, l]
        if r < rbest:
            second = rbest
            rbest = r
            best = l
        elif r < second:
            second = r
    tie[0] = second - rbest <= tie_rtol * rbest
    clamped[0] = rbest > p_max
    power[0] = p_max if clamped[0] else rbest
    return best


cdef bint _is_fixed(const double[:, ::1] h, const double[:, :, ::1] g, double sigma2,
                    double[:, ::1] p, Py_ssize_t n, Py_ssize_t d, double gstar,
                    double p_max, double tie_rtol, double tol) noexcept nogil:
    cdef Py_ssize_t k, l, j, c
    cdef double pw, target, s, pkc, gamma
    cdef bint cl, ti
    for k in range(n):
        c = _best_row(h, g, sigma2, p, k, n, d, gstar, p_max, tie_rtol, &pw, &cl, &ti)
        for l in range(d):
            target = pw if l == c else 0.0
            if fabs(p[k, l] - target) >= tol:
                return False
        if not cl:
            s = sigma2
            for j in range(n):
                if j != k:
                    s += g[j, k, c] * p[j, c]
            pkc = p[k, c]
            if pkc <= 0.0:
                return False
            gamma = h[k, c] * pkc / s
            if fabs(gamma - gstar) > gstar * (2.0 * tol / pkc + 1e-12):
                return False
    return True


def run_dynamics(h, g, double sigma2, p0, double gstar, double p_max, int scheme,
                 order, user_seq, Py_ssize_t max_iters, double tol,
                 Py_ssize_t stable_rounds, double tie_rtol):
    """Iterate the best-response map until a verified fixed point.

    Returns ``(history, converged, iterations, clamped_ever, tie_ever)``.
    """
    cdef const double[:, ::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef const double[:, :, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t n = hv.shape[0], d = hv.shape[1]
    cdef cnp.int64_t[::1] ov = np.ascontiguousarray(order, dtype=np.int64)
    cdef cnp.int64_t[::1] uv = np.ascontiguousarray(
        user_seq if user_seq is not None else np.zeros(0), dtype=np.int64)

    cdef Py_ssize_t cap = 64
    hist_arr = np.empty((cap, n, d), dtype=np.float64)
    cdef double[:, :, ::1] hist = hist_arr
    hist_arr[0] = np.asarray(p0, dtype=np.float64)
    cdef double[:, ::1] cur = np.array(hist_arr[0])
    cdef double[:, ::1] new = np.zeros((n, d), dtype=np.float64)

    cdef Py_ssize_t count = 1, iters = 0, stable = 0, pos = 0, k, l, c
    cdef bint converged = False, clamped_ever = False, tie_ever = False, cl, ti
    cdef double pw, diff, dv

    while iters < max_iters:
        if scheme == JACOBI:
            for k in range(n):
                c = _best_row(hv, gv, sigma2, cur, k, n, d, gstar, p_max, tie_rtol,
                              &pw, &cl, &ti)
                for l in range(d):
                    new[k, l] = 0.0
                new[k, c] = pw
                clamped_ever = clamped_ever or cl
                tie_ever = tie_ever or ti
            iters += n
        else:
            if scheme == GAUSS_SEIDEL:
                k = ov[pos]
                pos = (pos + 1) % n
            else:
                k = uv[iters]
            c = _best_row(hv, gv, sigma2, cur, k, n, d, gstar, p_max, tie_rtol,
                          &pw, &cl, &ti)
            clamped_ever = clamped_ever or cl
            tie_ever = tie_ever or ti
            new[:, :] = cur
            for l in range(d):
                new[k, l] = 0.0
            new[k, c] = pw
            iters += 1
        diff = 0.0
        for k in range(n):
            for l in range(d):
                dv = fabs(new[k, l] - cur[k, l])
                if dv > diff:
                    diff = dv
        cur[:, :] = new
        if count == cap:
            cap *= 2
            grown = np.empty((cap, n, d), dtype=np.float64)
            grown[:count] = hist_arr[:count]
            hist_arr = grown
            hist = hist_arr
        hist[count, :, :] = cur
        count += 1
        stable = stable + 1 if diff < tol else 0
        if stable >= stable_rounds and _is_fixed(hv, gv, sigma2, cur, n, d, gstar, p_max,
                                                 tie_rtol, tol):
            converged = True
            break
    return hist_arr[:count].copy(), bool(converged), int(iters), bool(clamped_ever), bool(tie_ever)


def jacobi_map(h, g, double sigma2, p, double gstar, double p_max, double tie_rtol):
    """One simultaneous best-response step; returns ``(profile, tie_any, clamped_any)``."""
    cdef const double[:, ::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef const double[:, :, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef double[:, ::1] pv = np.array(p, dtype=np.float64, order="C")
    cdef Py_ssize_t n = hv.shape[0], d = hv.shape[1], k, c
    out_arr = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double pw
    cdef bint cl, ti, tie_any = False, clamped_any = False
    for k in range(n):
        c = _best_row(hv, gv, sigma2, pv, k, n, d, gstar, p_max, tie_rtol, &pw, &cl, &ti)
        out[k, c] = pw
        tie_any = tie_any or ti
        clamped_any = clamped_any or cl
    return out_arr, bool(tie_any), bool(clamped_any)
