# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled double-double kernels for residue-series summation.

Mirrors ``_ddcore_py`` operation for operation; both use error-free
transformations, so the two backends agree bit for bit.
"""
import numpy as np
from libc.math cimport fabs, INFINITY

cdef double SPLIT = 134217729.0


cdef inline void two_sum(double a, double b, double* s, double* e) noexcept nogil:
    cdef double ss = a + b
    cdef double bb = ss - a
    s[0] = ss
    e[0] = (a - (ss - bb)) + (b - bb)


cdef inline void two_prod(double a, double b, double* p, double* e) noexcept nogil:
    cdef double pp = a * b
    cdef double t = SPLIT * a
    cdef double ah = t - (t - a)
    cdef double al = a - ah
    t = SPLIT * b
    cdef double bh = t - (t - b)
    cdef double bl = b - bh
    p[0] = pp
    e[0] = ((ah * bh - pp) + ah * bl + al * bh) + al * bl


cdef inline void dd_mul(double ah, double al, double bh, double bl,
                        double* rh, double* rl) noexcept nogil:
    cdef double p, e
    two_prod(ah, bh, &p, &e)
    e = e + (ah * bl + al * bh)
    two_sum(p, e, rh, rl)


cdef inline void dd_add(double ah, double al, double bh, double bl,
                        double* rh, double* rl) noexcept nogil:
    cdef double s, e
    two_sum(ah, bh, &s, &e)
    e = e + (al + bl)
    two_sum(s, e, rh, rl)


cdef inline void dd_div(double ah, double al, double bh, double bl,
                        double* rh, double* rl) noexcept nogil:
    cdef double q1 = ah / bh
    cdef double ph, pl, sh, sl
    dd_mul(bh, bl, q1, 0.0, &ph, &pl)
    dd_add(ah, al, -ph, -pl, &sh, &sl)
    cdef double q2 = sh / bh
    two_sum(q1, q2, rh, rl)


def recurrence_coeffs(Py_ssize_t n_terms,
                      double[::1] x0_hi, double[::1] x0_lo, long[::1] kappa,
                      double[::1] y0_hi, double[::1] y0_lo, long[::1] nu,
                      double rho):
    """Normalised residue coefficients from the exact integer-slope ratio.

    Returns ``(c_hi, c_lo, n_valid)`` with ``c_0 = 1``; ``n_valid`` is less
    than ``n_terms`` only if a denominator factor vanished.
    """
    c_hi_arr = np.zeros(n_terms, dtype=np.float64)
    c_lo_arr = np.zeros(n_terms, dtype=np.float64)
    cdef double[::1] c_hi = c_hi_arr
    cdef double[::1] c_lo = c_lo_arr
    cdef Py_ssize_t nx = x0_hi.shape[0]
    cdef Py_ssize_t ny = y0_hi.shape[0]
    cdef Py_ssize_t n, k, i
    cdef Py_ssize_t n_valid = n_terms
    cdef double nh, nl, dh, dl, fh, fl, d, ch, cl
    if n_terms == 0:
        return c_hi_arr, c_lo_arr, 0
    with nogil:
        ch = 1.0
        cl = 0.0
        c_hi[0] = ch
        c_lo[0] = cl
        for n in range(n_terms - 1):
            nh = -rho
            nl = 0.0
            for k in range(ny):
                for i in range(1, nu[k] + 1):
                    d = <double>(nu[k] * n + i)
                    dd_add(y0_hi[k], y0_lo[k], -d, 0.0, &fh, &fl)
                    dd_mul(nh, nl, fh, fl, &nh, &nl)
            dh = <double>(n + 1)
            dl = 0.0
            for k in range(nx):
                for i in range(1, kappa[k] + 1):
                    d = <double>(kappa[k] * n + i)
                    dd_add(x0_hi[k], x0_lo[k], -d, 0.0, &fh, &fl)
                    dd_mul(dh, dl, fh, fl, &dh, &dl)
            if dh == 0.0:
                n_valid = n + 1
                break
            dd_div(nh, nl, dh, dl, &fh, &fl)
            dd_mul(ch, cl, fh, fl, &ch, &cl)
            c_hi[n + 1] = ch
            c_lo[n + 1] = cl
    return c_hi_arr, c_lo_arr, n_valid


cdef void _power_sum(double[::1] c_hi, double[::1] c_lo, Py_ssize_t n_avail,
                     double w_hi, double w_lo, double q_inf, double power,
                     Py_ssize_t n_min, Py_ssize_t window, double tol_abs,
                     double tol_rel, double* out) noexcept nogil:
    cdef double sh = 0.0, sl = 0.0, ph = 1.0, pl = 0.0
    cdef double th, tl, at, m, q, tail = INFINITY, tol, abs_sum = 0.0
    cdef double ring[64]
    cdef Py_ssize_t n, k, w = window
    cdef int converged = 0
    if w > 64:
        w = 64
    if w < 1:
        w = 1
    for k in range(w):
        ring[k] = 0.0
    n = 0
    while n < n_avail:
        dd_mul(c_hi[n], c_lo[n], ph, pl, &th, &tl)
        dd_add(sh, sl, th, tl, &sh, &sl)
        at = fabs(th)
        abs_sum += at
        ring[n % w] = at
        if n + 1 >= n_min:
            m = 0.0
            for k in range(w):
                if ring[k] > m:
                    m = ring[k]
            q = q_inf * (1.0 + power / (n + 1.0))
            if q < 1.0:
                tail = m * q / (1.0 - q)
                tol = tol_rel * fabs(sh)
                if tol < tol_abs:
                    tol = tol_abs
                if tail <= tol:
                    converged = 1
                    n += 1
                    break
        dd_mul(ph, pl, w_hi, w_lo, &ph, &pl)
        n += 1
    out[0] = sh
    out[1] = sl
    out[2] = <double>n
    out[3] = tail
    out[4] = abs_sum
    out[5] = <double>converged


def power_sum(double[::1] c_hi, double[::1] c_lo, Py_ssize_t n_avail,
              double w_hi, double w_lo, double q_inf, double power,
              Py_ssize_t n_min, Py_ssize_t window, double tol_abs, double tol_rel):
    """Sum ``sum_n c_n w^n`` in double-double with a geometric tail bound.

    Returns ``(s_hi, s_lo, n_used, tail_bound, abs_sum, converged)``.
    """
    cdef double out[6]
    with nogil:
        _power_sum(c_hi, c_lo, n_avail, w_hi, w_lo, q_inf, power, n_min,
                   window, tol_abs, tol_rel, out)
    return out[0], out[1], int(out[2]), out[3], out[4], bool(out[5])


def power_sum_many(double[::1] c_hi, double[::1] c_lo, Py_ssize_t n_avail,
                   double[::1] w_hi, double[::1] w_lo, double[::1] q_inf,
                   double power, Py_ssize_t n_min, Py_ssize_t window,
                   double tol_abs, double tol_rel):
    """Vectorised :func:`power_sum`; returns a ``(len(w), 6)`` array."""
    cdef Py_ssize_t nw = w_hi.shape[0], i
    res = np.empty((nw, 6), dtype=np.float64)
    cdef double[:, ::1] r = res
    cdef double out[6]
    with nogil:
        for i in range(nw):
            _power_sum(c_hi, c_lo, n_avail, w_hi[i], w_lo[i], q_inf[i], power,
                       n_min, window, tol_abs, tol_rel, out)
            r[i, 0] = out[0]
            r[i, 1] = out[1]
            r[i, 2] = out[2]
            r[i, 3] = out[3]
            r[i, 4] = out[4]
            r[i, 5] = out[5]
    return res
