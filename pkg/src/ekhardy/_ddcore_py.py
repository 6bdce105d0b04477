"""Pure-Python double-double kernels (fallback for the compiled core).

Operation-for-operation twin of ``_ddcore.pyx``.
"""
import math

import numpy as np

SPLIT = 134217729.0


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def two_prod(a, b):
    p = a * b
    t = SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def dd_mul(ah, al, bh, bl):
    p, e = two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return two_sum(p, e)


def dd_add(ah, al, bh, bl):
    s, e = two_sum(ah, bh)
    e = e + (al + bl)
    return two_sum(s, e)


def dd_div(ah, al, bh, bl):
    q1 = ah / bh
    ph, pl = dd_mul(bh, bl, q1, 0.0)
    sh, sl = dd_add(ah, al, -ph, -pl)
    q2 = sh / bh
    return two_sum(q1, q2)


def recurrence_coeffs(n_terms, x0_hi, x0_lo, kappa, y0_hi, y0_lo, nu, rho):
    """See the compiled twin for the contract."""
    c_hi = np.zeros(n_terms)
    c_lo = np.zeros(n_terms)
    if n_terms == 0:
        return c_hi, c_lo, 0
    x0 = [(float(h), float(l), int(k)) for h, l, k in zip(x0_hi, x0_lo, kappa)]
    y0 = [(float(h), float(l), int(k)) for h, l, k in zip(y0_hi, y0_lo, nu)]
    ch, cl = 1.0, 0.0
    c_hi[0] = ch
    n_valid = n_terms
    rho = float(rho)
    for n in range(n_terms - 1):
        nh, nl = -rho, 0.0
        for yh, yl, v in y0:
            for i in range(1, v + 1):
                fh, fl = dd_add(yh, yl, -float(v * n + i), 0.0)
                nh, nl = dd_mul(nh, nl, fh, fl)
        dh, dl = float(n + 1), 0.0
        for xh, xl, k in x0:
            for i in range(1, k + 1):
                fh, fl = dd_add(xh, xl, -float(k * n + i), 0.0)
                dh, dl = dd_mul(dh, dl, fh, fl)
        if dh == 0.0:
            n_valid = n + 1
            break
        fh, fl = dd_div(nh, nl, dh, dl)
        ch, cl = dd_mul(ch, cl, fh, fl)
        c_hi[n + 1] = ch
        c_lo[n + 1] = cl
    return c_hi, c_lo, n_valid


def power_sum(c_hi, c_lo, n_avail, w_hi, w_lo, q_inf, power, n_min, window,
              tol_abs, tol_rel):
    """See the compiled twin for the contract."""
    w = min(max(int(window), 1), 64)
    ring = [0.0] * w
    sh = sl = 0.0
    ph, pl = 1.0, 0.0
    tail = math.inf
    abs_sum = 0.0
    converged = False
    ch = c_hi.tolist() if hasattr(c_hi, "tolist") else list(c_hi)
    cl = c_lo.tolist() if hasattr(c_lo, "tolist") else list(c_lo)
    n = 0
    while n < n_avail:
        th, tl = dd_mul(ch[n], cl[n], ph, pl)
        sh, sl = dd_add(sh, sl, th, tl)
        at = abs(th)
        abs_sum += at
        ring[n % w] = at
        if n + 1 >= n_min:
            m = max(ring)
            q = q_inf * (1.0 + power / (n + 1.0))
            if q < 1.0:
                tail = m * q / (1.0 - q)
                tol = max(tol_rel * abs(sh), tol_abs)
                if tail <= tol:
                    converged = True
                    n += 1
                    break
        ph, pl = dd_mul(ph, pl, w_hi, w_lo)
        n += 1
    return sh, sl, n, tail, abs_sum, converged


def power_sum_many(c_hi, c_lo, n_avail, w_hi, w_lo, q_inf, power, n_min,
                   window, tol_abs, tol_rel):
    """See the compiled twin for the contract."""
    res = np.empty((len(w_hi), 6))
    for i in range(len(w_hi)):
        res[i] = power_sum(c_hi, c_lo, n_avail, float(w_hi[i]), float(w_lo[i]),
                           float(q_inf[i]), power, n_min, window, tol_abs, tol_rel)
    return res
