"""Golden-section line search run in lockstep over a batch of brackets."""

from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, tol=1e-10, max_iter=200):
    """Minimize ``f`` on each bracket ``[lo[b], hi[b]]`` simultaneously.

    ``f`` maps an array of abscissae of shape ``(B,)`` to values of the same
    shape.  Every bracket takes the same number of steps, enough to shrink
    the widest one below ``tol`` (or ``max_iter``), so the sequence of
    evaluations for a row never depends on the other rows.  Returns the
    best point seen (endpoints included) and its value.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    width = float(np.max(hi - lo)) if lo.size else 0.0
    if width <= tol:
        n_iter = 0
    else:
        n_iter = min(max_iter, int(math.ceil(math.log(tol / width) / math.log(INV_PHI))))

    best_x = lo.copy()
    best_f = f(lo)
    f_hi = f(hi)
    take = f_hi < best_f
    best_x = np.where(take, hi, best_x)
    best_f = np.where(take, f_hi, best_f)

    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc = f(c)
    fd = f(d)
    for x_, f_ in ((c, fc), (d, fd)):
        take = f_ < best_f
        best_x = np.where(take, x_, best_x)
        best_f = np.where(take, f_, best_f)
    for _ in range(n_iter):
        left = fc < fd
        # left: keep [lo, d]; right: keep [c, hi]
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_x = np.where(left, hi - INV_PHI * (hi - lo), lo + INV_PHI * (hi - lo))
        d_new = np.where(left, c, new_x)
        c_new = np.where(left, new_x, d)
        fd_old, fc_old = fd, fc
        f_new = f(new_x)
        fd = np.where(left, fc_old, f_new)
        fc = np.where(left, f_new, fd_old)
        c, d = c_new, d_new
        take = f_new < best_f
        best_x = np.where(take, new_x, best_x)
        best_f = np.where(take, f_new, best_f)
    return best_x, best_f
