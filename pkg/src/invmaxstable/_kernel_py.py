"""Pure-numpy conditional-inversion kernel.

Same bracketing and bisection schedule as the compiled kernel, vectorised
over draws. Works for every family, including density-defined ones.
"""
from __future__ import annotations

import math

import numpy as np

LOG4 = math.log(4.0)


def solve(fam, x, log_u, tol=1e-10, y_min=1e-12, max_expand=200):
    """Invert Pr(Y > y | X = x) = u by bisection in log y.

    Returns:
        tuple: ``(y, failures)``; entries whose bracket could not be found
        are NaN.
    """
    x = np.asarray(x, dtype=float)
    target = np.asarray(log_u, dtype=float)
    n = x.size
    out = np.full(n, np.nan)

    def f(t, idx):
        with np.errstate(all="ignore"):
            return fam.log_cond_survivor(np.exp(t), x[idx]) - target[idx]

    lo = np.full(n, math.log(y_min))
    active = np.arange(n)
    below = f(lo, active) <= 0
    out[below] = y_min
    active = active[~below]

    hi = np.log(x + 2 - 2 * target)
    failed = np.zeros(n, dtype=bool)
    todo = active
    for _ in range(max_expand + 1):
        if todo.size == 0:
            break
        up = f(hi[todo], todo) > 0
        todo = todo[up]
        lo[todo] = hi[todo]
        hi[todo] += LOG4
    else:
        if todo.size:
            failed[todo] = True
    active = active[~failed[active]]

    nit = np.ceil(np.log((hi[active] - lo[active]) / tol) / math.log(2.0)).astype(int)
    for it in range(int(nit.max()) if nit.size else 0):
        idx = active[nit > it]
        mid = 0.5 * (lo[idx] + hi[idx])
        go_up = f(mid, idx) > 0
        lo[idx] = np.where(go_up, mid, lo[idx])
        hi[idx] = np.where(go_up, hi[idx], mid)
    out[active] = np.exp(0.5 * (lo[active] + hi[active]))
    return out, int(failed.sum())
