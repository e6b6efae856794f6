# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled conditional-inversion kernel for the closed-form families.

Mirrors ``_kernel_py`` formula for formula; family codes match
``ExponentFamily.kernel_code``.
"""
from libc.math cimport log, exp, sqrt, log1p, pow, ceil, INFINITY, isnan
from scipy.special.cython_special cimport ndtr, log_ndtr, stdtr

cdef double LOG4 = 1.3862943611198906


cdef inline double _logaddexp(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


cdef inline double _safe_log(double v) noexcept nogil:
    if v > 0:
        return log(v)
    return -INFINITY


cdef double _log_cond_surv(int code, double* p, double x, double y) noexcept nogil:
    """log Pr(Y > y | X = x) written through V(1, r) and V1(1, r), r = x / y."""
    cdef double r = x / y
    cdef double lam, lr, a, b, rho, root, v, nv1, nu, s, df, ia, la, lb, ls
    cdef double th, ph, al
    if code == 1:
        lam = p[0]
        lr = log(x) - log(y)
        a = lam / 2 + lr / lam
        b = lam / 2 - lr / lam
        return log_ndtr(a) + x * ndtr(-a) - y * ndtr(b)
    elif code == 2:
        rho = p[0]
        root = sqrt(1 + r * r - 2 * rho * r)
        nv1 = -(rho - r - root) / (2 * root)
        v = 0.5 * (1 + 1 / r) * (1 + sqrt(1 - 2 * (1 + rho) * r / ((1 + r) * (1 + r))))
        return _safe_log(nv1) + x * (1 - v)
    elif code == 3:
        nu = p[0]
        rho = p[1]
        s = sqrt((1 - rho * rho) / (nu + 1))
        df = nu + 1
        a = (pow(r, 1 / nu) - rho) / s
        b = (pow(1 / r, 1 / nu) - rho) / s
        return _safe_log(stdtr(df, a)) + x * (stdtr(df, -a) - stdtr(df, b) / r)
    elif code == 4:
        th = p[0]
        nv1 = 1 - th / ((1 + r) * (1 + r))
        v = 1 + 1 / r - th / (1 + r)
        return _safe_log(nv1) + x * (1 - v)
    elif code == 5:
        th = p[0]
        ph = p[1]
        al = p[2]
        ia = 1 / al
        la = ia * _safe_log(th)
        lb = ia * _safe_log(ph) - ia * log(r)
        ls = _logaddexp(la, lb)
        v = (1 - th) + (1 - ph) / r + exp(al * ls)
        nv1 = (1 - th) + exp(la + (al - 1) * ls)
        return _safe_log(nv1) + x * (1 - v)
    elif code == 6:
        th = p[0]
        ph = p[1]
        v = 1 + 1 / r - ((th + ph) * r + (th + 2 * ph)) / ((1 + r) * (1 + r))
        nv1 = 1 - ((th + 2 * ph) + th * r) / ((1 + r) * (1 + r) * (1 + r))
        return _safe_log(nv1) + x * (1 - v)
    elif code == 7:
        al = p[0]
        v = al * (1 + 1 / r) + (1 - al) * (1 / r if 1 / r > 1 else 1.0)
        nv1 = al + (1 - al) * (1.0 if 1 < r else 0.0)
        return _safe_log(nv1) + x * (1 - v)
    elif code == 8:
        al = p[0]
        ia = 1 / al
        ls = _logaddexp(0.0, -ia * log(r))
        v = exp(al * ls)
        nv1 = exp((al - 1) * ls)
        return _safe_log(nv1) + x * (1 - v)
    return 0.0 / 0.0


def log_cond_survivor(int code, double[::1] params, double[::1] x, double[::1] y,
                      double[::1] out):
    """Vectorised log conditional survivor (used to cross-check the fallback)."""
    cdef Py_ssize_t i, n = x.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _log_cond_surv(code, &params[0], x[i], y[i])


def solve(int code, double[::1] params, double[::1] x, double[::1] log_u,
          double[::1] out, double tol, double y_min, int max_expand=200):
    """Invert Pr(Y > y | X = x) = u by bisection in log y.

    Returns the number of draws whose upper bracket could not be found
    (those entries are set to NaN).
    """
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double lo, hi, mid, target, xi
    cdef int k, it, nit, failures = 0
    cdef double* p = &params[0]
    with nogil:
        for i in range(n):
            xi = x[i]
            target = log_u[i]
            lo = log(y_min)
            if _log_cond_surv(code, p, xi, exp(lo)) - target <= 0:
                out[i] = y_min
                continue
            hi = log(xi + 2 - 2 * target)
            k = 0
            while _log_cond_surv(code, p, xi, exp(hi)) - target > 0:
                lo = hi
                hi = hi + LOG4
                k += 1
                if k > max_expand:
                    break
            if k > max_expand:
                out[i] = 0.0 / 0.0
                failures += 1
                continue
            nit = <int>ceil(log((hi - lo) / tol) / log(2.0))
            for it in range(nit):
                mid = 0.5 * (lo + hi)
                if _log_cond_surv(code, p, xi, exp(mid)) - target > 0:
                    lo = mid
                else:
                    hi = mid
            out[i] = exp(0.5 * (lo + hi))
    return failures
