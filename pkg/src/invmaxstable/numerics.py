"""Shared numerical kernel: special functions, quadrature, root finding,
derivative-free minimisation and seeded random streams.

The heavy lifting is delegated to scipy; this module pins down the
contracts (tolerances, error types, determinism) the rest of the package
relies on.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize
from scipy import special as _special


class ConvergenceError(ArithmeticError):
    """A numerical routine did not reach its tolerance.

    The best available estimate is kept on ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class BracketError(ValueError):
    """Root-finding interval does not contain a sign change."""


# ---------------------------------------------------------------------------
# special functions

_SQRT2 = math.sqrt(2.0)


def std_normal_cdf(x):
    """Standard normal CDF; accepts scalars or arrays."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    return _special.ndtr(np.asarray(x, dtype=float))


def std_normal_pdf(x):
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def std_normal_ppf(p):
    return _special.ndtri(p)


def student_t_cdf(x, dof):
    """CDF of the standard Student-t distribution with ``dof`` degrees of freedom."""
    if np.any(np.asarray(dof) <= 0):
        raise ValueError(f"degrees of freedom must be positive, got {dof}")
    out = _special.stdtr(dof, x)
    return float(out) if np.ndim(out) == 0 else out


def student_t_pdf(x, dof):
    if np.any(np.asarray(dof) <= 0):
        raise ValueError(f"degrees of freedom must be positive, got {dof}")
    x = np.asarray(x, dtype=float)
    logc = (_special.gammaln((dof + 1) / 2) - _special.gammaln(dof / 2)
            - 0.5 * math.log(dof * math.pi))
    return np.exp(logc - (dof + 1) / 2 * np.log1p(x * x / dof))


def student_t_ppf(p, dof):
    if np.any(np.asarray(dof) <= 0):
        raise ValueError(f"degrees of freedom must be positive, got {dof}")
    return _special.stdtrit(dof, p)


# ---------------------------------------------------------------------------
# quadrature

@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if not self.rel_tol >= 0:
            raise ValueError("rel_tol must be non-negative")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be at least 1")


DEFAULT_QUADRATURE = QuadratureSpec()


def integrate(f, lo, hi, spec: QuadratureSpec = DEFAULT_QUADRATURE, points=None):
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``(lo, hi)``.

    Infinite limits are allowed. Integrable endpoint singularities are
    handled by QUADPACK's extrapolation.

    Returns:
        tuple: ``(value, abs_error_estimate)``.

    Raises:
        ConvergenceError: if the error estimate misses the requested
            tolerance; the best estimate is attached.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        kwargs = dict(epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                      limit=int(spec.max_subdivisions), full_output=1)
        if points is not None and np.isfinite(lo) and np.isfinite(hi):
            kwargs["points"] = points
        res = _integrate.quad(f, lo, hi, **kwargs)
    value, err, info = res[0], res[1], res[2]
    ier = res[3] if len(res) > 3 else 0
    tol = max(spec.abs_tol, spec.rel_tol * abs(value))
    if ier != 0 and err > tol:
        raise ConvergenceError(
            f"quadrature on ({lo}, {hi}) reached error {err:.3g} > {tol:.3g}",
            estimate=value)
    return value, err


# ---------------------------------------------------------------------------
# root finding and minimisation

def find_root(f, lo, hi, tol=1e-12):
    """Bracketed root of a continuous scalar function (Brent's method)."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return float(lo)
    if fhi == 0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    return float(_optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps,
                                  maxiter=500))


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    converged: bool
    nfev: int
    restart_values: list


def _initial_simplex(x0, scale):
    n = x0.size
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        sim[i + 1, i] += scale[i]
    return sim


def minimize(obj, init, scale=None, max_iter=4000, xatol=1e-9, fatol=1e-12):
    """Nelder-Mead minimisation followed by one restart from a fresh simplex.

    The restart is seeded at the first optimum with the original simplex
    scale, which guards against premature collapse of the simplex.
    """
    x0 = np.asarray(init, dtype=float)
    scale = np.full(x0.size, 0.1) if scale is None else np.asarray(scale, dtype=float)
    f0 = obj(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the initial point")

    best_x, best_f, nfev, converged = x0, f0, 1, True
    values = []
    start = x0
    for _ in range(2):
        res = _optimize.minimize(
            obj, start, method="Nelder-Mead",
            options=dict(initial_simplex=_initial_simplex(start, scale),
                         maxiter=max_iter, maxfev=2 * max_iter,
                         xatol=xatol, fatol=fatol))
        nfev += res.nfev
        converged = bool(res.success)
        if res.fun <= best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
        values.append(best_f)
        start = best_x
    return MinimizeResult(best_x, best_f, converged, nfev, values)


# ---------------------------------------------------------------------------
# random streams

class RandomStream:
    """Counter-based stream identified by ``(seed, stream_index)``.

    Streams with equal identifiers replay identical sequences; distinct
    indices are independent substreams of the same seed.
    """

    def __init__(self, seed: int, stream_index: int = 0):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if int(stream_index) < 0:
            raise ValueError("stream_index must be non-negative")
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def uniform(self, size=None):
        """Uniform draws on the open interval (0, 1)."""
        u = self.generator.random(size)
        # Generator.random is on [0, 1); zero would break log-based inversion
        return np.where(u == 0.0, np.finfo(float).tiny, u)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_index={self.stream_index})"
