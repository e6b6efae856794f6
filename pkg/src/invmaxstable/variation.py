"""Numerical checks of slow variation, Gamma-variation and the integral
expansion used for Gamma-varying spectral tails.

These are limit statements, so every check evaluates a geometric sweep
towards zero and applies a trend test: the last deviation must be below a
tolerance and the deviations must not grow along the tail of the sweep.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import ConvergenceError, QuadratureSpec, integrate


@dataclass
class VariationReport:
    """Deviation table from a limit check.

    ``grid`` is the sweep towards zero, ``values`` the quantity whose limit
    is tested and ``deviation`` its distance from the limit (rows follow
    ``grid``; columns follow the secondary grid, if any).
    """

    name: str
    grid: np.ndarray
    values: np.ndarray
    deviation: np.ndarray
    passed: bool
    tolerance: float
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"check": self.name, "passed": bool(self.passed),
                "final_deviation": float(np.nanmax(np.atleast_2d(self.deviation.T)[:, -1]))
                if self.deviation.size else float("nan"),
                "tolerance": self.tolerance}


def _improving(dev, slack=1e-12):
    """Deviations along the sweep do not grow over its second half."""
    dev = np.asarray(dev, dtype=float)
    tail = dev[len(dev) // 2:]
    return bool(np.all(np.diff(tail) <= slack + 1e-9 * tail[:-1]))


def slowly_varying_condition(L, tau_grid=(0.1, 0.5, 0.9), ks=range(2, 13),
                             tol=0.05):
    """Check lim L{w L(w)**-tau} / L(w) = 1 along w = 10**-k.

    Passes when, for every tau, |ratio - 1| either ends below ``tol`` or
    does not grow over the second half of the sweep and has strictly
    decreased from its start.

    Raises:
        ValueError: if L is not positive on the sweep.
    """
    ks = np.asarray(list(ks), dtype=float)
    log_w = -ks * math.log(10.0)
    w = np.exp(log_w)
    lw = np.array([float(L(wi)) for wi in w])
    if np.any(~(lw > 0)):
        raise ValueError("L must be positive near zero")
    taus = np.asarray(tau_grid, dtype=float)
    ratios = np.empty((taus.size, w.size))
    for i, tau in enumerate(taus):
        shifted = np.exp(log_w - tau * np.log(lw))
        ratios[i] = [float(L(s)) / l0 for s, l0 in zip(shifted, lw)]
    dev = np.abs(ratios - 1.0)
    ok = []
    for row in dev:
        ok.append(bool(row[-1] <= tol or (_improving(row) and row[-1] < row[0])))
    return VariationReport("slowly_varying", w, ratios, dev, all(ok), tol,
                           extra={"tau": taus, "per_tau": ok})


def gamma_variation_check(log_g, f, s_grid=None, z_grid=(-1.0, -0.5, 0.5, 1.0),
                          tol=0.01, min_shift=1e-6):
    """Check g{s + z f(s)} / g(s) -> exp(z) and f(s)/s -> 0 as s -> 0.

    ``log_g`` is the logarithm of g, so that tails far below the smallest
    double can be handled. The deviation is |g(s + z f)/{g(s) e^z} - 1|.
    Without an explicit grid, s runs over 10**-k, k = 1..300, keeping the
    points where the shift is resolvable in double precision
    (f(s)/s >= ``min_shift``).
    """
    if s_grid is None:
        s = 10.0 ** -np.arange(1, 301, dtype=float)
        fs = np.asarray([float(f(si)) for si in s])
        keep = fs / s >= min_shift
        s, fs = s[keep], fs[keep]
    else:
        s = np.sort(np.asarray(s_grid, dtype=float))[::-1]
        fs = np.asarray([float(f(si)) for si in s])
    z = np.asarray(z_grid, dtype=float)
    base = np.asarray(log_g(s), dtype=float)
    ratios = np.full((s.size, z.size), np.nan)
    for j, zj in enumerate(z):
        moved = s + zj * fs
        valid = moved > 0
        vals = np.full(s.size, np.nan)
        vals[valid] = np.asarray(log_g(moved[valid]), dtype=float) - base[valid]
        ratios[:, j] = vals
    dev = np.abs(np.expm1(ratios - z[None, :]))
    worst = np.nanmax(dev, axis=1)
    aux = fs / s
    passed = bool(worst[-1] < tol and worst[-1] < worst[0]
                  and _improving(np.abs(aux)) and abs(aux[-1]) < abs(aux[0]))
    return VariationReport("gamma_variation", s, np.exp(ratios), dev, passed, tol,
                           extra={"z": z, "f_over_s": aux, "worst": worst})


def lemma2_ratio(U, log_g, f, w, spec=QuadratureSpec(1e-14, 1e-10, 400)):
    """int_0^w U(s) g(s) ds / {U(w) f(w) g(w)} via the substitution s = w - f(w) t."""
    fw = float(f(w))
    upper = w / fw
    uw = float(U(w))
    lgw = float(np.asarray(log_g(np.array([w])))[0])

    def integrand(t):
        s = w - fw * t
        if s <= 0:
            return 0.0
        val = float(np.asarray(log_g(np.array([s])))[0]) - lgw
        return float(U(s)) / uw * math.exp(val) if val > -745 else 0.0

    edges = [0.0]
    b = 1.0
    while b < upper:
        edges.append(b)
        b *= 4.0
    edges.append(upper)
    return sum(integrate(integrand, a, b, spec)[0] for a, b in zip(edges[:-1], edges[1:]))


def lemma2_expansion_check(U, log_g, f, w_grid=None, tol=0.02):
    """Check int_0^w U g / (U f g)(w) -> 1 as w -> 0.

    Raises:
        ConvergenceError: on quadrature failure; the ratios computed so far
            are attached as ``estimate``.
    """
    w = np.sort(np.asarray(10.0 ** -np.arange(1, 7) if w_grid is None else w_grid,
                           dtype=float))[::-1]
    ratios = []
    for wi in w:
        try:
            ratios.append(lemma2_ratio(U, log_g, f, wi))
        except ConvergenceError as exc:
            raise ConvergenceError(f"integral expansion quadrature failed at w={wi:g}",
                                   estimate=np.array(ratios)) from exc
    ratios = np.asarray(ratios)
    dev = np.abs(ratios - 1.0)
    passed = bool(dev[-1] <= tol and _improving(dev))
    return VariationReport("lemma2_expansion", w, ratios, dev, passed, tol)
