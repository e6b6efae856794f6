"""Inverted max-stable distributions in unit exponential margins.

If (X_F, Y_F) is max-stable with unit Frechet margins and exponent
measure V, then (X, Y) = (1/X_F, 1/Y_F) has unit exponential margins and

    Pr(X > x, Y > y) = exp{-V(1/x, 1/y)}.

All conditional probabilities are evaluated on the log scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exponent import ExponentFamily
from .numerics import BracketError, ConvergenceError, find_root


class AtomRayError(ValueError):
    """Conditional law requested on a ray carrying spectral point mass."""


class MarginError(ValueError):
    """Invalid marginal specification."""


@dataclass(frozen=True)
class ImsDistribution:
    family: ExponentFamily

    @property
    def eta(self) -> float:
        return 1.0 / float(self.family.v(1.0, 1.0))


def _dist(d) -> ImsDistribution:
    return d if isinstance(d, ImsDistribution) else ImsDistribution(d)


def _positive(*arrays):
    out = [np.asarray(a, dtype=float) for a in arrays]
    for a in out:
        if np.any(~(a > 0)):
            raise ValueError("arguments must be positive")
    return out


def log_joint_survivor(d, x, y):
    """log Pr(X > x, Y > y) = -V(1/x, 1/y); by homogeneity -x V(1, x/y)."""
    fam = _dist(d).family
    x, y = _positive(x, y)
    out = -x * fam.v(1.0, x / y)
    return float(out) if out.ndim == 0 else out


def joint_survivor(d, x, y):
    out = np.exp(log_joint_survivor(d, x, y))
    return float(out) if np.ndim(out) == 0 else out


def _check_atom_rays(fam, x, y):
    c = y / (x + y)
    lo = fam.w_lower
    h_lo = fam.atom_masses()[0]
    rays = list(fam.interior_atoms())
    if lo > 0 and h_lo > 0:
        rays.append(lo)
    for w in rays:
        if np.any(np.isclose(c, w, rtol=0, atol=1e-14)):
            raise AtomRayError(
                f"conditional law evaluated on the atom ray y/(x+y) = {w:g}")


def log_conditional_survivor(d, y, given_x, check_atoms=True):
    """log Pr(Y > y | X = x) = log{-V1(1, x/y)} + x - x V(1, x/y)."""
    fam = _dist(d).family
    x, y = _positive(given_x, y)
    if check_atoms:
        _check_atom_rays(fam, x, y)
    out = np.minimum(fam.log_cond_survivor(y, x), 0.0)
    return float(out) if out.ndim == 0 else out


def conditional_survivor(d, y, given_x, check_atoms=True):
    out = np.exp(log_conditional_survivor(d, y, given_x, check_atoms))
    return float(out) if np.ndim(out) == 0 else out


def _quantile_scalar(fam, p, x, tol):
    target = math.log1p(-p)

    def f(t):
        return float(fam.log_cond_survivor(math.exp(t), x)) - target

    lo, hi = math.log(1e-300), math.log(max(x, 1.0)) + 1.0
    if f(lo) <= 0:
        raise BracketError(f"quantile p={p} lies below y=1e-300 at x={x}")
    for _ in range(200):
        if f(hi) <= 0:
            break
        lo, hi = hi, hi + math.log(4.0)
    else:
        raise ConvergenceError(f"could not bracket the p={p} quantile at x={x}")
    return math.exp(find_root(f, lo, hi, tol=tol))


def conditional_quantile_exact(d, p, given_x, tol=1e-12):
    """y solving Pr(Y > y | X = x) = 1 - p, by a bracketed root in log y.

    Works for scalar or array ``p`` and ``given_x`` (broadcast).
    """
    fam = _dist(d).family
    p_arr, x_arr = np.broadcast_arrays(np.asarray(p, dtype=float),
                                       np.asarray(given_x, dtype=float))
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise ValueError("p must lie in (0, 1)")
    _positive(x_arr)
    out = np.array([_quantile_scalar(fam, pi, xi, tol)
                    for pi, xi in zip(p_arr.ravel(), x_arr.ravel())])
    out = out.reshape(p_arr.shape)
    return float(out) if out.ndim == 0 else out


def conditional_cdf_maxstable(fam: ExponentFamily, y, given_xf):
    """Pr(Y_F <= y | X_F = x_F) for the max-stable pair in Frechet margins.

    Equals -x_F**2 V1(x_F, y) exp{-V(x_F, y) + 1/x_F}; evaluated through the
    inverted law as Pr(Y > 1/y | X = 1/x_F).
    """
    xf, y = _positive(given_xf, y)
    out = np.exp(np.minimum(fam.log_cond_survivor(1.0 / y, 1.0 / xf), 0.0))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# margins

class MarginSpec:
    """Monotone marginal law H with K(z) = -log{1 - H(z)}.

    ``to_exponential`` applies K and ``from_exponential`` its inverse.
    """

    kind = ""

    def to_exponential(self, z):
        raise NotImplementedError

    def from_exponential(self, x):
        raise NotImplementedError


class UnitExponential(MarginSpec):
    kind = "unit_exponential"

    def to_exponential(self, z):
        return np.asarray(z, dtype=float).copy()

    def from_exponential(self, x):
        return np.asarray(x, dtype=float).copy()


class UnitFrechet(MarginSpec):
    kind = "unit_frechet"

    def to_exponential(self, z):
        z = np.asarray(z, dtype=float)
        return -np.log(-np.expm1(-1.0 / z))

    def from_exponential(self, x):
        x = np.asarray(x, dtype=float)
        return -1.0 / np.log1p(-np.exp(-x))


class Pareto(MarginSpec):
    """Pareto law Pr(Z > z) = z**-alpha on z >= 1, so K(z) = alpha log z."""

    kind = "pareto"

    def __init__(self, alpha: float):
        if not alpha > 0:
            raise MarginError("Pareto index must be positive")
        self.alpha = float(alpha)

    def to_exponential(self, z):
        return self.alpha * np.log(np.asarray(z, dtype=float))

    def from_exponential(self, x):
        return np.exp(np.asarray(x, dtype=float) / self.alpha)


class Empirical(MarginSpec):
    """Piecewise-linear empirical law with plotting positions i/(n+1).

    Values outside the table are clamped to its end points.
    """

    kind = "empirical"

    def __init__(self, table):
        table = np.asarray(table, dtype=float)
        if table.ndim != 1 or table.size < 2:
            raise MarginError("empirical table needs at least two values")
        if np.any(np.diff(table) <= 0):
            raise MarginError("empirical table must be strictly increasing")
        self.table = table
        n = table.size
        self.probs = np.arange(1, n + 1) / (n + 1)

    @classmethod
    def from_sample(cls, sample):
        values = np.unique(np.asarray(sample, dtype=float))
        return cls(values)

    def to_exponential(self, z):
        p = np.interp(np.asarray(z, dtype=float), self.table, self.probs)
        return -np.log1p(-p)

    def from_exponential(self, x):
        p = -np.expm1(-np.asarray(x, dtype=float))
        return np.interp(p, self.probs, self.table)


def transform_margins(d, m1: MarginSpec, m2: MarginSpec, sample):
    """Map exponential-margin pairs to margins (m1, m2) via K^{-1}."""
    pairs = np.asarray(sample, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("sample must be an (n, 2) array of pairs")
    return np.column_stack([m1.from_exponential(pairs[:, 0]),
                            m2.from_exponential(pairs[:, 1])])


def to_exponential_margins(m1: MarginSpec, m2: MarginSpec, sample):
    """Inverse of :func:`transform_margins`: apply K to each coordinate."""
    pairs = np.asarray(sample, dtype=float)
    return np.column_stack([m1.to_exponential(pairs[:, 0]),
                            m2.to_exponential(pairs[:, 1])])


# ---------------------------------------------------------------------------
# diagnostics

def chi_bar_diagnostics(d, probs):
    """Sub-asymptotic dependence summaries on a probability grid.

    Returns a dict of arrays: ``p``, exponential quantile ``q``,
    ``chi`` = Pr(Y > q | X > q), ``chi_bar`` = 2 log Pr(X > q) /
    log Pr(X > q, Y > q) - 1 and ``ratio`` = log Pr(X > q, Y > q) /
    log Pr(X > q), which equals 1/eta.
    """
    dist = _dist(d)
    p = np.asarray(probs, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("probabilities must lie in (0, 1)")
    q = -np.log1p(-p)
    log_joint = np.asarray(log_joint_survivor(dist, q, q))
    ratio = log_joint / (-q)
    return {"p": p, "q": q, "chi": np.exp(log_joint + q),
            "chi_bar": 2.0 / ratio - 1.0, "ratio": ratio}
