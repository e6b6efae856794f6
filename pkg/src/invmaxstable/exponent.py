"""Bivariate exponent measures V(x, y) and their spectral measures.

Every family is represented through

* ``v(x, y)`` and ``v1(x, y) = dV/dx`` (vectorised),
* the spectral density ``h`` on the interior of its support,
* point masses of the spectral measure at the end points (and, for the
  Marshall-Olkin model, at w = 1/2),
* ``log_cond_survivor(y, x)``, the log of Pr(Y > y | X = x) for the
  inverted max-stable law in exponential margins,
* ``tail_class()``, the behaviour of H near its lower end point, which
  selects the conditional-extremes normalisation.

Conventions: with H the spectral measure on [0, 1],

    V(x, y) = int max{w/x, (1-w)/y} dH(w),

so that the split point of the integrand is ``x / (x + y)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special as sps

from .numerics import (QuadratureSpec, ConvergenceError, integrate, student_t_cdf,
                       std_normal_cdf)


class ParameterError(ValueError):
    """Parameters outside the family's parameter space."""


class UnsupportedTailError(ValueError):
    """No conditional-extremes normalisation is catalogued for this tail."""


@dataclass(frozen=True)
class TailClass:
    """Behaviour of the spectral measure at its lower end point.

    ``kind`` is one of ``"atom"`` (positive mass at the end point),
    ``"regular"`` (h(w) ~ L(w - w_lower) (w - w_lower)**t), ``"smith"``,
    ``"gamma"`` (h(w) ~ scale * w**delta * exp(-kappa * w**-gamma)) or
    ``"degenerate"`` (perfect dependence).
    """

    kind: str
    w_lower: float = 0.0
    atom: float = 0.0
    t: float = float("nan")
    slowly_varying: Callable | None = None
    lam: float = float("nan")
    gamma: float = float("nan")
    kappa: float = float("nan")
    delta: float = float("nan")
    scale: float = 1.0


def _as_float_arrays(*args):
    out = [np.asarray(a, dtype=float) for a in args]
    return out


def _check_positive(*args):
    for a in args:
        if np.any(np.asarray(a) <= 0):
            raise ValueError("exponent measure arguments must be positive")


class ExponentFamily:
    """Base class for bivariate exponent measures.

    Subclasses provide closed forms; the base class holds the generic
    machinery written in terms of the spectral measure.
    """

    family_id: str = ""
    param_names: tuple = ()
    #: integer code understood by the compiled sampling kernel (0: none)
    kernel_code: int = 0

    def __init__(self, **params):
        missing = set(self.param_names) - set(params)
        extra = set(params) - set(self.param_names)
        if missing or extra:
            raise ParameterError(
                f"{self.family_id}: expected parameters {self.param_names}, "
                f"got {tuple(params)}")
        self._params = {k: float(params[k]) for k in self.param_names}
        for k, val in self._params.items():
            if not math.isfinite(val):
                raise ParameterError(f"{self.family_id}: {k} must be finite")
        self._validate()

    # -- identity -----------------------------------------------------------
    @property
    def params(self) -> dict:
        return dict(self._params)

    def __getattr__(self, name):
        params = self.__dict__.get("_params", {})
        if name in params:
            return params[name]
        raise AttributeError(name)

    def to_dict(self) -> dict:
        return {"family_id": self.family_id, "params": self.params}

    def __repr__(self):
        inner = ", ".join(f"{k}={v:g}" for k, v in self._params.items())
        return f"{type(self).__name__}({inner})"

    def __eq__(self, other):
        return (isinstance(other, ExponentFamily)
                and self.to_dict() == other.to_dict())

    def __hash__(self):
        return hash((self.family_id, tuple(self._params.items())))

    def _validate(self):
        pass

    @property
    def kernel_params(self) -> tuple:
        return tuple(self._params[k] for k in self.param_names)

    # -- spectral measure ---------------------------------------------------
    w_lower = 0.0
    w_upper = 1.0

    def atom_masses(self) -> tuple:
        """Point masses ``(H({w_lower}), H({w_upper}))``."""
        return (0.0, 0.0)

    def interior_atoms(self) -> dict:
        return {}

    def spectral_density(self, w):
        return np.exp(self.log_spectral_density(w))

    def log_spectral_density(self, w):
        with np.errstate(divide="ignore"):
            return np.log(self.spectral_density(w))

    def log_density_parts(self, lw, l1w):
        """log h written in terms of ``log w`` and ``log(1 - w)``.

        Families whose density is singular at an end point override this so
        that mass within rounding distance of 0 or 1 is not lost.
        """
        return self.log_spectral_density(np.exp(lw))

    def _log_density_via_parts(self, w):
        w = np.asarray(w, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self.log_density_parts(np.log(w), np.log1p(-w))

    def tail_class(self) -> TailClass:
        raise UnsupportedTailError(f"{self.family_id}: tail class not catalogued")

    # -- exponent measure ---------------------------------------------------
    def v(self, x, y):
        raise NotImplementedError

    def v1(self, x, y):
        raise NotImplementedError

    def one_minus_v_unit(self, r):
        """``1 - V(1, r)``; overridden where a cancellation-free form exists."""
        return 1.0 - self.v(1.0, r)

    def log_cond_survivor(self, y, x):
        """log Pr(Y > y | X = x) for the inverted law in exponential margins."""
        x, y = _as_float_arrays(x, y)
        r = x / y
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(-self.v1(1.0, r)) + x * self.one_minus_v_unit(r)
        return out


# ---------------------------------------------------------------------------
# closed-form families

class Smith(ExponentFamily):
    """Smith / Husler-Reiss exponent measure, dependence parameter lambda > 0."""

    family_id = "smith"
    param_names = ("lam",)
    kernel_code = 1

    def _validate(self):
        if not self.lam > 0:
            raise ParameterError(f"smith: lambda must lie in (0, inf), got {self.lam}")

    def v(self, x, y):
        x, y = _as_float_arrays(x, y)
        lam = self.lam
        lr = np.log(y) - np.log(x)
        return sps.ndtr(lam / 2 + lr / lam) / x + sps.ndtr(lam / 2 - lr / lam) / y

    def v1(self, x, y):
        x, y = _as_float_arrays(x, y)
        lam = self.lam
        return -sps.ndtr(lam / 2 + (np.log(y) - np.log(x)) / lam) / x**2

    def log_cond_survivor(self, y, x):
        x, y = _as_float_arrays(x, y)
        lam = self.lam
        lr = np.log(x) - np.log(y)
        a = lam / 2 + lr / lam
        b = lam / 2 - lr / lam
        return sps.log_ndtr(a) + x * sps.ndtr(-a) - y * sps.ndtr(b)

    def log_spectral_density(self, w):
        return self._log_density_via_parts(w)

    def log_density_parts(self, lw, l1w):
        lam = self.lam
        arg = lam / 2 + (l1w - lw) / lam
        return (-0.5 * arg**2 - 0.5 * math.log(2 * math.pi) - math.log(lam)
                - 2 * lw - l1w)

    def tail_class(self):
        return TailClass("smith", lam=self.lam)

    def auxiliary(self, w):
        """Auxiliary function of the Gamma-varying lower tail of h."""
        w = np.asarray(w, dtype=float)
        return self.lam**2 * w / -np.log(w)


class Schlather(ExponentFamily):
    """Schlather (extremal Gaussian) exponent measure, rho in (-1, 1)."""

    family_id = "schlather"
    param_names = ("rho",)
    kernel_code = 2

    def _validate(self):
        if not -1 < self.rho < 1:
            raise ParameterError(f"schlather: rho must lie in (-1, 1), got {self.rho}")

    def v(self, x, y):
        x, y = _as_float_arrays(x, y)
        q = (x / (x + y)) * (y / (x + y))
        return 0.5 * (1 / x + 1 / y) * (1 + np.sqrt(1 - 2 * (1 + self.rho) * q))

    def v1(self, x, y):
        x, y = _as_float_arrays(x, y)
        rho = self.rho
        # scaled by max(x, y) so extreme ratios do not overflow
        m = np.maximum(x, y)
        xs, ys = x / m, y / m
        root = np.sqrt(xs * xs + ys * ys - 2 * rho * xs * ys)
        return (rho * xs - ys - root) / (2 * root) / x / x

    def spectral_density(self, w):
        w = np.asarray(w, dtype=float)
        rho = self.rho
        return (1 - rho**2) / (2 * (1 - 2 * (1 + rho) * w * (1 - w)) ** 1.5)

    def atom_masses(self):
        m = (1 - self.rho) / 2
        return (m, m)

    def tail_class(self):
        return TailClass("atom", atom=(1 - self.rho) / 2)


class ExtremalT(ExponentFamily):
    """Extremal-t exponent measure with nu > 0 degrees of freedom and rho in (-1, 1)."""

    family_id = "extremalt"
    param_names = ("nu", "rho")
    kernel_code = 3

    def _validate(self):
        if not self.nu > 0:
            raise ParameterError(f"extremalt: nu must be positive, got {self.nu}")
        if not -1 < self.rho < 1:
            raise ParameterError(f"extremalt: rho must lie in (-1, 1), got {self.rho}")

    @property
    def _scale(self):
        return math.sqrt((1 - self.rho**2) / (self.nu + 1))

    def _arg(self, ratio):
        return (ratio ** (1 / self.nu) - self.rho) / self._scale

    def v(self, x, y):
        x, y = _as_float_arrays(x, y)
        df = self.nu + 1
        return (sps.stdtr(df, self._arg(y / x)) / x
                + sps.stdtr(df, self._arg(x / y)) / y)

    def v1(self, x, y):
        x, y = _as_float_arrays(x, y)
        return -sps.stdtr(self.nu + 1, self._arg(y / x)) / x**2

    def one_minus_v_unit(self, r):
        r = np.asarray(r, dtype=float)
        df = self.nu + 1
        return sps.stdtr(df, -self._arg(r)) - sps.stdtr(df, self._arg(1 / r)) / r

    def log_spectral_density(self, w):
        return self._log_density_via_parts(w)

    def log_density_parts(self, lw, l1w):
        nu, s = self.nu, self._scale
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            log_ratio = l1w - lw
            a = (np.exp(log_ratio / nu) - self.rho) / s
            big = np.abs(a) > 1e100
            a_safe = np.where(big, 1.0, a)
            log_kernel = np.where(big, 2 * np.log(np.abs(a)) - math.log(nu + 1),
                                  np.log1p(a_safe * a_safe / (nu + 1)))
            log_t = (sps.gammaln((nu + 2) / 2) - sps.gammaln((nu + 1) / 2)
                     - 0.5 * math.log((nu + 1) * math.pi) - (nu + 2) / 2 * log_kernel)
            return log_t + log_ratio / nu - math.log(nu * s) - 2 * lw - l1w

    def atom_masses(self):
        m = student_t_cdf(-self.rho / self._scale, self.nu + 1)
        return (m, m)

    def tail_class(self):
        return TailClass("atom", atom=self.atom_masses()[0])


class MixedLogistic(ExponentFamily):
    family_id = "mixedlogistic"
    param_names = ("theta",)
    kernel_code = 4

    def _validate(self):
        if not 0 < self.theta < 1:
            raise ParameterError(
                f"mixedlogistic: theta must lie in (0, 1), got {self.theta}")

    def v(self, x, y):
        x, y = _as_float_arrays(x, y)
        return 1 / x + 1 / y - self.theta / (x + y)

    def v1(self, x, y):
        x, y = _as_float_arrays(x, y)
        return -1 / x**2 + self.theta / (x + y) / (x + y)

    def spectral_density(self, w):
        return np.full_like(np.asarray(w, dtype=float), 2 * self.theta)

    def atom_masses(self):
        return (1 - self.theta, 1 - self.theta)

    def tail_class(self):
        return TailClass("atom", atom=1 - self.theta)


class AsymmetricLogistic(ExponentFamily):
    """Asymmetric logistic model (theta, phi, alpha).

    When the logistic component degenerates (alpha = 1, theta = 0 or
    phi = 0) the model is exact independence, with unit atoms at both
    end points.
    """

    family_id = "asymmetriclogistic"
    param_names = ("theta", "phi", "alpha")
    kernel_code = 5

    def _validate(self):
        for k in ("theta", "phi"):
            if not 0 <= self._params[k] <= 1:
                raise ParameterError(
                    f"asymmetriclogistic: {k} must lie in [0, 1], got {self._params[k]}")
        if not 0 < self.alpha <= 1:
            raise ParameterError(
                f"asymmetriclogistic: alpha must lie in (0, 1], got {self.alpha}")

    @property
    def _degenerate(self):
        return self.alpha == 1 or self.theta == 0 or self.phi == 0

    def _logs(self, x, y):
        return self._logs_from_log(np.log(x), np.log(y))

    def _logs_from_log(self, lx, ly):
        ia = 1 / self.alpha
        with np.errstate(divide="ignore"):
            la = ia * (math.log(self.theta) if self.theta > 0 else -np.inf) - ia * lx
            lb = ia * (math.log(self.phi) if self.phi > 0 else -np.inf) - ia * ly
        return la, lb, np.logaddexp(la, lb)

    def v(self, x, y):
        x, y = _as_float_arrays(x, y)
        _, _, ls = self._logs(x, y)
        return (1 - self.theta) / x + (1 - self.phi) / y + np.exp(self.alpha * ls)

    def v1(self, x, y):
        x, y = _as_float_arrays(x, y)
        la, _, ls = self._logs(x, y)
        return -(1 - self.theta) / x**2 - np.exp(la + (self.alpha - 1) * ls) / x

    def log_spectral_density(self, w):
        return self._log_density_via_parts(w)

    def log_density_parts(self, lw, l1w):
        if self._degenerate:
            return np.full_like(np.asarray(lw, dtype=float), -np.inf)
        la, lb, ls = self._logs_from_log(lw, l1w)
        return math.log(1 / self.alpha - 1) + la + lb + (self.alpha - 2) * ls - lw - l1w

    def atom_masses(self):
        if self._degenerate:
            return (1.0, 1.0)
        return (1 - self.phi, 1 - self.theta)

    def tail_class(self):
        h0 = self.atom_masses()[0]
        if h0 > 0:
            return TailClass("atom", atom=h0)
        ia = 1 / self.alpha
        s = (ia - 1) * self.theta ** (1 - ia) * self.phi**ia
        return TailClass("regular", t=ia - 2, slowly_varying=_constant(s))


class AsymmetricMixed(ExponentFamily):
    family_id = "asymmetricmixed"
    param_names = ("theta", "phi")
    kernel_code = 6

    def _validate(self):
        th, ph = self.theta, self.phi
        if not (th > 0 and th + 3 * ph > 0 and th + ph <= 1 and th + 2 * ph <= 1):
            raise ParameterError(
                "asymmetricmixed: need theta > 0, theta + 3 phi > 0, theta + phi <= 1 "
                f"and theta + 2 phi <= 1, got theta={th}, phi={ph}")

    def v(self, x, y):
        x, y = _as_float_arrays(x, y)
        th, ph = self.theta, self.phi
        s = x + y
        return 1 / x + 1 / y - ((th + ph) * (y / s) + (th + 2 * ph) * (x / s)) / s

    def v1(self, x, y):
        x, y = _as_float_arrays(x, y)
        th, ph = self.theta, self.phi
        s = x + y
        return -1 / x**2 + ((th + 2 * ph) * (x / s) + th * (y / s)) / s / s

    def spectral_density(self, w):
        return 2 * (self.theta + 3 * self.phi * np.asarray(w, dtype=float))

    def atom_masses(self):
        # Theta keeps both masses non-negative; clamp rounding residue
        return (max(0.0, 1 - self.theta - self.phi),
                max(0.0, 1 - self.theta - 2 * self.phi))

    def tail_class(self):
        h0 = self.atom_masses()[0]
        if h0 > 0:
            return TailClass("atom", atom=h0)
        return TailClass("regular", t=0.0, slowly_varying=_constant(2 * self.theta))


class MarshallOlkin(ExponentFamily):
    """Marshall-Olkin model: atoms alpha at 0 and 1, 2(1 - alpha) at 1/2."""

    family_id = "marshallolkin"
    param_names = ("alpha",)
    kernel_code = 7

    def _validate(self):
        if not 0 <= self.alpha <= 1:
            raise ParameterError(
                f"marshallolkin: alpha must lie in [0, 1], got {self.alpha}")

    @property
    def w_lower(self):
        return 0.0 if self.alpha > 0 else 0.5

    @property
    def w_upper(self):
        return 1.0 if self.alpha > 0 else 0.5

    def v(self, x, y):
        x, y = _as_float_arrays(x, y)
        a = self.alpha
        return a * (1 / x + 1 / y) + (1 - a) * np.maximum(1 / x, 1 / y)

    def v1(self, x, y):
        # at x == y the right-continuous branch of Pr(Y > y | X = x) is used
        x, y = _as_float_arrays(x, y)
        a = self.alpha
        return -(a + (1 - a) * (x < y)) / x**2

    def spectral_density(self, w):
        return np.zeros_like(np.asarray(w, dtype=float))

    def log_spectral_density(self, w):
        return np.full_like(np.asarray(w, dtype=float), -np.inf)

    def atom_masses(self):
        if self.alpha == 0:
            return (2.0, 2.0)  # both end points coincide at 1/2
        return (self.alpha, self.alpha)

    def interior_atoms(self):
        if self.alpha in (0.0, 1.0):
            return {}
        return {0.5: 2 * (1 - self.alpha)}

    def tail_class(self):
        if self.alpha == 0:
            return TailClass("degenerate", w_lower=0.5)
        return TailClass("atom", atom=self.alpha)


class Logistic(ExponentFamily):
    """Symmetric logistic model with dependence parameter alpha in (0, 1]."""

    family_id = "logistic"
    param_names = ("alpha",)
    kernel_code = 8

    def _validate(self):
        if not 0 < self.alpha <= 1:
            raise ParameterError(f"logistic: alpha must lie in (0, 1], got {self.alpha}")

    def _logsum(self, x, y):
        ia = 1 / self.alpha
        return np.logaddexp(-ia * np.log(x), -ia * np.log(y))

    def v(self, x, y):
        x, y = _as_float_arrays(x, y)
        return np.exp(self.alpha * self._logsum(x, y))

    def v1(self, x, y):
        x, y = _as_float_arrays(x, y)
        ia = 1 / self.alpha
        return -np.exp(-(ia + 1) * np.log(x) + (self.alpha - 1) * self._logsum(x, y))

    def log_spectral_density(self, w):
        return self._log_density_via_parts(w)

    def log_density_parts(self, lw, l1w):
        if self.alpha == 1:
            return np.full_like(np.asarray(lw, dtype=float), -np.inf)
        ia = 1 / self.alpha
        return (math.log(ia - 1) + (-ia - 1) * (lw + l1w)
                + (self.alpha - 2) * np.logaddexp(-ia * lw, -ia * l1w))

    def atom_masses(self):
        return (1.0, 1.0) if self.alpha == 1 else (0.0, 0.0)

    def tail_class(self):
        if self.alpha == 1:
            return TailClass("atom", atom=1.0)
        ia = 1 / self.alpha
        return TailClass("regular", t=ia - 2, slowly_varying=_constant(ia - 1))


class _Constant:
    """Constant slowly varying function (picklable)."""

    def __init__(self, value):
        self.value = float(value)

    def __call__(self, w):
        return np.full_like(np.asarray(w, dtype=float), self.value)

    def __repr__(self):
        return f"constant({self.value:g})"


def _constant(value):
    return _Constant(value)


# ---------------------------------------------------------------------------
# density-defined families

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


class _SpectralTable:
    """Cumulative integrals of a spectral density on adaptive panels.

    Panels are refined until a 20-point Gauss-Legendre rule agrees with its
    two-panel composite to ``rtol``, so that the same rule applied to any
    sub-interval of a panel is equally accurate. Lower and upper partial
    integrals are computed from separate prefix and suffix sums to avoid
    cancellation near either end point.
    """

    def __init__(self, log_density, lo, hi, rtol=1e-13, max_panels=20000):
        self.log_density = log_density
        self.lo, self.hi = float(lo), float(hi)
        half = 0.5 * (self.hi - self.lo)
        offsets = half * 2.0 ** -np.arange(0, 52)
        seeds = np.unique(np.concatenate([
            [self.lo, self.hi], self.lo + offsets, self.hi - offsets,
            np.linspace(self.lo, self.hi, 17)]))
        seeds = seeds[(seeds >= self.lo) & (seeds <= self.hi)]
        # absolute floor relative to a coarse estimate of the total mass
        atol = 1e-16 * float(self._gl(seeds[:-1], seeds[1:])[0].sum()) + 1e-300
        edges = [seeds[0]]
        for a, b in zip(seeds[:-1], seeds[1:]):
            self._refine(a, b, rtol, atol, edges, depth=0)
            if len(edges) > max_panels:
                raise ConvergenceError("spectral table refinement exceeded panel budget")
        self.edges = np.asarray(edges)
        i0, i1 = self._panel_integrals(self.edges[:-1], self.edges[1:])
        # the first and last panels may carry an integrable singularity
        self._quad_ends = [False, False]
        for side, (a, b) in enumerate([(self.edges[0], self.edges[1]),
                                       (self.edges[-2], self.edges[-1])]):
            probe = a if side == 1 else b
            if self._log_h(np.array([probe]))[0] > -700:
                q0 = integrate(lambda w: self._h_scalar(w), a, b,
                               QuadratureSpec(1e-300, 1e-13, 500))[0]
                q1 = integrate(lambda w: w * self._h_scalar(w), a, b,
                               QuadratureSpec(1e-300, 1e-13, 500))[0]
                k = 0 if side == 0 else -1
                i0[k], i1[k] = q0, q1
                self._quad_ends[side] = True
        self.i0, self.i1 = i0, i1
        self.cum0 = np.concatenate([[0.0], np.cumsum(i0)])
        self.cum1 = np.concatenate([[0.0], np.cumsum(i1)])
        self.suf0 = np.concatenate([np.cumsum(i0[::-1])[::-1], [0.0]])
        self.suf1 = np.concatenate([np.cumsum(i1[::-1])[::-1], [0.0]])
        self.total0 = float(self.cum0[-1])
        self.total1 = float(self.cum1[-1])

    def _log_h(self, w):
        with np.errstate(all="ignore"):
            out = self.log_density(w)
        return np.where(np.isnan(out), -np.inf, out)

    def _h_scalar(self, w):
        return float(np.exp(self._log_h(np.array([w]))[0]))

    def _gl(self, a, b):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        half = 0.5 * (b - a)
        nodes = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
        hv = np.exp(self._log_h(nodes))
        i0 = half * (hv @ _GL_W)
        i1 = half * ((hv * nodes) @ _GL_W)
        return i0, i1

    def _panel_integrals(self, a, b):
        return self._gl(a, b)

    def _refine(self, a, b, rtol, atol, edges, depth):
        whole = self._gl(a, b)[0][0]
        m = 0.5 * (a + b)
        parts = self._gl([a, m], [m, b])[0]
        split = parts.sum()
        if depth >= 40 or abs(whole - split) <= rtol * abs(split) + atol:
            edges.append(b)
            return
        self._refine(a, m, rtol, atol, edges, depth + 1)
        self._refine(m, b, rtol, atol, edges, depth + 1)

    def _quad_partial(self, a, b):
        spec = QuadratureSpec(1e-300, 1e-12, 500)
        q0 = integrate(lambda w: self._h_scalar(w), a, b, spec)[0]
        q1 = integrate(lambda w: w * self._h_scalar(w), a, b, spec)[0]
        return q0, q1

    def lower(self, c):
        """``(int_lo^c h, int_lo^c w h)`` for an array of split points."""
        c = np.clip(np.asarray(c, dtype=float), self.lo, self.hi)
        k = np.clip(np.searchsorted(self.edges, c, side="right") - 1, 0, len(self.i0) - 1)
        p0, p1 = self._gl(self.edges[k].ravel(), c.ravel())
        p0, p1 = p0.reshape(c.shape), p1.reshape(c.shape)
        if self._quad_ends[0]:
            idx = np.flatnonzero((k == 0) & (c > self.lo))
            for i in idx:
                q0, q1 = self._quad_partial(self.lo, c.flat[i])
                p0.flat[i], p1.flat[i] = q0, q1
        return self.cum0[k] + p0, self.cum1[k] + p1

    def upper(self, c):
        """``(int_c^hi h, int_c^hi w h)``."""
        c = np.clip(np.asarray(c, dtype=float), self.lo, self.hi)
        k = np.clip(np.searchsorted(self.edges, c, side="right") - 1, 0, len(self.i0) - 1)
        p0, p1 = self._gl(c.ravel(), self.edges[k + 1].ravel())
        p0, p1 = p0.reshape(c.shape), p1.reshape(c.shape)
        if self._quad_ends[1]:
            last = len(self.i0) - 1
            idx = np.flatnonzero((k == last) & (c < self.hi))
            for i in idx:
                q0, q1 = self._quad_partial(c.flat[i], self.hi)
                p0.flat[i], p1.flat[i] = q0, q1
        return self.suf0[k + 1] + p0, self.suf1[k + 1] + p1


class SpectralDensityFamily(ExponentFamily):
    """Exponent measure defined by a spectral density and end-point atoms.

    Args:
        log_density: vectorised log h on ``(w_lower, w_upper)``.
        w_lower, w_upper: support end points.
        atoms: point masses at ``(w_lower, w_upper)``.
        tail: optional :class:`TailClass` describing h near ``w_lower``.

    The exponent measure is assembled from cumulative integrals of h, so no
    moment or mass constraint is imposed here; :func:`validate` reports
    whether they hold.
    """

    family_id = "custom"

    def __init__(self, log_density, w_lower=0.0, w_upper=1.0, atoms=(0.0, 0.0),
                 tail: TailClass | None = None, name="custom", exact_moment=None):
        self._params = {}
        self._log_density = log_density
        self._wl, self._wu = float(w_lower), float(w_upper)
        if not 0 <= self._wl < 0.5 < self._wu <= 1:
            raise ParameterError("need 0 <= w_lower < 1/2 < w_upper <= 1")
        self._atoms = (float(atoms[0]), float(atoms[1]))
        self._tail = tail
        self._name = name
        self._table = _SpectralTable(log_density, self._wl, self._wu)
        self._moment = (self.total_moment() if exact_moment is None
                        else float(exact_moment))

    @property
    def w_lower(self):
        return self._wl

    @property
    def w_upper(self):
        return self._wu

    def to_dict(self):
        return {"family_id": self.family_id, "params": {}, "name": self._name}

    def __repr__(self):
        return f"SpectralDensityFamily({self._name})"

    def __eq__(self, other):
        return self is other

    def __hash__(self):
        return id(self)

    def log_spectral_density(self, w):
        w = np.asarray(w, dtype=float)
        inside = (w > self._wl) & (w < self._wu)
        with np.errstate(all="ignore"):
            val = self._log_density(np.where(inside, w, 0.5))
        return np.where(inside, val, -np.inf)

    def atom_masses(self):
        return self._atoms

    def total_moment(self):
        return (self._table.total1 + self._wl * self._atoms[0]
                + self._wu * self._atoms[1])

    # partial spectral integrals split at c, atoms at c assigned to the lower part
    def _lower_parts(self, c):
        l0, l1 = self._table.lower(c)
        above = c >= self._wl
        l0 = l0 + np.where(above, self._atoms[0], 0.0)
        l1 = l1 + np.where(above, self._wl * self._atoms[0], 0.0)
        return l0, l1

    def _upper_moment(self, c):
        u1 = self._table.upper(c)[1]
        return u1 + np.where(c < self._wu, self._wu * self._atoms[1], 0.0)

    def v(self, x, y):
        x, y = _as_float_arrays(x, y)
        _check_positive(x, y)
        c = x / (x + y)
        l0, l1 = self._lower_parts(c)
        return (l0 - l1) / y + self._upper_moment(c) / x

    def v1(self, x, y):
        x, y = _as_float_arrays(x, y)
        c = x / (x + y)
        return -self._upper_moment(c) / x**2

    def log_cond_survivor(self, y, x):
        x, y = _as_float_arrays(x, y)
        x, y = np.broadcast_arrays(x, y)
        c = y / (x + y)
        t0, t1 = self._table.lower(c)
        # int_[0,c] (c - w) dH(w), atom at w_lower included once c passes it
        below = c * t0 - t1 + np.where(c >= self._wl, (c - self._wl) * self._atoms[0], 0.0)
        below = np.maximum(below, 0.0)
        # complement of the lower moment keeps precision when c is small
        lower_moment = t1 + np.where(c >= self._wl, self._wl * self._atoms[0], 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_upper = np.where(
                c < 0.5,
                math.log(self._moment) + np.log1p(-lower_moment / self._moment),
                np.log(self._upper_moment(c)))
        return log_upper - (x + y) * below

    def tail_class(self):
        if self._tail is None:
            raise UnsupportedTailError(f"{self._name}: tail class not supplied")
        return self._tail


class GammaVarying(ExponentFamily):
    """Symmetric spectral density with a Gamma-varying lower tail.

    The density is

        h(w) = c * (w (1 - w))**delta * exp(-kappa * (w**-gamma + (1 - w)**-gamma)),

    with c fixed by total mass 2; symmetry then gives the moment constraint.
    Near zero, h(w) ~ scale * w**delta * exp(-kappa * w**-gamma) with
    ``scale = c * exp(-kappa)``.
    """

    family_id = "gammavarying"
    param_names = ("gamma", "kappa", "delta")

    def _validate(self):
        if not self.gamma > 0:
            raise ParameterError(f"gammavarying: gamma must be positive, got {self.gamma}")
        if not self.kappa > 0:
            raise ParameterError(f"gammavarying: kappa must be positive, got {self.kappa}")
        g, k, d = self.gamma, self.kappa, self.delta

        def raw(w):
            return d * (np.log(w) + np.log1p(-w)) - k * (w**-g + (1 - w) ** -g)

        table = _SpectralTable(raw, 0.0, 1.0)
        self._log_c = math.log(2.0 / table.total0)
        self._inner = SpectralDensityFamily(
            lambda w: self._log_c + raw(w), 0.0, 1.0, (0.0, 0.0), name="gammavarying",
            exact_moment=1.0)

    @property
    def normalising_constant(self):
        return math.exp(self._log_c)

    @property
    def tail_scale(self):
        return math.exp(self._log_c - self.kappa)

    def log_spectral_density(self, w):
        return self._inner.log_spectral_density(w)

    def v(self, x, y):
        return self._inner.v(x, y)

    def v1(self, x, y):
        return self._inner.v1(x, y)

    def log_cond_survivor(self, y, x):
        return self._inner.log_cond_survivor(y, x)

    def tail_class(self):
        return TailClass("gamma", gamma=self.gamma, kappa=self.kappa, delta=self.delta,
                         scale=self.tail_scale)

    def auxiliary(self, w):
        """Auxiliary function (kappa gamma)**-1 w**(1 + gamma) of the tail."""
        return np.asarray(w, dtype=float) ** (1 + self.gamma) / (self.kappa * self.gamma)


# ---------------------------------------------------------------------------
# catalog, parsing, module-level operations

FAMILIES = {cls.family_id: cls for cls in (
    Smith, Schlather, ExtremalT, MixedLogistic, AsymmetricLogistic, AsymmetricMixed,
    MarshallOlkin, Logistic, GammaVarying)}

# user-facing parameter spellings
_ALIASES = {"lambda": "lam"}

#: three parameter settings per family used by the validation suites
CATALOG_SETTINGS = {
    "smith": [dict(lam=0.3), dict(lam=1.3), dict(lam=3.0)],
    "schlather": [dict(rho=-0.5), dict(rho=0.0), dict(rho=0.7)],
    "extremalt": [dict(nu=1.0, rho=0.0), dict(nu=3.0, rho=0.5), dict(nu=8.0, rho=-0.3)],
    "mixedlogistic": [dict(theta=0.2), dict(theta=0.5), dict(theta=0.9)],
    "asymmetriclogistic": [dict(theta=0.6, phi=0.8, alpha=0.5),
                           dict(theta=0.3, phi=1.0, alpha=0.4),
                           dict(theta=1.0, phi=0.5, alpha=0.7)],
    "asymmetricmixed": [dict(theta=0.4, phi=0.1), dict(theta=0.6, phi=0.2),
                        dict(theta=1.1, phi=-0.1)],
    "marshallolkin": [dict(alpha=0.2), dict(alpha=0.5), dict(alpha=1.0)],
    "logistic": [dict(alpha=0.3), dict(alpha=0.6), dict(alpha=0.9)],
    "gammavarying": [dict(gamma=0.5, kappa=1.0, delta=0.0),
                     dict(gamma=1.0, kappa=1.0, delta=0.0),
                     dict(gamma=2.0, kappa=0.5, delta=1.0)],
}


def make_family(family_id: str, **params) -> ExponentFamily:
    key = family_id.lower().replace("_", "").replace("-", "")
    if key not in FAMILIES:
        raise ParameterError(f"unknown family {family_id!r}; known: {sorted(FAMILIES)}")
    params = {_ALIASES.get(k, k): v for k, v in params.items()}
    return FAMILIES[key](**params)


def parse_family(text: str) -> ExponentFamily:
    """Parse ``"family=smith lambda=1.3"`` style specifications."""
    fields = {}
    for token in text.replace(",", " ").split():
        if "=" not in token:
            raise ParameterError(f"malformed token {token!r} in family spec")
        k, val = token.split("=", 1)
        fields[k.strip().lower()] = val.strip()
    if "family" not in fields:
        raise ParameterError("family spec needs a 'family=' field")
    name = fields.pop("family")
    try:
        params = {k: float(val) for k, val in fields.items()}
    except ValueError as exc:
        raise ParameterError(f"non-numeric parameter in {text!r}") from exc
    return make_family(name, **params)


def family_from_dict(d: dict) -> ExponentFamily:
    return make_family(d["family_id"], **d["params"])


def catalog(settings=CATALOG_SETTINGS):
    """All catalog families at their reference parameter settings."""
    return [make_family(name, **p) for name, plist in settings.items() for p in plist]


def v(fam: ExponentFamily, x, y):
    _check_positive(x, y)
    return fam.v(x, y)


def v1(fam: ExponentFamily, x, y):
    _check_positive(x, y)
    return fam.v1(x, y)


def spectral_density(fam: ExponentFamily, w):
    """h(w) on the interior of the support, zero outside."""
    w = np.asarray(w, dtype=float)
    inside = (w > fam.w_lower) & (w < fam.w_upper)
    with np.errstate(all="ignore"):
        val = fam.spectral_density(np.where(inside, w, 0.5))
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def atom_masses(fam: ExponentFamily) -> tuple:
    return fam.atom_masses()


def eta(fam: ExponentFamily) -> float:
    """Coefficient of tail dependence 1 / V(1, 1)."""
    return 1.0 / float(fam.v(1.0, 1.0))


def gaussian_gaussian_atom(rho_h: float) -> float:
    """Spectral mass at zero of the Gaussian-Gaussian model, (1 - rho(h)) / 2."""
    if not -1 <= rho_h <= 1:
        raise ParameterError("correlation must lie in [-1, 1]")
    return (1 - rho_h) / 2


def numerical_v1(fam: ExponentFamily, x, y, rel_step=1e-6):
    """Central difference of V in x with one Richardson step."""
    x, y = float(x), float(y)
    h = rel_step * max(x, 1.0)

    def d(step):
        return (float(fam.v(x + step, y)) - float(fam.v(x - step, y))) / (2 * step)

    return (4 * d(h) - d(2 * h)) / 3


@dataclass
class ValidationReport:
    family: str
    total_mass: float
    moment: float
    mass_violation: float
    moment_violation: float
    passed: bool
    degenerate: bool = False
    notes: list = field(default_factory=list)

    @property
    def max_violation(self):
        return max(self.mass_violation, self.moment_violation)


def _density_moments(fam, spec):
    lo, hi = fam.w_lower, fam.w_upper
    width = hi - lo

    def integrand(s, power):
        # logit substitution w = lo + width * expit(s)
        lw_e, l1w_e = -np.logaddexp(0, -s), -np.logaddexp(0, s)
        w = lo + width * sps.expit(s)
        logjac = math.log(width) + lw_e + l1w_e
        with np.errstate(all="ignore"):
            if lo == 0 and hi == 1:
                val = float(fam.log_density_parts(np.array([lw_e]), np.array([l1w_e]))[0])
            elif lo < w < hi:
                val = float(fam.log_spectral_density(np.array([w]))[0])
            else:
                return 0.0
            val += logjac
        return math.exp(val) * w**power if val > -745 else 0.0

    mass = moment = 0.0
    for a, b in [(-np.inf, 0.0), (0.0, np.inf)]:
        mass += integrate(lambda s: integrand(s, 0), a, b, spec)[0]
        moment += integrate(lambda s: integrand(s, 1), a, b, spec)[0]
    return mass, moment


def validate(fam: ExponentFamily, spec: QuadratureSpec | None = None,
             tol: float = 1e-6) -> ValidationReport:
    """Check total mass 2 and the moment constraint by quadrature plus atoms."""
    spec = spec or QuadratureSpec(1e-13, 1e-11, 500)
    notes = []
    degenerate = fam.w_lower >= fam.w_upper
    if degenerate:
        notes.append("degenerate: w_lower = w_upper = 1/2 (perfect dependence), "
                     "outside the conditional limit theory")
        mass, moment = 0.0, 0.0
        h_lo, h_hi = fam.atom_masses()
        # the coinciding end-point atoms describe one point mass of 2 at 1/2
        mass, moment = h_lo, fam.w_lower * h_lo
    else:
        mass, moment = _density_moments(fam, spec)
        h_lo, h_hi = fam.atom_masses()
        mass += h_lo + h_hi
        moment += fam.w_lower * h_lo + fam.w_upper * h_hi
        for w, m in fam.interior_atoms().items():
            mass += m
            moment += w * m
    mv, mo = abs(mass - 2.0), abs(moment - 1.0)
    return ValidationReport(fam.family_id, mass, moment, mv, mo,
                            passed=(mv <= tol and mo <= tol), degenerate=degenerate,
                            notes=notes)
