"""Conditional-extremes normalisations a(x), b(x) and limit laws G.

For (X, Y) inverted max-stable in exponential margins,

    Pr{Y < a(x) + b(x) z | X = x} -> G(z)   as x -> infinity,

with (a, b, G) determined by the lower tail of the spectral measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sps

from .exponent import ExponentFamily, TailClass, UnsupportedTailError
from .variation import (VariationReport, gamma_variation_check,  # noqa: F401
                        lemma2_expansion_check, slowly_varying_condition)

_SQRT2 = math.sqrt(2.0)


def _positive_array(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("norming functions are defined for x > 0")
    return x


@dataclass(frozen=True)
class NormingPair:
    """Location and scale normalisation.

    ``kind`` is one of ``canonical``, ``regular_tail``, ``lower_atom``,
    ``smith`` or ``gamma``; ``params`` holds the defining constants.
    """

    kind: str
    params: dict = field(default_factory=dict)
    slowly_varying: object = None

    # constructors
    @classmethod
    def canonical(cls, alpha, beta):
        if not 0 <= alpha <= 1 or not beta < 1:
            raise ValueError("canonical norming needs alpha in [0, 1] and beta < 1")
        return cls("canonical", {"alpha": float(alpha), "beta": float(beta)})

    @classmethod
    def regular_tail(cls, w_lower, t, L):
        return cls("regular_tail", {"w_lower": float(w_lower), "t": float(t)}, L)

    @classmethod
    def lower_atom(cls, w_lower, atom):
        return cls("lower_atom", {"w_lower": float(w_lower), "atom": float(atom)})

    @classmethod
    def smith(cls, lam):
        return cls("smith", {"lam": float(lam)})

    @classmethod
    def gamma_varying(cls, gamma, kappa, delta, ratio_correction=False):
        """Gamma-varying tail normings.

        The default location solves the tail equation in y/x, while the
        conditional law depends on c = y/(x + y). With
        ``ratio_correction=True`` the location is mapped back through
        y/x = c/(1 - c), which removes a shift of order
        (log x)**(1 - 1/gamma) that does not vanish for gamma >= 1.
        """
        return cls("gamma", {"gamma": float(gamma), "kappa": float(kappa),
                             "delta": float(delta),
                             "ratio_correction": bool(ratio_correction)})

    def a(self, x):
        x = _positive_array(x)
        p = self.params
        if self.kind == "canonical":
            out = p["alpha"] * x
        elif self.kind in ("regular_tail", "lower_atom"):
            out = p["w_lower"] / (1 - p["w_lower"]) * x
        elif self.kind == "smith":
            lam = p["lam"]
            lx = np.log(x)
            root = np.sqrt(2 * lx)
            out = x * np.exp(-lam * root + lam * np.log(lx) / root + lam**2 / 2)
        elif self.kind == "gamma":
            g, k, d = p["gamma"], p["kappa"], p["delta"]
            lx = np.log(x)
            out = (x * k ** (1 / g) * lx ** (-1 / g)
                   * (1 + (d + 2 * (1 + g)) / g**2 * np.log(lx) / lx))
            if p.get("ratio_correction"):
                c = out / x
                with np.errstate(divide="ignore", invalid="ignore"):
                    out = np.where(c < 1, out / (1 - c), np.nan)
        else:
            raise ValueError(f"unknown norming kind {self.kind}")
        return float(out) if out.ndim == 0 else out

    def b(self, x):
        x = _positive_array(x)
        p = self.params
        if self.kind == "canonical":
            out = x ** p["beta"]
        elif self.kind == "regular_tail":
            t = p["t"]
            out = (x ** ((t + 1) / (t + 2))
                   * np.asarray(self.slowly_varying(x ** (-1 / (t + 2))), dtype=float)
                   ** (-1 / (t + 2)))
        elif self.kind == "lower_atom":
            out = np.ones_like(x)
        elif self.kind == "smith":
            out = np.asarray(self.a(x)) / np.sqrt(np.log(x))
        elif self.kind == "gamma":
            g = p["gamma"]
            out = x * np.log(x) ** (-1 - 1 / g)
            if p.get("ratio_correction"):
                c = np.asarray(NormingPair.gamma_varying(g, p["kappa"], p["delta"]).a(x)) / x
                with np.errstate(divide="ignore", invalid="ignore"):
                    out = np.where(c < 1, out / (1 - c) ** 2, np.nan)
        else:
            raise ValueError(f"unknown norming kind {self.kind}")
        return float(out) if np.ndim(out) == 0 else out

    def canonical_reduction(self):
        """Canonical pair (alpha, beta) of a regular-variation norming.

        The constant of the slowly varying function is absorbed into G.
        """
        if self.kind == "canonical":
            return self
        if self.kind == "regular_tail":
            wl, t = self.params["w_lower"], self.params["t"]
            return NormingPair.canonical(wl / (1 - wl), (t + 1) / (t + 2))
        if self.kind == "lower_atom":
            wl = self.params["w_lower"]
            return NormingPair.canonical(wl / (1 - wl), 0.0)
        raise ValueError(f"{self.kind} norming is not of canonical form")


@dataclass(frozen=True)
class LimitLaw:
    """Limit distribution G of the normalised conditional variable.

    ``kind`` is one of ``weibull`` (s, t), ``regular_tail`` (w_lower, t),
    ``lower_atom`` (w_lower, atom), ``smith`` (lam), ``gamma``
    (gamma, kappa, delta, scale) or ``working_normal`` (mu, sigma).
    """

    kind: str
    params: dict = field(default_factory=dict)

    # G(z) = 1 - c0 * exp(-k z**m) on z > 0 for the Weibull-type kinds
    def _weibull_constants(self):
        p = self.params
        if self.kind == "weibull":
            t = p["t"]
            return p["s"] / ((t + 1) * (t + 2)), t + 2
        t, wl = p["t"], p["w_lower"]
        return (1 - wl) ** (3 + 2 * t) / ((t + 1) * (t + 2)), t + 2

    def _gumbel_constants(self):
        p = self.params
        if self.kind == "smith":
            lam = p["lam"]
            return lam / math.sqrt(8 * math.pi), _SQRT2 / lam
        g, k, d = p["gamma"], p["kappa"], p["delta"]
        return p.get("scale", 1.0) * k ** ((d + 2) / g) / g**2, g * k ** (-1 / g)

    @property
    def atom_at_zero(self) -> float:
        if self.kind == "lower_atom":
            return self.params["w_lower"] * self.params["atom"]
        return 0.0

    def log_survivor(self, z):
        """log{1 - G(z)}."""
        z = np.asarray(z, dtype=float)
        p = self.params
        with np.errstate(divide="ignore", over="ignore"):
            if self.kind in ("weibull", "regular_tail"):
                k, m = self._weibull_constants()
                out = np.where(z > 0, -k * np.maximum(z, 0) ** m, 0.0)
            elif self.kind == "lower_atom":
                wl, h = p["w_lower"], p["atom"]
                out = np.where(z >= 0, math.log1p(-wl * h) - (1 - wl) * h * z, 0.0)
            elif self.kind in ("smith", "gamma"):
                k, d = self._gumbel_constants()
                out = -k * np.exp(d * z)
            elif self.kind == "working_normal":
                out = sps.log_ndtr(-(z - p["mu"]) / p["sigma"])
            else:
                raise ValueError(f"unknown limit law {self.kind}")
        return float(out) if out.ndim == 0 else out

    def cdf(self, z):
        out = -np.expm1(self.log_survivor(z))
        return float(out) if np.ndim(out) == 0 else out

    def quantile(self, prob):
        prob = np.asarray(prob, dtype=float)
        if np.any((prob <= 0) | (prob >= 1)):
            raise ValueError("probabilities must lie in (0, 1)")
        p = self.params
        e = -np.log1p(-prob)  # unit exponential quantile
        if self.kind in ("weibull", "regular_tail"):
            k, m = self._weibull_constants()
            out = (e / k) ** (1 / m)
        elif self.kind == "lower_atom":
            wl, h = p["w_lower"], p["atom"]
            out = np.maximum((e + math.log1p(-wl * h)) / ((1 - wl) * h), 0.0)
        elif self.kind in ("smith", "gamma"):
            k, d = self._gumbel_constants()
            out = (np.log(e) - math.log(k)) / d
        elif self.kind == "working_normal":
            out = p["mu"] + p["sigma"] * sps.ndtri(prob)
        else:
            raise ValueError(f"unknown limit law {self.kind}")
        return float(out) if np.ndim(out) == 0 else out


def norming_for(fam: ExponentFamily) -> NormingPair:
    tc = fam.tail_class()
    if tc.kind == "atom":
        return NormingPair.lower_atom(tc.w_lower, tc.atom)
    if tc.kind == "regular":
        return NormingPair.regular_tail(tc.w_lower, tc.t, tc.slowly_varying)
    if tc.kind == "smith":
        return NormingPair.smith(tc.lam)
    if tc.kind == "gamma":
        if tc.w_lower != 0:
            raise UnsupportedTailError("Gamma-varying normings need w_lower = 0")
        return NormingPair.gamma_varying(tc.gamma, tc.kappa, tc.delta)
    raise UnsupportedTailError(f"{fam!r}: tail class {tc.kind!r} has no normalisation")


def limit_law_for(fam: ExponentFamily) -> LimitLaw:
    tc = fam.tail_class()
    if tc.kind == "atom":
        return LimitLaw("lower_atom", {"w_lower": tc.w_lower, "atom": tc.atom})
    if tc.kind == "regular":
        return LimitLaw("regular_tail", {"w_lower": tc.w_lower, "t": tc.t})
    if tc.kind == "smith":
        return LimitLaw("smith", {"lam": tc.lam})
    if tc.kind == "gamma":
        if tc.w_lower != 0:
            raise UnsupportedTailError("Gamma-varying limit needs w_lower = 0")
        return LimitLaw("gamma", {"gamma": tc.gamma, "kappa": tc.kappa,
                                  "delta": tc.delta, "scale": tc.scale})
    raise UnsupportedTailError(f"{fam!r}: tail class {tc.kind!r} has no limit law")


def weibull_limit(s, t) -> LimitLaw:
    """Limit law paired with the canonical norming when L is the constant s."""
    return LimitLaw("weibull", {"s": float(s), "t": float(t)})


# ---------------------------------------------------------------------------
# asymptotics and convergence diagnostics

def asymptotic_log_survivor(fam: ExponentFamily, x, y):
    """Leading-order approximation of log Pr(Y > y | X = x) for large x."""
    x = _positive_array(x)
    y = _positive_array(y)
    tc = fam.tail_class()
    c = y / (x + y)
    if tc.kind == "atom":
        wl, h = tc.w_lower, tc.atom
        out = math.log1p(-wl * h) - (x + y) * (c - wl) * h
    elif tc.kind == "regular":
        wl, t = tc.w_lower, tc.t
        d = c - wl
        out = -x * tc.slowly_varying(d) * d ** (t + 2) / ((1 - wl) * (t + 1) * (t + 2))
    elif tc.kind == "smith":
        lam = tc.lam
        q = np.log(y / x) / lam
        const = lam * math.exp(-lam**2 / 8)
        out = -const * np.sqrt(x * y) * np.exp(-0.5 * q * q) / math.sqrt(2 * math.pi) / q**2
    elif tc.kind == "gamma":
        f = c ** (1 + tc.gamma) / (tc.kappa * tc.gamma)
        out = -(x + y) * f**2 * np.exp(fam.log_spectral_density(c))
    else:
        raise UnsupportedTailError(f"{fam!r}: no asymptotic form for {tc.kind!r}")
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def normalized_conditional_cdf(fam: ExponentFamily, u, z, norming=None):
    """Pr{(Y - a(u))/b(u) <= z | X = u} from the exact conditional law."""
    norming = norming or norming_for(fam)
    z = np.asarray(z, dtype=float)
    y = norming.a(u) + norming.b(u) * z
    out = np.zeros_like(y)
    pos = y > 0
    with np.errstate(all="ignore"):
        ls = np.minimum(fam.log_cond_survivor(y[pos], np.full(pos.sum(), float(u))), 0.0)
    out[pos] = -np.expm1(ls)
    return out


def limit_distance(fam: ExponentFamily, u, norming=None, law=None, n_grid=512):
    """Sup distance D(u) between the normalised conditional law and G.

    The supremum is taken over ``n_grid`` points spanning the 0.001 to
    0.999 quantiles of G.
    """
    norming = norming or norming_for(fam)
    law = law or limit_law_for(fam)
    z = np.linspace(law.quantile(0.001), law.quantile(0.999), n_grid)
    exact = normalized_conditional_cdf(fam, u, z, norming)
    return float(np.max(np.abs(exact - law.cdf(z))))


#: conditioning levels -log(1 - p) for p in {0.95, 1 - 1e-7, 1 - 1e-13}
REFERENCE_LEVELS = tuple(float(-np.log(p)) for p in (0.05, 1e-7, 1e-13))


def convergence_table(fam: ExponentFamily, levels=REFERENCE_LEVELS, n_grid=512):
    """D(u) along ``levels`` together with the rate-scaled values.

    The rate scalings are sqrt(log u)/log log u for the Smith tail and
    log u/log log u for Gamma-varying tails.
    """
    u = np.asarray(levels, dtype=float)
    d = np.array([limit_distance(fam, ui, n_grid=n_grid) for ui in u])
    tc = fam.tail_class()
    if tc.kind == "smith":
        scaled = d * np.sqrt(np.log(u)) / np.log(np.log(u))
    elif tc.kind == "gamma":
        scaled = d * np.log(u) / np.log(np.log(u))
    else:
        scaled = np.full_like(d, np.nan)
    return {"u": u, "D": d, "scaled": scaled}


@dataclass
class PsiReport:
    t: np.ndarray
    x: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray


def ht_psi_check(np_: NormingPair, x_grid, t_grid=(1e2, 1e3, 1e4)) -> PsiReport:
    """Estimates of psi1(x) = lim b(t+x)/b(t), psi2(x) = lim {a(t+x)-a(t)}/b(t)."""
    t = np.asarray(t_grid, dtype=float)[:, None]
    x = np.asarray(x_grid, dtype=float)[None, :]
    bt = np.asarray(np_.b(t))
    psi1 = np.asarray(np_.b(t + x)) / bt
    psi2 = (np.asarray(np_.a(t + x)) - np.asarray(np_.a(t))) / bt
    return PsiReport(t.ravel(), x.ravel(), psi1, psi2)


def boundary_limit_errors(fam: ExponentFamily, x_values=(1e2, 1e4, 1e6), path="sqrt",
                          y0=1.0):
    """|V1(1, x/y) - (w_l H({w_l}) - 1)| as y/(x+y) decreases to w_l.

    ``path="sqrt"`` follows y = w_l (x + y) + (x + y)**0.5; ``path="offset"``
    follows y = w_l x/(1 - w_l) + y0.
    """
    x = np.asarray(x_values, dtype=float)
    wl = fam.w_lower
    if path == "sqrt":
        # with s = x + y: (1 - w_l) s - sqrt(s) = x
        root = (1 + np.sqrt(1 + 4 * (1 - wl) * x)) / (2 * (1 - wl))
        y = wl * root**2 + root
    elif path == "offset":
        y = wl / (1 - wl) * x + y0
    else:
        raise ValueError(f"unknown path {path!r}")
    target = wl * fam.atom_masses()[0] - 1.0
    return np.abs(np.asarray(fam.v1(1.0, x / y)) - target)
