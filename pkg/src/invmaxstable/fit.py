"""Pseudo-likelihood fitting of conditional-extremes models.

Given pairs (x_i, y_i) with x_i above a threshold u, the residual law is
treated as Normal(mu, sigma^2) during fitting only:

    nll = sum log b(x_i) + log sigma + (y_i - a(x_i) - b(x_i) mu)^2 / (2 b(x_i)^2 sigma^2).

Quantile curves then use empirical residual quantiles,
q_p(x) = a(x) + b(x) z_p, so the normal working assumption does not enter
the final estimates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import expit, logit

from .exponent import Smith
from .ims import ImsDistribution, conditional_quantile_exact
from .norming import NormingPair
from .numerics import minimize, std_normal_ppf
from .simulate import SampleSet, replicate

QUANTILE_METHOD = "linear"  # Hyndman-Fan type 7
BETA_MAX = 0.999
MIN_EXCEEDANCES = 30
FIGURE_PROBS = (0.025, 0.5, 0.975)

PARAM_NAMES = {
    "canonical": ("alpha", "beta", "mu", "sigma"),
    "smith": ("lam", "mu", "sigma"),
    "gamma": ("gamma", "kappa", "delta", "mu", "sigma"),
}
_KIND_ALIASES = {"canonical": "canonical", "canonicalht": "canonical",
                 "smith": "smith", "smithnorming": "smith",
                 "gamma": "gamma", "gammanorming": "gamma"}


class FitDataError(ValueError):
    """Data unsuitable for fitting (too few exceedances, degenerate values)."""


class FitStateError(RuntimeError):
    """Operation needs residuals that the fit does not have."""


def model_kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind.lower().replace("_", "").replace("-", "")]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of "
                         f"{sorted(PARAM_NAMES)}") from None


@dataclass
class ConditionalModelSpec:
    """Model kind and its parameter values (natural scale)."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = model_kind(self.kind)
        if self.params:
            missing = set(PARAM_NAMES[self.kind]) - set(self.params)
            if missing:
                raise ValueError(f"missing parameters {sorted(missing)}")
            self.check()

    def check(self):
        p = self.params
        if not p["sigma"] > 0:
            raise ValueError("sigma must be positive")
        if self.kind == "canonical" and not (0 <= p["alpha"] <= 1 and p["beta"] < 1):
            raise ValueError("canonical model needs alpha in [0, 1] and beta < 1")
        if self.kind == "smith" and not p["lam"] > 0:
            raise ValueError("lam must be positive")
        if self.kind == "gamma" and not (p["gamma"] > 0 and p["kappa"] > 0):
            raise ValueError("gamma and kappa must be positive")

    @property
    def names(self):
        return PARAM_NAMES[self.kind]

    def norming(self) -> NormingPair:
        p = self.params
        if self.kind == "canonical":
            return NormingPair.canonical(p["alpha"], p["beta"])
        if self.kind == "smith":
            return NormingPair.smith(p["lam"])
        return NormingPair.gamma_varying(p["gamma"], p["kappa"], p["delta"])

    # unconstrained <-> natural
    def to_natural(self, theta) -> dict:
        th = np.asarray(theta, dtype=float)
        if self.kind == "canonical":
            vals = (expit(th[0]), BETA_MAX - math.exp(th[1]), th[2], math.exp(th[3]))
        elif self.kind == "smith":
            vals = (math.exp(th[0]), th[1], math.exp(th[2]))
        else:
            vals = (math.exp(th[0]), math.exp(th[1]), th[2], th[3], math.exp(th[4]))
        return {k: float(v) for k, v in zip(self.names, vals)}

    def to_unconstrained(self, params: dict) -> np.ndarray:
        p = params
        if self.kind == "canonical":
            beta = min(p["beta"], BETA_MAX - 1e-6)
            vals = (logit(p["alpha"]), math.log(BETA_MAX - beta), p["mu"], math.log(p["sigma"]))
        elif self.kind == "smith":
            vals = (math.log(p["lam"]), p["mu"], math.log(p["sigma"]))
        else:
            vals = (math.log(p["gamma"]), math.log(p["kappa"]), p["delta"], p["mu"],
                    math.log(p["sigma"]))
        return np.asarray(vals, dtype=float)


def _norming_values(spec: ConditionalModelSpec, x):
    nm = spec.norming()
    with np.errstate(all="ignore"):
        return np.asarray(nm.a(x), dtype=float), np.asarray(nm.b(x), dtype=float)


def negative_log_likelihood(spec: ConditionalModelSpec, x, y) -> float:
    """Working-normal negative log pseudo-likelihood (constants dropped)."""
    a, b = _norming_values(spec, x)
    mu, sigma = spec.params["mu"], spec.params["sigma"]
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(b > 0)):
        return math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        r = (y - a - b * mu) / (b * sigma)
        val = float(np.sum(np.log(b) + math.log(sigma) + 0.5 * r * r))
    return val if math.isfinite(val) else math.inf


def profile_mu_sigma(spec: ConditionalModelSpec, x, y):
    """Closed-form (mu, sigma) minimising the nll with the norming held fixed."""
    a, b = _norming_values(spec, x)
    z = (np.asarray(y) - a) / b
    mu = float(np.mean(z))
    return mu, float(np.sqrt(np.mean((z - mu) ** 2)))


@dataclass
class ConditionalFit:
    spec: ConditionalModelSpec
    threshold_u: float
    residuals: np.ndarray
    nll: float
    converged: bool
    n_exceed: int
    threshold_quantile: float = math.nan
    restart_values: list = field(default_factory=list)
    init: dict = field(default_factory=dict)

    def a(self, x):
        return self.spec.norming().a(x)

    def b(self, x):
        return self.spec.norming().b(x)

    def residual_quantiles(self, probs):
        if self.residuals.size == 0:
            raise FitStateError("fit has no residuals")
        return np.quantile(self.residuals, np.asarray(probs, dtype=float),
                           method=QUANTILE_METHOD)

    def to_json(self, probs=(0.025, 0.05, 0.25, 0.5, 0.75, 0.95, 0.975)) -> dict:
        rq = self.residual_quantiles(probs)
        return {
            "model": self.spec.kind,
            "estimates": dict(self.spec.params),
            "stderr": None,
            "nll": self.nll if math.isfinite(self.nll) else None,
            "converged": self.converged,
            "threshold": self.threshold_u,
            "threshold_quantile": self.threshold_quantile,
            "n_exceed": self.n_exceed,
            "residual_quantiles": {f"{p:g}": float(q) for p, q in zip(probs, rq)},
            "quantile_method": "type-7",
            "initial_values": self.init,
            "restart_nll": self.restart_values,
        }


def _pairs(data):
    pairs = data.pairs if isinstance(data, SampleSet) else np.asarray(data, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise FitDataError("data must be an (n, 2) array of (x, y) pairs")
    return pairs


def threshold_from_quantile(x, q, empirical=False) -> float:
    if not 0 < q < 1:
        raise ValueError("threshold quantile must lie in (0, 1)")
    if empirical:
        return float(np.quantile(x, q, method=QUANTILE_METHOD))
    return -math.log1p(-q)


def eta_hat(pairs) -> float:
    """Tail dependence coefficient from the diagonal.

    min(X, Y) has survivor exp(-t/eta) in the diagonal tail, so by the
    memoryless property its excess over the sample median has mean eta.
    """
    m = np.minimum(pairs[:, 0], pairs[:, 1])
    med = np.median(m)
    exc = m[m > med] - med
    return float(np.mean(exc)) if exc.size else math.nan


def initialize_parameters(x, y, kind, sample=None) -> dict:
    """Starting values on the natural scale.

    Args:
        x, y: exceedance pairs.
        kind: model kind.
        sample: full (n, 2) sample for the diagonal eta estimate (Smith model);
            the exceedances are used when omitted.

    Raises:
        FitDataError: empty input or all ``y`` equal.
    """
    kind = model_kind(kind)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0:
        raise FitDataError("no exceedances")
    if np.ptp(y) == 0:
        raise FitDataError("all y values are equal")
    if kind == "canonical":
        rho = stats.spearmanr(x, y)[0] if x.size > 1 and np.ptp(x) > 0 else 0.0
        alpha0 = float(np.clip(np.nan_to_num(rho), 0.05, 0.95))
        beta0 = 0.2
        return {"alpha": alpha0, "beta": beta0, "mu": 0.0,
                "sigma": float(np.std(y / x**beta0, ddof=1))}
    pairs = np.column_stack([x, y]) if sample is None else np.asarray(sample, dtype=float)
    if kind == "smith":
        eta = eta_hat(pairs)
        lam0 = 1.0
        if 0.5 < eta < 1:
            lam0 = 2 * float(std_normal_ppf(1 / (2 * eta)))
        spec = ConditionalModelSpec("smith", {"lam": lam0, "mu": 0.0, "sigma": 1.0})
    else:
        spec = ConditionalModelSpec("gamma", {"gamma": 1.0, "kappa": 1.0, "delta": 0.0,
                                              "mu": 0.0, "sigma": 1.0})
    mu0, sigma0 = profile_mu_sigma(spec, x, y)
    if not (math.isfinite(mu0) and sigma0 > 0):
        mu0, sigma0 = 0.0, float(np.std(y, ddof=1))
    return dict(spec.params, mu=mu0, sigma=sigma0)


def fit_model(data, kind, threshold_quantile=0.935, empirical_threshold=False,
              init=None) -> ConditionalFit:
    """Fit a conditional-extremes model to pairs with x above the threshold.

    Args:
        data: SampleSet or (n, 2) array in exponential margins.
        kind: ``canonical``, ``smith`` or ``gamma``.
        threshold_quantile: u = -log(1 - q), or the empirical q-quantile of x
            when ``empirical_threshold`` is set.
        init: optional starting values overriding the defaults.

    Raises:
        FitDataError: fewer than 30 exceedances or degenerate data.
    """
    kind = model_kind(kind)
    pairs = _pairs(data)
    u = threshold_from_quantile(pairs[:, 0], threshold_quantile, empirical_threshold)
    keep = pairs[:, 0] > u
    x, y = pairs[keep, 0], pairs[keep, 1]
    if x.size < MIN_EXCEEDANCES:
        raise FitDataError(f"only {x.size} exceedances above u={u:.6g}; "
                           f"need at least {MIN_EXCEEDANCES}")
    start = dict(init) if init else initialize_parameters(x, y, kind, sample=pairs)
    spec = ConditionalModelSpec(kind, start)

    def objective(theta):
        try:
            trial = ConditionalModelSpec(kind, spec.to_natural(theta))
        except (ValueError, OverflowError):
            return math.inf
        return negative_log_likelihood(trial, x, y)

    res = minimize(objective, spec.to_unconstrained(start),
                   scale=np.full(len(spec.names), 0.5))
    fitted = ConditionalModelSpec(kind, spec.to_natural(res.x))
    a, b = _norming_values(fitted, x)
    residuals = (y - a) / b
    return ConditionalFit(fitted, u, residuals, float(res.fun),
                          bool(res.converged and math.isfinite(res.fun)), int(x.size),
                          float(threshold_quantile), list(res.restart_values), start)


# ---------------------------------------------------------------------------
# quantile curves

@dataclass
class QuantileCurve:
    prob: float
    x_grid: np.ndarray
    values: np.ndarray


def _check_grid(x_grid, u=None):
    xg = np.asarray(x_grid, dtype=float)
    if xg.ndim != 1 or xg.size == 0 or np.any(np.diff(xg) <= 0) or np.any(xg <= 0):
        raise ValueError("x_grid must be increasing positive values")
    if u is not None and np.any(xg < u * (1 - 1e-12)):
        raise ValueError(f"x_grid must lie above the threshold u={u:.6g}")
    return xg


def quantile_curves(fit: ConditionalFit, probs, x_grid):
    """q_p(x) = a(x) + b(x) z_p with z_p the type-7 residual quantile."""
    probs = [float(p) for p in probs]
    if any(not 0 < p < 1 for p in probs):
        raise ValueError("probabilities must lie in (0, 1)")
    xg = _check_grid(x_grid, fit.threshold_u)
    zq = fit.residual_quantiles(probs)
    a, b = np.asarray(fit.a(xg)), np.asarray(fit.b(xg))
    return [QuantileCurve(p, xg, a + b * z) for p, z in zip(probs, zq)]


def theoretical_curves(d, probs, x_grid):
    """Exact conditional quantiles of Y given X = x."""
    d = d if isinstance(d, ImsDistribution) else ImsDistribution(d)
    xg = _check_grid(x_grid)
    return [QuantileCurve(float(p), xg, np.asarray(conditional_quantile_exact(d, p, xg)))
            for p in probs]


def average_curves(curve_sets):
    """Pointwise mean of curves over replicates (same probs and grid)."""
    first = curve_sets[0]
    out = []
    for j, c in enumerate(first):
        vals = np.mean([cs[j].values for cs in curve_sets], axis=0)
        out.append(QuantileCurve(c.prob, c.x_grid, vals))
    return out


@dataclass
class Discrepancy:
    prob: float
    x_grid: np.ndarray
    fitted: np.ndarray
    exact: np.ndarray
    iqr: np.ndarray

    @property
    def difference(self):
        return self.fitted - self.exact

    @property
    def mean_abs(self) -> float:
        return float(np.mean(np.abs(self.difference)))

    @property
    def mean_abs_relative_iqr(self) -> float:
        return float(np.mean(np.abs(self.difference) / self.iqr))


def compare_to_theory(curves, d):
    """Fitted minus exact quantile per (p, x), with the local conditional IQR."""
    d = d if isinstance(d, ImsDistribution) else ImsDistribution(d)
    out = []
    for c in curves:
        exact = np.asarray(conditional_quantile_exact(d, c.prob, c.x_grid))
        q1 = np.asarray(conditional_quantile_exact(d, 0.25, c.x_grid))
        q3 = np.asarray(conditional_quantile_exact(d, 0.75, c.x_grid))
        out.append(Discrepancy(c.prob, c.x_grid, np.asarray(c.values), exact, q3 - q1))
    return out


def curve_gap_relative_iqr(c1: QuantileCurve, c2: QuantileCurve, d) -> float:
    """Mean over the grid of |c1 - c2| divided by the exact conditional IQR."""
    d = d if isinstance(d, ImsDistribution) else ImsDistribution(d)
    iqr = (np.asarray(conditional_quantile_exact(d, 0.75, c1.x_grid))
           - np.asarray(conditional_quantile_exact(d, 0.25, c1.x_grid)))
    return float(np.mean(np.abs(c1.values - c2.values) / iqr))


# ---------------------------------------------------------------------------
# simulation study driver

@dataclass
class Figure2Result:
    lam: float
    x_grid: np.ndarray
    averaged: dict
    theoretical: list
    discrepancies: dict
    median_gap: float
    n_failed: dict
    n_reps: int


def figure2_grid(threshold_quantile, n, n_points=40):
    u = -math.log1p(-threshold_quantile)
    return np.linspace(u, math.log(n), n_points)


def figure2(lam, reps=100, n=1000, threshold_quantile=0.935, base_seed=2024,
            kinds=("canonical", "smith"), probs=FIGURE_PROBS, n_points=40,
            backend=None) -> Figure2Result:
    """Replicate the Smith simulation study for one lambda.

    Each replicate is fitted with every model kind; quantile curves on a
    common grid from u to log n are averaged over replicates and compared
    with the exact conditional quantiles.
    """
    fam = Smith(lam=lam)
    d = ImsDistribution(fam)
    xg = figure2_grid(threshold_quantile, n, n_points)
    samples = replicate(fam, n, reps, base_seed, backend=backend)
    per_kind = {k: [] for k in kinds}
    failed = {k: 0 for k in kinds}
    for s in samples:
        for k in kinds:
            fit = fit_model(s, k, threshold_quantile)
            if not fit.converged:
                failed[k] += 1
            per_kind[k].append(quantile_curves(fit, probs, xg))
    averaged = {k: average_curves(v) for k, v in per_kind.items()}
    disc = {k: compare_to_theory(v, d) for k, v in averaged.items()}
    gap = math.nan
    if len(kinds) >= 2 and 0.5 in probs:
        j = list(probs).index(0.5)
        gap = curve_gap_relative_iqr(averaged[kinds[0]][j], averaged[kinds[1]][j], d)
    return Figure2Result(float(lam), xg, averaged, theoretical_curves(d, probs, xg),
                         disc, gap, failed, int(reps))
