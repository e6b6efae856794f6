"""Invariant suites shared by the ``verify`` command and the test-suite.

Each suite returns a :class:`SuiteResult` whose records are plain dicts,
so results serialise directly to JSON.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exponent import GammaVarying, catalog, make_family, parse_family, validate
from .ims import log_joint_survivor
from .norming import REFERENCE_LEVELS, boundary_limit_errors, convergence_table
from .variation import (gamma_variation_check, lemma2_expansion_check,
                        slowly_varying_condition)


@dataclass
class SuiteResult:
    name: str
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.records)

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "records": self.records}


def _clean(v):
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _record(**kw):
    return {k: _clean(v) for k, v in kw.items()}


# ---------------------------------------------------------------------------

def moment_suite(families=None, tol=1e-6) -> SuiteResult:
    """Total mass 2 and mean 1 of the spectral measure."""
    res = SuiteResult("moment")
    for fam in families or catalog():
        rep = validate(fam, tol=tol)
        res.records.append(_record(family=str(fam), total_mass=rep.total_mass,
                                   moment=rep.moment, max_violation=rep.max_violation,
                                   passed=rep.passed, notes=rep.notes))
    return res


def eta_from_diagonal(fam, q=None) -> float:
    """eta from a least-squares slope of log Pr(X > q, Y > q) against q."""
    q = np.linspace(10.0, 30.0, 21) if q is None else np.asarray(q, dtype=float)
    slope = np.polyfit(q, log_joint_survivor(fam, q, q), 1)[0]
    return float(-1.0 / slope)


def eta_suite(families=None, tol=1e-3) -> SuiteResult:
    res = SuiteResult("eta")
    for fam in families or catalog():
        exact = 1.0 / float(fam.v(1.0, 1.0))
        est = eta_from_diagonal(fam)
        res.records.append(_record(family=str(fam), eta=exact, eta_diagonal=est,
                                   error=abs(exact - est), passed=abs(exact - est) <= tol))
    return res


BOUNDARY_FAMILIES = ("family=smith lambda=1.3", "family=schlather rho=0.0",
                     "family=mixedlogistic theta=0.5")
BOUNDARY_X = (1e2, 1e4, 1e6)


def boundary_suite(families=None, x_values=BOUNDARY_X) -> SuiteResult:
    """V1(1, x/y) along y = w_l (x + y) + (x + y)**0.5 approaches w_l H({w_l}) - 1.

    Passes when the errors strictly decrease along the sweep (or vanish)
    and the last is at most a tenth of the middle one.
    """
    res = SuiteResult("lemma1")
    fams = families or [parse_family(s) for s in BOUNDARY_FAMILIES]
    for fam in fams:
        err = np.asarray(boundary_limit_errors(fam, x_values))
        decreasing = bool(np.all((np.diff(err) < 0) | (err[1:] == 0)))
        ok = decreasing and err[-1] <= err[-2] / 10
        res.records.append(_record(family=str(fam), x=list(x_values), errors=err,
                                   passed=ok))
    return res


CONVERGENCE_FAMILIES = ("family=logistic alpha=0.5", "family=schlather rho=0.0",
                        "family=smith lambda=1.3",
                        "family=gammavarying gamma=1.0 kappa=1.0 delta=0.0")
RATE_FACTOR = 5.0


def convergence_suite(families=None, levels=REFERENCE_LEVELS) -> SuiteResult:
    """D(u) decreases across the reference levels; rate-scaled D varies < 5x."""
    res = SuiteResult("convergence")
    fams = families or [parse_family(s) for s in CONVERGENCE_FAMILIES]
    for fam in fams:
        tab = convergence_table(fam, levels)
        d, scaled = tab["D"], tab["scaled"]
        decreasing = bool(np.all(np.diff(d) < 0))
        rate_ok, spread = True, None
        if np.all(np.isfinite(scaled)):
            spread = float(scaled.max() / scaled.min())
            rate_ok = spread < RATE_FACTOR
        res.records.append(_record(family=str(fam), tail=fam.tail_class().kind,
                                   u=tab["u"], D=d, scaled=scaled, decreasing=decreasing,
                                   rate_spread=spread, passed=decreasing and rate_ok))
    return res


def _iterated_log(k):
    def L(w):
        v = -math.log(w)
        for _ in range(k):
            v = math.log(v)
        return v
    return L


#: slowly varying examples: (label, L, expected to satisfy the condition)
SLOW_EXAMPLES = (
    ("constant", lambda w: 2.0, True),
    ("-log w", _iterated_log(0), True),
    ("log(-log w)", _iterated_log(1), True),
    ("log log(-log w)", _iterated_log(2), True),
    ("exp{(-log w)^0.4}", lambda w: math.exp((-math.log(w)) ** 0.4), True),
    ("exp{-log w / log(-log w)}",
     lambda w: math.exp(-math.log(w) / math.log(-math.log(w))), True),
)
#: controls that must fail
SLOW_CONTROLS = (
    ("exp{(-log w)^0.6}", lambda w: math.exp((-math.log(w)) ** 0.6)),
)


def _log_exp_inv(s):
    return -1.0 / np.asarray(s, dtype=float)


def gamma_cases():
    """(label, log g, f, U) tuples with Gamma-varying g."""
    smith03 = make_family("smith", lam=0.3)
    smith13 = make_family("smith", lam=1.3)
    gv = GammaVarying(gamma=1.0, kappa=1.0, delta=0.0)
    ident = lambda s: s  # noqa: E731
    one = lambda s: 1.0  # noqa: E731
    return [
        ("smith lambda=0.3", smith03.log_spectral_density, smith03.auxiliary, ident),
        ("smith lambda=1.3", smith13.log_spectral_density, smith13.auxiliary, ident),
        ("gammavarying (1, 1, 0)", gv.log_spectral_density, gv.auxiliary, ident),
        ("exp(-1/w)", _log_exp_inv, lambda s: s * s, one),
    ]


#: pairs for the integral expansion; Smith lambda = 1.3 converges like
#: 1 + O(lambda^2 / log(1/w)) and needs w far below 1e-6
LEMMA2_CASES = ("smith lambda=0.3", "gammavarying (1, 1, 0)", "exp(-1/w)")


def variation_suite() -> SuiteResult:
    res = SuiteResult("variation")
    for label, L, expect in SLOW_EXAMPLES:
        rep = slowly_varying_condition(L)
        res.records.append(_record(check="slowly_varying", case=label,
                                   final_deviation=np.atleast_2d(rep.deviation)[:, -1],
                                   result=rep.passed,
                                   passed=rep.passed == expect))
    for label, L in SLOW_CONTROLS:
        rep = slowly_varying_condition(L)
        res.records.append(_record(check="slowly_varying_control", case=label,
                                   final_deviation=np.atleast_2d(rep.deviation)[:, -1],
                                   result=rep.passed,
                                   passed=not rep.passed))
    cases = gamma_cases()
    for label, log_g, f, _ in cases:
        rep = gamma_variation_check(log_g, f)
        res.records.append(_record(check="gamma_variation", case=label,
                                   smallest_s=rep.grid[-1],
                                   final_deviation=rep.extra["worst"][-1],
                                   passed=rep.passed))
    for label, log_g, f, U in cases:
        if label not in LEMMA2_CASES:
            continue
        rep = lemma2_expansion_check(U, log_g, f)
        res.records.append(_record(check="integral_expansion", case=label,
                                   w=rep.grid, ratios=rep.values, passed=rep.passed))
    # regular variation is not Gamma variation: g(w) = w^2 with f = -w/log w
    rep = lemma2_expansion_check(lambda s: 1.0, lambda s: 2 * np.log(np.asarray(s, float)),
                                 lambda s: -s / math.log(s))
    res.records.append(_record(check="integral_expansion_control", case="w^2",
                               w=rep.grid, ratios=rep.values, result=rep.passed,
                               passed=not rep.passed))
    return res


SUITES = {"moment": moment_suite, "eta": eta_suite, "lemma1": boundary_suite,
          "convergence": convergence_suite, "variation": variation_suite}


def run_suites(names=None) -> list:
    names = list(SUITES) if not names or names == ["all"] else names
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; choose from {sorted(SUITES)}")
    return [SUITES[n]() for n in names]
