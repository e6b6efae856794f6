import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from invmaxstable import exponent as E
from invmaxstable import ims
from invmaxstable import norming as N

CATALOG = [f for f in E.catalog() if f.tail_class().kind != "degenerate"]
IDS = [str(f) for f in CATALOG]
SMITH = E.make_family("smith", lam=1.3)


class TestNormingPair:
    def test_canonical_exact(self):
        np_ = N.NormingPair.canonical(0.3, 0.5)
        x = np.array([0.5, 2.0, 40.0])
        assert np.array_equal(np_.a(x), 0.3 * x)
        assert np.array_equal(np_.b(x), x**0.5)

    @pytest.mark.parametrize("alpha,beta", [(-0.1, 0.0), (1.1, 0.0), (0.5, 1.0)])
    def test_canonical_rejects(self, alpha, beta):
        with pytest.raises(ValueError):
            N.NormingPair.canonical(alpha, beta)

    def test_rejects_nonpositive_x(self):
        with pytest.raises(ValueError):
            N.NormingPair.canonical(0.5, 0.2).a(0.0)

    @pytest.mark.parametrize("fam", CATALOG, ids=IDS)
    def test_scale_positive(self, fam):
        x = np.geomspace(3.0, 1e6, 50)
        b = np.asarray(N.norming_for(fam).b(x))
        assert np.all(np.isfinite(b) & (b > 0))

    def test_schlather_near_independence(self):
        np_ = N.norming_for(E.make_family("schlather", rho=0.3))
        x = np.array([1.0, 10.0, 100.0])
        assert np.all(np_.a(x) == 0) and np.all(np_.b(x) == 1)
        assert N.limit_law_for(E.make_family("schlather", rho=0.3)).atom_at_zero == 0

    def test_logistic_type_reduces_to_canonical(self):
        fam = E.make_family("logistic", alpha=0.5)
        np_ = N.norming_for(fam)
        assert np_.kind == "regular_tail" and np_.params == {"w_lower": 0.0, "t": 0.0}
        red = np_.canonical_reduction()
        assert red.params == {"alpha": 0.0, "beta": 0.5}
        # L is constant, so b differs from x**beta by a constant factor
        x = np.geomspace(2, 1e4, 20)
        ratio = np.asarray(np_.b(x)) / np.asarray(red.b(x))
        assert_allclose(ratio, ratio[0], rtol=1e-12)

    @pytest.mark.parametrize("fam", [f for f in CATALOG if f.tail_class().kind == "regular"],
                             ids=lambda f: str(f))
    def test_canonical_reduction_regular(self, fam):
        tc = fam.tail_class()
        red = N.norming_for(fam).canonical_reduction()
        assert red.params["alpha"] == tc.w_lower / (1 - tc.w_lower)
        assert red.params["beta"] == (tc.t + 1) / (tc.t + 2)

    def test_smith_forms(self):
        np_ = N.norming_for(SMITH)
        x = np.array([1e2, 1e4, 1e8, 1e16, 1e64])
        a, b = np.asarray(np_.a(x)), np.asarray(np_.b(x))
        assert np.all(np.diff(a / x) < 0) and (a / x)[-1] < 1e-2
        assert_allclose(b / a, np.log(x) ** -0.5, rtol=1e-14)
        lx = math.log(50.0)
        expected = 50.0 * math.exp(-1.3 * math.sqrt(2 * lx)
                                   + 1.3 * math.log(lx) / math.sqrt(2 * lx) + 1.3**2 / 2)
        assert abs(np_.a(50.0) - expected) < 1e-12 * expected

    def test_gamma_forms(self):
        g, k, d = 1.5, 0.7, 0.4
        np_ = N.NormingPair.gamma_varying(g, k, d)
        x = 1e5
        lx = math.log(x)
        a = x * k ** (1 / g) * lx ** (-1 / g) * (1 + (d + 2 * (1 + g)) / g**2
                                                   * math.log(lx) / lx)
        assert abs(np_.a(x) - a) < 1e-12 * a
        assert abs(np_.b(x) - x * lx ** (-1 - 1 / g)) < 1e-12 * np_.b(x)

    def test_unsupported(self):
        with pytest.raises(E.UnsupportedTailError):
            N.norming_for(E.make_family("marshallolkin", alpha=0.0))
        with pytest.raises(E.UnsupportedTailError):
            N.limit_law_for(E.make_family("marshallolkin", alpha=0.0))


class TestLimitLaw:
    LAWS = [N.LimitLaw("weibull", {"s": 2.0, "t": 0.5}),
            N.LimitLaw("regular_tail", {"w_lower": 0.0, "t": 0.0}),
            N.LimitLaw("regular_tail", {"w_lower": 0.3, "t": 1.0}),
            N.LimitLaw("lower_atom", {"w_lower": 0.2, "atom": 0.5}),
            N.LimitLaw("lower_atom", {"w_lower": 0.0, "atom": 1.0}),
            N.LimitLaw("smith", {"lam": 1.3}),
            N.LimitLaw("gamma", {"gamma": 1.0, "kappa": 2.0, "delta": 0.5}),
            N.LimitLaw("working_normal", {"mu": 0.3, "sigma": 2.0})]

    @pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
    def test_distribution_function(self, law):
        z = np.linspace(-50, 50, 20001)
        g = law.cdf(z)
        assert np.all(np.diff(g) >= 0)
        assert np.all((g >= 0) & (g <= 1))
        assert law.cdf(1e6) == 1.0

    @pytest.mark.parametrize("law", LAWS, ids=lambda l: l.kind)
    def test_quantile_inverts_cdf(self, law):
        p = np.array([0.2, 0.5, 0.9, 0.999])
        if law.kind == "lower_atom":
            p = p[p > law.atom_at_zero]
        assert_allclose(law.cdf(law.quantile(p)), p, rtol=1e-10)

    def test_regular_tail_zero(self):
        law = N.LimitLaw("regular_tail", {"w_lower": 0.0, "t": 0.0})
        z = np.array([0.1, 1.0, 2.5])
        assert_allclose(law.cdf(z), 1 - np.exp(-z**2 / 2), rtol=1e-14)
        assert law.cdf(-1.0) == 0.0

    def test_lower_atom(self):
        law = N.LimitLaw("lower_atom", {"w_lower": 0.2, "atom": 0.5})
        assert law.atom_at_zero == 0.1
        assert law.cdf(-1e-12) == 0.0
        assert abs(law.cdf(0.0) - 0.1) < 1e-15
        unit = N.LimitLaw("lower_atom", {"w_lower": 0.0, "atom": 1.0})
        z = np.array([0.3, 2.0])
        assert_allclose(unit.cdf(z), 1 - np.exp(-z), rtol=1e-14)

    def test_smith(self):
        lam = 1.3
        z = np.array([-2.0, 0.0, 1.5])
        g = 1 - np.exp(-lam / math.sqrt(8 * math.pi) * np.exp(math.sqrt(2) * z / lam))
        assert_allclose(N.LimitLaw("smith", {"lam": lam}).cdf(z), g, rtol=1e-13)

    def test_gamma(self):
        g, k, d = 1.5, 0.7, 0.4
        z = np.array([-2.0, 0.0, 1.5])
        expected = 1 - np.exp(-(k ** ((d + 2) / g) / g**2) * np.exp(g * k ** (-1 / g) * z))
        law = N.LimitLaw("gamma", {"gamma": g, "kappa": k, "delta": d})
        assert_allclose(law.cdf(z), expected, rtol=1e-13)

    def test_catalog_atoms(self):
        for fam in CATALOG:
            law = N.limit_law_for(fam)
            if law.kind == "lower_atom":
                assert law.atom_at_zero == fam.w_lower * fam.atom_masses()[0]


class TestPsi:
    def test_canonical_beta_zero(self):
        rep = N.ht_psi_check(N.NormingPair.canonical(0.5, 0.0), [-1.0, 0.5, 2.0])
        assert_allclose(rep.psi1, 1.0)
        assert_allclose(rep.psi2[-1], 0.5 * np.array([-1.0, 0.5, 2.0]), rtol=1e-10)

    def test_canonical_beta_positive(self):
        rep = N.ht_psi_check(N.NormingPair.canonical(0.5, 0.5), [1.0, 3.0])
        assert np.all(np.diff(np.abs(rep.psi1 - 1), axis=0) < 0)
        assert np.all(np.diff(np.abs(rep.psi2), axis=0) < 0)
        assert np.all(np.abs(rep.psi1[-1] - 1) < 1e-3) and np.all(rep.psi2[-1] < 0.05)

    def test_smith_limits_settle(self):
        rep = N.ht_psi_check(N.norming_for(SMITH), [1.0, 5.0], t_grid=(1e2, 1e3, 1e4, 1e5))
        assert np.all(np.isfinite(rep.psi1)) and np.all(np.isfinite(rep.psi2))
        steps = np.abs(np.diff(rep.psi1, axis=0))
        assert np.all(np.diff(steps, axis=0) < 0)


class TestAsymptotics:
    def test_independence_exact(self):
        fam = E.make_family("marshallolkin", alpha=1.0)
        y = np.array([0.5, 3.0])
        assert_allclose(N.asymptotic_log_survivor(fam, 50.0, y), -y, rtol=1e-14)

    def test_lower_atom_case(self):
        fam = E.make_family("mixedlogistic", theta=0.5)
        y = np.array([0.5, 1.0, 2.0])
        err = [np.max(np.abs(N.asymptotic_log_survivor(fam, u, y)
                             - ims.log_conditional_survivor(fam, y, u)))
               for u in (1e2, 1e4, 1e6)]
        assert np.all(np.diff(err) < 0) and err[-1] < 1e-5

    @pytest.mark.parametrize("fam", [SMITH, E.GammaVarying(gamma=1.0, kappa=1.0, delta=0.0)],
                             ids=str)
    def test_ratio_to_exact(self, fam):
        np_ = N.norming_for(fam)
        ratios = []
        for u in (1e4, 1e10, 1e40):
            y = np_.a(u) + np_.b(u) * np.array([-0.5, 0.0, 0.5])
            exact = fam.log_cond_survivor(y, np.full(3, u))
            ratios.append(np.max(np.abs(N.asymptotic_log_survivor(fam, u, y) / exact - 1)))
        assert np.all(np.diff(ratios) < 0)


class TestConvergence:
    @pytest.mark.parametrize("fam", CATALOG, ids=IDS)
    def test_distance_decreases_at_reference_levels(self, fam):
        d = N.convergence_table(fam)["D"]
        # D below 1e-12 is rounding: the limit is attained exactly
        assert np.all((np.diff(d) < 0) | (d[1:] < 1e-12)), d

    @pytest.mark.parametrize("lam", [0.3, 1.3, 3.0])
    def test_smith_far_tail(self, lam):
        tab = N.convergence_table(E.make_family("smith", lam=lam),
                                  levels=(1e3, 1e5, 1e8, 1e12, 1e20))
        assert np.all(np.diff(tab["D"]) < 0)
        assert tab["scaled"].max() / tab["scaled"].min() < 5

    def test_gamma_default_location_stalls_above_one(self):
        fam = E.GammaVarying(gamma=2.0, kappa=0.5, delta=1.0)
        assert N.limit_distance(fam, 1e300) > 0.99

    @pytest.mark.parametrize("params", [(1.0, 1.0, 0.0), (2.0, 0.5, 1.0)])
    def test_gamma_ratio_correction_converges(self, params):
        fam = E.GammaVarying(**dict(zip(("gamma", "kappa", "delta"), params)))
        nc = N.NormingPair.gamma_varying(*params, ratio_correction=True)
        d = [N.limit_distance(fam, u, norming=nc) for u in (1e100, 1e200, 1e300)]
        assert np.all(np.diff(d) < 0) and d[-1] < 0.2

    def test_distance_zero_for_exact_limit(self):
        fam = E.make_family("marshallolkin", alpha=1.0)
        assert N.limit_distance(fam, 5.0) < 1e-14


class TestBoundaryLimit:
    @pytest.mark.parametrize("spec", ["family=smith lambda=1.3", "family=schlather rho=0.0",
                                      "family=mixedlogistic theta=0.5"])
    def test_prescribed_path(self, spec):
        err = N.boundary_limit_errors(E.parse_family(spec))
        assert np.all((np.diff(err) < 0) | (err[1:] == 0))
        assert err[2] <= err[1] / 10

    def test_offset_path(self):
        fam = E.make_family("schlather", rho=0.0)
        err = N.boundary_limit_errors(fam, path="offset")
        assert np.all(np.diff(err) < 0)
        with pytest.raises(ValueError):
            N.boundary_limit_errors(fam, path="nosuch")
