"""Two-sided Weibull distribution tests against quadrature and
closed-form one-sided Weibull oracles."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.stats import kstest

from tailcast import stw
from tailcast.errors import ParameterError

# (lambda1, k1) grid spanning the admissible region
PARAM_GRID = [
    (0.3, 0.8), (0.5, 0.8), (0.8, 0.8),
    (0.6, 1.1), (0.3, 1.1), (1.1, 1.1),
    (0.5, 1.0), (1.0, 2.0), (1.5, 3.0), (0.3, 3.0),
]


def quad_pdf(params, fn=lambda x: 1.0, lo=-np.inf, hi=np.inf):
    """Integral of fn * pdf, split at the branch point x = 0."""
    def f(x):
        return fn(x) * stw.pdf(x, params)

    total = 0.0
    if lo < 0:
        total += integrate.quad(f, lo, min(hi, 0.0), limit=400)[0]
    if hi > 0:
        total += integrate.quad(f, max(lo, 0.0), hi, limit=400)[0]
    return total


class TestBp:
    def test_symmetric_unit(self):
        # lambda1 = 1, k1 = 2: Gamma(2) = 1 and the mean term cancels
        p = stw.StwParams(1.0, 2.0)
        assert p.bp == pytest.approx(1.0, abs=1e-14)

    def test_quadrature_oracle(self):
        p = stw.StwParams(0.6, 1.1)
        # second moment of the unstandardized variable Y = bp * X
        ey2 = integrate.quad(
            lambda y: y * y * stw.pdf(y / p.bp, p) / p.bp, -60, 60, limit=400
        )[0]
        ey = integrate.quad(
            lambda y: y * stw.pdf(y / p.bp, p) / p.bp, -60, 60, limit=400
        )[0]
        assert p.bp**2 == pytest.approx(ey2 - ey**2, rel=1e-9)

    def test_all_mass_negative(self):
        # lambda1 = k1: Y = -Weibull(lambda1, k1), known moments
        lam = 0.9
        p = stw.StwParams(lam, lam)
        m1 = lam * gamma_fn(1 + 1 / lam)
        m2 = lam**2 * gamma_fn(1 + 2 / lam)
        assert p.bp == pytest.approx(math.sqrt(m2 - m1**2), rel=1e-12)

    def test_invalid_params_rejected(self):
        with pytest.raises(ParameterError):
            stw.StwParams(1.2, 1.1)  # lambda1 > k1
        with pytest.raises(ParameterError):
            stw.StwParams(0.0, 1.1)


class TestLogpdf:
    def test_normalization(self):
        p = stw.StwParams(0.6, 1.1)
        assert quad_pdf(p) == pytest.approx(1.0, abs=1e-8)

    def test_unit_variance(self):
        p = stw.StwParams(0.6, 1.1)
        m1 = quad_pdf(p, lambda x: x)
        m2 = quad_pdf(p, lambda x: x * x)
        assert m2 - m1**2 == pytest.approx(1.0, abs=1e-6)

    def test_prob_negative(self):
        p = stw.StwParams(0.6, 1.1)
        assert quad_pdf(p, hi=0.0) == pytest.approx(6.0 / 11.0, abs=1e-8)
        assert p.prob_negative == pytest.approx(6.0 / 11.0, rel=1e-15)

    @pytest.mark.parametrize("lam,k", PARAM_GRID)
    def test_normalization_and_moments_grid(self, lam, k):
        p = stw.StwParams(lam, k)
        assert quad_pdf(p) == pytest.approx(1.0, abs=1e-8)
        m1 = quad_pdf(p, lambda x: x)
        m2 = quad_pdf(p, lambda x: x * x)
        assert m1 == pytest.approx(p.mu_x, abs=1e-8)
        assert m2 - m1**2 == pytest.approx(1.0, abs=1e-6)

    def test_at_zero(self):
        assert stw.logpdf(0.0, stw.StwParams(0.6, 1.1)) == stw.LOGPDF_FLOOR
        p1 = stw.StwParams(0.7, 1.0)
        assert stw.logpdf(0.0, p1) == pytest.approx(np.log(p1.bp))

    def test_boundary_lambda2_zero(self):
        # all mass negative: positive arguments carry the floor density
        p = stw.StwParams(1.3, 1.3)
        assert stw.logpdf(0.5, p) == stw.LOGPDF_FLOOR
        assert np.isfinite(stw.logpdf(-0.5, p))

    def test_vector_matches_scalar(self):
        p = stw.StwParams(0.6, 1.1)
        xs = np.array([-2.5, -0.1, 0.0, 0.3, 4.0])
        vec = stw.logpdf(xs, p)
        assert vec == pytest.approx([stw.logpdf(v, p) for v in xs], rel=1e-15)


class TestCdf:
    def test_at_zero(self):
        p = stw.StwParams(0.6, 1.1)
        assert stw.cdf(0.0, p) == pytest.approx(p.prob_negative, rel=1e-14)
        # continuity across the branch point
        assert stw.cdf(-1e-12, p) == pytest.approx(stw.cdf(1e-12, p), abs=1e-10)

    def test_quadrature_oracle(self):
        p = stw.StwParams(0.6, 1.1)
        for x in (-3.0, -1.0, 0.5, 2.0):
            assert stw.cdf(x, p) == pytest.approx(
                quad_pdf(p, hi=x), abs=1e-8)

    def test_monotone_bounded(self):
        p = stw.StwParams(0.4, 1.7)
        xs = np.linspace(-6, 6, 201)
        c = stw.cdf(xs, p)
        assert np.all(np.diff(c) >= 0)
        assert np.all((c >= 0) & (c <= 1))


class TestQuantile:
    def test_branch_point(self):
        p = stw.StwParams(0.6, 1.1)
        assert stw.quantile(p.prob_negative, p) == pytest.approx(0.0, abs=1e-14)

    def test_symmetric_median(self):
        assert stw.quantile(0.5, stw.StwParams(1.0, 2.0)) == pytest.approx(
            0.0, abs=1e-14)

    def test_roundtrip_cdf_quantile(self):
        p = stw.StwParams(0.6, 1.1)
        for a in (0.001, 0.01, 0.35 * 0.01, 0.5, 0.99):
            assert stw.cdf(stw.quantile(a, p), p) == pytest.approx(a, abs=1e-10)

    @pytest.mark.parametrize("lam,k", PARAM_GRID)
    def test_roundtrip_grid(self, lam, k):
        p = stw.StwParams(lam, k)
        alphas = np.array([1e-3, 0.05, 0.2, 0.5, 0.8, 0.999])
        assert stw.cdf(stw.quantile(alphas, p), p) == pytest.approx(
            alphas, abs=1e-10)
        xs = np.array([-4.0, -1.0, -0.2, 0.1, 1.5])
        if lam == k:  # no positive support
            xs = xs[xs < 0]
        c = stw.cdf(xs, p)
        xs, c = xs[(c > 0) & (c < 1)], c[(c > 0) & (c < 1)]  # cdf underflow
        assert stw.quantile(c, p) == pytest.approx(xs, abs=1e-8)

    def test_bisection_oracle(self):
        p = stw.StwParams(0.6, 1.1)
        target = 0.01
        lo, hi = -60.0, 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if stw.cdf(mid, p) < target:
                lo = mid
            else:
                hi = mid
        assert stw.quantile(target, p) == pytest.approx(0.5 * (lo + hi),
                                                        abs=1e-10)

    def test_strictly_increasing(self):
        p = stw.StwParams(0.45, 0.9)
        alphas = np.linspace(0.001, 0.999, 400)
        q = stw.quantile(alphas, p)
        assert np.all(np.diff(q) > 0)

    def test_domain(self):
        p = stw.StwParams(0.6, 1.1)
        with pytest.raises(ParameterError):
            stw.quantile(0.0, p)
        with pytest.raises(ParameterError):
            stw.quantile(1.0, p)


class TestEs:
    def test_below_quantile(self):
        p = stw.StwParams(0.6, 1.1)
        for a in (0.005, 0.01, 0.05 * p.prob_negative):
            q = stw.quantile(a, p)
            assert stw.es(a, p) < q < 0

    def test_quadrature_oracle(self):
        p = stw.StwParams(0.6, 1.1)
        a = 0.01
        tail = quad_pdf(p, lambda x: x, hi=stw.quantile(a, p))
        assert stw.es(a, p) == pytest.approx(tail / a, abs=1e-8)

    @pytest.mark.parametrize("lam,k", PARAM_GRID)
    def test_es_integral_identity_grid(self, lam, k):
        p = stw.StwParams(lam, k)
        a = 0.4 * p.prob_negative
        tail = quad_pdf(p, lambda x: x, hi=stw.quantile(a, p))
        assert a * stw.es(a, p) == pytest.approx(tail, abs=1e-8)

    def test_limit_full_negative_mean(self):
        # alpha -> lambda1/k1: ES tends to the negative-side mean
        p = stw.StwParams(0.6, 1.1)
        a = p.prob_negative * (1.0 - 1e-9)
        expected = -p.lambda1 * gamma_fn(1 + 1 / p.k1) / p.bp
        assert stw.es(a, p) == pytest.approx(expected, rel=1e-6)

    def test_domain_error(self):
        p = stw.StwParams(0.6, 1.1)
        with pytest.raises(ParameterError, match="lower tail"):
            stw.es(p.prob_negative + 0.01, p)


class TestMean:
    def test_symmetric_zero(self):
        assert stw.mean(stw.StwParams(1.0, 2.0)) == pytest.approx(0, abs=1e-14)

    def test_quadrature(self):
        p = stw.StwParams(0.6, 1.1)
        assert stw.mean(p) == pytest.approx(quad_pdf(p, lambda x: x), abs=1e-8)

    def test_sign_follows_skew(self):
        # lambda2 > lambda1 puts more mass on the positive side
        assert stw.mean(stw.StwParams(0.4, 1.1)) > 0
        assert stw.mean(stw.StwParams(0.7, 1.1)) < 0


class TestSample:
    def test_deterministic(self):
        p = stw.StwParams(0.6, 1.1)
        a = stw.sample(p, np.random.default_rng(42), size=100)
        b = stw.sample(p, np.random.default_rng(42), size=100)
        assert np.array_equal(a, b)

    def test_moments(self):
        p = stw.StwParams(0.6, 1.1)
        draws = stw.sample(p, np.random.default_rng(7), size=10**6)
        shifted = draws - p.mu_x
        assert abs(shifted.mean()) < 4.0 / 1000.0
        assert shifted.var() == pytest.approx(1.0, rel=0.01)

    def test_negative_fraction(self):
        p = stw.StwParams(0.6, 1.1)
        draws = stw.sample(p, np.random.default_rng(11), size=10**6)
        frac = np.mean(draws < 0)
        se = math.sqrt(p.prob_negative * (1 - p.prob_negative) / 10**6)
        assert abs(frac - p.prob_negative) < 3 * se

    def test_kolmogorov_smirnov(self):
        p = stw.StwParams(0.6, 1.1)
        draws = stw.sample(p, np.random.default_rng(3), size=20000)
        stat = kstest(draws, lambda v: stw.cdf(v, p)).pvalue
        assert stat > 0.01


class TestUpperIncGamma:
    def test_exponential_tail(self):
        for x in (0.0, 0.5, 3.0, 20.0):
            assert stw.upper_inc_gamma(1.0, x) == pytest.approx(
                math.exp(-x), rel=1e-13)

    def test_gamma_at_zero(self):
        for s in (0.5, 1.9091, 3.3, 5.0):
            assert stw.upper_inc_gamma(s, 0.0) == pytest.approx(
                gamma_fn(s), rel=1e-13)

    def test_quadrature_oracle(self):
        val = stw.upper_inc_gamma(1.9091, 2.5)
        quad = integrate.quad(lambda t: t**0.9091 * math.exp(-t), 2.5,
                              np.inf, limit=300)[0]
        assert val == pytest.approx(quad, rel=1e-10)

    def test_accuracy_grid(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            s = rng.uniform(0.5, 5.0)
            x = rng.uniform(0.0, 50.0)
            quad = integrate.quad(lambda t: t ** (s - 1) * math.exp(-t),
                                  x, np.inf, limit=300)[0]
            if quad > 1e-290:
                assert stw.upper_inc_gamma(s, x) == pytest.approx(
                    quad, rel=1e-10)

    def test_monotone_decreasing(self):
        xs = np.linspace(0, 30, 50)
        vals = stw.upper_inc_gamma(2.2, xs)
        assert np.all(np.diff(vals) < 0)
