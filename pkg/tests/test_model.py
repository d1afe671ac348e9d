"""Model recursion, likelihoods and simulation, checked against naive
reimplementations and hand recursions."""

import numpy as np
import pytest

from tailcast import model as mdl
from tailcast import stw
from tailcast.errors import InputError, NumericalError, ParameterError


def naive_rg_loglik(params, r, x, h1):
    """Observation-by-observation reimplementation used as the oracle."""
    n = len(r)
    h = np.empty(n)
    h[0] = h1
    for t in range(1, n):
        h[t] = params.omega + params.beta * h[t - 1] + params.gamma * x[t - 1]
    z = r / np.sqrt(h)
    ll_ret = float(np.sum(params.dist.logpdf(z)) - 0.5 * np.sum(np.log(h)))
    eps = x - params.xi - params.phi * h - params.tau1 * z \
        - params.tau2 * (z**2 - 1.0)
    s2 = params.sigma_eps**2
    ll_meas = float(np.sum(-0.5 * np.log(2 * np.pi) - 0.5 * np.log(s2)
                           - eps**2 / (2 * s2)))
    return ll_ret, ll_meas


class TestFilter:
    def test_degenerate_constant(self):
        p = mdl.model1_params()
        p.beta = 1e-300
        p.gamma = 1e-300
        r = np.ones(10)
        x = np.ones(10)
        state = mdl.rg_filter(p, r, x, h1=5.0)
        assert state.h[0] == 5.0
        np.testing.assert_allclose(state.h[1:], p.omega, rtol=1e-10)

    def test_three_step_hand_recursion(self):
        p = mdl.model1_params()
        r = np.array([1.0, -2.0, 0.5])
        x = np.array([3.0, 4.0, 2.0])
        state = mdl.rg_filter(p, r, x, h1=2.0)
        h2 = 0.02 + 0.75 * 2.0 + 0.25 * 3.0
        h3 = 0.02 + 0.75 * h2 + 0.25 * 4.0
        np.testing.assert_allclose(state.h, [2.0, h2, h3], rtol=1e-15)
        np.testing.assert_allclose(state.z, r / np.sqrt([2.0, h2, h3]),
                                   rtol=1e-15)
        eps0 = 3.0 - 0.1 - 0.95 * 2.0 + 0.02 * state.z[0] \
            - 0.02 * (state.z[0] ** 2 - 1.0)
        assert state.eps[0] == pytest.approx(eps0, rel=1e-14)

    def test_h_floor(self):
        p = mdl.model1_params()
        rng = np.random.default_rng(0)
        r, x, _ = mdl.simulate_rg(p, 500, rng)
        state = mdl.rg_filter(p, r, x, h1=1.0)
        assert np.all(state.h[1:] >= p.omega)

    def test_non_finite_raises_with_index(self):
        p = mdl.model1_params()
        r = np.ones(4)
        x = np.array([1.0, np.inf, 1.0, 1.0])
        with pytest.raises(NumericalError, match="t=2"):
            mdl.rg_filter(p, r, x, h1=1.0)

    def test_default_h1(self):
        r = np.array([1.0, 2.0, -1.0, 0.5])
        assert mdl.default_h1(r) == pytest.approx(np.var(r, ddof=1))


class TestRgLoglik:
    def test_gg_plugin_value(self):
        # sigma_eps = 1, eps = 0, z = 0, h = 1 -> ll = -n log(2 pi)
        n = 20
        p = mdl.RgParams(omega=1.0, beta=1e-300, gamma=1e-300, xi=1.0,
                         phi=0.0, tau1=0.0, tau2=0.0, sigma_eps=1.0,
                         dist=mdl.NormalError())
        r = np.zeros(n)
        x = np.ones(n)  # eps = 1 - 1 - 0 = 0, h = omega = 1
        ll = mdl.rg_loglik(p, r, x, h1=1.0)
        assert ll == pytest.approx(-n * np.log(2 * np.pi), rel=1e-12)

    def test_gg_equals_closed_form_transcription(self):
        # literal transcription of the Gaussian-Gaussian likelihood
        p = mdl.RgParams(omega=0.05, beta=0.6, gamma=0.3, xi=0.2, phi=0.9,
                         tau1=-0.05, tau2=0.04, sigma_eps=0.4,
                         dist=mdl.NormalError())
        rng = np.random.default_rng(1)
        r, x, _ = mdl.simulate_rg(p, 300, rng)
        h1 = mdl.default_h1(r)
        state = mdl.rg_filter(p, r, x, h1)
        lit = (-0.5 * np.sum(np.log(2 * np.pi) + np.log(state.h)
                             + r**2 / state.h)
               - 0.5 * np.sum(np.log(2 * np.pi) + np.log(p.sigma_eps**2)
                              + state.eps**2 / p.sigma_eps**2))
        assert mdl.rg_loglik(p, r, x, h1) == pytest.approx(lit, rel=1e-12)

    @pytest.mark.parametrize("dist_name", ["GG", "tG", "TWG"])
    def test_dual_implementation_oracle(self, dist_name):
        p = mdl.model1_params()
        if dist_name == "GG":
            p.dist = mdl.NormalError()
        elif dist_name == "tG":
            p.dist = mdl.StudentTError(6.0)
        rng = np.random.default_rng(2)
        r, x, _ = mdl.simulate_rg(p, 400, rng)
        h1 = mdl.default_h1(r)
        ret, meas = mdl.rg_loglik_parts(p, r, x, h1)
        o_ret, o_meas = naive_rg_loglik(p, r, x, h1)
        assert ret == pytest.approx(o_ret, rel=1e-10)
        assert meas == pytest.approx(o_meas, rel=1e-10)

    def test_twg_shifted_density_oracle(self):
        # return block must evaluate the two-sided Weibull at z + mu_X
        p = mdl.model1_params()
        rng = np.random.default_rng(3)
        r, x, _ = mdl.simulate_rg(p, 200, rng)
        h1 = mdl.default_h1(r)
        state = mdl.rg_filter(p, r, x, h1)
        sp = p.dist.stw_params
        oracle = float(np.sum(stw.logpdf(state.z + sp.mu_x, sp))
                       - 0.5 * np.sum(np.log(state.h)))
        assert mdl.rg_loglik_parts(p, r, x, h1)[0] == pytest.approx(
            oracle, rel=1e-10)

    def test_decomposition_finite(self):
        p = mdl.model1_params()
        rng = np.random.default_rng(4)
        r, x, _ = mdl.simulate_rg(p, 300, rng)
        ret, meas = mdl.rg_loglik_parts(p, r, x)
        total = mdl.rg_loglik(p, r, x)
        assert np.isfinite(ret) and np.isfinite(meas)
        assert total == pytest.approx(ret + meas, rel=1e-14)

    def test_constraint_sentinel_never_throws(self):
        rng = np.random.default_rng(5)
        r, x, _ = mdl.simulate_rg(mdl.model1_params(), 100, rng)
        f = mdl.make_rg_loglik_fn(r, x, "TWG")
        bad = [
            np.array([-0.1, 0.75, 0.25, 0.6, 1.1, 0.1, 0.95, 0, 0, 0.5]),
            np.array([0.02, 0.9, 0.25, 0.6, 1.1, 0.1, 0.95, 0, 0, 0.5]),
            np.array([0.02, 0.75, 0.25, 1.3, 1.1, 0.1, 0.95, 0, 0, 0.5]),
            np.array([0.02, 0.75, 0.25, 0.6, 1.1, 0.1, 0.95, 0, 0, -0.5]),
            np.array([0.01, 0.5, 0.3, 0.6, 1.1, -10.0, 0.95, 0, 0, 0.5]),
        ]
        for theta in bad:
            assert f(theta) == mdl.LOGLIK_REJECT

    def test_peaks_near_truth(self):
        p = mdl.model1_params()
        perturbed_wins = 0
        for rep in range(50):
            rng = np.random.default_rng(np.random.SeedSequence(
                entropy=(60, rep)))
            r, x, _ = mdl.simulate_rg(p, 600, rng)
            ll_true = mdl.rg_loglik(p, r, x)
            q = mdl.model1_params()
            q.beta = 0.5
            if mdl.rg_loglik(q, r, x) > ll_true:
                perturbed_wins += 1
        assert perturbed_wins < 5


class TestSimulate:
    def test_noiseless_measurement(self):
        p = mdl.model1_params()
        p.tau1 = 0.0
        p.tau2 = 0.0
        p.sigma_eps = 1e-300
        rng = np.random.default_rng(6)
        r, x, h = mdl.simulate_rg(p, 200, rng)
        np.testing.assert_allclose(x, p.xi + p.phi * h, rtol=1e-10)

    def test_shock_variance(self):
        p = mdl.model1_params()
        z = p.dist.sample(np.random.default_rng(7), 10**6)
        assert abs(z.mean()) < 4e-3
        assert z.var() == pytest.approx(1.0, rel=0.01)

    def test_long_run_mean_h(self):
        p = mdl.model1_params()
        rng = np.random.default_rng(8)
        _, _, h = mdl.simulate_rg(p, 10**6, rng)
        assert h.mean() == pytest.approx(p.stationary_mean_h(), rel=0.05)

    def test_returns_pair(self):
        rng = np.random.default_rng(9)
        r, x = mdl.simulate_model1(mdl.model1_params(), 50, rng)
        assert r.shape == x.shape == (50,)

    def test_invalid_params_rejected(self):
        p = mdl.model1_params()
        p.beta = 0.9  # persistence >= 1
        with pytest.raises(ParameterError):
            mdl.simulate_rg(p, 10, np.random.default_rng(0))


class TestGarch:
    def test_gaussian_plugin(self):
        p = mdl.GarchParams(omega=1.0, alpha=0.0, beta=0.0,
                            dist=mdl.NormalError())
        n = 16
        ll = mdl.garch_loglik(p, np.zeros(n), h1=1.0)
        assert ll == pytest.approx(-n / 2 * np.log(2 * np.pi), rel=1e-12)

    def test_dual_implementation(self):
        p = mdl.GarchParams(omega=0.1, alpha=0.08, beta=0.88,
                            dist=mdl.StudentTError(7.0))
        rng = np.random.default_rng(10)
        r, _ = mdl.simulate_garch(p, 500, rng)
        h1 = mdl.default_h1(r)
        h = np.empty(500)
        h[0] = h1
        for t in range(1, 500):
            h[t] = p.omega + p.alpha * r[t - 1] ** 2 + p.beta * h[t - 1]
        oracle = float(np.sum(p.dist.logpdf(r / np.sqrt(h)))
                       - 0.5 * np.sum(np.log(h)))
        assert mdl.garch_loglik(p, r, h1) == pytest.approx(oracle, abs=1e-10)

    def test_constraint_sentinel(self):
        p = mdl.GarchParams(omega=0.1, alpha=0.5, beta=0.6,
                            dist=mdl.NormalError())
        assert mdl.garch_loglik(p, np.ones(10)) == mdl.LOGLIK_REJECT


class TestParams:
    def test_vector_roundtrip(self):
        p = mdl.model1_params()
        q = mdl.RgParams.from_vector(p.to_vector(), "TWG")
        assert q.to_vector() == pytest.approx(p.to_vector(), rel=1e-15)

    def test_json_roundtrip(self):
        p = mdl.model1_params()
        q = mdl.RgParams.from_json(p.to_json())
        assert q.to_vector() == pytest.approx(p.to_vector(), rel=1e-15)
        assert q.dist.name == "TWG"

    def test_vector_names_order(self):
        assert mdl.RgParams.vector_names("TWG") == [
            "omega", "beta", "gamma", "lambda1", "k1",
            "xi", "phi", "tau1", "tau2", "sigma_eps",
        ]

    def test_stationarity_validation(self):
        p = mdl.model1_params()
        assert p.is_valid()
        assert p.beta + p.gamma * p.phi == pytest.approx(0.9875)
        assert p.stationary_mean_h() == pytest.approx(3.6)
        p.phi = 1.01
        assert not p.is_valid()
