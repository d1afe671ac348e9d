"""Compiled extension vs NumPy fallback equivalence."""

import numpy as np
import pytest

from tailcast import model as mdl
from tailcast import stw
from tailcast.kernels import _pykernels

try:
    from tailcast.kernels import _ckernels
except ImportError:
    _ckernels = None

needs_compiled = pytest.mark.skipif(_ckernels is None,
                                    reason="compiled kernels not built")


def _random_case(rng, n=500):
    p = mdl.model1_params()
    r, x, _ = mdl.simulate_rg(p, n, rng)
    return r, x


@needs_compiled
class TestEquivalence:
    def test_rg_loglik_all_dists(self):
        rng = np.random.default_rng(10)
        r, x = _random_case(rng)
        h1 = mdl.default_h1(r)
        cases = [
            (_pykernels.DIST_NORMAL, 0.0, 0.0, 0.0, 0.0, 0.0),
            (_pykernels.DIST_STUDENT_T, 7.5, 0.0, 0.0, 0.0, 0.0),
        ]
        sp = stw.StwParams(0.6, 1.1)
        cases.append((_pykernels.DIST_TW, 0.0, sp.lambda1, sp.k1, sp.bp,
                      sp.mu_x))
        for dist, nu, lam1, k1, bp, mu in cases:
            for _ in range(20):
                omega = rng.uniform(0.01, 0.3)
                beta = rng.uniform(0.1, 0.8)
                gamma = rng.uniform(0.05, 0.5)
                phi = rng.uniform(0.2, 1.2)
                if beta + gamma * phi >= 1:
                    continue
                args = (r, x, h1, omega, beta, gamma, rng.uniform(-1, 1),
                        phi, rng.normal(0, 0.1), rng.normal(0, 0.1),
                        rng.uniform(0.2, 1.0), dist, nu, lam1, k1, bp, mu)
                sc, rc, mc = _ckernels.rg_loglik(*args)
                sp_, rp, mp = _pykernels.rg_loglik(*args)
                assert sc == sp_
                if sc == 0:
                    assert rc == pytest.approx(rp, rel=1e-12, abs=1e-9)
                    assert mc == pytest.approx(mp, rel=1e-12, abs=1e-9)

    def test_rg_filter(self):
        rng = np.random.default_rng(4)
        r, x = _random_case(rng)
        args = (r, x, 1.3, 0.02, 0.75, 0.25, 0.1, 0.95, -0.02, 0.02)
        sc, bc, hc, zc, ec = _ckernels.rg_filter(*args)
        sp, bp_, hp, zp, ep = _pykernels.rg_filter(*args)
        assert (sc, bc) == (sp, bp_) == (0, -1)
        np.testing.assert_allclose(hc, hp, rtol=1e-12)
        np.testing.assert_allclose(zc, zp, rtol=1e-12)
        np.testing.assert_allclose(ec, ep, rtol=1e-12, atol=1e-12)

    def test_garch_loglik(self):
        rng = np.random.default_rng(5)
        r, _ = _random_case(rng)
        sp = stw.StwParams(0.5, 1.2)
        for dist, nu, lam1, k1, bp, mu in [
            (_pykernels.DIST_NORMAL, 0.0, 0.0, 0.0, 0.0, 0.0),
            (_pykernels.DIST_STUDENT_T, 5.0, 0.0, 0.0, 0.0, 0.0),
            (_pykernels.DIST_TW, 0.0, sp.lambda1, sp.k1, sp.bp, sp.mu_x),
        ]:
            args = (r, 1.0, 0.1, 0.08, 0.85, dist, nu, lam1, k1, bp, mu)
            sc, lc = _ckernels.garch_loglik(*args)
            sp_, lp = _pykernels.garch_loglik(*args)
            assert sc == sp_ == 0
            assert lc == pytest.approx(lp, rel=1e-12)

    def test_vanishing_density_rejects_both_paths(self):
        # an extreme two-sided-Weibull scale makes the density underflow:
        # both kernels must report the rejection status, not an error
        rng = np.random.default_rng(6)
        r, x = _random_case(rng)
        sp = stw.StwParams(1e-300, 1.1)
        args = (r, x, 1.0, 0.02, 0.75, 0.2, 0.1, 0.95, 0.0, 0.0, 0.5,
                _pykernels.DIST_TW, 0.0, sp.lambda1, sp.k1, sp.bp, sp.mu_x)
        assert _ckernels.rg_loglik(*args)[0] == 1
        assert _pykernels.rg_loglik(*args)[0] == 1


def test_dispatch_flag():
    from tailcast import kernels
    assert kernels.rg_loglik is not None
    assert isinstance(kernels.HAVE_COMPILED, bool)


def test_filter_status_on_negative_measure():
    # beta = gamma such that a strongly negative x drives h below zero
    r = np.zeros(5)
    x = np.array([1.0, -100.0, 1.0, 1.0, 1.0])
    st, bad, *_ = _pykernels.rg_filter(r, x, 1.0, 0.02, 0.1, 0.5,
                                       0.0, 1.0, 0.0, 0.0)
    assert st == 1 and bad == 2
    if _ckernels is not None:
        st_c, bad_c, *_ = _ckernels.rg_filter(r, x, 1.0, 0.02, 0.1, 0.5,
                                              0.0, 1.0, 0.0, 0.0)
        assert (st_c, bad_c) == (st, bad)
