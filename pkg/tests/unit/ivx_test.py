# Copyright 2016 Data61
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import numpy as np
import pytest

from threshpred import dgp
from threshpred import estimate
from threshpred import ivx
from threshpred.innovations import CovarianceSpec


def _sample(n=300, seed=3, c=1.0, phi=0.25, sigma_uv=-0.5):
    model = dgp.ThresholdDgpSpec(beta1=[1.0], beta2=[0.0], gamma0=0.0)
    return dgp.gen_threshold_sample(model, dgp.PersistenceSpec(c, phi), CovarianceSpec.endogenous(1, 1, sigma_uv),
                                    n, seed)


class TestIvxConfig:
    def test_rho_z(self):
        cfg = ivx.IvxConfig(1.0, 0.95)
        assert cfg.rho_z(100) == pytest.approx(1.0 - 100 ** -0.95)

    @pytest.mark.parametrize('cz, gammaz', [(0.0, 0.95), (-1.0, 0.95), (1.0, 1.0), (1.0, 0.0)])
    def test_invalid(self, cz, gammaz):
        with pytest.raises(ivx.InvalidConfig):
            ivx.IvxConfig(cz, gammaz)


class TestInstrument:
    def test_recursion(self):
        x = np.cumsum(np.random.RandomState(1).randn(50))
        cfg = ivx.IvxConfig()
        z = ivx.build_instrument(x, cfg)
        rho = cfg.rho_z(50)
        expected = np.zeros(50)
        for k in range(1, 50):
            expected[k] = rho * expected[k - 1] + x[k] - x[k - 1]
        np.testing.assert_allclose(z, expected, atol=1e-12)

    def test_corrected_reduces_without_shocks(self):
        sample = _sample(c=0.0, phi=0.0)
        components = ivx.build_corrected_instrument(sample.path, ivx.IvxConfig())
        np.testing.assert_allclose(components.corrected, components.z)

    def test_corrected_terms(self):
        sample = _sample(100)
        cfg = ivx.IvxConfig()
        components = ivx.build_corrected_instrument(sample.path, cfg)
        rho = cfg.rho_z(100)
        x_lag = sample.x_lag[:, 0]
        omega = sample.path.omega
        eta2 = np.zeros(100)
        for k in range(1, 100):
            eta2[k] = rho * eta2[k - 1] + omega[k - 1] * x_lag[k - 1]
        np.testing.assert_allclose(components.eta2[:, 0], eta2, atol=1e-10)
        expected = components.z + components.eta1 / 100.0 + components.eta2 / 10.0 + components.eta3 / 200.0
        np.testing.assert_allclose(components.corrected, expected)

    def test_corrected_needs_path(self):
        sample = _sample()
        bare = dgp.Sample(sample.y, sample.x_lag, sample.q_lag)
        with pytest.raises(ivx.MissingExogenousDraws):
            ivx.sample_instrument(bare, ivx.IvxConfig(), corrected=True)


class TestIvxFit:
    def test_regressor_as_instrument_is_ols(self):
        sample = _sample()
        fit = ivx.ivx_fit(sample, 0.0, instrument=sample.x_lag)
        theta, ssr = estimate.ols_fit(sample, 0.0)
        np.testing.assert_allclose(fit.beta_ivx, theta, atol=1e-8)
        assert fit.ssr == pytest.approx(ssr)

    def test_covariance(self):
        fit = ivx.ivx_fit(_sample(), 0.0)
        np.testing.assert_allclose(fit.avar, fit.avar.T, atol=1e-12)
        assert np.all(fit.standard_errors() > 0)
        assert fit.sigma2 == pytest.approx(fit.ssr / 300)

    def test_close_to_truth(self):
        fit = ivx.ivx_fit(_sample(1000, sigma_uv=0.0), 0.0)
        # (alpha1, beta1, alpha2, beta2)
        assert fit.beta_ivx[1] == pytest.approx(1.0, abs=0.1)
        assert fit.beta_ivx[3] == pytest.approx(0.0, abs=0.1)

    def test_corrected_fit(self):
        fit = ivx.ivx_fit(_sample(), 0.0, corrected=True)
        assert fit.corrected
        assert fit.components is not None

    def test_threshold_search(self):
        sample = _sample(200)
        grid = estimate.make_grid(sample.q_lag)
        fit = ivx.estimate_threshold_ivx(sample, grid)
        assert fit.ssr_curve.size == len(grid)
        assert fit.gamma in grid.points
        assert fit.ssr == pytest.approx(fit.ssr_curve.min())
        assert 'ssr_curve' in fit.to_dict()


class TestZnphi:
    def test_weights(self):
        cfg = ivx.IvxConfig()
        n = 64
        last = np.zeros(n)
        last[-1] = 1.0
        first = np.zeros(n)
        first[0] = 1.0
        assert ivx.znphi_statistic(last, [1.0], cfg) == pytest.approx(n ** (-0.95 / 2))
        assert ivx.znphi_statistic(first, [2.0], cfg) == pytest.approx(2.0 * cfg.rho_z(n) ** (n - 1) * n ** (-0.95 / 2))

    def test_limit_variance(self):
        draws = ivx.simulate_znphi_limit(ivx.IvxConfig(1.0), [0.5], [[1.0]], 40000, seed=8)
        assert np.var(draws) == pytest.approx(0.125, rel=0.05)

    def test_limit_dimensions(self):
        with pytest.raises(ivx.InvalidConfig):
            ivx.simulate_znphi_limit(ivx.IvxConfig(), [0.5, 0.5], [[1.0]], 10, seed=1)


def _znphi_variance(cfg, n, scale=1.0):
    rho = cfg.rho_z(n)
    return scale * (1.0 - rho ** (2 * n)) / (n ** cfg.gammaz * (1.0 - rho ** 2))


@pytest.mark.slow
class TestZnphiFiniteSample:
    def test_variance_matches_closed_form(self):
        cfg = ivx.IvxConfig()
        rng = np.random.default_rng(12)
        for n in (200, 2000):
            values = [ivx.znphi_statistic(rng.standard_normal(n), [0.5], cfg) for _ in range(8000)]
            assert np.var(values) == pytest.approx(_znphi_variance(cfg, n, 0.25), rel=0.06)

    def test_variance_approaches_limit(self):
        cfg = ivx.IvxConfig()
        variances = [_znphi_variance(cfg, n) for n in (100, 1000, 10 ** 4, 10 ** 6)]
        assert np.all(np.diff(variances) > 0.0)
        assert variances[-1] == pytest.approx(1.0 / (2.0 * cfg.cz), rel=0.03)
