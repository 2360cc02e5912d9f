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
from mock import patch

from threshpred import dgp
from threshpred import estimate
from threshpred import helpers
from threshpred import limitsim
from threshpred.innovations import CovarianceSpec


def _threshold_sample(n=400, seed=21, beta1=3.0, beta2=0.0, gamma0=0.0):
    model = dgp.ThresholdDgpSpec(alpha=(0.0, 0.0), beta1=[beta1], beta2=[beta2], gamma0=gamma0)
    return dgp.gen_threshold_sample(model, dgp.PersistenceSpec(1.0, 0.05), CovarianceSpec.identity(), n, seed)


class TestGrid:
    def test_rank_based(self):
        grid = estimate.make_grid(np.arange(100.0), 0.15, 0.85, p=1)
        assert len(grid) == 71
        assert grid.points[0] == 14.0
        assert grid.points[-1] == 84.0
        assert grid.min_obs == 10

    def test_ties_collapse(self):
        q = np.repeat(np.arange(50.0), 2)
        grid = estimate.make_grid(q, 0.15, 0.85)
        assert np.all(np.diff(grid.points) > 0)
        assert set(grid.points).issubset(set(q))

    def test_excludes_extremes(self):
        grid = estimate.make_grid(np.arange(30.0), 0.01, 0.99, p=1)
        assert grid.points.min() > 0.0
        assert grid.points.max() < 29.0

    def test_invalid_trimming(self):
        with pytest.raises(estimate.InvalidTrimming):
            estimate.make_grid(np.arange(100.0), 0.9, 0.1)

    def test_constant_threshold_variable(self):
        with pytest.raises(estimate.DegenerateThresholdVariable):
            estimate.make_grid(np.ones(100))

    def test_too_few_observations(self):
        with pytest.raises(estimate.DegenerateThresholdVariable):
            estimate.make_grid(np.arange(15.0), p=1)


class TestDesign:
    def test_columns(self):
        sample = _threshold_sample(100)
        assert estimate.build_design(sample, 0.0).shape == (100, 4)
        assert estimate.build_design(sample, 0.0, estimate.BASE_DELTA).shape == (100, 4)
        no_intercept = dgp.Sample(sample.y, sample.x_lag, sample.q_lag, has_intercept=False)
        assert estimate.build_design(no_intercept, 0.0).shape == (100, 2)

    def test_parameterizations_agree(self):
        sample = _threshold_sample(200)
        theta, ssr = estimate.ols_fit(sample, 0.1)
        delta, ssr_bd = estimate.ols_fit(sample, 0.1, estimate.BASE_DELTA)
        assert ssr == pytest.approx(ssr_bd, rel=1e-9)
        # base is regime 2, delta the regime 1 shift
        np.testing.assert_allclose(delta[:2], theta[2:], atol=1e-8)
        np.testing.assert_allclose(delta[:2] + delta[2:], theta[:2], atol=1e-8)

    def test_empty_regime(self):
        sample = _threshold_sample(100)
        with pytest.raises(estimate.EmptyRegime):
            estimate.build_design(sample, sample.q_lag.min() - 1.0)

    def test_rank_deficient(self):
        n = 60
        sample = dgp.Sample(np.random.RandomState(0).randn(n), np.ones((n, 1)), np.arange(n, dtype=float))
        with pytest.raises(estimate.RankDeficient):
            estimate.ols_fit(sample, 30.0)


class TestEstimateThreshold:
    def test_recovers_threshold(self):
        sample = _threshold_sample()
        fit = estimate.estimate_threshold(sample)
        assert abs(fit.gamma_hat) < 0.05
        theta1, theta2 = fit.regime_coefficients()
        assert theta1[1] == pytest.approx(3.0, abs=0.1)
        assert theta2[1] == pytest.approx(0.0, abs=0.1)

    def test_minimum_and_variance(self):
        sample = _threshold_sample(200)
        fit = estimate.estimate_threshold(sample)
        assert fit.ssr == pytest.approx(estimate.ols_fit(sample, fit.gamma_hat)[1])
        assert fit.sigma2_hat == pytest.approx(fit.ssr / sample.n)
        assert sum(fit.regime_sizes) == sample.n
        assert fit.gamma_hat in fit.grid.points

    def test_ties_take_smallest(self):
        sample = _threshold_sample(200)
        grid = estimate.make_grid(sample.q_lag)
        with patch.object(estimate, 'ssr_profile', return_value=np.ones(len(grid))):
            fit = estimate.estimate_threshold(sample, grid)
        assert fit.gamma_hat == grid.points[0]

    def test_to_dict(self):
        d = estimate.estimate_threshold(_threshold_sample(120)).to_dict()
        assert set(['gamma_hat', 'theta1', 'theta2', 'ssr', 'sigma2_hat', 'regime_sizes', 'grid']) <= set(d)
        assert isinstance(d['gamma_hat'], float)

    def test_standardized_error_zero_at_truth(self):
        sample = _threshold_sample(200)
        fit = estimate.estimate_threshold(sample)
        err = estimate.standardized_threshold_error(fit, sample, fit.gamma_hat, 2.0, 0.25, 0.4)
        assert err == 0.0


class TestInterceptProfile:
    def test_matches_refits(self):
        sample = _threshold_sample(200)
        grid = estimate.make_grid(sample.q_lag)
        curve = estimate.intercept_ssr_profile(sample, grid)
        for g, value in zip(grid.points[::7], curve[::7]):
            below = (sample.q_lag <= g).astype(float)
            X = np.column_stack([below, 1.0 - below])
            theta = np.linalg.lstsq(X, sample.y, rcond=None)[0]
            resid = sample.y - X.dot(theta)
            assert value == pytest.approx(resid.dot(resid), rel=1e-9)

    def test_threshold_is_argmin(self):
        sample = _threshold_sample(200)
        grid = estimate.make_grid(sample.q_lag)
        curve = estimate.intercept_ssr_profile(sample, grid)
        assert estimate.restricted_threshold(sample, grid) == grid.points[int(np.argmin(curve))]

    def test_needs_intercepts(self):
        model = dgp.ThresholdDgpSpec.null(1, has_intercept=False)
        sample = dgp.gen_threshold_sample(model, dgp.PersistenceSpec(1.0, 0.05), CovarianceSpec.identity(), 200, 3)
        with pytest.raises(helpers.ConfigError):
            estimate.restricted_threshold(sample, estimate.make_grid(sample.q_lag))


class TestInvariance:
    def test_monotone_transform_of_q(self):
        sample = _threshold_sample(300)
        grid = estimate.make_grid(sample.q_lag)
        gamma_hat = estimate.estimate_threshold(sample, grid).gamma_hat
        for func in (np.exp, lambda v: 2.0 * v + 1.0):
            moved = estimate.estimate_threshold(sample.with_q(func(sample.q_lag)), grid.mapped(func))
            assert moved.gamma_hat == pytest.approx(float(func(gamma_hat)))

    def test_rescaled_response(self):
        sample = _threshold_sample(300)
        grid = estimate.make_grid(sample.q_lag)
        fit = estimate.estimate_threshold(sample, grid)
        scaled = estimate.estimate_threshold(sample.with_y(10.0 * sample.y), grid)
        assert scaled.gamma_hat == fit.gamma_hat
        assert scaled.sigma2_hat == pytest.approx(100.0 * fit.sigma2_hat)


@pytest.mark.slow
class TestThresholdLimit:
    def test_standardized_error_matches_argmax_law(self):
        tau, delta0, n = 0.45, 0.5, 2000
        model = dgp.ThresholdDgpSpec(base=[0.0], delta0=[delta0], tau=tau, gamma0=0.25)
        density = model.threshold_density(model.gamma0)
        errors = []
        for rep in range(400):
            sample = dgp.gen_threshold_sample(model, dgp.PersistenceSpec(1.0, 0.05), CovarianceSpec.identity(),
                                              n, 31, rep)
            fit = estimate.estimate_threshold(sample)
            errors.append(estimate.standardized_threshold_error(fit, sample, model.gamma0, delta0, tau, density))
        limit = [limitsim.two_sided_argmax(helpers.make_rng(5, rep), 50.0, 5000) for rep in range(4000)]

        def iqr(values):
            upper, lower = np.percentile(values, [75, 25])
            return upper - lower

        assert iqr(errors) == pytest.approx(iqr(limit), rel=0.3)
        assert abs(np.median(errors)) < 0.25 * iqr(limit)
