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

"""
Concentrated least squares estimation of the threshold predictive regression
"""

import logging

import numpy as np

from threshpred import defaults
from threshpred import helpers


class EmptyRegime(helpers.NumericalError):
    pass

class RankDeficient(helpers.NumericalError):
    pass

class DegenerateThresholdVariable(helpers.DataError):
    pass

class InvalidTrimming(helpers.ConfigError):
    pass


TWO_REGIME = 'two-regime'
BASE_DELTA = 'base-delta'
PARAMETERIZATIONS = (TWO_REGIME, BASE_DELTA)


class ThresholdGrid(object):
    """
    Candidate thresholds: distinct order statistics of q whose empirical share
    #(q <= v)/n lies in [pi1, pi2]. SSR is constant between order statistics,
    so the grid is exact.
    """
    def __init__(self, pi1, pi2, points, min_obs):
        self.pi1 = pi1
        self.pi2 = pi2
        self.points = np.asarray(points, dtype=float)
        self.min_obs = min_obs

    def __len__(self):
        return self.points.size

    def shifted(self, offset):
        return ThresholdGrid(self.pi1, self.pi2, self.points + offset, self.min_obs)

    def mapped(self, func):
        """
        Grid image under a strictly increasing transform
        """
        return ThresholdGrid(self.pi1, self.pi2, func(self.points), self.min_obs)

    def to_dict(self):
        return {'pi1': self.pi1, 'pi2': self.pi2, 'points': self.points.tolist(), 'min_obs': self.min_obs}


def min_regime_size(p):
    return max(p + 2, defaults.min_regime_obs)


def make_grid(q, pi1=defaults.trim_lower, pi2=defaults.trim_upper, p=1):
    q = np.asarray(q, dtype=float).ravel()
    if not (0.0 < pi1 < pi2 < 1.0):
        raise InvalidTrimming('Trimming must satisfy 0 < pi1 < pi2 < 1, got ({0}, {1})'.format(pi1, pi2))

    values = np.unique(q)
    if values.size < 2:
        raise DegenerateThresholdVariable('Threshold variable is constant')

    n = q.size
    min_obs = min_regime_size(p)
    below = np.searchsorted(np.sort(q), values, side='right')
    share = below / float(n)
    keep = (share >= pi1) & (share <= pi2) & (below >= min_obs) & (n - below >= min_obs)
    # strictly inside the observed range
    keep[0] = False
    keep[-1] = False

    points = values[keep]
    if points.size == 0:
        raise DegenerateThresholdVariable(
            'No candidate threshold leaves {0} observations in each regime within [{1}, {2}] (n={3})'.format(
                min_obs, pi1, pi2, n))

    return ThresholdGrid(pi1, pi2, points, min_obs)


def regime_indicator(sample, gamma):
    return sample.q_lag <= gamma


def build_design(sample, gamma, parameterization=TWO_REGIME):
    """
    TWO_REGIME stacks (I1, x'I1, I2, x'I2), BASE_DELTA stacks (1, x', I1, x'I1).
    Intercept columns are left out when the sample has no intercept.
    """
    if parameterization not in PARAMETERIZATIONS:
        raise helpers.ConfigError('Unknown parameterization "{0}"'.format(parameterization))

    i1 = regime_indicator(sample, gamma).astype(float)
    n1 = int(i1.sum())
    n2 = sample.n - n1
    if min(n1, n2) < sample.p + 1:
        raise EmptyRegime('Threshold {0} leaves {1} and {2} observations in the regimes'.format(gamma, n1, n2))

    return stack_design(sample.x_lag, i1, sample.has_intercept, parameterization)


def stack_design(x, i1, has_intercept, parameterization=TWO_REGIME):
    """
    Regime design from a regressor (or instrument) block and the regime-1 indicator
    """
    i1 = np.asarray(i1, dtype=float)[:, None]
    if parameterization == TWO_REGIME:
        i2 = 1.0 - i1
        blocks = [i1, x * i1, i2, x * i2]
    else:
        blocks = [np.ones_like(i1), x, i1, x * i1]
    if not has_intercept:
        blocks = [blocks[1], blocks[3]]
    return np.hstack(blocks)


def check_rank(X):
    """
    Raises RankDeficient when the column-equilibrated Gram matrix has a reciprocal
    condition number below the rank tolerance
    """
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise RankDeficient('Design has an all-zero column')
    scaled = X / norms
    gram = scaled.T.dot(scaled)
    rcond = 1.0 / np.linalg.cond(gram)
    if not np.isfinite(rcond) or rcond < defaults.rank_tolerance:
        raise RankDeficient('Gram matrix is singular (rcond={0:.3g})'.format(rcond))


def ols_fit(sample, gamma, parameterization=TWO_REGIME):
    """
    Returns (theta_hat, SSR) at a given threshold
    """
    X = build_design(sample, gamma, parameterization)
    check_rank(X)
    theta, _, _, _ = np.linalg.lstsq(X, sample.y, rcond=None)
    resid = sample.y - X.dot(theta)
    return theta, float(resid.dot(resid))


def ssr_profile(sample, grid):
    """
    Full-refit SSR at every grid point
    """
    return np.array([ols_fit(sample, g)[1] for g in grid.points])


class ThresholdFit(object):
    def __init__(self, gamma_hat, theta_hat, ssr_curve, sigma2_hat, grid, regime_sizes, base_delta, has_intercept):
        self.gamma_hat = gamma_hat
        self.theta_hat = theta_hat
        self.ssr_curve = ssr_curve
        self.sigma2_hat = sigma2_hat
        self.grid = grid
        self.regime_sizes = regime_sizes
        self.base_delta = base_delta
        self.has_intercept = has_intercept

    @property
    def ssr(self):
        return float(np.min(self.ssr_curve))

    def regime_coefficients(self):
        """
        (theta_1, theta_2), each with the intercept first when present
        """
        half = self.theta_hat.size // 2
        return self.theta_hat[:half], self.theta_hat[half:]

    def to_dict(self):
        theta1, theta2 = self.regime_coefficients()
        return helpers.to_jsonable({
            'gamma_hat': self.gamma_hat,
            'theta1': theta1,
            'theta2': theta2,
            'base_delta': self.base_delta,
            'has_intercept': self.has_intercept,
            'sigma2_hat': self.sigma2_hat,
            'ssr': self.ssr,
            'regime_sizes': list(self.regime_sizes),
            'grid': self.grid.to_dict(),
            'ssr_curve': self.ssr_curve,
        })


def estimate_threshold(sample, grid=None, pi1=defaults.trim_lower, pi2=defaults.trim_upper):
    """
    gamma_hat = argmin of the SSR profile, ties going to the smallest gamma
    """
    if grid is None:
        grid = make_grid(sample.q_lag, pi1, pi2, sample.p)

    curve = ssr_profile(sample, grid)
    best = int(np.argmin(curve))
    gamma_hat = float(grid.points[best])

    theta, ssr = ols_fit(sample, gamma_hat, TWO_REGIME)
    base_delta, _ = ols_fit(sample, gamma_hat, BASE_DELTA)
    n1 = int(regime_indicator(sample, gamma_hat).sum())

    logging.getLogger(__name__).debug('Threshold estimate {0:.6g} over {1} grid points'.format(gamma_hat, len(grid)))
    return ThresholdFit(gamma_hat, theta, curve, ssr / sample.n, grid, (n1, sample.n - n1), base_delta,
                        sample.has_intercept)


def intercept_ssr_profile(sample, grid):
    """
    SSR of y on the two regime intercepts alone, the model with every slope set to zero
    """
    y = sample.y
    below = (sample.q_lag[:, None] <= grid.points[None, :]).astype(float)
    n1 = below.sum(axis=0)
    n2 = sample.n - n1
    if np.any(n1 == 0) or np.any(n2 == 0):
        raise EmptyRegime('A grid point leaves an empty regime')
    s1 = y.dot(below)
    s2 = y.sum() - s1
    return y.dot(y) - s1 ** 2 / n1 - s2 ** 2 / n2


def restricted_threshold(sample, grid):
    """
    gamma_hat from the slope-free regime intercept model; ties go to the smallest gamma
    """
    if not sample.has_intercept:
        raise helpers.ConfigError('The slope-free threshold model needs regime intercepts')
    curve = intercept_ssr_profile(sample, grid)
    return float(grid.points[int(np.argmin(curve))])


def standardized_threshold_error(fit, sample, gamma0, delta0, tau, f_gamma0):
    """
    n^{2(1-tau)} (gamma_hat - gamma0) f(gamma0) delta0'[n^-2 sum x x']delta0 / sigma2_hat,
    the sample counterpart of the argmax of the two-sided Brownian-with-drift process
    """
    n = sample.n
    delta0 = np.broadcast_to(np.asarray(delta0, dtype=float), (sample.p,))
    gram = sample.x_lag.T.dot(sample.x_lag) / float(n) ** 2
    scale = f_gamma0 * delta0.dot(gram).dot(delta0) / fit.sigma2_hat
    return float(n) ** (2.0 * (1.0 - tau)) * (fit.gamma_hat - gamma0) * scale
