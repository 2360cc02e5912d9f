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
IVX instruments (standard and corrected for stochastic unit root coefficients),
regime-wise IVX estimation and the mixed Gaussian covariance used for Wald tests
"""

import logging

import numpy as np
from scipy import signal

from threshpred import defaults
from threshpred import helpers
from threshpred import estimate


class InvalidConfig(helpers.ConfigError):
    pass

class MissingExogenousDraws(helpers.DataError):
    pass

class NearSingularInstrumentGram(helpers.NumericalError):
    pass


class IvxConfig(object):
    def __init__(self, cz=defaults.ivx_cz, gammaz=defaults.ivx_gammaz):
        self.cz = float(cz)
        self.gammaz = float(gammaz)
        if self.cz <= 0:
            raise InvalidConfig('IVX c_z must be positive, got {0}'.format(self.cz))
        if not 0.0 < self.gammaz < 1.0:
            raise InvalidConfig('IVX gamma_z must lie in (0, 1), got {0}'.format(self.gammaz))

    def rho_z(self, n):
        return 1.0 - self.cz / float(n) ** self.gammaz

    def to_dict(self):
        return {'cz': self.cz, 'gammaz': self.gammaz}


def _ar1_filter(inputs, rho):
    # out[0] = inputs[0], out[k] = rho * out[k-1] + inputs[k]
    return signal.lfilter([1.0], [1.0, -rho], inputs, axis=0)


def build_instrument(x, cfg, n=None):
    """
    z_k = rho_z z_{k-1} + (x_k - x_{k-1}), z_0 = 0, with rho_z = 1 - c_z/n^gamma_z.
    z has the same shape as x; n defaults to its length.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 2:
        raise InvalidConfig('IVX instruments need at least two observations')
    if n is None:
        n = x.shape[0]
    dx = np.zeros_like(x)
    dx[1:] = np.diff(x, axis=0)
    return _ar1_filter(dx, cfg.rho_z(n))


class CorrectedInstrument(object):
    """
    z~ = z + (C/n) eta1 + eta2/sqrt(n) + eta3/(2n); each eta_k = rho_z eta_{k-1} + w_k x_{k-1}
    with w_k = 1, phi'u_phik and (phi'u_phik)^2 respectively
    """
    def __init__(self, z, eta1, eta2, eta3, c, n):
        self.z = z
        self.eta1 = eta1
        self.eta2 = eta2
        self.eta3 = eta3
        self.c = c
        self.n = n

    @property
    def corrected(self):
        n = float(self.n)
        return self.z + (self.c[None, :] / n) * self.eta1 + self.eta2 / np.sqrt(n) + self.eta3 / (2.0 * n)


def corrected_components(x_lag, omega, c, cfg):
    """
    x_lag holds x_0..x_{n-1} (n x p), omega holds phi'u_phit for t = 1..n
    """
    x_lag = np.asarray(x_lag, dtype=float)
    x_lag = x_lag.reshape(-1, 1) if x_lag.ndim == 1 else x_lag
    omega = np.asarray(omega, dtype=float).ravel()
    n = x_lag.shape[0]
    if omega.size < n:
        raise MissingExogenousDraws('Coefficient shocks cover {0} periods, {1} needed'.format(omega.size, n))

    rho = cfg.rho_z(n)
    z = build_instrument(x_lag, cfg, n)

    def eta(weight):
        inputs = np.zeros_like(x_lag)
        inputs[1:] = x_lag[:-1] * weight[:n - 1, None]
        return _ar1_filter(inputs, rho)

    ones = np.ones(n)
    w = omega[:n]
    return CorrectedInstrument(z, eta(ones), eta(w), eta(w ** 2),
                               np.broadcast_to(np.asarray(c, dtype=float), (x_lag.shape[1],)), n)


def build_corrected_instrument(path, cfg):
    """
    Corrected instrument for the lag series x_0..x_{n-1} of a regressor path
    """
    if path is None or path.innovations is None or path.u_phi.shape[0] < path.n:
        raise MissingExogenousDraws('The regressor path carries no coefficient shock draws')
    if not np.all(np.isfinite(path.u_phi)):
        raise MissingExogenousDraws('Coefficient shock draws contain missing values')
    return corrected_components(path.x[:-1], path.omega, path.spec.c, cfg)


class IvxFit(object):
    def __init__(self, beta_ivx, z_path, avar, corrected, gamma, sigma2, ssr, parameterization,
                 has_intercept, components=None):
        self.beta_ivx = beta_ivx
        self.z_path = z_path
        self.avar = avar
        self.corrected = corrected
        self.gamma = gamma
        self.sigma2 = sigma2
        self.ssr = ssr
        self.parameterization = parameterization
        self.has_intercept = has_intercept
        self.components = components
        self.ssr_curve = None
        self.grid = None

    def standard_errors(self):
        return np.sqrt(np.diag(self.avar))

    def to_dict(self):
        d = {
            'gamma': self.gamma,
            'beta_ivx': self.beta_ivx,
            'standard_errors': self.standard_errors(),
            'avar': self.avar,
            'corrected': self.corrected,
            'sigma2': self.sigma2,
            'ssr': self.ssr,
            'parameterization': self.parameterization,
            'has_intercept': self.has_intercept,
        }
        if self.ssr_curve is not None:
            d['ssr_curve'] = self.ssr_curve
            d['grid'] = self.grid.to_dict()
        return helpers.to_jsonable(d)


def sample_instrument(sample, cfg, corrected=False):
    """
    Returns (z, components) for a sample; components is None unless corrected
    """
    if not corrected:
        return build_instrument(sample.x_lag, cfg, sample.n), None
    if sample.path is None:
        raise MissingExogenousDraws('Corrected IVX needs the generating regressor path and its coefficient shocks')
    components = build_corrected_instrument(sample.path, cfg)
    return components.corrected, components


def ivx_fit(sample, gamma, cfg=None, corrected=False, parameterization=estimate.TWO_REGIME, instrument=None):
    """
    Just-identified IV estimate with the instrument interacted with the regime indicators.
    Intercept columns instrument themselves, which partials them out regime by regime.
    avar = s2 (W'X)^-1 (W'W) (X'W)^-1 with s2 = SSR/n.
    """
    if cfg is None:
        cfg = IvxConfig()
    X = estimate.build_design(sample, gamma, parameterization)
    if instrument is None:
        z, components = sample_instrument(sample, cfg, corrected)
    else:
        z, components = np.asarray(instrument, dtype=float), None
        z = z.reshape(-1, 1) if z.ndim == 1 else z
    i1 = estimate.regime_indicator(sample, gamma)
    W = estimate.stack_design(z, i1, sample.has_intercept, parameterization)

    w_norms = np.linalg.norm(W, axis=0)
    x_norms = np.linalg.norm(X, axis=0)
    if np.any(w_norms == 0) or np.any(x_norms == 0):
        raise NearSingularInstrumentGram('Instrument or regressor column is identically zero at gamma={0}'.format(gamma))
    scaled = (W / w_norms).T.dot(X / x_norms)
    rcond = 1.0 / np.linalg.cond(scaled)
    if not np.isfinite(rcond) or rcond < defaults.rank_tolerance:
        raise NearSingularInstrumentGram('Instrument Gram matrix is singular (rcond={0:.3g})'.format(rcond))

    wx = W.T.dot(X)
    theta = np.linalg.solve(wx, W.T.dot(sample.y))
    resid = sample.y - X.dot(theta)
    ssr = float(resid.dot(resid))
    sigma2 = ssr / sample.n

    wx_inv = np.linalg.inv(wx)
    avar = sigma2 * wx_inv.dot(W.T.dot(W)).dot(wx_inv.T)

    return IvxFit(theta, z, avar, corrected, gamma, sigma2, ssr, parameterization, sample.has_intercept, components)


def estimate_threshold_ivx(sample, grid=None, cfg=None, corrected=False):
    """
    Threshold chosen by minimising the IVX residual sum of squares over the grid
    """
    if cfg is None:
        cfg = IvxConfig()
    if grid is None:
        grid = estimate.make_grid(sample.q_lag, p=sample.p)

    z, _ = sample_instrument(sample, cfg, corrected)
    curve = np.array([ivx_fit(sample, g, cfg, instrument=z).ssr for g in grid.points])
    best = int(np.argmin(curve))

    fit = ivx_fit(sample, float(grid.points[best]), cfg, corrected)
    fit.ssr_curve = curve
    fit.grid = grid
    logging.getLogger(__name__).debug('IVX threshold estimate {0:.6g}'.format(fit.gamma))
    return fit


def znphi_statistic(u_phi, phi, cfg):
    """
    n^{-gamma_z/2} sum_j rho_z^{n-j} phi'u_phij, the scaled instrument partial sum of the
    coefficient shocks
    """
    u_phi = np.asarray(u_phi, dtype=float)
    u_phi = u_phi.reshape(-1, 1) if u_phi.ndim == 1 else u_phi
    omega = u_phi.dot(np.atleast_1d(np.asarray(phi, dtype=float)))
    n = omega.size
    weights = cfg.rho_z(n) ** np.arange(n - 1, -1, -1)
    return float(n ** (-cfg.gammaz / 2.0) * weights.dot(omega))


def simulate_znphi_limit(cfg, phi, omega_phiphi, draws, seed):
    """
    Draws from N(0, phi' Omega phi / (2 c_z))
    """
    draws = int(draws)
    if draws < 1:
        raise InvalidConfig('At least one draw is needed')
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    omega = np.atleast_2d(np.asarray(omega_phiphi, dtype=float))
    if omega.shape != (phi.size, phi.size):
        raise InvalidConfig('Omega_phiphi must be {0}x{0}'.format(phi.size))
    variance = float(phi.dot(omega).dot(phi)) / (2.0 * cfg.cz)
    rng = helpers.make_rng(seed, defaults.stream_znphi)
    return np.sqrt(variance) * rng.standard_normal(draws)
