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
Regressor paths with stochastic local unit root coefficients, and threshold
predictive regression samples built on them
"""

import logging

import numpy as np
from scipy import stats

from threshpred import defaults
from threshpred import helpers
from threshpred import innovations
from threshpred.innovations import DimensionMismatch, InvalidSampleSize


class OverflowDetected(helpers.NumericalError):
    pass


FORM_EXACT = 'exact'
FORM_EXPANDED = 'expanded'


class PersistenceSpec(object):
    """
    Localizing coefficients c (diagonal of C_p, one per regressor) and the loading
    vector phi on the coefficient shocks u_phit.

    form 'exact':    rho_nt = exp{c/n + phi'u_phit/sqrt(n)}
    form 'expanded': rho_nt = (1 + c/n) + phi'u_phit/sqrt(n) + (phi'u_phit)^2/(2n)
    """
    def __init__(self, c, phi, form=FORM_EXACT):
        self.c = np.atleast_1d(np.asarray(c, dtype=float))
        self.phi = np.atleast_1d(np.asarray(phi, dtype=float))
        if form not in (FORM_EXACT, FORM_EXPANDED):
            raise helpers.ConfigError('Unknown coefficient form "{0}", expected "{1}" or "{2}"'.format(
                form, FORM_EXACT, FORM_EXPANDED))
        self.form = form

    @property
    def p(self):
        return self.c.size

    @property
    def d(self):
        return self.phi.size

    @property
    def locally_explosive(self):
        return bool(np.all(self.c > 0))

    def coefficients(self, omega, n):
        """
        n x p matrix of rho_nt given omega_t = phi'u_phit, t = 1..n
        """
        omega = np.asarray(omega, dtype=float)[:, None]
        if self.form == FORM_EXACT:
            return np.exp(self.c[None, :] / n + omega / np.sqrt(n))
        return (1.0 + self.c[None, :] / n) + omega / np.sqrt(n) + omega ** 2 / (2.0 * n)

    def to_dict(self):
        return {'c': self.c.tolist(), 'phi': self.phi.tolist(), 'form': self.form}

    @staticmethod
    def from_dict(d):
        return PersistenceSpec(d['c'], d['phi'], d.get('form', FORM_EXACT))


class RegressorPath(object):
    """
    x_0..x_n ((n+1) x p), the realised coefficients rho (n x p, row t-1 holds rho_nt)
    and the innovation panel that generated them
    """
    def __init__(self, x, rho, spec, panel):
        self.x = x
        self.rho = rho
        self.spec = spec
        self.innovations = panel

    @property
    def n(self):
        return self.rho.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    @property
    def u_x(self):
        return self.innovations.u_x[:self.n]

    @property
    def u_phi(self):
        return self.innovations.u_phi[:self.n]

    @property
    def omega(self):
        """
        phi'u_phit for t = 1..n
        """
        return self.u_phi.dot(self.spec.phi)

    def reconstruct(self):
        """
        Re-runs the recursion from the stored coefficients and innovations
        """
        return _run_recursion(self.x[0], self.rho, self.u_x)


def _run_recursion(x0, rho, u_x):
    n, p = rho.shape
    x = np.empty((n + 1, p))
    x[0] = x0
    with np.errstate(over='ignore', invalid='ignore'):
        for t in range(1, n + 1):
            x[t] = rho[t - 1] * x[t - 1] + u_x[t - 1]
    return x


def gen_regressor_path(spec, panel, n=None, x0=None):
    """
    x_t = rho_nt o x_{t-1} + u_xt, t = 1..n, with x_0 = x0 (zero by default).
    x_0 = 0 is the same path as the x_1 = u_x1 convention.
    """
    if n is None:
        n = panel.n
    n = int(n)
    if panel.n < n:
        raise DimensionMismatch('Innovation panel has {0} rows, {1} needed'.format(panel.n, n))
    if spec.p != panel.p:
        raise DimensionMismatch('c has {0} entries but the panel carries {1} regressors'.format(spec.p, panel.p))
    if spec.d != panel.d:
        raise DimensionMismatch('phi has {0} entries but the panel carries {1} coefficient shocks'.format(spec.d, panel.d))

    if x0 is None:
        x0 = np.zeros(spec.p)
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (spec.p,))

    omega = panel.u_phi[:n].dot(spec.phi)
    rho = spec.coefficients(omega, n)
    x = _run_recursion(x0, rho, panel.u_x[:n])

    if not np.all(np.isfinite(x)):
        raise OverflowDetected('Regressor path overflowed (n={0}, c={1})'.format(n, spec.c.tolist()))

    return RegressorPath(x, rho, spec, panel)


def path_from_observations(x, u_phi, spec):
    """
    Rebuilds a RegressorPath from an observed x_0..x_n and u_phi1..u_phin under a
    persistence spec. u_x is recovered from the recursion; u_y is left unknown.
    """
    x = np.asarray(x, dtype=float)
    x = x.reshape(-1, 1) if x.ndim == 1 else x
    u_phi = np.asarray(u_phi, dtype=float)
    u_phi = u_phi.reshape(-1, 1) if u_phi.ndim == 1 else u_phi
    n = x.shape[0] - 1
    if u_phi.shape[0] != n:
        raise DimensionMismatch('Expected {0} coefficient shock rows, got {1}'.format(n, u_phi.shape[0]))
    if spec.p != x.shape[1] or spec.d != u_phi.shape[1]:
        raise DimensionMismatch('Persistence spec does not match the observed dimensions')

    rho = spec.coefficients(u_phi.dot(spec.phi), n)
    u_x = x[1:] - rho * x[:-1]
    draws = np.hstack([np.full((n, 1), np.nan), u_x, u_phi])
    panel = innovations.InnovationPanel(draws, spec.p, spec.d)
    return RegressorPath(x, rho, spec, panel)


THRESHOLD_NORMAL = 'normal'
THRESHOLD_UNIFORM = 'uniform'


class ThresholdDgpSpec(object):
    """
    y_t = alpha_j + beta_j'x_{t-1} + u_yt, regime j = 1 when q_{t-1} <= gamma0.

    Slopes are either given per regime (beta1, beta2), or in diminishing form where
    regime 2 has slope `base` and regime 1 has base + delta0 * n^-tau.
    """
    def __init__(self, alpha=(0.0, 0.0), beta1=None, beta2=None, base=0.0, delta0=0.0, tau=0.0,
                 gamma0=defaults.benchmark_gamma0, threshold_dist=THRESHOLD_NORMAL, has_intercept=True):
        self.alpha = tuple(float(a) for a in alpha)
        if len(self.alpha) != 2:
            raise helpers.ConfigError('"alpha" must hold two regime intercepts')
        self.beta1 = None if beta1 is None else np.atleast_1d(np.asarray(beta1, dtype=float))
        self.beta2 = None if beta2 is None else np.atleast_1d(np.asarray(beta2, dtype=float))
        if (self.beta1 is None) != (self.beta2 is None):
            raise helpers.ConfigError('"beta1" and "beta2" must be given together')
        self.base = np.atleast_1d(np.asarray(base, dtype=float))
        self.delta0 = np.atleast_1d(np.asarray(delta0, dtype=float))
        self.tau = float(tau)
        if not 0.0 <= self.tau < 0.5:
            raise helpers.ConfigError('"tau" must lie in [0, 1/2), got {0}'.format(self.tau))
        self.gamma0 = float(gamma0)
        if threshold_dist not in (THRESHOLD_NORMAL, THRESHOLD_UNIFORM):
            raise helpers.ConfigError('Unknown threshold distribution "{0}"'.format(threshold_dist))
        self.threshold_dist = threshold_dist
        self.has_intercept = bool(has_intercept)

    @property
    def diminishing(self):
        return self.beta1 is None

    @staticmethod
    def benchmark(p=defaults.benchmark_p):
        """
        Regime 1 slope 2/n^0.25 on every regressor, regime 2 slope 0, gamma0 = 0.25
        """
        return ThresholdDgpSpec(alpha=(0.0, 0.0), base=np.zeros(p), delta0=np.full(p, defaults.benchmark_delta0),
                                tau=defaults.benchmark_tau, gamma0=defaults.benchmark_gamma0)

    @staticmethod
    def null(p=1, beta=0.0, alpha=0.0, has_intercept=True):
        """
        Linear predictive regression, no threshold effect
        """
        return ThresholdDgpSpec(alpha=(alpha, alpha), base=np.full(p, float(beta)), delta0=np.zeros(p),
                                has_intercept=has_intercept)

    def regime_slopes(self, n, p):
        if self.diminishing:
            base = np.broadcast_to(self.base, (p,)).astype(float)
            delta = np.broadcast_to(self.delta0, (p,)) * float(n) ** (-self.tau)
            return base + delta, base.copy()
        if self.beta1.size != p or self.beta2.size != p:
            raise DimensionMismatch('Regime slopes must have {0} entries'.format(p))
        return self.beta1, self.beta2

    def draw_threshold(self, rng, n):
        if self.threshold_dist == THRESHOLD_NORMAL:
            return rng.standard_normal(n)
        return rng.uniform(0.0, 1.0, n)

    def threshold_density(self, gamma):
        if self.threshold_dist == THRESHOLD_NORMAL:
            return float(stats.norm.pdf(gamma))
        return float(stats.uniform.pdf(gamma))

    def to_dict(self):
        return {
            'alpha': list(self.alpha),
            'beta1': None if self.beta1 is None else self.beta1.tolist(),
            'beta2': None if self.beta2 is None else self.beta2.tolist(),
            'base': self.base.tolist(),
            'delta0': self.delta0.tolist(),
            'tau': self.tau,
            'gamma0': self.gamma0,
            'threshold_dist': self.threshold_dist,
            'has_intercept': self.has_intercept,
        }


class Sample(object):
    """
    Aligned (y_t, x_{t-1}, q_{t-1}), t = 1..n. The threshold indicator has the same
    lag as the predictor.
    """
    def __init__(self, y, x_lag, q_lag, has_intercept=True, path=None, gamma0=None):
        self.y = np.asarray(y, dtype=float).ravel()
        x_lag = np.asarray(x_lag, dtype=float)
        self.x_lag = x_lag.reshape(-1, 1) if x_lag.ndim == 1 else x_lag
        self.q_lag = np.asarray(q_lag, dtype=float).ravel()
        self.has_intercept = bool(has_intercept)
        self.path = path
        self.gamma0 = gamma0

        n = self.y.size
        if self.x_lag.shape[0] != n or self.q_lag.size != n:
            raise DimensionMismatch('y, x_lag and q_lag must share length, got {0}, {1}, {2}'.format(
                n, self.x_lag.shape[0], self.q_lag.size))
        for name, arr in (('y', self.y), ('x_lag', self.x_lag), ('q_lag', self.q_lag)):
            if not np.all(np.isfinite(arr)):
                raise helpers.DataError('"{0}" contains missing or non-finite values'.format(name))

    @property
    def n(self):
        return self.y.size

    @property
    def p(self):
        return self.x_lag.shape[1]

    def with_y(self, y):
        return Sample(y, self.x_lag, self.q_lag, self.has_intercept, self.path, self.gamma0)

    def with_q(self, q_lag):
        return Sample(self.y, self.x_lag, q_lag, self.has_intercept, self.path, self.gamma0)


def build_threshold_sample(dgp, path, q, u_y):
    """
    Assembles y_t = alpha_j + beta_j'x_{t-1} + u_yt from a regressor path, the threshold
    draws q_0..q_{n-1} and the regression errors u_y1..u_yn
    """
    n, p = path.n, path.p
    x_lag = path.x[:-1]
    q_lag = np.asarray(q, dtype=float)[:n]
    beta1, beta2 = dgp.regime_slopes(n, p)

    regime1 = q_lag <= dgp.gamma0
    y = np.where(regime1, x_lag.dot(beta1), x_lag.dot(beta2))
    if dgp.has_intercept:
        y = y + np.where(regime1, dgp.alpha[0], dgp.alpha[1])
    y = y + np.asarray(u_y, dtype=float)[:n]

    return Sample(y, x_lag, q_lag, dgp.has_intercept, path=path, gamma0=dgp.gamma0)


def gen_threshold_sample(dgp, pers, cov, n, seed, replication=0, x0=None):
    """
    Simulates one threshold predictive regression sample of size n
    """
    if n < 20:
        raise InvalidSampleSize('Threshold samples need n >= 20, got {0}'.format(n))
    if pers.p != cov.p or pers.d != cov.d:
        raise DimensionMismatch('Persistence spec is {0}x{1} but covariance is {2}x{3} (p x d)'.format(
            pers.p, pers.d, cov.p, cov.d))

    panel = innovations.draw_innovations(cov, n, seed, replication)
    path = gen_regressor_path(pers, panel, n, x0=x0)
    q = dgp.draw_threshold(helpers.make_rng(seed, defaults.stream_threshold, replication), n)

    logging.getLogger(__name__).debug('Simulated sample n={0} replication={1}'.format(n, replication))
    return build_threshold_sample(dgp, path, q, panel.u_y)
