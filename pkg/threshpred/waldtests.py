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
Wald and sup-Wald statistics for linearity (eta = 0) and for joint linearity and
no predictability (eta = 0, beta = 0), with OLS or IVX estimation.

All statistics are computed in the base-delta parameterization
(alpha, beta, alpha*, delta), where eta = (alpha*, delta).
"""

import logging

import numpy as np
from scipy import linalg
from scipy import stats

from threshpred import defaults
from threshpred import helpers
from threshpred import estimate
from threshpred import ivx


LINEARITY = 'linearity'
JOINT = 'joint'

OLS = 'ols'
IVX = 'ivx'
ESTIMATORS = (OLS, IVX)

PVALUE_CHI2 = 'chi2'
PVALUE_UNAVAILABLE = 'unavailable'


class Hypothesis(object):
    """
    kind LINEARITY restricts eta; JOINT restricts eta and beta. When intercept_shift
    is False the intercept shift alpha* stays free.
    """
    def __init__(self, kind=LINEARITY, intercept_shift=True):
        if kind not in (LINEARITY, JOINT):
            raise helpers.ConfigError('Unknown hypothesis "{0}"'.format(kind))
        self.kind = kind
        self.intercept_shift = bool(intercept_shift)

    @staticmethod
    def regime_slopes():
        """
        beta_1 = beta_2 = 0, intercepts unrestricted
        """
        return Hypothesis(JOINT, intercept_shift=False)

    def restricted_columns(self, p, has_intercept):
        """
        Indices into the base-delta coefficient vector that the hypothesis sets to zero
        """
        if has_intercept:
            beta = list(range(1, 1 + p))
            shift = [1 + p] if self.intercept_shift else []
            delta = list(range(2 + p, 2 + 2 * p))
        else:
            beta = list(range(p))
            shift = []
            delta = list(range(p, 2 * p))
        cols = shift + delta
        if self.kind == JOINT:
            cols = beta + cols
        return sorted(cols)

    def restriction_matrix(self, p, has_intercept):
        k = 2 * p + (2 if has_intercept else 0)
        return np.eye(k)[self.restricted_columns(p, has_intercept)]

    def dof(self, p, has_intercept):
        return len(self.restricted_columns(p, has_intercept))

    @property
    def name(self):
        if self.kind == JOINT and not self.intercept_shift:
            return 'regime-slopes'
        return self.kind

    def to_dict(self):
        return {'kind': self.kind, 'intercept_shift': self.intercept_shift, 'name': self.name}


def _quadratic_form(r_theta, middle):
    return float(r_theta.dot(linalg.solve(middle, r_theta, assume_a='pos')))


def _exact_fit_statistic(r_theta):
    """
    Zero residual variance: infinite unless the restrictions already hold
    """
    if np.allclose(r_theta, 0.0, atol=defaults.exact_fit_tolerance):
        return 0.0
    return float('inf')


def wald_ols(sample, gamma, hyp):
    """
    (R theta)'[R (X'X)^-1 R']^-1 (R theta) / s2, s2 the unrestricted residual
    variance at gamma. Equal to (SSR_restricted - SSR_unrestricted) / s2.
    """
    X = estimate.build_design(sample, gamma, estimate.BASE_DELTA)
    estimate.check_rank(X)

    q_mat, r_mat = np.linalg.qr(X)
    theta = linalg.solve_triangular(r_mat, q_mat.T.dot(sample.y))
    resid = sample.y - X.dot(theta)
    sigma2 = resid.dot(resid) / sample.n

    r_inv = linalg.solve_triangular(r_mat, np.eye(r_mat.shape[0]))
    xtx_inv = r_inv.dot(r_inv.T)

    R = hyp.restriction_matrix(sample.p, sample.has_intercept)
    if sigma2 <= 0:
        return _exact_fit_statistic(R.dot(theta))
    return max(_quadratic_form(R.dot(theta), R.dot(xtx_inv).dot(R.T)) / sigma2, 0.0)


def wald_ivx(sample, gamma, hyp, cfg=None, corrected=False, instrument=None):
    """
    (R theta)'[R V R']^-1 (R theta) with theta and V the IVX estimate and its
    mixed Gaussian covariance
    """
    fit = ivx.ivx_fit(sample, gamma, cfg, corrected, estimate.BASE_DELTA, instrument=instrument)
    R = hyp.restriction_matrix(sample.p, sample.has_intercept)
    if fit.sigma2 <= 0:
        return _exact_fit_statistic(R.dot(fit.beta_ivx))
    return max(_quadratic_form(R.dot(fit.beta_ivx), R.dot(fit.avar).dot(R.T)), 0.0)


class WaldCurve(object):
    def __init__(self, gammas, values, estimator, hypothesis, dof, skipped=None):
        self.gammas = np.asarray(gammas, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.estimator = estimator
        self.hypothesis = hypothesis
        self.dof = dof
        self.skipped = list(skipped or [])
        self.pvalue = None
        self.pvalue_source = None

    @property
    def sup_stat(self):
        return float(np.max(self.values))

    @property
    def argmax_gamma(self):
        # np.argmax returns the first maximiser, the smallest gamma
        return float(self.gammas[int(np.argmax(self.values))])

    def to_dict(self):
        return helpers.to_jsonable({
            'hypothesis': self.hypothesis.to_dict(),
            'estimator': self.estimator,
            'sup': self.sup_stat,
            'argmax': self.argmax_gamma,
            'dof': self.dof,
            'grid': self.gammas,
            'curve': self.values,
            'skipped': self.skipped,
            'pvalue': self.pvalue,
            'pvalue_source': self.pvalue_source,
        })


def _check_estimator(estimator):
    if estimator not in ESTIMATORS:
        raise helpers.ConfigError('Unknown estimator "{0}", expected one of {1}'.format(estimator, ESTIMATORS))


def sup_wald(sample, grid, hyp, estimator=OLS, cfg=None, corrected=False):
    """
    Wald statistic over every grid point; points with too small a regime are skipped and recorded
    """
    _check_estimator(estimator)
    logger = logging.getLogger(__name__)

    instrument = None
    if estimator == IVX:
        if cfg is None:
            cfg = ivx.IvxConfig()
        instrument, _ = ivx.sample_instrument(sample, cfg, corrected)

    gammas, values, skipped = [], [], []
    for g in grid.points:
        try:
            if estimator == OLS:
                value = wald_ols(sample, g, hyp)
            else:
                value = wald_ivx(sample, g, hyp, cfg, instrument=instrument)
        except estimate.EmptyRegime:
            logger.debug('Skipping grid point {0}: empty regime'.format(g))
            skipped.append(float(g))
            continue
        gammas.append(float(g))
        values.append(value)

    if not values:
        raise estimate.EmptyRegime('Every grid point left a regime too small to fit')

    return WaldCurve(gammas, values, estimator, hyp, hyp.dof(sample.p, sample.has_intercept), skipped)


class WaldResult(object):
    """
    Wald statistic evaluated at an estimated threshold. The chi-square law holds only
    when gamma was chosen from the slope-free intercept model.
    """
    def __init__(self, statistic, gamma, estimator, hypothesis, dof, pvalue_source=PVALUE_CHI2):
        self.statistic = statistic
        self.gamma = gamma
        self.estimator = estimator
        self.hypothesis = hypothesis
        self.dof = dof
        self.pvalue_source = pvalue_source

    def __float__(self):
        return float(self.statistic)

    @property
    def pvalue(self):
        if self.pvalue_source != PVALUE_CHI2:
            return None
        return chi2_pvalue(self.statistic, self.dof)

    def to_dict(self):
        return helpers.to_jsonable({
            'statistic': self.statistic,
            'gamma': self.gamma,
            'estimator': self.estimator,
            'hypothesis': self.hypothesis.to_dict(),
            'dof': self.dof,
            'pvalue': self.pvalue,
            'pvalue_source': self.pvalue_source,
        })


def wald_at_estimated_threshold(sample, grid, estimator=OLS, cfg=None, corrected=False):
    """
    Tests beta_1 = beta_2 = 0 at the threshold that minimises the SSR of the model
    with the slopes set to zero (regime intercepts only). That choice does not load on
    the slope scores, so under exogeneity the statistic is asymptotically chi-square
    with 2p degrees of freedom whether or not the intercepts shift.

    Without intercepts the slope-free model does not depend on gamma; gamma then comes
    from the unrestricted SSR and no p-value is reported.
    """
    _check_estimator(estimator)
    hyp = Hypothesis.regime_slopes()
    if sample.has_intercept:
        gamma_hat = estimate.restricted_threshold(sample, grid)
        source = PVALUE_CHI2
    else:
        gamma_hat = estimate.estimate_threshold(sample, grid).gamma_hat
        source = PVALUE_UNAVAILABLE

    if estimator == OLS:
        value = wald_ols(sample, gamma_hat, hyp)
    else:
        value = wald_ivx(sample, gamma_hat, hyp, cfg, corrected)
    return WaldResult(value, gamma_hat, estimator, hyp, hyp.dof(sample.p, sample.has_intercept), source)


def chi2_pvalue(statistic, dof):
    return float(stats.chi2.sf(statistic, dof))
