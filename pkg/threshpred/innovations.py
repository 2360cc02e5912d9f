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
Innovation vector xi_t = (u_yt, u_xt', u_phit')', an i.i.d. Gaussian martingale
difference sequence with a user supplied block covariance
"""

import logging

import numpy as np

from threshpred import defaults
from threshpred import helpers


class NotPositiveDefinite(helpers.ConfigError):
    pass

class DimensionMismatch(helpers.ConfigError):
    pass

class InvalidSampleSize(helpers.ConfigError):
    pass


def _as_matrix(value, name):
    m = np.atleast_2d(np.asarray(value, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch('"{0}" must be a square matrix'.format(name))
    return m


class CovarianceSpec(object):
    """
    Block covariance of xi_t. cross_xy (p) is the covariance between u_xt and u_yt,
    the endogeneity control; cross_xphi (p x d) is the covariance between u_xt and u_phit.
    u_yt and u_phit are uncorrelated.
    """
    def __init__(self, sigma_y=1.0, sigma_xx=1.0, sigma_phiphi=1.0, cross_xy=None, cross_xphi=None):
        self.sigma_y = float(sigma_y)
        self.sigma_xx = _as_matrix(sigma_xx, 'sigma_xx')
        self.sigma_phiphi = _as_matrix(sigma_phiphi, 'sigma_phiphi')

        p, d = self.p, self.d
        if cross_xy is None:
            cross_xy = np.zeros(p)
        if cross_xphi is None:
            cross_xphi = np.zeros((p, d))
        self.cross_xy = np.atleast_1d(np.asarray(cross_xy, dtype=float))
        self.cross_xphi = np.asarray(cross_xphi, dtype=float)
        if self.cross_xphi.ndim < 2 and self.cross_xphi.size == p * d:
            self.cross_xphi = self.cross_xphi.reshape(p, d)

        if self.sigma_y <= 0:
            raise NotPositiveDefinite('"sigma_y" must be positive')
        if self.cross_xy.shape != (p,):
            raise DimensionMismatch('"cross_xy" must have {0} entries, got {1}'.format(p, self.cross_xy.size))
        if self.cross_xphi.shape != (p, d):
            raise DimensionMismatch('"cross_xphi" must be {0}x{1}, got {2}'.format(p, d, self.cross_xphi.shape))

    @property
    def p(self):
        return self.sigma_xx.shape[0]

    @property
    def d(self):
        return self.sigma_phiphi.shape[0]

    @property
    def dim(self):
        return 1 + self.p + self.d

    @staticmethod
    def identity(p=1, d=1):
        return CovarianceSpec(1.0, np.eye(p), np.eye(d))

    @staticmethod
    def endogenous(p=1, d=1, sigma_uv=0.0):
        """
        Unit variances with every u_x entry correlated sigma_uv with u_y
        """
        return CovarianceSpec(1.0, np.eye(p), np.eye(d), cross_xy=np.full(p, float(sigma_uv)))

    @staticmethod
    def from_dict(d):
        return CovarianceSpec(sigma_y=d.get('sigma_y', 1.0),
                              sigma_xx=d.get('sigma_xx', 1.0),
                              sigma_phiphi=d.get('sigma_phiphi', 1.0),
                              cross_xy=d.get('cross_xy'),
                              cross_xphi=d.get('cross_xphi'))

    def to_dict(self):
        return {
            'sigma_y': self.sigma_y,
            'sigma_xx': self.sigma_xx.tolist(),
            'sigma_phiphi': self.sigma_phiphi.tolist(),
            'cross_xy': self.cross_xy.tolist(),
            'cross_xphi': self.cross_xphi.tolist(),
        }


def assemble_covariance(spec):
    """
    Full (1+p+d) x (1+p+d) covariance of xi_t, ordered (u_y, u_x, u_phi).
    Raises NotPositiveDefinite when the Cholesky factorisation fails.
    """
    p, d = spec.p, spec.d
    full = np.zeros((spec.dim, spec.dim))
    full[0, 0] = spec.sigma_y
    full[1:1 + p, 1:1 + p] = spec.sigma_xx
    full[1 + p:, 1 + p:] = spec.sigma_phiphi
    full[0, 1:1 + p] = spec.cross_xy
    full[1:1 + p, 0] = spec.cross_xy
    full[1:1 + p, 1 + p:] = spec.cross_xphi
    full[1 + p:, 1:1 + p] = spec.cross_xphi.T

    if not np.allclose(full, full.T, rtol=0.0, atol=1e-14):
        raise NotPositiveDefinite('Covariance blocks are not symmetric')

    try:
        np.linalg.cholesky(full)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite('Assembled covariance is not positive definite')

    return full


class InnovationPanel(object):
    """
    n x (1+p+d) matrix of innovation draws, one row per period t = 1..n.
    The draws are read-only once the panel exists.
    """
    def __init__(self, draws, p, d, seed=None, replication=0):
        draws = np.array(draws, dtype=float)
        if draws.ndim != 2 or draws.shape[1] != 1 + p + d:
            raise DimensionMismatch('Innovation draws must have {0} columns'.format(1 + p + d))
        draws.setflags(write=False)
        self.draws = draws
        self.p = p
        self.d = d
        self.seed = seed
        self.replication = replication

    @property
    def n(self):
        return self.draws.shape[0]

    @property
    def u_y(self):
        return self.draws[:, 0]

    @property
    def u_x(self):
        return self.draws[:, 1:1 + self.p]

    @property
    def u_phi(self):
        return self.draws[:, 1 + self.p:]


def draw_innovations(spec, n, seed, replication=0):
    """
    Draws n i.i.d. rows from N(0, assemble_covariance(spec)).
    Row t depends only on (seed, replication, t): the Philox stream is keyed by
    (seed, replication) and rows are filled in order.
    """
    if n < 2:
        raise InvalidSampleSize('Innovation panels need n >= 2, got {0}'.format(n))

    full = assemble_covariance(spec)
    chol = np.linalg.cholesky(full)
    rng = helpers.make_rng(seed, defaults.stream_innovations, replication)
    z = rng.standard_normal((int(n), spec.dim))

    logging.getLogger(__name__).debug('Drew {0} innovations (seed={1}, replication={2})'.format(n, seed, replication))
    return InnovationPanel(z.dot(chol.T), spec.p, spec.d, seed=seed, replication=replication)
