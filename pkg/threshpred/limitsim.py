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
Simulation of the limiting functionals behind the threshold tests: the OU process in
a random environment G, Brownian sheet functionals for the OLS sup-Wald laws, the
pivotal Brownian bridge law of the IVX sup-Wald, and the two-sided Brownian motion
argmax governing the threshold estimator. Also tabulates critical values.
"""

import os
import json
import logging

import numpy as np
import pandas as pd
from scipy import stats

from threshpred import __version__
from threshpred import defaults
from threshpred import helpers
from threshpred import innovations


class InvalidMesh(helpers.ConfigError):
    pass

class SingularLimitGram(helpers.NumericalError):
    pass

class ArgmaxAtBoundary(helpers.NumericalError):
    pass

class TableError(helpers.DataError):
    pass


OLS_H1 = 'ols-h1'
OLS_H2 = 'ols-h2'
IVX_H1 = 'ivx-h1'
IVX_H2 = 'ivx-h2'
THRESHOLD_ARGMAX = 'threshold-argmax'
FUNCTIONALS = (OLS_H1, OLS_H2, IVX_H1, IVX_H2, THRESHOLD_ARGMAX)
PIVOTAL = (IVX_H1, IVX_H2)


class MeshSpec(object):
    def __init__(self, steps=defaults.mesh_steps, reps=defaults.mesh_reps, seed=0,
                 lambda_points=defaults.lambda_grid_points):
        self.steps = int(steps)
        self.reps = int(reps)
        self.seed = int(seed)
        self.lambda_points = int(lambda_points)
        if self.steps < defaults.mesh_min_steps:
            raise InvalidMesh('Mesh needs at least {0} steps, got {1}'.format(defaults.mesh_min_steps, self.steps))
        if self.reps < defaults.mesh_min_reps:
            raise InvalidMesh('Mesh needs at least {0} draws, got {1}'.format(defaults.mesh_min_reps, self.reps))
        if self.lambda_points < 1:
            raise InvalidMesh('The lambda grid needs at least one point')

    @property
    def ds(self):
        return 1.0 / self.steps

    def to_dict(self):
        return {'steps': self.steps, 'reps': self.reps, 'seed': self.seed, 'lambda_points': self.lambda_points}


def lambda_grid(trimming, points):
    pi1, pi2 = float(trimming[0]), float(trimming[1])
    if not (0.0 < pi1 <= pi2 < 1.0):
        raise helpers.ConfigError('Trimming must satisfy 0 < pi1 <= pi2 < 1, got ({0}, {1})'.format(pi1, pi2))
    if pi1 == pi2:
        return np.array([pi1])
    return np.linspace(pi1, pi2, points)


class GPath(object):
    """
    G on the mesh s_k = k/steps, k = 0..steps, with the Brownian increments that built it
    """
    def __init__(self, s, G, dB_u, dB_x, dB_phi, sigma_u, rng):
        self.s = s
        self.G = G
        self.dB_u = dB_u
        self.dB_x = dB_x
        self.dB_phi = dB_phi
        self.sigma_u = sigma_u
        self.rng = rng

    @property
    def steps(self):
        return self.s.size - 1

    @property
    def dW(self):
        return self.dB_u / self.sigma_u

    def gram(self, intercept=False):
        K = _regressor_process(self.G, intercept)
        return K.T.dot(K) / self.steps


def _regressor_process(G, intercept):
    # left-point values G(s_0)..G(s_{steps-1})
    K = G[:-1]
    if intercept:
        K = np.hstack([np.ones((K.shape[0], 1)), K])
    return K


def _cov_or_identity(cov, p, d):
    if cov is None:
        return innovations.CovarianceSpec.identity(p, d)
    return cov


def simulate_g_path(c, phi, cov, mesh, seed, rep=0, normals=None, attempt=0):
    """
    G(r) = exp{rC + phi'B_phi(r)} int_0^r exp{-sC - phi'B_phi(s)} dB_x(s), left-point rule.
    normals, when given, are the (steps x (1+p+d)) standard normals behind the increments,
    which lets coarser meshes share a Brownian path with finer ones.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    cov = _cov_or_identity(cov, np.atleast_1d(c).size, phi.size)
    c = np.broadcast_to(np.asarray(c, dtype=float), (cov.p,))
    if phi.size != cov.d:
        raise innovations.DimensionMismatch('phi has {0} entries, covariance expects {1}'.format(phi.size, cov.d))

    chol = np.linalg.cholesky(innovations.assemble_covariance(cov))
    steps, ds = mesh.steps, mesh.ds
    rng = helpers.make_rng(seed, defaults.stream_limit, rep, attempt)
    if normals is None:
        normals = rng.standard_normal((steps, cov.dim))
    increments = normals.dot(chol.T) * np.sqrt(ds)
    dB_u = increments[:, 0]
    dB_x = increments[:, 1:1 + cov.p]
    dB_phi = increments[:, 1 + cov.p:]

    s = np.arange(steps + 1) * ds
    B_phi = np.vstack([np.zeros((1, cov.d)), np.cumsum(dB_phi, axis=0)])
    exponent = s[:, None] * c[None, :] + B_phi.dot(phi)[:, None]
    integral = np.vstack([np.zeros((1, cov.p)), np.cumsum(np.exp(-exponent[:-1]) * dB_x, axis=0)])
    G = np.exp(exponent) * integral

    return GPath(s, G, dB_u, dB_x, dB_phi, np.sqrt(cov.sigma_y), rng)


def coarsen_normals(normals, factor):
    """
    Standard normals of a mesh `factor` times coarser driven by the same Brownian path
    """
    steps, dim = normals.shape
    if steps % factor:
        raise InvalidMesh('{0} steps cannot be coarsened by {1}'.format(steps, factor))
    return normals.reshape(steps // factor, factor, dim).sum(axis=1) / np.sqrt(factor)


def simulate_sheet(dW, lambdas, rng):
    """
    Increments of a Brownian sheet W(s, lambda) over the time mesh, cumulated in lambda
    at each grid lambda, with W(ds, 1) equal to the given dW.
    Cells cover [0, l_1], [l_1, l_2], .., [l_K, 1].
    """
    steps = dW.size
    ds = 1.0 / steps
    widths = np.diff(np.concatenate([[0.0], lambdas, [1.0]]))
    f = rng.standard_normal((steps, widths.size)) * np.sqrt(ds * widths)[None, :]
    e = f - widths[None, :] * f.sum(axis=1)[:, None] + widths[None, :] * dW[:, None]
    return np.cumsum(e, axis=1)[:, :lambdas.size]


def _check_gram(M):
    rcond = 1.0 / np.linalg.cond(M)
    if not np.isfinite(rcond) or rcond < defaults.rank_tolerance:
        raise SingularLimitGram('Limit Gram matrix is numerically singular (rcond={0:.3g})'.format(rcond))


def _sup_sheet_form(gpath, lambdas, intercept):
    """
    Q(l) = S'M^-1 S / (l(1-l)) with S = A(l) - l A(1), A(l) = int K dW(s, l), M = int K K'
    """
    K = _regressor_process(gpath.G, intercept)
    dW = gpath.dW
    dW_lambda = simulate_sheet(dW, lambdas, gpath.rng)

    M = K.T.dot(K) / gpath.steps
    _check_gram(M)
    A = K.T.dot(dW_lambda)
    A1 = K.T.dot(dW)
    S = A - lambdas[None, :] * A1[:, None]
    solved = np.linalg.solve(M, S)
    return np.sum(S * solved, axis=0) / (lambdas * (1.0 - lambdas))


def _predictability_form(gpath, intercept):
    """
    [int G dW]'[int G G']^-1[int G dW], G demeaned when the model has an intercept
    """
    G = gpath.G[:-1]
    if intercept:
        G = G - G.mean(axis=0)
    M = G.T.dot(G) / gpath.steps
    _check_gram(M)
    a = G.T.dot(gpath.dW)
    return float(a.dot(np.linalg.solve(M, a)))


def _resampled(draw, *args):
    try:
        return draw(*args, attempt=0)
    except SingularLimitGram:
        return draw(*args, attempt=1)


def _ols_h1(c, phi, cov, lambdas, mesh, seed, rep, intercept, attempt=0):
    gpath = simulate_g_path(c, phi, cov, mesh, seed, rep, attempt=attempt)
    return float(np.max(_sup_sheet_form(gpath, lambdas, intercept)))


def draw_ols_h1_limit(c, phi, cov, trimming, p, mesh, seed, rep=0, intercept=False, lambdas=None):
    """
    One draw of the OLS sup-Wald limit under linearity
    """
    c = np.broadcast_to(np.asarray(c, dtype=float), (p,))
    if lambdas is None:
        lambdas = lambda_grid(trimming, mesh.lambda_points)
    return _resampled(_ols_h1, c, phi, cov, np.asarray(lambdas, dtype=float), mesh, seed, rep, intercept)


def _ols_h2(c, phi, cov, lambdas, mesh, seed, rep, intercept, attempt=0):
    gpath = simulate_g_path(c, phi, cov, mesh, seed, rep, attempt=attempt)
    predictability = _predictability_form(gpath, intercept)
    return predictability + float(np.max(_sup_sheet_form(gpath, lambdas, intercept)))


def draw_ols_h2_limit(c, phi, cov, trimming, p, mesh, seed, rep=0, intercept=False, lambdas=None):
    """
    One draw of the OLS sup-Wald limit under joint linearity and no predictability:
    the predictability term plus the linearity sup functional on the same Brownian draw
    """
    c = np.broadcast_to(np.asarray(c, dtype=float), (p,))
    if lambdas is None:
        lambdas = lambda_grid(trimming, mesh.lambda_points)
    return _resampled(_ols_h2, c, phi, cov, np.asarray(lambdas, dtype=float), mesh, seed, rep, intercept)


def _sup_bridge(rng, lambdas, dim):
    """
    sup over the grid of BB(l)'BB(l)/(l(1-l)), BB a dim-dimensional Brownian bridge,
    exact at the grid points
    """
    widths = np.diff(np.concatenate([[0.0], lambdas, [1.0]]))
    increments = rng.standard_normal((widths.size, dim)) * np.sqrt(widths)[:, None]
    W = np.cumsum(increments, axis=0)
    bridge = W[:lambdas.size] - lambdas[:, None] * W[-1][None, :]
    return float(np.max(np.sum(bridge ** 2, axis=1) / (lambdas * (1.0 - lambdas))))


def draw_ivx_h2_limit(trimming, p, mesh, seed, rep=0, intercept=False, lambdas=None):
    """
    One draw of W(1)'W(1) + sup BB'BB/(l(1-l)); W is p-dimensional and the bridge
    carries one more dimension when the model has an intercept. Pivotal.
    """
    if lambdas is None:
        lambdas = lambda_grid(trimming, mesh.lambda_points)
    rng = helpers.make_rng(seed, defaults.stream_limit, rep)
    w1 = rng.standard_normal(p)
    return float(w1.dot(w1)) + _sup_bridge(rng, np.asarray(lambdas, dtype=float), p + int(bool(intercept)))


def draw_ivx_h1_limit(trimming, p, mesh, seed, rep=0, intercept=False, lambdas=None):
    """
    One draw of sup BB'BB/(l(1-l)), the IVX sup-Wald limit under linearity
    """
    if lambdas is None:
        lambdas = lambda_grid(trimming, mesh.lambda_points)
    rng = helpers.make_rng(seed, defaults.stream_limit, rep)
    return _sup_bridge(rng, np.asarray(lambdas, dtype=float), p + int(bool(intercept)))


def two_sided_argmax(rng, truncation, points):
    """
    argmax of W(r) - |r|/2 over [-T, T] on a mesh of `points` steps per side
    """
    h = truncation / float(points)
    r = np.arange(1, points + 1) * h
    right = np.cumsum(rng.standard_normal(points) * np.sqrt(h)) - r / 2.0
    left = np.cumsum(rng.standard_normal(points) * np.sqrt(h)) - r / 2.0

    values = np.concatenate([left[::-1], [0.0], right])
    best = int(np.argmax(values))
    if best == 0 or best == values.size - 1:
        raise ArgmaxAtBoundary('Argmax reached the truncation boundary {0}'.format(truncation))
    return (best - points) * h


def threshold_scale(gpath, delta0, f_gamma0, sigma_u):
    """
    H = sigma_u^2 / (f(gamma0) delta0'[int G G']delta0)
    """
    delta0 = np.broadcast_to(np.asarray(delta0, dtype=float), (gpath.G.shape[1],))
    M = gpath.gram()
    return sigma_u ** 2 / (f_gamma0 * float(delta0.dot(M).dot(delta0)))


def draw_threshold_limit(c, phi, cov, delta0, f_gamma0, sigma_u, mesh, truncation, seed, rep=0):
    """
    One draw of H * argmax Lambda
    """
    if truncation < defaults.argmax_min_truncation:
        raise helpers.ConfigError('Argmax truncation must be at least {0}'.format(defaults.argmax_min_truncation))
    gpath = simulate_g_path(c, phi, cov, mesh, seed, rep)
    scale = threshold_scale(gpath, delta0, f_gamma0, sigma_u)
    rng = helpers.make_rng(seed, defaults.stream_argmax, rep)
    return scale * two_sided_argmax(rng, truncation, mesh.steps)


def table_params(functional, c=None, phi=None, cov=None, trimming=(defaults.trim_lower, defaults.trim_upper),
                 p=1, intercept=False, delta0=None, f_gamma0=None, sigma_u=1.0,
                 truncation=defaults.argmax_truncation):
    """
    Normalised parameter dict for a functional; pivotal functionals ignore (c, phi, cov)
    """
    if functional not in FUNCTIONALS:
        raise helpers.ConfigError('Unknown functional "{0}", expected one of {1}'.format(functional, FUNCTIONALS))
    params = {'p': int(p)}
    if functional != THRESHOLD_ARGMAX:
        params['trimming'] = [float(trimming[0]), float(trimming[1])]
        params['intercept'] = bool(intercept)
    if functional not in PIVOTAL:
        if c is None or phi is None:
            raise helpers.ConfigError('Functional "{0}" depends on (c, phi); both must be given'.format(functional))
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        params['c'] = np.broadcast_to(np.asarray(c, dtype=float), (int(p),)).tolist()
        params['phi'] = phi.tolist()
        params['cov'] = _cov_or_identity(cov, int(p), phi.size).to_dict()
    if functional == THRESHOLD_ARGMAX:
        if delta0 is None or f_gamma0 is None:
            raise helpers.ConfigError('The threshold argmax law needs delta0 and f(gamma0)')
        params['delta0'] = np.broadcast_to(np.asarray(delta0, dtype=float), (int(p),)).tolist()
        params['f_gamma0'] = float(f_gamma0)
        params['sigma_u'] = float(sigma_u)
        params['truncation'] = float(truncation)
    return params


def draw_functional(functional, params, mesh, rep):
    p = params['p']
    if functional == IVX_H2:
        return draw_ivx_h2_limit(params['trimming'], p, mesh, mesh.seed, rep, params['intercept'])
    if functional == IVX_H1:
        return draw_ivx_h1_limit(params['trimming'], p, mesh, mesh.seed, rep, params['intercept'])

    cov = innovations.CovarianceSpec.from_dict(params['cov'])
    if functional == OLS_H1:
        return draw_ols_h1_limit(params['c'], params['phi'], cov, params['trimming'], p, mesh, mesh.seed, rep,
                                   params['intercept'])
    if functional == OLS_H2:
        return draw_ols_h2_limit(params['c'], params['phi'], cov, params['trimming'], p, mesh, mesh.seed, rep,
                                       params['intercept'])
    return draw_threshold_limit(params['c'], params['phi'], cov, params['delta0'], params['f_gamma0'],
                                params['sigma_u'], mesh, params['truncation'], mesh.seed, rep)


def _draw_chunk(task):
    functional, params, mesh_dict, start, stop = task
    mesh = MeshSpec(**mesh_dict)
    values, failures = [], []
    for rep in range(start, stop):
        try:
            values.append(draw_functional(functional, params, mesh, rep))
        except helpers.NumericalError as e:
            failures.append((rep, type(e).__name__))
    return values, failures


def draw_many(functional, params, mesh, workers=1):
    """
    mesh.reps draws of a functional, in replication order whatever the worker count.
    Returns (draws, failures) where failures lists (rep, error type).
    """
    chunk = max(1, int(np.ceil(mesh.reps / float(max(1, workers) * 4))))
    tasks = [(functional, params, mesh.to_dict(), start, min(start + chunk, mesh.reps))
             for start in range(0, mesh.reps, chunk)]
    values, failures = [], []
    for chunk_values, chunk_failures in helpers.run_tasks(_draw_chunk, tasks, workers):
        values.extend(chunk_values)
        failures.extend(chunk_failures)
    return np.array(values), failures


def quantile_standard_error(draws, level, confidence=0.95):
    """
    Distribution-free standard error of an empirical quantile, from the order statistics
    bracketing it at the given confidence
    """
    ordered = np.sort(draws)
    B = ordered.size
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    half = z * np.sqrt(B * level * (1.0 - level))
    lo = int(np.clip(np.floor(B * level - half), 0, B - 1))
    hi = int(np.clip(np.ceil(B * level + half), 0, B - 1))
    return float((ordered[hi] - ordered[lo]) / (2.0 * z))


class CriticalValueTable(object):
    def __init__(self, functional, params, levels, quantiles, standard_errors, reps, steps, seed,
                 pvalue_levels=None, pvalue_quantiles=None, failed=0, provenance=None):
        self.functional = functional
        self.params = params
        self.levels = [float(l) for l in levels]
        self.quantiles = [float(q) for q in quantiles]
        self.standard_errors = [float(s) for s in standard_errors]
        self.reps = reps
        self.steps = steps
        self.seed = seed
        self.pvalue_levels = [float(l) for l in (pvalue_levels or [])]
        self.pvalue_quantiles = [float(q) for q in (pvalue_quantiles or [])]
        self.failed = failed
        self.provenance = provenance or {}

    @property
    def published(self):
        return self.reps >= defaults.published_table_min_reps

    @property
    def key(self):
        return table_key(self.functional, self.params)

    def critical_value(self, level):
        for l, q in zip(self.levels, self.quantiles):
            if abs(l - level) < 1e-12:
                return q
        if self.pvalue_levels:
            return float(np.interp(level, self.pvalue_levels, self.pvalue_quantiles))
        raise TableError('Level {0} is not in the {1} table'.format(level, self.functional))

    def pvalue(self, statistic):
        """
        1 - F(statistic) interpolated on the dense level grid, clipped to the grid's range
        """
        levels = self.pvalue_levels or self.levels
        quantiles = self.pvalue_quantiles or self.quantiles
        cdf = np.interp(statistic, quantiles, levels, left=levels[0], right=levels[-1])
        return float(1.0 - cdf)

    def rows(self):
        rows = [{'level': l, 'quantile': q, 'se': s, 'kind': 'critical'}
                for l, q, s in zip(self.levels, self.quantiles, self.standard_errors)]
        rows.extend({'level': l, 'quantile': q, 'se': None, 'kind': 'dense'}
                    for l, q in zip(self.pvalue_levels, self.pvalue_quantiles))
        return rows

    def to_dict(self):
        return helpers.to_jsonable({
            'functional': self.functional,
            'params': self.params,
            'levels': self.levels,
            'quantiles': self.quantiles,
            'standard_errors': self.standard_errors,
            'reps': self.reps,
            'steps': self.steps,
            'seed': self.seed,
            'published': self.published,
            'failed': self.failed,
            'pvalue_levels': self.pvalue_levels,
            'pvalue_quantiles': self.pvalue_quantiles,
            'provenance': self.provenance,
        })

    @staticmethod
    def from_dict(d):
        return CriticalValueTable(d['functional'], d['params'], d['levels'], d['quantiles'], d['standard_errors'],
                                  d['reps'], d['steps'], d['seed'], d.get('pvalue_levels'), d.get('pvalue_quantiles'),
                                  d.get('failed', 0), d.get('provenance'))

    def to_json(self, path):
        with open(path, 'w') as f:
            json.dump(self.to_dict(), f, sort_keys=True, indent=2)

    @staticmethod
    def from_json(path):
        with open(path, 'r') as f:
            return CriticalValueTable.from_dict(json.load(f))

    def to_csv(self, path):
        header = dict(self.to_dict())
        for k in ('levels', 'quantiles', 'standard_errors', 'pvalue_levels', 'pvalue_quantiles'):
            header.pop(k)
        with open(path, 'w') as f:
            f.write('# {0}\n'.format(json.dumps(header, sort_keys=True)))
            pd.DataFrame(self.rows(), columns=['level', 'quantile', 'se', 'kind']).to_csv(
                f, index=False, float_format='%.10g')

    @staticmethod
    def from_csv(path):
        with open(path, 'r') as f:
            first = f.readline()
            if not first.startswith('# '):
                raise TableError('Table file {0} has no provenance header'.format(path))
            header = json.loads(first[2:])
            frame = pd.read_csv(f)
        critical = frame[frame['kind'] == 'critical']
        dense = frame[frame['kind'] == 'dense']
        header.pop('published', None)
        return CriticalValueTable(header['functional'], header['params'], critical['level'].tolist(),
                                  critical['quantile'].tolist(), critical['se'].tolist(), header['reps'],
                                  header['steps'], header['seed'], dense['level'].tolist(), dense['quantile'].tolist(),
                                  header.get('failed', 0), header.get('provenance'))


def table_key(functional, params):
    return '{0}-{1}'.format(functional, helpers.config_hash(params)[:12])


def tabulate_critical_values(functional, params, levels=defaults.critical_levels, mesh=None, workers=1,
                             config=None):
    """
    Empirical quantiles of a functional's simulated law, levels sorted ascending
    """
    logger = logging.getLogger(__name__)
    if mesh is None:
        mesh = MeshSpec()
    levels = sorted(float(l) for l in levels)
    if not levels or levels[0] <= 0.0 or levels[-1] >= 1.0:
        raise helpers.ConfigError('Levels must lie strictly between 0 and 1')
    if mesh.reps < defaults.published_table_min_reps:
        logger.warning('{0} table from {1} draws is below the {2} draws of a published table'.format(
            functional, mesh.reps, defaults.published_table_min_reps))

    logger.info('Simulating {0} draws of {1} ({2} steps)'.format(mesh.reps, functional, mesh.steps))
    draws, failures = draw_many(functional, params, mesh, workers)
    if len(failures) > defaults.mc_failure_ceiling * mesh.reps:
        raise helpers.NumericalError('{0} of {1} draws of {2} failed ({3})'.format(
            len(failures), mesh.reps, functional, failures[0][1]))
    if failures:
        logger.warning('{0} draws of {1} failed and were dropped'.format(len(failures), functional))

    quantiles = np.quantile(draws, levels)
    ses = [quantile_standard_error(draws, l) for l in levels]
    dense_levels = list(defaults.pvalue_levels)
    dense = np.quantile(draws, dense_levels)

    prov = helpers.provenance(config if config is not None else {'functional': functional, 'params': params,
                                                                  'mesh': mesh.to_dict()},
                              mesh.seed, __version__, functional=functional, steps=mesh.steps, reps=mesh.reps)
    return CriticalValueTable(functional, params, levels, quantiles, ses, mesh.reps, mesh.steps, mesh.seed,
                              dense_levels, dense, len(failures), prov)


def save_table(table, directory):
    """
    Writes <key>.json and <key>.csv into directory; returns the JSON path
    """
    if not os.path.isdir(directory):
        os.makedirs(directory)
    stem = os.path.join(directory, table.key)
    table.to_json(stem + '.json')
    table.to_csv(stem + '.csv')
    return stem + '.json'


def load_table(directory, functional, params):
    """
    Table for (functional, params) from directory, or None when absent
    """
    path = os.path.join(directory, table_key(functional, params) + '.json')
    if not os.path.isfile(path):
        return None
    return CriticalValueTable.from_json(path)
