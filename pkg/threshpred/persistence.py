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
Nonlinear least squares estimation of the persistence pair (c, phi) from an
observed regressor path and its coefficient shocks
"""

import logging
import itertools

import numpy as np

from threshpred import defaults
from threshpred import helpers
from threshpred.innovations import DimensionMismatch


class MaxIterationsExceeded(helpers.NumericalError):
    pass


class Bounds(object):
    """
    Box for (c_1..c_p, phi_1..phi_d)
    """
    def __init__(self, p, d, c_bounds=defaults.persistence_c_bounds, phi_bounds=defaults.persistence_phi_bounds):
        if c_bounds[0] >= c_bounds[1] or phi_bounds[0] >= phi_bounds[1]:
            raise helpers.ConfigError('Persistence bounds must be increasing intervals')
        self.lower = np.array([c_bounds[0]] * p + [phi_bounds[0]] * d, dtype=float)
        self.upper = np.array([c_bounds[1]] * p + [phi_bounds[1]] * d, dtype=float)

    def contains(self, theta):
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    def clip(self, theta):
        return np.clip(theta, self.lower, self.upper)


class PersistenceFit(object):
    def __init__(self, c_hat, phi_hat, objective, converged, iterations, history, method):
        self.c_hat = c_hat
        self.phi_hat = phi_hat
        self.objective = objective
        self.converged = converged
        self.iterations = iterations
        self.history = history
        self.method = method

    def to_dict(self):
        return helpers.to_jsonable({
            'c_hat': self.c_hat,
            'phi_hat': self.phi_hat,
            'objective': self.objective,
            'converged': self.converged,
            'iterations': self.iterations,
            'history': self.history,
            'method': self.method,
        })


def _prepare(path, exog):
    x = getattr(path, 'x', path)
    x = np.asarray(x, dtype=float)
    x = x.reshape(-1, 1) if x.ndim == 1 else x
    if x.shape[0] < 2:
        raise DimensionMismatch('A regressor path needs at least two points')
    if exog is None:
        exog = path.u_phi
    exog = np.asarray(exog, dtype=float)
    exog = exog.reshape(-1, 1) if exog.ndim == 1 else exog
    n = x.shape[0] - 1
    if exog.shape[0] != n:
        raise DimensionMismatch('Coefficient shocks have {0} rows but the path has {1} steps'.format(exog.shape[0], n))
    return x, exog


class _Problem(object):
    """
    Residuals r_ti = x_ti - exp(c_i/n + phi'u_t/sqrt(n)) x_{t-1,i} and their Jacobian
    """
    def __init__(self, x, exog):
        self.x = x
        self.exog = exog
        self.n = x.shape[0] - 1
        self.p = x.shape[1]
        self.d = exog.shape[1]

    def split(self, theta):
        return theta[:self.p], theta[self.p:]

    def fitted_terms(self, theta):
        c, phi = self.split(theta)
        growth = np.exp(c[None, :] / self.n + self.exog.dot(phi)[:, None] / np.sqrt(self.n))
        return growth * self.x[:-1]

    def residuals(self, theta):
        return (self.x[1:] - self.fitted_terms(theta)).ravel()

    def objective(self, theta):
        r = self.residuals(theta)
        return float(r.dot(r))

    def jacobian(self, theta):
        terms = self.fitted_terms(theta)
        n, p, d = self.n, self.p, self.d
        jac = np.zeros((n, p, p + d))
        for i in range(p):
            jac[:, i, i] = -terms[:, i] / n
        jac[:, :, p:] = -terms[:, :, None] * self.exog[:, None, :] / np.sqrt(n)
        return jac.reshape(n * p, p + d)


def nlls_objective(path, exog, c, phi):
    """
    sum_t (x_t - exp{c/n + phi'u_phit/sqrt(n)} x_{t-1})^2, summed over regressors
    """
    x, exog = _prepare(path, exog)
    problem = _Problem(x, exog)
    theta = np.concatenate([np.broadcast_to(np.asarray(c, dtype=float), (problem.p,)),
                            np.broadcast_to(np.asarray(phi, dtype=float), (problem.d,))])
    return problem.objective(theta)


def _stationary(problem, theta, bounds, tolerance):
    """
    True when the Gauss-Newton step over the coordinates not held by a bound is short
    and would lower the objective by at most tolerance * max(1, objective)
    """
    residuals = problem.residuals(theta)
    current = float(residuals.dot(residuals))
    jac = problem.jacobian(theta)
    grad = 2.0 * jac.T.dot(residuals)
    held = ((theta <= bounds.lower) & (grad > 0)) | ((theta >= bounds.upper) & (grad < 0))
    free = ~held
    if not np.any(free):
        return True
    step = np.linalg.lstsq(jac[:, free], -residuals, rcond=None)[0]
    predicted = float(np.sum(jac[:, free].dot(step) ** 2))
    short = np.linalg.norm(step) <= np.sqrt(tolerance) * (1.0 + np.linalg.norm(theta))
    return bool(short and predicted <= tolerance * max(1.0, current))


def _gauss_newton(problem, theta, bounds, max_iterations, tolerance, backtrack_trials):
    """
    Damped Gauss-Newton with box clipping. Returns (theta, history, converged, iterations);
    history holds the objective after every accepted step, starting at theta.
    """
    residuals = problem.residuals(theta)
    current = float(residuals.dot(residuals))
    history = [current]
    converged = False
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        if _stationary(problem, theta, bounds, tolerance):
            converged = True
            iterations -= 1
            break

        step, _, _, _ = np.linalg.lstsq(problem.jacobian(theta), -residuals, rcond=None)

        step_size = 1.0
        improved = False
        for _ in range(backtrack_trials):
            candidate = bounds.clip(theta + step_size * step)
            candidate_residuals = problem.residuals(candidate)
            candidate_value = float(candidate_residuals.dot(candidate_residuals))
            if candidate_value <= current:
                improved = True
                break
            step_size *= 0.5

        if not improved:
            break

        moved = np.linalg.norm(candidate - theta)
        decrease = current - candidate_value
        theta, residuals, current = candidate, candidate_residuals, candidate_value
        history.append(current)

        if moved <= tolerance * (1.0 + np.linalg.norm(theta)) or decrease <= tolerance * tolerance * max(1.0, current):
            converged = _stationary(problem, theta, bounds, tolerance)
            break

    return theta, history, converged, iterations


def grid_search(path, exog=None, bounds=None, points=defaults.persistence_grid_points):
    """
    Objective minimised over a regular lattice inside the bounds. Returns (theta, objective).
    """
    x, exog = _prepare(path, exog)
    problem = _Problem(x, exog)
    if bounds is None:
        bounds = Bounds(problem.p, problem.d)
    axes = [np.linspace(lo, hi, points) for lo, hi in zip(bounds.lower, bounds.upper)]

    best_theta, best_value = None, np.inf
    for node in itertools.product(*axes):
        theta = np.array(node)
        value = problem.objective(theta)
        if value < best_value:
            best_theta, best_value = theta, value
    return best_theta, best_value


def fit_persistence(path, exog=None, init=None, bounds=None, max_iterations=defaults.persistence_max_iterations,
                    tolerance=defaults.persistence_tolerance, strict=False):
    """
    Local minimiser of nlls_objective by damped Gauss-Newton with the analytic Jacobian.
    When Gauss-Newton stalls short of convergence on a problem with at most three
    parameters, it restarts from the best point of a coarse lattice.

    With strict=True, MaxIterationsExceeded is raised when the fit does not converge;
    otherwise the best point is returned with converged=False.
    """
    logger = logging.getLogger(__name__)
    x, exog = _prepare(path, exog)
    problem = _Problem(x, exog)
    if bounds is None:
        bounds = Bounds(problem.p, problem.d)

    if init is None:
        theta0 = np.zeros(problem.p + problem.d)
    else:
        c0, phi0 = init
        theta0 = np.concatenate([np.broadcast_to(np.asarray(c0, dtype=float), (problem.p,)),
                                 np.broadcast_to(np.asarray(phi0, dtype=float), (problem.d,))])
    if not bounds.contains(theta0):
        raise helpers.ConfigError('Initial point {0} lies outside the bounds'.format(theta0.tolist()))

    options = (max_iterations, tolerance, defaults.persistence_backtrack_trials)
    theta, history, converged, iterations = _gauss_newton(problem, theta0, bounds, *options)
    method = 'gauss-newton'

    if not converged and theta.size <= 3:
        logger.info('Gauss-Newton stalled after {0} iterations, restarting from a coarse lattice'.format(iterations))
        start, start_value = grid_search(x, exog, bounds)
        if start_value < history[-1]:
            theta, more, converged, extra = _gauss_newton(problem, start, bounds, *options)
            history.extend(more)
            iterations += extra
            method = 'lattice+gauss-newton'

    if not converged:
        message = 'Persistence fit did not converge within {0} iterations'.format(iterations)
        if strict:
            raise MaxIterationsExceeded(message)
        logger.warning(message)

    c_hat, phi_hat = problem.split(theta)
    return PersistenceFit(c_hat, phi_hat, float(history[-1]), converged, iterations, history, method)
