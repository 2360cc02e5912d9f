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
Monte Carlo harness: threshold estimator accuracy, empirical size and power of the
sup-Wald and estimated-threshold Wald tests over a grid of (n, c, phi) cells
"""

import io
import json
import zlib
import logging
import itertools

import numpy as np
import pandas as pd
from scipy import stats
from tabulate import tabulate

from threshpred import __version__
from threshpred import defaults
from threshpred import helpers
from threshpred import dgp
from threshpred import estimate
from threshpred import innovations
from threshpred import ivx
from threshpred import limitsim
from threshpred import waldtests


ACCURACY = 'accuracy'
SIZE = 'size'
POWER = 'power'
KINDS = (ACCURACY, SIZE, POWER)

SUP_H1 = 'sup-h1'
SUP_H2 = 'sup-h2'
WALD_AT_THRESHOLD = 'wald-at-threshold'
TESTS = (SUP_H1, SUP_H2, WALD_AT_THRESHOLD)

PRESET_BENCHMARK = 'benchmark'
PRESETS = (PRESET_BENCHMARK, 'paper-section-4')

STATUS_OK = 'ok'
STATUS_ABORTED = 'aborted'

_INT_COLUMNS = ('n', 'reps', 'failed')
_STR_COLUMNS = ('kind', 'test', 'estimator', 'status')


class ExperimentSpec(object):
    def __init__(self, kind, n_list, c_list, phi_list, reps, test=SUP_H2, nominal_levels=defaults.mc_nominal_levels,
                 estimators=(waldtests.OLS, waldtests.IVX), seed=0, p=defaults.benchmark_p, sigma_uv=0.0,
                 delta0=defaults.benchmark_delta0, tau=defaults.benchmark_tau, gamma0=defaults.benchmark_gamma0,
                 trimming=(defaults.trim_lower, defaults.trim_upper), cz=defaults.ivx_cz, gammaz=defaults.ivx_gammaz,
                 corrected=False, cv_reps=defaults.mc_cv_reps, cv_steps=defaults.mesh_steps,
                 lambda_points=defaults.lambda_grid_points, preset=PRESET_BENCHMARK):
        if kind not in KINDS:
            raise helpers.ConfigError('Unknown experiment kind "{0}", expected one of {1}'.format(kind, KINDS))
        if test not in TESTS:
            raise helpers.ConfigError('Unknown test "{0}", expected one of {1}'.format(test, TESTS))
        for e in estimators:
            if e not in waldtests.ESTIMATORS:
                raise helpers.ConfigError('Unknown estimator "{0}"'.format(e))
        if int(reps) < 1:
            raise helpers.ConfigError('An experiment needs at least one replication')
        if preset not in PRESETS:
            raise helpers.ConfigError('Unknown preset "{0}"'.format(preset))
        self.kind = kind
        self.test = test
        self.n_list = [int(n) for n in n_list]
        self.c_list = [float(c) for c in c_list]
        self.phi_list = [float(f) for f in phi_list]
        self.reps = int(reps)
        self.nominal_levels = [float(l) for l in nominal_levels]
        self.estimators = list(estimators)
        self.seed = int(seed)
        self.p = int(p)
        self.sigma_uv = float(sigma_uv)
        self.delta0 = float(delta0)
        self.tau = float(tau)
        self.gamma0 = float(gamma0)
        self.trimming = [float(trimming[0]), float(trimming[1])]
        self.cz = float(cz)
        self.gammaz = float(gammaz)
        self.corrected = bool(corrected)
        self.cv_reps = int(cv_reps)
        self.cv_steps = int(cv_steps)
        self.lambda_points = int(lambda_points)
        self.preset = PRESET_BENCHMARK

    @staticmethod
    def benchmark(kind, test=SUP_H2, seed=0):
        reps = defaults.benchmark_accuracy_reps if kind == ACCURACY else defaults.benchmark_test_reps
        return ExperimentSpec(kind, defaults.benchmark_n_values, defaults.benchmark_c_values, defaults.benchmark_phi_values,
                              reps, test=test, seed=seed)

    @staticmethod
    def from_scenario(kind, scenario, n_list, reps, **kwargs):
        if scenario not in defaults.scenarios:
            raise helpers.ConfigError('Unknown scenario "{0}", expected one of {1}'.format(
                scenario, sorted(defaults.scenarios)))
        c, phi = defaults.scenarios[scenario]
        return ExperimentSpec(kind, n_list, [c], [phi], reps, **kwargs)

    def to_dict(self):
        return dict(self.__dict__)

    @staticmethod
    def from_dict(d):
        return ExperimentSpec(**d)

    def cells(self):
        for n, c, phi, estimator in itertools.product(self.n_list, self.c_list, self.phi_list, self.estimators):
            yield {'n': n, 'c': c, 'phi': phi, 'estimator': estimator}


def cell_seed(seed, cell):
    """
    Seed for a cell, derived from the global seed and a stable id of the data parameters.
    Cells differing only in the estimator share their samples.
    """
    key = '{n}|{c!r}|{phi!r}'.format(**cell)
    cell_id = zlib.crc32(key.encode('utf-8')) & 0xffffffff
    return int(np.random.SeedSequence([seed, cell_id]).generate_state(1)[0])


def _cell_models(spec, cell):
    p = spec.p
    pers = dgp.PersistenceSpec(np.full(p, cell['c']), [cell['phi']])
    cov = innovations.CovarianceSpec.endogenous(p, 1, spec.sigma_uv)
    if spec.kind == SIZE:
        model = dgp.ThresholdDgpSpec.null(p)
    else:
        model = dgp.ThresholdDgpSpec(alpha=(0.0, 0.0), base=np.zeros(p), delta0=np.full(p, spec.delta0),
                                     tau=spec.tau, gamma0=spec.gamma0)
    return model, pers, cov


def _hypothesis(test):
    if test == SUP_H1:
        return waldtests.Hypothesis(waldtests.LINEARITY)
    if test == SUP_H2:
        return waldtests.Hypothesis(waldtests.JOINT)
    return waldtests.Hypothesis.regime_slopes()


def _replicate(task):
    """
    One replication. Returns ('ok', value) or ('failed', error type name).
    """
    spec_dict, cell, rep = task
    spec = ExperimentSpec.from_dict(spec_dict)
    model, pers, cov = _cell_models(spec, cell)
    cfg = ivx.IvxConfig(spec.cz, spec.gammaz)

    try:
        sample = dgp.gen_threshold_sample(model, pers, cov, cell['n'], cell_seed(spec.seed, cell), rep)
        grid = estimate.make_grid(sample.q_lag, spec.trimming[0], spec.trimming[1], sample.p)

        if spec.kind == ACCURACY:
            if cell['estimator'] == waldtests.OLS:
                gamma_hat = estimate.estimate_threshold(sample, grid).gamma_hat
            else:
                gamma_hat = ivx.estimate_threshold_ivx(sample, grid, cfg, spec.corrected).gamma
            return 'ok', gamma_hat - spec.gamma0

        if spec.test == WALD_AT_THRESHOLD:
            result = waldtests.wald_at_estimated_threshold(sample, grid, cell['estimator'], cfg, spec.corrected)
            return 'ok', result.statistic

        curve = waldtests.sup_wald(sample, grid, _hypothesis(spec.test), cell['estimator'], cfg, spec.corrected)
        return 'ok', curve.sup_stat
    except (helpers.NumericalError, helpers.DataError) as e:
        return 'failed', type(e).__name__


def limit_functional(test, estimator):
    if test == SUP_H1:
        return limitsim.OLS_H1 if estimator == waldtests.OLS else limitsim.IVX_H1
    return limitsim.OLS_H2 if estimator == waldtests.OLS else limitsim.IVX_H2


class CriticalValueCache(object):
    """
    Critical value tables keyed by functional and parameters, loaded from a directory
    or simulated on demand
    """
    def __init__(self, tables_dir=None, allow_simulate=True, workers=1):
        self.tables_dir = tables_dir
        self.allow_simulate = allow_simulate
        self.workers = workers
        self._tables = {}
        self.sources = {}
        self._logger = logging.getLogger(__name__)

    def get(self, functional, params, mesh):
        key = limitsim.table_key(functional, params)
        if key in self._tables:
            return self._tables[key]

        table = None
        self.sources[key] = 'table'
        if self.tables_dir:
            table = limitsim.load_table(self.tables_dir, functional, params)
        if table is None:
            self.sources[key] = 'simulated'
            if not self.allow_simulate:
                raise helpers.MissingCriticalValues('No {0} table for {1} and simulation is disabled'.format(
                    functional, json.dumps(params, sort_keys=True)))
            self._logger.info('Simulating {0} critical values ({1} draws)'.format(functional, mesh.reps))
            table = limitsim.tabulate_critical_values(functional, params, defaults.critical_levels, mesh, self.workers)
            if self.tables_dir:
                limitsim.save_table(table, self.tables_dir)

        self._tables[key] = table
        return table


def _critical_values(spec, cell, cache):
    """
    {level: critical value} for a test cell. The OLS sup-Wald uses the cell's own (c, phi).
    """
    reject_levels = [1.0 - l for l in spec.nominal_levels]
    if spec.test == WALD_AT_THRESHOLD:
        dof = waldtests.Hypothesis.regime_slopes().dof(spec.p, True)
        return dict((l, float(stats.chi2.ppf(1.0 - l, dof))) for l in spec.nominal_levels)

    functional = limit_functional(spec.test, cell['estimator'])
    _, pers, cov = _cell_models(spec, cell)
    params = limitsim.table_params(functional, c=pers.c, phi=pers.phi, cov=cov, trimming=spec.trimming, p=spec.p,
                                   intercept=True)
    mesh = limitsim.MeshSpec(spec.cv_steps, spec.cv_reps, spec.seed, spec.lambda_points)
    table = cache.get(functional, params, mesh)
    return dict((l, table.critical_value(r)) for l, r in zip(spec.nominal_levels, reject_levels))


def _blank_record(spec, cell):
    record = dict((c, None) for c in defaults.experiment_columns)
    record.update({'kind': spec.kind, 'test': None if spec.kind == ACCURACY else spec.test,
                   'estimator': cell['estimator'], 'n': cell['n'], 'c': cell['c'], 'phi': cell['phi'],
                   'reps': spec.reps})
    return record


def _cell_records(spec, cell, outcomes, critical_values):
    logger = logging.getLogger(__name__)
    values = np.array([v for status, v in outcomes if status == 'ok'], dtype=float)
    failures = [v for status, v in outcomes if status != 'ok']
    status = STATUS_ABORTED if len(failures) > defaults.mc_failure_ceiling * spec.reps else STATUS_OK
    if failures:
        logger.debug('Cell {0}: {1} failed replications ({2})'.format(cell, len(failures), ', '.join(sorted(set(failures)))))
    if status == STATUS_ABORTED:
        logger.error('Cell {0} aborted: {1} of {2} replications failed'.format(cell, len(failures), spec.reps))

    if spec.kind == ACCURACY:
        record = _blank_record(spec, cell)
        record.update({'failed': len(failures), 'status': status})
        if values.size and status == STATUS_OK:
            record.update({'rmse': float(np.sqrt(np.mean(values ** 2))),
                           'median_abs_error': float(np.median(np.abs(values))),
                           'bias': float(np.mean(values))})
        return [record]

    records = []
    for level in spec.nominal_levels:
        record = _blank_record(spec, cell)
        cv = critical_values[level]
        record.update({'level': level, 'failed': len(failures), 'status': status, 'critical_value': cv})
        if values.size and status == STATUS_OK:
            rate = float(np.mean(values > cv))
            record.update({'rate': rate, 'mc_se': float(np.sqrt(rate * (1.0 - rate) / values.size))})
        records.append(record)
    return records


class ExperimentResult(object):
    def __init__(self, records, provenance=None, spec=None):
        self.records = [normalize_record(r) for r in records]
        self.provenance = provenance or {}
        self.spec = spec or {}

    def to_frame(self):
        return pd.DataFrame(self.records, columns=defaults.experiment_columns)

    def to_dict(self):
        return helpers.to_jsonable({'provenance': self.provenance, 'spec': self.spec, 'records': self.records,
                                    'schema_version': defaults.result_schema_version})

    @staticmethod
    def from_json(text):
        d = json.loads(text)
        return ExperimentResult(d.get('records', []), d.get('provenance'), d.get('spec'))

    @staticmethod
    def from_csv(text):
        provenance, spec = {}, {}
        body = []
        for line in text.splitlines(True):
            if line.startswith('# provenance: '):
                provenance = json.loads(line[len('# provenance: '):])
            elif line.startswith('# spec: '):
                spec = json.loads(line[len('# spec: '):])
            elif not line.startswith('#'):
                body.append(line)
        frame = pd.read_csv(io.StringIO(''.join(body)), dtype=str, keep_default_na=False)
        records = [dict((k, None if v == '' else v) for k, v in row.items()) for row in frame.to_dict('records')]
        return ExperimentResult(records, provenance, spec)


def normalize_record(record):
    """
    Fixed column set with int, float or str values (None for missing)
    """
    out = {}
    for column in defaults.experiment_columns:
        value = record.get(column)
        if value is None or (isinstance(value, float) and np.isnan(value)):
            out[column] = None
        elif column in _INT_COLUMNS:
            out[column] = int(value)
        elif column in _STR_COLUMNS:
            out[column] = str(value)
        else:
            out[column] = float(value)
    return out


def run_experiment(spec, workers=1, tables_dir=None, allow_simulate_cv=True, config=None):
    """
    Runs every cell of the experiment; replications are seeded by (seed, cell, replication)
    so results do not depend on the worker count
    """
    logger = logging.getLogger(__name__)
    cache = CriticalValueCache(tables_dir, allow_simulate_cv, workers)
    spec_dict = spec.to_dict()

    records = []
    for cell in spec.cells():
        critical_values = {} if spec.kind == ACCURACY else _critical_values(spec, cell, cache)
        logger.info('Running cell n={n} c={c} phi={phi} estimator={estimator}'.format(**cell))
        tasks = [(spec_dict, cell, rep) for rep in range(spec.reps)]
        outcomes = helpers.run_tasks(_replicate, tasks, workers, chunksize=max(1, spec.reps // (4 * max(1, workers))))
        records.extend(_cell_records(spec, cell, outcomes, critical_values))

    prov = helpers.provenance(config if config is not None else spec_dict, spec.seed, __version__,
                              kind=spec.kind, test=spec.test)
    return ExperimentResult(records, prov, spec_dict)


CSV = 'csv'
JSON = 'json'
MARKDOWN = 'markdown'
FORMATS = (CSV, JSON, MARKDOWN)


def _format_cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return '{0:.4f}'.format(value)
    return value


def summarize(result, fmt=CSV):
    """
    Renders a result as csv, json or a markdown table; column order is fixed
    """
    if fmt == CSV:
        out = io.StringIO()
        out.write('# provenance: {0}\n'.format(json.dumps(helpers.to_jsonable(result.provenance), sort_keys=True)))
        out.write('# spec: {0}\n'.format(json.dumps(helpers.to_jsonable(result.spec), sort_keys=True)))
        result.to_frame().to_csv(out, index=False)
        return out.getvalue()
    if fmt == JSON:
        return json.dumps(result.to_dict(), sort_keys=True, indent=2) + '\n'
    if fmt == MARKDOWN:
        rows = [[_format_cell(r[c]) for c in defaults.experiment_columns] for r in result.records]
        lines = ['<!-- {0} -->'.format(json.dumps(helpers.to_jsonable(result.provenance), sort_keys=True)),
                 tabulate(rows, headers=defaults.experiment_columns, tablefmt='pipe', disable_numparse=True)]
        return '\n'.join(lines) + '\n'
    raise helpers.ConfigError('Unknown format "{0}", expected one of {1}'.format(fmt, FORMATS))
