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

import os
import json
import logging

import numpy as np

from threshpred import __version__
from threshpred import defaults
from threshpred import helpers
from threshpred import dgp
from threshpred import estimate
from threshpred import ivx
from threshpred import limitsim
from threshpred import montecarlo
from threshpred import persistence
from threshpred import waldtests
from threshpred import datasetfile


HYPOTHESES = {
    'linearity': waldtests.Hypothesis(waldtests.LINEARITY),
    'joint': waldtests.Hypothesis(waldtests.JOINT),
    'regime-slopes': waldtests.Hypothesis.regime_slopes(),
}

PVALUE_UNAVAILABLE = waldtests.PVALUE_UNAVAILABLE


class ThreshPred(object):
    """
    threshpred application: one method per subcommand. Each writes its result file
    and returns the result payload.
    """

    def __init__(self, config):
        self._config = config
        self._logger = logging.getLogger(__name__)

    # Output

    def _output_path(self, out, default_name):
        path = out or os.path.join(self._config.get('output_dir'), default_name)
        parent = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(parent):
            os.makedirs(parent)
        return path

    def _output_dir(self, out):
        directory = out or self._config.get('output_dir')
        if not os.path.isdir(directory):
            os.makedirs(directory)
        return directory

    def _provenance(self, **extra):
        return helpers.provenance(self._config.as_dict(), self._config.seed, __version__, **extra)

    def _write_result(self, path, kind, result, **extra):
        payload = {
            'schema_version': defaults.result_schema_version,
            'kind': kind,
            'provenance': self._provenance(subcommand=kind, **extra),
            'result': helpers.to_jsonable(result),
        }
        with open(path, 'w') as f:
            json.dump(payload, f, sort_keys=True, indent=2)
        self._logger.debug('Wrote {0}'.format(path))
        return payload

    # Inputs

    def _mapping(self):
        section = self._config.get('dataset')
        return datasetfile.ColumnMapping(section['y'], section['x'], section['q'], section['date'], section['uphi'])

    def _load_dataset(self, data_path):
        dataset = datasetfile.parse_dataset(data_path, self._mapping())
        self._logger.info('Loaded {0} observations from {1}'.format(dataset.n, data_path))
        return dataset

    def _grid(self, sample):
        pi1, pi2 = self._config.trimming()
        return estimate.make_grid(sample.q_lag, pi1, pi2, sample.p)

    def _attach_corrected_path(self, dataset):
        """
        Corrected IVX on a dataset needs its uphi columns and a persistence spec
        """
        if not self._config.ivx_corrected():
            return
        if dataset.uphi is None:
            raise ivx.MissingExogenousDraws('Corrected IVX needs uphi columns in the dataset')
        dataset.attach_path(self._config.persistence(dataset.sample.p))

    # Subcommands

    def simulate(self, out=None):
        n = self._config.get('dgp.n')
        p = self._config.regressor_count()
        pers = self._config.persistence(p)
        cov = self._config.covariance(p, pers.d)
        model = self._config.dgp_spec()

        sample = dgp.gen_threshold_sample(model, pers, cov, n, self._config.seed, x0=self._config.x0(p))
        path = self._output_path(out, 'sample.csv')
        datasetfile.write_sample_csv(sample, path, self._provenance(subcommand='simulate'))

        beta1, beta2 = model.regime_slopes(n, p)
        return {'path': path, 'n': n, 'p': p, 'd': pers.d, 'gamma0': model.gamma0,
                'beta1': beta1, 'beta2': beta2, 'persistence': pers.to_dict()}

    def estimate(self, data_path, out=None):
        dataset = self._load_dataset(data_path)
        fit = estimate.estimate_threshold(dataset.sample, self._grid(dataset.sample))
        result = fit.to_dict()
        result['dataset'] = dataset.to_dict()
        path = self._output_path(out, 'estimate.json')
        self._write_result(path, 'estimate', result)
        return dict(result, path=path)

    def _critical_value_cache(self, tables_dir=None, allow_simulate=None):
        section = self._config.get('critical_values')
        return montecarlo.CriticalValueCache(tables_dir or section['tables_dir'],
                                             section['simulate'] if allow_simulate is None else allow_simulate,
                                             self._config.workers)

    def _sup_pvalue(self, curve, sample, cache, c=None, phi=None):
        """
        Returns (pvalue, source). OLS tables need (c, phi); IVX tables are pivotal.
        """
        hyp = curve.hypothesis
        if hyp.name == 'regime-slopes':
            return None, PVALUE_UNAVAILABLE
        test = montecarlo.SUP_H1 if hyp.kind == waldtests.LINEARITY else montecarlo.SUP_H2
        functional = montecarlo.limit_functional(test, curve.estimator)

        if functional in limitsim.PIVOTAL:
            params = limitsim.table_params(functional, trimming=self._config.trimming(), p=sample.p,
                                           intercept=sample.has_intercept and hyp.intercept_shift)
        else:
            if c is None or phi is None:
                self._logger.warning('The OLS sup-Wald limit depends on (c, phi); give --c and --phi for a p-value')
                return None, PVALUE_UNAVAILABLE
            phi = np.atleast_1d(np.asarray(phi, dtype=float))
            cov = self._config.covariance(sample.p, phi.size)
            params = limitsim.table_params(functional, c=c, phi=phi, cov=cov, trimming=self._config.trimming(),
                                           p=sample.p, intercept=sample.has_intercept and hyp.intercept_shift)

        mesh = self._config.mesh(reps=self._config.get('experiment.cv_reps'))
        table = cache.get(functional, params, mesh)
        return table.pvalue(curve.sup_stat), '{0}:{1}'.format(cache.sources[table.key], table.key)

    def test(self, data_path, hypothesis='joint', estimator=waldtests.OLS, at_estimate=False, c=None, phi=None,
             tables_dir=None, allow_simulate=None, out=None):
        if hypothesis not in HYPOTHESES:
            raise helpers.ConfigError('Unknown hypothesis "{0}", expected one of {1}'.format(
                hypothesis, sorted(HYPOTHESES)))
        dataset = self._load_dataset(data_path)
        sample = dataset.sample
        if estimator == waldtests.IVX:
            self._attach_corrected_path(dataset)
        cfg = self._config.ivx_config()
        corrected = self._config.ivx_corrected()
        grid = self._grid(sample)

        if at_estimate:
            result = waldtests.wald_at_estimated_threshold(sample, grid, estimator, cfg, corrected).to_dict()
        else:
            curve = waldtests.sup_wald(sample, grid, HYPOTHESES[hypothesis], estimator, cfg, corrected)
            cache = self._critical_value_cache(tables_dir, allow_simulate)
            curve.pvalue, curve.pvalue_source = self._sup_pvalue(curve, sample, cache, c, phi)
            result = curve.to_dict()

        path = self._output_path(out, 'test.json')
        self._write_result(path, 'test', result)
        return dict(result, path=path)

    def ivx(self, data_path, gamma=None, out=None):
        dataset = self._load_dataset(data_path)
        self._attach_corrected_path(dataset)
        cfg = self._config.ivx_config()
        corrected = self._config.ivx_corrected()

        if gamma is None:
            fit = ivx.estimate_threshold_ivx(dataset.sample, self._grid(dataset.sample), cfg, corrected)
        else:
            fit = ivx.ivx_fit(dataset.sample, gamma, cfg, corrected)
        result = fit.to_dict()
        result['ivx'] = cfg.to_dict()

        path = self._output_path(out, 'ivx.json')
        self._write_result(path, 'ivx', result)
        return dict(result, path=path)

    def fit_persistence(self, data_path, init=None, c_bounds=defaults.persistence_c_bounds,
                        phi_bounds=defaults.persistence_phi_bounds, strict=False, out=None):
        dataset = self._load_dataset(data_path)
        if dataset.uphi is None:
            raise datasetfile.DatasetError('Persistence fitting needs the uphi columns of the dataset')
        if not np.all(np.isfinite(dataset.x_full)):
            raise datasetfile.DatasetError('Persistence fitting needs the last regressor row')

        bounds = persistence.Bounds(dataset.sample.p, dataset.uphi.shape[1], c_bounds, phi_bounds)
        fit = persistence.fit_persistence(dataset.x_full, dataset.uphi, init, bounds, strict=strict)

        path = self._output_path(out, 'persistence.json')
        self._write_result(path, 'fit-persistence', fit.to_dict())
        return dict(fit.to_dict(), path=path)

    def critvals(self, functional, p=1, intercept=False, c=None, phi=None, levels=None, delta0=None, f_gamma0=None,
                 sigma_u=1.0, out=None):
        cov = None
        if c is not None and phi is not None:
            cov = self._config.covariance(p, np.atleast_1d(phi).size)
        params = limitsim.table_params(functional, c=c, phi=phi, cov=cov, trimming=self._config.trimming(), p=p,
                                       intercept=intercept, delta0=delta0, f_gamma0=f_gamma0, sigma_u=sigma_u,
                                       truncation=self._config.truncation())
        levels = levels or self._config.get('critical_values.levels')
        table = limitsim.tabulate_critical_values(functional, params, levels, self._config.mesh(),
                                                  self._config.workers, config=self._config.as_dict())
        json_path = limitsim.save_table(table, self._output_dir(out))
        return dict(table.to_dict(), path=json_path)

    def experiment_spec(self):
        section = self._config.get('experiment')
        kind = section['kind']
        reps = section['reps']
        if reps is None:
            reps = defaults.benchmark_accuracy_reps if kind == montecarlo.ACCURACY else defaults.benchmark_test_reps

        c_list, phi_list = section['c'], section['phi']
        if section['scenario']:
            if section['scenario'] not in defaults.scenarios:
                raise helpers.ConfigError('Unknown scenario "{0}", expected one of {1}'.format(
                    section['scenario'], sorted(defaults.scenarios)))
            c, phi_value = defaults.scenarios[section['scenario']]
            c_list, phi_list = [c], [phi_value]

        mesh = self._config.get('mesh')
        ivx_section = self._config.get('ivx')
        return montecarlo.ExperimentSpec(kind, section['n'], c_list, phi_list, reps, test=section['test'],
                                         nominal_levels=section['levels'], estimators=section['estimators'],
                                         seed=self._config.seed, p=section['p'], sigma_uv=section['sigma_uv'],
                                         trimming=self._config.trimming(), cz=ivx_section['cz'],
                                         gammaz=ivx_section['gammaz'], corrected=ivx_section['corrected'],
                                         cv_reps=section['cv_reps'], cv_steps=mesh['steps'],
                                         lambda_points=mesh['lambda_points'])

    def mc(self, formats=(montecarlo.CSV, montecarlo.JSON, montecarlo.MARKDOWN), tables_dir=None,
           allow_simulate=None, out=None):
        spec = self.experiment_spec()
        section = self._config.get('critical_values')
        result = montecarlo.run_experiment(spec, self._config.workers, tables_dir or section['tables_dir'],
                                           section['simulate'] if allow_simulate is None else allow_simulate,
                                           config=self._config.as_dict())

        directory = self._output_dir(out)
        extensions = {montecarlo.CSV: 'csv', montecarlo.JSON: 'json', montecarlo.MARKDOWN: 'md'}
        paths = []
        for fmt in formats:
            path = os.path.join(directory, 'results.{0}'.format(extensions[fmt]))
            with open(path, 'w') as f:
                f.write(montecarlo.summarize(result, fmt))
            paths.append(path)
        return result, paths

    def analyze(self, data_path, c=None, phi=None, tables_dir=None, allow_simulate=None, out=None):
        """
        Threshold estimate, sup-Wald tests by OLS and IVX, and the predictability Wald
        at the estimated threshold
        """
        dataset = self._load_dataset(data_path)
        sample = dataset.sample
        grid = self._grid(sample)
        cfg = self._config.ivx_config()
        if self._config.ivx_corrected():
            self._attach_corrected_path(dataset)
        corrected = self._config.ivx_corrected()
        cache = self._critical_value_cache(tables_dir, allow_simulate)

        fit = estimate.estimate_threshold(sample, grid)
        tests = []
        for name in ('linearity', 'joint'):
            for estimator in waldtests.ESTIMATORS:
                curve = waldtests.sup_wald(sample, grid, HYPOTHESES[name], estimator, cfg, corrected)
                curve.pvalue, curve.pvalue_source = self._sup_pvalue(curve, sample, cache, c, phi)
                tests.append(curve.to_dict())

        at_threshold = [waldtests.wald_at_estimated_threshold(sample, grid, e, cfg, corrected).to_dict()
                        for e in waldtests.ESTIMATORS]

        result = {
            'dataset': dataset.to_dict(),
            'threshold': fit.to_dict(),
            'sup_wald': tests,
            'wald_at_threshold': at_threshold,
            'persistence': None if c is None or phi is None else {'c': c, 'phi': phi},
        }
        path = self._output_path(out, 'analyze.json')
        self._write_result(path, 'analyze', result)
        return dict(result, path=path)
