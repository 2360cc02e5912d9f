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

import mock
import pytest
from scipy import stats

from threshpred import defaults
from threshpred import dgp
from threshpred import estimate
from threshpred import helpers
from threshpred import montecarlo
from threshpred.montecarlo import ExperimentSpec


def _spec(kind=montecarlo.ACCURACY, test=montecarlo.SUP_H2, estimators=('ols',), reps=12, **kwargs):
    options = dict(test=test, estimators=estimators, seed=3, cv_reps=100, cv_steps=100, lambda_points=11)
    options.update(kwargs)
    return ExperimentSpec(kind, [80], [1.0], [0.05], reps, **options)


class TestExperimentSpec:
    def test_benchmark_preset(self):
        spec = ExperimentSpec.benchmark(montecarlo.ACCURACY)
        assert spec.reps == 5000
        assert spec.n_list == [250, 500]
        assert len(list(spec.cells())) == 2 * 4 * 4 * 2

    def test_scenario(self):
        spec = ExperimentSpec.from_scenario(montecarlo.SIZE, 'mildly-explosive', [250], 10)
        assert spec.c_list == [10.0] and spec.phi_list == [0.25]
        with pytest.raises(helpers.ConfigError):
            ExperimentSpec.from_scenario(montecarlo.SIZE, 'sideways', [250], 10)

    @pytest.mark.parametrize('kind, test, estimators', [('coverage', 'sup-h1', ['ols']),
                                                        ('size', 'sup-lm', ['ols']),
                                                        ('size', 'sup-h1', ['gmm'])])
    def test_invalid(self, kind, test, estimators):
        with pytest.raises(helpers.ConfigError):
            ExperimentSpec(kind, [100], [1.0], [0.0], 10, test=test, estimators=estimators)

    def test_preset_alias(self):
        spec = _spec(preset='paper-section-4')
        assert spec.preset == montecarlo.PRESET_BENCHMARK
        with pytest.raises(helpers.ConfigError):
            _spec(preset='no-such-preset')

    def test_dict_round_trip(self):
        spec = _spec()
        assert ExperimentSpec.from_dict(spec.to_dict()).to_dict() == spec.to_dict()


class TestCellSeed:
    def test_stable(self):
        cell = {'n': 250, 'c': 1.0, 'phi': 0.05, 'estimator': 'ols'}
        assert montecarlo.cell_seed(0, cell) == montecarlo.cell_seed(0, dict(cell))
        assert montecarlo.cell_seed(0, cell) != montecarlo.cell_seed(1, cell)
        assert montecarlo.cell_seed(0, cell) != montecarlo.cell_seed(0, dict(cell, phi=0.25))

    def test_shared_across_estimators(self):
        cell = {'n': 250, 'c': 1.0, 'phi': 0.05, 'estimator': 'ols'}
        assert montecarlo.cell_seed(0, cell) == montecarlo.cell_seed(0, dict(cell, estimator='ivx'))

    def test_estimators_see_the_same_samples(self):
        spec = _spec(montecarlo.SIZE, montecarlo.WALD_AT_THRESHOLD, estimators=('ols', 'ivx'), reps=3)
        with mock.patch.object(montecarlo.dgp, 'gen_threshold_sample', wraps=dgp.gen_threshold_sample) as gen:
            montecarlo.run_experiment(spec)
        draws = [call[0][4:6] for call in gen.call_args_list]
        assert len(draws) == 6
        assert draws[:3] == draws[3:]


class TestRunExperiment:
    def test_accuracy(self):
        result = montecarlo.run_experiment(_spec())
        assert len(result.records) == 1
        record = result.records[0]
        assert record['status'] == montecarlo.STATUS_OK
        assert record['rmse'] >= abs(record['bias'])
        assert record['median_abs_error'] >= 0.0
        assert record['test'] is None
        assert list(record) == defaults.experiment_columns

    def test_reproducible_across_workers(self):
        spec = _spec(estimators=('ols', 'ivx'), reps=8)
        one = montecarlo.run_experiment(spec, workers=1)
        two = montecarlo.run_experiment(spec, workers=2)
        assert one.records == two.records

    def test_wald_at_threshold_size(self):
        spec = _spec(montecarlo.SIZE, montecarlo.WALD_AT_THRESHOLD, nominal_levels=(0.05, 0.1))
        result = montecarlo.run_experiment(spec, allow_simulate_cv=False)
        assert [r['level'] for r in result.records] == [0.05, 0.1]
        assert result.records[0]['critical_value'] == pytest.approx(stats.chi2.ppf(0.95, 4))
        for r in result.records:
            assert 0.0 <= r['rate'] <= 1.0
            assert r['mc_se'] >= 0.0

    def test_missing_critical_values(self):
        spec = _spec(montecarlo.SIZE, montecarlo.SUP_H1, estimators=('ivx',))
        with pytest.raises(helpers.MissingCriticalValues):
            montecarlo.run_experiment(spec, allow_simulate_cv=False)

    def test_simulated_critical_values_are_cached(self, tmpdir):
        spec = _spec(montecarlo.POWER, montecarlo.SUP_H2, estimators=('ivx',), reps=5)
        result = montecarlo.run_experiment(spec, tables_dir=str(tmpdir))
        assert result.records[0]['critical_value'] > 0.0
        assert any(name.endswith('.json') for name in os.listdir(str(tmpdir)))
        again = montecarlo.run_experiment(spec, tables_dir=str(tmpdir), allow_simulate_cv=False)
        assert again.records == result.records

    def test_failed_replications_abort_cell(self):
        failure = estimate.RankDeficient('singular')
        with mock.patch.object(montecarlo.estimate, 'estimate_threshold', side_effect=failure) as fit:
            result = montecarlo.run_experiment(_spec(reps=5))
        assert fit.call_count == 5
        record = result.records[0]
        assert record['status'] == montecarlo.STATUS_ABORTED
        assert record['failed'] == 5
        assert record['rmse'] is None


class TestCellRecords:
    def test_aborted(self):
        spec = _spec(montecarlo.SIZE, reps=10)
        cell = {'n': 80, 'c': 1.0, 'phi': 0.05, 'estimator': 'ols'}
        outcomes = [('ok', 1.0)] * 8 + [('failed', 'RankDeficient')] * 2
        record = montecarlo._cell_records(spec, cell, outcomes, {0.05: 3.0})[0]
        assert record['status'] == montecarlo.STATUS_ABORTED
        assert record['failed'] == 2
        assert record['rate'] is None

    def test_rejection_rate(self):
        spec = _spec(montecarlo.SIZE, reps=4)
        cell = {'n': 80, 'c': 1.0, 'phi': 0.05, 'estimator': 'ols'}
        outcomes = [('ok', 1.0), ('ok', 5.0), ('ok', 2.0), ('ok', 7.0)]
        record = montecarlo._cell_records(spec, cell, outcomes, {0.05: 3.0})[0]
        assert record['rate'] == 0.5
        assert record['mc_se'] == pytest.approx(0.25)


class TestSummaries:
    def _result(self):
        return montecarlo.run_experiment(_spec(montecarlo.SIZE, montecarlo.WALD_AT_THRESHOLD, reps=6))

    def test_csv(self):
        result = self._result()
        text = montecarlo.summarize(result, montecarlo.CSV)
        assert text.startswith('# provenance: ')
        again = montecarlo.ExperimentResult.from_csv(text)
        assert again.records == result.records
        assert again.provenance == result.provenance

    def test_json(self):
        result = self._result()
        again = montecarlo.ExperimentResult.from_json(montecarlo.summarize(result, montecarlo.JSON))
        assert again.records == result.records

    def test_markdown(self):
        text = montecarlo.summarize(self._result(), montecarlo.MARKDOWN)
        lines = text.splitlines()
        assert lines[0].startswith('<!-- ')
        assert lines[1].startswith('| kind')
        assert 'wald-at-threshold' in text

    def test_unknown_format(self):
        with pytest.raises(helpers.ConfigError):
            montecarlo.summarize(self._result(), 'xlsx')

    def test_normalize(self):
        record = montecarlo.normalize_record({'n': '250', 'rate': '0.05', 'kind': 'size', 'bias': float('nan')})
        assert record['n'] == 250
        assert record['rate'] == 0.05
        assert record['bias'] is None
        assert record['critical_value'] is None


def _rates(result, estimator):
    return dict((r['c'], r['rate']) for r in result.records if r['estimator'] == estimator)


@pytest.mark.slow
class TestExperimentBehaviour:
    def test_rmse_falls_with_n(self):
        spec = ExperimentSpec(montecarlo.ACCURACY, [250, 500], [1.0], [0.05], 300, estimators=('ols',), seed=11)
        rmse = [r['rmse'] for r in montecarlo.run_experiment(spec).records]
        assert rmse[1] < rmse[0]

    def test_size_at_estimated_threshold(self):
        spec = ExperimentSpec(montecarlo.SIZE, [250], [1.0], [0.0], 1000, test=montecarlo.WALD_AT_THRESHOLD,
                              estimators=('ivx',), seed=17, p=1)
        record = montecarlo.run_experiment(spec).records[0]
        assert 0.03 <= record['rate'] <= 0.08

    def test_ivx_closer_to_nominal_under_endogeneity(self):
        spec = ExperimentSpec(montecarlo.SIZE, [250], [-2.0, 0.0, 1.0, 2.0], [0.0], 400,
                              test=montecarlo.WALD_AT_THRESHOLD, seed=19, p=1, sigma_uv=-0.9)
        result = montecarlo.run_experiment(spec)
        ols, iv = _rates(result, 'ols'), _rates(result, 'ivx')
        closer = [abs(iv[c] - 0.05) < abs(ols[c] - 0.05) for c in spec.c_list]
        assert sum(closer) >= 3

    def test_power_exceeds_size(self):
        options = dict(test=montecarlo.WALD_AT_THRESHOLD, estimators=('ivx',), seed=23)
        size = montecarlo.run_experiment(ExperimentSpec(montecarlo.SIZE, [500], [1.0], [0.05], 200, **options))
        power = montecarlo.run_experiment(ExperimentSpec(montecarlo.POWER, [500], [1.0], [0.05], 200, **options))
        assert power.records[0]['rate'] - size.records[0]['rate'] >= 0.3
