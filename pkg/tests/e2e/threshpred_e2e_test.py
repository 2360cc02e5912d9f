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

import io
import os
import sys
import json

import pytest
from mock import patch

from threshpred.cli import main
from threshpred import defaults


class TestThreshPredE2E:
    def _cli_run(self, args):
        stdout, stderr = io.StringIO(), io.StringIO()
        saved = sys.stdout, sys.stderr
        sys.stdout, sys.stderr = stdout, stderr
        try:
            rc = main([str(a) for a in args])
        finally:
            sys.stdout, sys.stderr = saved
        return rc, stdout.getvalue(), stderr.getvalue()

    def _read(self, path):
        with open(path) as f:
            return json.load(f)

    def _simulate(self, tmpdir, n=150):
        path = os.path.join(str(tmpdir), 'sample.csv')
        rc, stdout, stderr = self._cli_run(['simulate', '--seed', 5, '--n', n, '--c', 1, '--phi', 0.05,
                                            '--preset', 'benchmark', '--out', path])
        assert rc == 0, stderr
        return path

    def _error(self, stderr):
        line = [l for l in stderr.splitlines() if l.startswith('{"error"')][-1]
        return json.loads(line)['error']

    def test_simulate_then_estimate(self, tmpdir):
        data = self._simulate(tmpdir)
        out = os.path.join(str(tmpdir), 'estimate.json')
        rc, stdout, stderr = self._cli_run(['estimate', '--data', data, '--out', out])
        assert rc == 0, stderr
        assert 'gamma_hat' in stdout

        payload = self._read(out)
        assert payload['kind'] == 'estimate'
        assert payload['schema_version'] == defaults.result_schema_version
        assert payload['provenance']['tool'] == 'threshpred'
        assert payload['result']['dataset']['n'] == 150
        assert len(payload['result']['theta1']) == 3

    def test_ivx_sup_wald_with_simulated_critical_values(self, tmpdir):
        data = self._simulate(tmpdir)
        out = os.path.join(str(tmpdir), 'test.json')
        tables = os.path.join(str(tmpdir), 'tables')
        rc, stdout, stderr = self._cli_run(['test', '--data', data, '--hypothesis', 'joint', '--estimator', 'ivx',
                                            '--cv-reps', 200, '--tables', tables, '--out', out])
        assert rc == 0, stderr
        result = self._read(out)['result']
        assert result['dof'] == 5
        assert 0.0 <= result['pvalue'] <= 1.0
        assert result['pvalue_source'].startswith('simulated:')
        assert os.listdir(tables)

    def test_ols_pvalue_needs_persistence(self, tmpdir):
        data = self._simulate(tmpdir)
        out = os.path.join(str(tmpdir), 'test.json')
        rc, stdout, stderr = self._cli_run(['test', '--data', data, '--hypothesis', 'linearity', '--out', out])
        assert rc == 0, stderr
        result = self._read(out)['result']
        assert result['pvalue'] is None
        assert result['pvalue_source'] == 'unavailable'

    def test_wald_at_estimate(self, tmpdir):
        data = self._simulate(tmpdir)
        out = os.path.join(str(tmpdir), 'test.json')
        rc, stdout, stderr = self._cli_run(['test', '--data', data, '--at-estimate', '--estimator', 'ivx',
                                            '--out', out])
        assert rc == 0, stderr
        result = self._read(out)['result']
        assert result['hypothesis']['name'] == 'regime-slopes'
        assert result['pvalue_source'] == 'chi2'

    def test_ivx_and_persistence(self, tmpdir):
        data = self._simulate(tmpdir)
        out = os.path.join(str(tmpdir), 'ivx.json')
        rc, stdout, stderr = self._cli_run(['ivx', '--data', data, '--gamma', 0.25, '--ivx-corrected',
                                            '--c', 1, '--phi', 0.05, '--out', out])
        assert rc == 0, stderr
        result = self._read(out)['result']
        assert result['corrected'] is True
        assert len(result['standard_errors']) == 6

        out = os.path.join(str(tmpdir), 'persistence.json')
        rc, stdout, stderr = self._cli_run(['fit-persistence', '--data', data, '--out', out])
        assert rc == 0, stderr
        result = self._read(out)['result']
        assert len(result['c_hat']) == 2
        assert len(result['phi_hat']) == 1

    def test_critvals_reproducible(self, tmpdir):
        outputs = []
        with patch.dict('os.environ', {'SOURCE_DATE_EPOCH': '1700000000'}):
            for name in ('a', 'b'):
                out = os.path.join(str(tmpdir), name)
                rc, stdout, stderr = self._cli_run(['critvals', '--functional', 'ivx-h2', '--p', 2, '--intercept',
                                                    '--reps', 200, '--steps', 100, '--seed', 3, '--out', out])
                assert rc == 0, stderr
                outputs.append(out)

        first, second = outputs
        assert sorted(os.listdir(first)) == sorted(os.listdir(second))
        for name in os.listdir(first):
            with open(os.path.join(first, name), 'rb') as f, open(os.path.join(second, name), 'rb') as g:
                assert f.read() == g.read()

    def test_monte_carlo(self, tmpdir):
        out = os.path.join(str(tmpdir), 'mc')
        rc, stdout, stderr = self._cli_run(['mc', '--kind', 'size', '--test', 'wald-at-threshold', '--n', 60,
                                            '--c', 1, '--phi', 0.05, '--reps', 5, '--p', 1, '--estimators', 'ols',
                                            '--no-simulate', '--out', out])
        assert rc == 0, stderr
        assert sorted(os.listdir(out)) == ['results.csv', 'results.json', 'results.md']
        records = self._read(os.path.join(out, 'results.json'))['records']
        assert len(records) == 1
        assert records[0]['n'] == 60

    def test_analyze(self, tmpdir):
        data = self._simulate(tmpdir)
        out = os.path.join(str(tmpdir), 'analyze.json')
        rc, stdout, stderr = self._cli_run(['analyze', '--data', data, '--c', 1, '--phi', 0.05, '--cv-reps', 100,
                                            '--steps', 100, '--out', out])
        assert rc == 0, stderr
        result = self._read(out)['result']
        assert len(result['sup_wald']) == 4
        assert all(t['pvalue'] is not None for t in result['sup_wald'])
        assert len(result['wald_at_threshold']) == 2

    def test_constant_threshold_variable(self, tmpdir):
        path = os.path.join(str(tmpdir), 'flat.csv')
        with open(path, 'w') as f:
            f.write('y,x1,q\n')
            for t in range(60):
                f.write('{0},{1},1.0\n'.format(0.01 * t, 0.5 * t))
        rc, stdout, stderr = self._cli_run(['analyze', '--data', path])
        assert rc == defaults.exit_data
        error = self._error(stderr)
        assert error['category'] == 'data'
        assert error['type'] == 'DegenerateThresholdVariable'

    def test_missing_critical_values(self, tmpdir):
        data = self._simulate(tmpdir)
        rc, stdout, stderr = self._cli_run(['test', '--data', data, '--estimator', 'ivx', '--no-simulate',
                                            '--out', os.path.join(str(tmpdir), 'test.json')])
        assert rc == defaults.exit_missing_critical_values
        assert self._error(stderr)['category'] == 'missing-critical-values'

    def test_missing_config(self, tmpdir):
        rc, stdout, stderr = self._cli_run(['estimate', '--data', 'sample.csv', '--config',
                                            os.path.join(str(tmpdir), 'absent.yml')])
        assert rc == defaults.exit_config
        assert self._error(stderr)['type'] == 'ConfigFileError'

    def test_no_subcommand(self):
        rc, stdout, stderr = self._cli_run([])
        assert rc == defaults.exit_config

    @pytest.mark.slow
    def test_benchmark_accuracy_cell(self, tmpdir):
        out = os.path.join(str(tmpdir), 'mc')
        rc, stdout, stderr = self._cli_run(['mc', '--kind', 'accuracy', '--n', 250, '--c', 1, '--phi', 0.05,
                                            '--reps', 500, '--workers', 2, '--out', out])
        assert rc == 0, stderr
        records = self._read(os.path.join(out, 'results.json'))['records']
        assert len(records) == 2
        assert all(r['status'] == 'ok' for r in records)
