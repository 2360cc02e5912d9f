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
Run configuration: a YAML file validated against a nested schema, with command line
flags applied on top
"""

import os
import copy
import logging

import yaml
import numpy as np

from threshpred import defaults
from threshpred import helpers
from threshpred.helpers import SchemaEntry
from threshpred import dgp
from threshpred import innovations
from threshpred import ivx
from threshpred import limitsim


class ConfigFileError(helpers.ConfigError):
    pass

class InvalidConfig(helpers.ConfigError):
    pass


NUM = (int, float)
VEC = (int, float, list)

PRESET_BENCHMARK = 'benchmark'
PRESET_NULL = 'null'
# Alternative names accepted on the command line and in config files
PRESET_ALIASES = {'paper-section-4': PRESET_BENCHMARK}
PRESETS = (PRESET_BENCHMARK, PRESET_NULL) + tuple(sorted(PRESET_ALIASES))


def canonical_preset(name):
    return PRESET_ALIASES.get(name, name)


_covariance_schema = {
    'sigma_y': SchemaEntry(False, 1.0, NUM, None),
    'sigma_xx': SchemaEntry(False, 1.0, VEC, None),
    'sigma_phiphi': SchemaEntry(False, 1.0, VEC, None),
    'cross_xy': SchemaEntry(False, 0.0, VEC, None),
    'cross_xphi': SchemaEntry(False, 0.0, VEC, None),
}

_persistence_schema = {
    'c': SchemaEntry(False, 1.0, VEC, None),
    'phi': SchemaEntry(False, 0.0, VEC, None),
    'form': SchemaEntry(False, dgp.FORM_EXACT, str, None),
    'x0': SchemaEntry(False, 0.0, VEC, None),
}

_dgp_schema = {
    'preset': SchemaEntry(False, None, str, None),
    'p': SchemaEntry(False, None, int, None),
    'alpha': SchemaEntry(False, [0.0, 0.0], list, None),
    'beta1': SchemaEntry(False, None, VEC, None),
    'beta2': SchemaEntry(False, None, VEC, None),
    'base': SchemaEntry(False, 0.0, VEC, None),
    'delta0': SchemaEntry(False, 0.0, VEC, None),
    'tau': SchemaEntry(False, 0.0, NUM, None),
    'gamma0': SchemaEntry(False, defaults.benchmark_gamma0, NUM, None),
    'threshold_dist': SchemaEntry(False, dgp.THRESHOLD_NORMAL, str, None),
    'has_intercept': SchemaEntry(False, True, bool, None),
    'n': SchemaEntry(False, 250, int, None),
}

_grid_schema = {
    'pi1': SchemaEntry(False, defaults.trim_lower, NUM, None),
    'pi2': SchemaEntry(False, defaults.trim_upper, NUM, None),
}

_ivx_schema = {
    'cz': SchemaEntry(False, defaults.ivx_cz, NUM, None),
    'gammaz': SchemaEntry(False, defaults.ivx_gammaz, NUM, None),
    'corrected': SchemaEntry(False, False, bool, None),
}

_mesh_schema = {
    'steps': SchemaEntry(False, defaults.mesh_steps, int, None),
    'reps': SchemaEntry(False, defaults.mesh_reps, int, None),
    'lambda_points': SchemaEntry(False, defaults.lambda_grid_points, int, None),
    'truncation': SchemaEntry(False, defaults.argmax_truncation, NUM, None),
}

_critical_values_schema = {
    'levels': SchemaEntry(False, list(defaults.critical_levels), list, None),
    'tables_dir': SchemaEntry(False, None, str, None),
    'simulate': SchemaEntry(False, True, bool, None),
}

_experiment_schema = {
    'kind': SchemaEntry(False, 'size', str, None),
    'test': SchemaEntry(False, 'sup-h2', str, None),
    'n': SchemaEntry(False, list(defaults.benchmark_n_values), list, None),
    'c': SchemaEntry(False, list(defaults.benchmark_c_values), list, None),
    'phi': SchemaEntry(False, list(defaults.benchmark_phi_values), list, None),
    'scenario': SchemaEntry(False, None, str, None),
    'reps': SchemaEntry(False, None, int, None),
    'levels': SchemaEntry(False, list(defaults.mc_nominal_levels), list, None),
    'estimators': SchemaEntry(False, ['ols', 'ivx'], list, None),
    'p': SchemaEntry(False, defaults.benchmark_p, int, None),
    'sigma_uv': SchemaEntry(False, 0.0, NUM, None),
    'cv_reps': SchemaEntry(False, defaults.mc_cv_reps, int, None),
}

_dataset_schema = {
    'y': SchemaEntry(False, 'y', str, None),
    'x': SchemaEntry(False, None, list, None),
    'q': SchemaEntry(False, 'q', str, None),
    'date': SchemaEntry(False, None, str, None),
    'uphi': SchemaEntry(False, None, list, None),
}

top_schema = {
    'seed': SchemaEntry(False, 0, int, None),
    'output_dir': SchemaEntry(False, defaults.default_output_dir, str, None),
    'log_level': SchemaEntry(False, 'INFO', str, None),
    'workers': SchemaEntry(False, 1, int, None),
    'covariance': SchemaEntry(False, {}, dict, _covariance_schema),
    'persistence': SchemaEntry(False, {}, dict, _persistence_schema),
    'dgp': SchemaEntry(False, {}, dict, _dgp_schema),
    'grid': SchemaEntry(False, {}, dict, _grid_schema),
    'ivx': SchemaEntry(False, {}, dict, _ivx_schema),
    'mesh': SchemaEntry(False, {}, dict, _mesh_schema),
    'critical_values': SchemaEntry(False, {}, dict, _critical_values_schema),
    'experiment': SchemaEntry(False, {}, dict, _experiment_schema),
    'dataset': SchemaEntry(False, {}, dict, _dataset_schema),
}


def _fill(validated, schema):
    """
    Nested sections left out of the file still get their defaults
    """
    for key, rules in schema.items():
        if rules.schema and isinstance(validated.get(key), dict):
            ok, message, section = helpers.validate(validated[key], rules.schema)
            if not ok:
                raise InvalidConfig('In {0}: {1}'.format(key, message))
            validated[key] = section
    return validated


class RunConfig(object):
    """
    Resolved configuration. Overrides are a dict of 'section.field' (or 'field')
    to value; None values are ignored so unset flags never mask the file.
    """
    def __init__(self, config_file=None, overrides=None):
        self._logger = logging.getLogger(__name__)
        contents = self._read_config(config_file) if config_file else {}

        is_valid, message, validated = helpers.validate(contents, top_schema)
        if not is_valid:
            raise InvalidConfig(message)
        self._config = _fill(copy.deepcopy(validated), top_schema)

        for key, value in (overrides or {}).items():
            if value is not None:
                self.set(key, value)

    def _read_config(self, filename):
        path = os.path.expanduser(filename)
        if not os.path.isfile(path):
            raise ConfigFileError('Cannot open config file "{0}"'.format(filename))
        try:
            with open(path, 'r') as stream:
                contents = yaml.safe_load(stream)
        except yaml.YAMLError as e:
            raise ConfigFileError('Invalid YAML format: {0}'.format(e))
        return contents or {}

    def set(self, key, value):
        parts = key.split('.')
        if len(parts) == 1:
            if key not in top_schema:
                raise InvalidConfig('Unknown setting "{0}"'.format(key))
            self._config[key] = value
        else:
            section, field = parts
            if section not in top_schema or field not in top_schema[section].schema:
                raise InvalidConfig('Unknown setting "{0}"'.format(key))
            self._config[section][field] = value

    def get(self, key):
        parts = key.split('.')
        value = self._config
        for part in parts:
            value = value[part]
        return value

    def as_dict(self):
        return helpers.to_jsonable(copy.deepcopy(self._config))

    @property
    def hash(self):
        return helpers.config_hash(self._config)

    @property
    def seed(self):
        return self._config['seed']

    @property
    def workers(self):
        return self._config['workers']

    # Model objects built from the resolved settings

    def regressor_count(self):
        section = self._config['dgp']
        if section['p']:
            return section['p']
        if canonical_preset(section['preset']) == PRESET_BENCHMARK:
            return defaults.benchmark_p
        return np.atleast_1d(np.asarray(self._config['persistence']['c'])).size

    def covariance(self, p=None, d=None):
        section = self._config['covariance']
        p = p or self.regressor_count()
        d = d or np.atleast_1d(np.asarray(self._config['persistence']['phi'])).size

        def square(value, k):
            m = np.asarray(value, dtype=float)
            return m * np.eye(k) if m.ndim == 0 else m

        return innovations.CovarianceSpec(
            sigma_y=section['sigma_y'],
            sigma_xx=square(section['sigma_xx'], p),
            sigma_phiphi=square(section['sigma_phiphi'], d),
            cross_xy=np.broadcast_to(np.asarray(section['cross_xy'], dtype=float), (p,)),
            cross_xphi=np.broadcast_to(np.asarray(section['cross_xphi'], dtype=float), (p, d)))

    def persistence(self, p=None):
        section = self._config['persistence']
        p = p or self.regressor_count()
        c = np.broadcast_to(np.asarray(section['c'], dtype=float), (p,))
        return dgp.PersistenceSpec(c, section['phi'], section['form'])

    def x0(self, p=None):
        p = p or self.regressor_count()
        return np.broadcast_to(np.asarray(self._config['persistence']['x0'], dtype=float), (p,))

    def dgp_spec(self):
        section = self._config['dgp']
        p = self.regressor_count()
        preset = canonical_preset(section['preset'])
        if preset == PRESET_BENCHMARK:
            return dgp.ThresholdDgpSpec.benchmark(p)
        if preset == PRESET_NULL:
            return dgp.ThresholdDgpSpec.null(p, has_intercept=section['has_intercept'])
        if preset is not None:
            raise InvalidConfig('Unknown preset "{0}", expected one of {1}'.format(section['preset'], PRESETS))
        return dgp.ThresholdDgpSpec(alpha=section['alpha'], beta1=section['beta1'], beta2=section['beta2'],
                                    base=section['base'], delta0=section['delta0'], tau=section['tau'],
                                    gamma0=section['gamma0'], threshold_dist=section['threshold_dist'],
                                    has_intercept=section['has_intercept'])

    def trimming(self):
        return self._config['grid']['pi1'], self._config['grid']['pi2']

    def ivx_config(self):
        section = self._config['ivx']
        return ivx.IvxConfig(section['cz'], section['gammaz'])

    def ivx_corrected(self):
        return self._config['ivx']['corrected']

    def mesh(self, reps=None, steps=None):
        section = self._config['mesh']
        return limitsim.MeshSpec(steps or section['steps'], reps or section['reps'], self.seed,
                                 section['lambda_points'])

    def truncation(self):
        return self._config['mesh']['truncation']
