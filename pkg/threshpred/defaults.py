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
Module for storing default and static values
"""

# Threshold grid trimming
trim_lower = 0.15
trim_upper = 0.85
min_regime_obs = 10         # each regime keeps at least max(p + 2, this) observations

# Reciprocal condition number (of the column-equilibrated Gram matrix) below which
# a design is rank deficient
rank_tolerance = 1e-12

# Coefficients within this of zero count as satisfying a restriction on an exact fit
exact_fit_tolerance = 1e-10

# IVX filter
ivx_cz = 1.0
ivx_gammaz = 0.95

# Persistence NLLS
persistence_c_bounds = (-20.0, 20.0)
persistence_phi_bounds = (-2.0, 2.0)
persistence_max_iterations = 100
persistence_tolerance = 1e-8
persistence_grid_points = 41        # per dimension, coarse fallback lattice
persistence_backtrack_trials = 30

# Limit simulation
mesh_steps = 2000
mesh_reps = 10000
mesh_min_steps = 100
mesh_min_reps = 100
lambda_grid_points = 71
argmax_truncation = 50.0
argmax_min_truncation = 50.0
critical_levels = (0.90, 0.95, 0.99)
published_table_min_reps = 10000
# Dense level grid used when a table serves p-values
pvalue_levels = tuple([round(0.01 * i, 2) for i in range(1, 100)] + [0.995, 0.999])

# Monte Carlo
mc_failure_ceiling = 0.01
mc_cv_reps = 2000           # draws per on-demand critical value table
mc_nominal_levels = (0.05,)

# Benchmark experiment grid
benchmark_c_values = (1.0, 2.0, 5.0, 10.0)
benchmark_phi_values = (0.0, 0.05, 0.25, 0.50)
benchmark_n_values = (250, 500)
benchmark_accuracy_reps = 5000
benchmark_test_reps = 1000
benchmark_gamma0 = 0.25
benchmark_delta0 = 2.0
benchmark_tau = 0.25
benchmark_p = 2

# Named regressor-persistence scenarios, (c, phi)
scenarios = {
    'near-unit': (1.0, 0.05),
    'mildly-explosive': (10.0, 0.25),
    'well-below-unit': (-10.0, 0.05),
}

# Dataset ingestion
min_dataset_rows = 30

# Output
default_output_dir = 'threshpred-out'
result_schema_version = 1

# CLI exit codes
exit_ok = 0
exit_config = 2
exit_data = 3
exit_numerical = 4
exit_missing_critical_values = 5

# Stable column order of experiment records
experiment_columns = ['kind', 'test', 'estimator', 'n', 'c', 'phi', 'level', 'reps',
                      'rate', 'mc_se', 'rmse', 'median_abs_error', 'bias',
                      'failed', 'status', 'critical_value']

# Philox stream keys, one per consumer of randomness
stream_innovations = 1
stream_threshold = 2
stream_limit = 3
stream_znphi = 4
stream_argmax = 5
