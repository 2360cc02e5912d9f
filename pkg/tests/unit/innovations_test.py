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

import numpy as np
import pytest

from threshpred import helpers
from threshpred import innovations
from threshpred.innovations import CovarianceSpec


class TestCovariance:
    def test_assemble_orders_blocks(self):
        spec = CovarianceSpec(2.0, np.eye(2), np.eye(1), cross_xy=[0.3, -0.2], cross_xphi=[[0.1], [0.0]])
        full = innovations.assemble_covariance(spec)
        assert full.shape == (4, 4)
        assert full[0, 0] == 2.0
        assert full[0, 1] == 0.3 and full[2, 0] == -0.2
        assert full[1, 3] == 0.1 and full[3, 1] == 0.1
        assert full[0, 3] == 0.0
        np.testing.assert_array_equal(full, full.T)

    def test_not_positive_definite(self):
        spec = CovarianceSpec(1.0, 1.0, 1.0, cross_xy=[2.0])
        with pytest.raises(innovations.NotPositiveDefinite):
            innovations.assemble_covariance(spec)

    def test_negative_variance(self):
        with pytest.raises(innovations.NotPositiveDefinite):
            CovarianceSpec(-1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(innovations.DimensionMismatch):
            CovarianceSpec(1.0, np.eye(2), 1.0, cross_xy=[0.1, 0.2, 0.3])

    def test_errors_are_config_errors(self):
        assert issubclass(innovations.NotPositiveDefinite, helpers.ConfigError)

    def test_dict_round_trip(self):
        spec = CovarianceSpec.endogenous(p=2, d=1, sigma_uv=-0.5)
        again = CovarianceSpec.from_dict(spec.to_dict())
        np.testing.assert_array_equal(innovations.assemble_covariance(spec),
                                      innovations.assemble_covariance(again))


class TestDrawInnovations:
    def test_shape_and_views(self):
        panel = innovations.draw_innovations(CovarianceSpec.identity(2, 1), 50, seed=3)
        assert panel.draws.shape == (50, 4)
        assert panel.u_y.shape == (50,)
        assert panel.u_x.shape == (50, 2)
        assert panel.u_phi.shape == (50, 1)

    def test_reproducible(self):
        spec = CovarianceSpec.endogenous(1, 1, -0.5)
        a = innovations.draw_innovations(spec, 100, seed=11, replication=4)
        b = innovations.draw_innovations(spec, 100, seed=11, replication=4)
        np.testing.assert_array_equal(a.draws, b.draws)

    def test_replications_differ(self):
        spec = CovarianceSpec.identity()
        a = innovations.draw_innovations(spec, 100, seed=11, replication=0)
        b = innovations.draw_innovations(spec, 100, seed=11, replication=1)
        assert not np.allclose(a.draws, b.draws)

    def test_prefix_stable(self):
        spec = CovarianceSpec.identity()
        short = innovations.draw_innovations(spec, 50, seed=5)
        long = innovations.draw_innovations(spec, 80, seed=5)
        np.testing.assert_array_equal(short.draws, long.draws[:50])

    def test_read_only(self):
        panel = innovations.draw_innovations(CovarianceSpec.identity(), 10, seed=1)
        with pytest.raises(ValueError):
            panel.draws[0, 0] = 1.0

    def test_sample_covariance(self):
        spec = CovarianceSpec(1.0, 1.0, 1.0, cross_xy=[-0.5], cross_xphi=[[0.2]])
        panel = innovations.draw_innovations(spec, 40000, seed=2)
        np.testing.assert_allclose(np.cov(panel.draws.T), innovations.assemble_covariance(spec), atol=0.03)

    def test_sample_size(self):
        with pytest.raises(innovations.InvalidSampleSize):
            innovations.draw_innovations(CovarianceSpec.identity(), 1, seed=1)
