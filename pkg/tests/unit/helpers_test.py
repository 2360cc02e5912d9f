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
from mock import patch

from threshpred import helpers
from threshpred.helpers import SchemaEntry


def _square(x):
    return x * x


class TestValidate:
    schema = {
        'name': SchemaEntry(True, None, str, None),
        'size': SchemaEntry(False, 3, (int, float), None),
        'inner': SchemaEntry(False, {}, dict, {'flag': SchemaEntry(False, False, bool, None)}),
    }

    def test_defaults(self):
        ok, message, validated = helpers.validate({'name': 'a'}, self.schema)
        assert ok
        assert validated['size'] == 3

    def test_mandatory(self):
        ok, message, _ = helpers.validate({}, self.schema)
        assert not ok
        assert 'name' in message

    def test_bool_is_not_a_number(self):
        ok, message, _ = helpers.validate({'name': 'a', 'size': True}, self.schema)
        assert not ok

    def test_nested(self):
        ok, message, validated = helpers.validate({'name': 'a', 'inner': {'flag': True}}, self.schema)
        assert ok and validated['inner']['flag'] is True
        ok, message, _ = helpers.validate({'name': 'a', 'inner': {'colour': 1}}, self.schema)
        assert not ok
        assert message.startswith('In inner')

    def test_strict(self):
        assert not helpers.validate({'name': 'a', 'extra': 1}, self.schema)[0]
        assert helpers.validate({'name': 'a', 'extra': 1}, self.schema, strict=False)[0]


class TestRandomness:
    def test_keyed_streams(self):
        a = helpers.make_rng(1, 2, 3).standard_normal(5)
        b = helpers.make_rng(1, 2, 3).standard_normal(5)
        c = helpers.make_rng(1, 2, 4).standard_normal(5)
        np.testing.assert_array_equal(a, b)
        assert not np.allclose(a, c)

    def test_negative_key(self):
        with pytest.raises(helpers.ConfigError):
            helpers.make_rng(-1)


class TestRunTasks:
    def test_order(self):
        assert helpers.run_tasks(_square, range(10)) == [i * i for i in range(10)]
        assert helpers.run_tasks(_square, range(10), workers=2) == [i * i for i in range(10)]


class TestProvenance:
    def test_pinned_timestamp(self):
        with patch.dict('os.environ', {'SOURCE_DATE_EPOCH': '0'}):
            assert helpers.utc_timestamp() == '1970-01-01T00:00:00+00:00'
            block = helpers.provenance({'seed': 1}, 1, '1.0.0', subcommand='estimate')
        assert block['tool'] == 'threshpred'
        assert block['subcommand'] == 'estimate'
        assert block['config_hash'] == helpers.config_hash({'seed': 1})

    def test_jsonable(self):
        value = helpers.to_jsonable({'a': np.arange(3), 'b': np.float64(1.5), 'c': (np.int64(2), np.bool_(True))})
        assert value == {'a': [0, 1, 2], 'b': 1.5, 'c': [2, True]}
        assert type(value['b']) is float
