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

from mock import MagicMock

from threshpred import terminalio


class TestTerminalIO:
    def test_plain_when_not_a_tty(self):
        stream = io.StringIO()
        assert terminalio.boldify('gamma', stream) == 'gamma'
        assert terminalio.redden('error', stream) == 'error'

    def test_escape_codes_on_tty(self):
        tty = MagicMock()
        tty.isatty.return_value = True
        assert terminalio.boldify('gamma', tty) == '\033[1mgamma\033[0m'

    def test_report(self):
        stream = io.StringIO()
        report = terminalio.ReportIO(stream)
        report.heading('Threshold estimate')
        report.pairs([('gamma_hat', 0.123456789), ('regime sizes', [40, 60]), ('p-value', None)])
        report.table([['ols', 12.5]], ['estimator', 'sup-Wald'])
        report.written('out.json')
        text = stream.getvalue()
        assert 'Threshold estimate' in text
        assert '0.123457' in text
        assert '40, 60' in text
        assert '--' in text
        assert 'Wrote out.json' in text
