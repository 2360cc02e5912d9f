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

import sys
import textwrap

from tabulate import tabulate


def _is_tty(stream):
    return hasattr(stream, 'isatty') and stream.isatty()

def boldify(s, stream=None):
    """
    Adds shell formatting characters to s to make it bold when printed to a terminal
    """
    if not _is_tty(stream or sys.stdout):
        return str(s)
    return '\033[1m' + str(s) + '\033[0m'

def redden(s, stream=None):
    if not _is_tty(stream or sys.stderr):
        return str(s)
    return '\033[91m' + str(s) + '\033[0m'


def _fmt_value(value):
    if isinstance(value, float):
        return '{0:.6g}'.format(value)
    if isinstance(value, (list, tuple)):
        return ', '.join(_fmt_value(v) for v in value)
    if value is None:
        return '--'
    return str(value)


class ReportIO(object):
    """
    Human readable summaries on stdout; machine readable results go to files
    """
    def __init__(self, stream=None):
        self._stream = stream or sys.stdout

    def heading(self, text):
        print(boldify(text, self._stream), file=self._stream)

    def para(self, text, indent=0):
        prefix = ' ' * 4 * indent
        print(textwrap.fill(text, width=78, initial_indent=prefix, subsequent_indent=prefix,
                            break_on_hyphens=False), file=self._stream)

    def pairs(self, rows):
        """
        Two-column table of (name, value)
        """
        table = [[boldify(k, self._stream), _fmt_value(v)] for k, v in rows]
        print(tabulate(table, tablefmt='plain'), file=self._stream)

    def table(self, rows, headers):
        headers = [boldify(h, self._stream) for h in headers]
        print(tabulate([[_fmt_value(v) for v in r] for r in rows], headers=headers), file=self._stream)

    def written(self, path):
        print('Wrote {0}'.format(path), file=self._stream)
