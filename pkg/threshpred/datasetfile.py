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
Reads and writes datasets in the CSV schema: one header row, comma delimiter, UTF-8,
columns date, y, x1..xp, q and optionally uphi1..uphid. Lines starting with '#'
before the header are provenance comments.
"""

import io
import re
import json
import math
import logging
import os.path

import numpy as np
import pandas as pd
from dateutil import parser as dateparser

from threshpred import defaults
from threshpred import helpers
from threshpred import dgp


class DatasetError(helpers.DataError):
    pass

class MissingColumn(DatasetError):
    pass

class TooFewRows(DatasetError):
    pass

class ParseError(DatasetError):
    """
    Unparseable, missing or non-finite cell. row is the 1-based data row number.
    """
    def __init__(self, row, column, reason='not a finite number'):
        super(ParseError, self).__init__('Row {0}, column "{1}": {2}'.format(row, column, reason))
        self.row = row
        self.column = column


_x_column_re = re.compile(r'^x\d+$')
_uphi_column_re = re.compile(r'^uphi\d+$')


class ColumnMapping(object):
    """
    Names of the columns to use. x and uphi default to every x<k> and uphi<k> column
    in header order. date defaults to a "date" column when the file has one.
    """
    def __init__(self, y='y', x=None, q='q', date=None, uphi=None):
        self.y = y
        self.x = list(x) if x else None
        self.q = q
        self.date = date
        self.uphi = list(uphi) if uphi else None

    def resolve(self, header):
        x = self.x or [h for h in header if _x_column_re.match(h)]
        uphi = self.uphi if self.uphi is not None else [h for h in header if _uphi_column_re.match(h)]
        if not x:
            raise MissingColumn('No regressor columns found (expected x1, x2, ..)')
        date = self.date or ('date' if 'date' in header else None)
        wanted = [self.y, self.q] + x + uphi + ([date] if date else [])
        missing = [c for c in wanted if c not in header]
        if missing:
            raise MissingColumn('Missing column(s): {0}'.format(', '.join(missing)))
        return ColumnMapping(self.y, x, self.q, date, uphi)

    def to_dict(self):
        return {'y': self.y, 'x': self.x, 'q': self.q, 'date': self.date, 'uphi': self.uphi}


class EmpiricalDataset(object):
    """
    Parsed dataset. sample aligns y_t with x_{t-1} and q_{t-1}, t = 1..n.
    x_full holds x_0..x_n (NaN where the last row is blank) and uphi u_phi1..u_phin.
    """
    def __init__(self, path, mapping, dates, sample, x_full, uphi=None):
        self.path = path
        self.mapping = mapping
        self.dates = dates
        self.sample = sample
        self.x_full = x_full
        self.uphi = uphi

    @property
    def n(self):
        return self.sample.n

    def attach_path(self, persistence_spec):
        """
        Rebuilds the regressor path under a persistence spec, needed by corrected IVX
        """
        if self.uphi is None:
            raise DatasetError('The dataset has no uphi columns')
        if not np.all(np.isfinite(self.x_full)):
            raise DatasetError('The last regressor row is missing; the path cannot be rebuilt')
        self.sample.path = dgp.path_from_observations(self.x_full, self.uphi, persistence_spec)
        return self.sample.path

    def to_dict(self):
        return {
            'path': self.path,
            'columns': self.mapping.to_dict(),
            'n': self.n,
            'first_date': self.dates[0] if self.dates else None,
            'last_date': self.dates[-1] if self.dates else None,
        }


class DatasetFile(object):
    """
    Reads and parses a dataset file
    """
    def __init__(self, dataset_file, mapping=None):
        self._logger = logging.getLogger(__name__)
        self._filename = os.path.expanduser(dataset_file)
        self._mapping = mapping or ColumnMapping()
        self._frame = self._read_csv(self._filename)

    def _read_csv(self, filename):
        if not os.path.isfile(filename):
            raise DatasetError('Cannot open file "{0}"'.format(filename))

        with io.open(filename, 'r', encoding='utf-8') as stream:
            lines = stream.readlines()
        body = [l for l in lines if not l.startswith('#')]
        if not body:
            raise DatasetError('File "{0}" has no header row'.format(filename))

        try:
            frame = pd.read_csv(io.StringIO(''.join(body)), dtype=str, keep_default_na=False, sep=',')
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DatasetError('Invalid CSV format: {0}'.format(e))
        frame.columns = [c.strip() for c in frame.columns]
        return frame

    def _cells(self, column, rows):
        values = np.empty(len(rows))
        raw = self._frame[column].tolist()
        for i, r in enumerate(rows):
            text = raw[r].strip()
            if not text:
                raise ParseError(r + 1, column, 'missing value')
            try:
                value = float(text)
            except ValueError:
                raise ParseError(r + 1, column, 'cannot parse "{0}" as a number'.format(text))
            if not math.isfinite(value):
                raise ParseError(r + 1, column)
            values[i] = value
        return values

    def _optional_cell(self, column, row):
        text = self._frame[column].tolist()[row].strip()
        try:
            value = float(text)
        except ValueError:
            return np.nan
        return value if math.isfinite(value) else np.nan

    def _dates(self, column):
        dates = []
        for r, text in enumerate(self._frame[column].tolist()):
            try:
                dates.append(dateparser.isoparse(text.strip()).isoformat())
            except ValueError:
                raise ParseError(r + 1, column, 'not an ISO-8601 date')
        return dates

    def parse(self):
        mapping = self._mapping.resolve(list(self._frame.columns))
        rows = len(self._frame)
        n = rows - 1
        if n < defaults.min_dataset_rows:
            raise TooFewRows('Dataset has {0} usable rows, at least {1} are needed'.format(
                max(n, 0), defaults.min_dataset_rows))

        lagged = list(range(0, n))
        current = list(range(1, rows))
        y = self._cells(mapping.y, current)
        x_lag = np.column_stack([self._cells(c, lagged) for c in mapping.x])
        q_lag = self._cells(mapping.q, lagged)
        x_last = np.array([self._optional_cell(c, n) for c in mapping.x])
        x_full = np.vstack([x_lag, x_last[None, :]])

        uphi = None
        if mapping.uphi:
            uphi = np.column_stack([self._cells(c, current) for c in mapping.uphi])

        dates = self._dates(mapping.date) if mapping.date else None

        self._logger.debug('Parsed {0} rows from {1} ({2} regressors)'.format(rows, self._filename, len(mapping.x)))
        sample = dgp.Sample(y, x_lag, q_lag, has_intercept=True)
        return EmpiricalDataset(self._filename, mapping, dates, sample, x_full, uphi)


def parse_dataset(path, mapping=None):
    return DatasetFile(path, mapping).parse()


def sample_frame(sample, start_date='2000-01-01'):
    """
    DataFrame of a sample in the CSV schema, one row per t = 0..n. y_0 is blank, as are
    q_n and x_n when the sample carries no regressor path.
    """
    n, p = sample.n, sample.p
    columns = {'date': pd.date_range(start_date, periods=n + 1, freq='D').strftime('%Y-%m-%d')}
    columns['y'] = np.concatenate([[np.nan], sample.y])

    if sample.path is not None:
        x = sample.path.x
    else:
        x = np.vstack([sample.x_lag, np.full((1, p), np.nan)])
    for i in range(p):
        columns['x{0}'.format(i + 1)] = x[:, i]
    columns['q'] = np.concatenate([sample.q_lag, [np.nan]])

    if sample.path is not None:
        u_phi = sample.path.u_phi
        for j in range(u_phi.shape[1]):
            columns['uphi{0}'.format(j + 1)] = np.concatenate([[np.nan], u_phi[:, j]])

    return pd.DataFrame(columns)


def write_sample_csv(sample, path, provenance=None):
    """
    Writes a sample in the CSV schema; full float precision so a read gives back the same arrays
    """
    with io.open(path, 'w', encoding='utf-8') as f:
        if provenance:
            f.write(u'# {0}\n'.format(json.dumps(helpers.to_jsonable(provenance), sort_keys=True)))
        sample_frame(sample).to_csv(f, index=False, na_rep='', float_format='%.17g')
