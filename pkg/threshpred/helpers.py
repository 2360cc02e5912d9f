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
import hashlib
import collections
import concurrent.futures
from datetime import datetime

import numpy as np
from dateutil import tz

from threshpred import __prog_name__


class ConfigError(Exception):
    """
    Invalid configuration or arguments
    """
    pass

class DataError(Exception):
    """
    Unusable input data
    """
    pass

class NumericalError(Exception):
    """
    A computation could not be carried out reliably
    """
    pass

class MissingCriticalValues(Exception):
    """
    A critical value table is needed but is neither available nor allowed to be simulated
    """
    pass


SchemaEntry = collections.namedtuple('SchemaEntry', ['mandatory', 'default', 'type', 'schema'])

def _type_name(t):
    if isinstance(t, tuple):
        return ' or '.join([i.__name__ for i in t])
    return t.__name__

def validate(d, schema, strict=True):
    """
    Runs validation on d, according to schema, returns a validated dict.
    schema is a dictionary mapping field name (key) to a SchemaEntry.
    If strict is True, all keys in d must be described in schema. If not,
    d may contain keys not required by schema.

    The type of a SchemaEntry may be a tuple of accepted types. bool is never
    accepted where a number is expected.
    """
    if d is None:
        d = {}
    if not isinstance(d, dict):
        return False, 'Expected a mapping, got "{0}"'.format(type(d).__name__), {}

    copy = dict(d)

    for key, rules in schema.items():
        if key not in copy:
            if rules.mandatory:
                return False, 'Missing mandatory field "{0}"'.format(key), {}
            copy[key] = rules.default
            continue

        if copy[key] is None:
            if rules.mandatory:
                return False, 'A valid value must be provided for field "{0}"'.format(key), {}
            copy[key] = rules.default
            continue

        if rules.type:
            accepted = rules.type if isinstance(rules.type, tuple) else (rules.type,)
            value = copy[key]
            is_bool_mismatch = isinstance(value, bool) and bool not in accepted
            if is_bool_mismatch or not isinstance(value, accepted):
                return False, 'For field "{0}", expected type "{1}", got "{2}"'.format(
                    key, _type_name(rules.type), type(value).__name__), {}
            if isinstance(value, dict) and rules.schema:
                # Recursively validate this nested dictionary
                success, message, validated = validate(value, rules.schema, strict)
                if not success:
                    return False, 'In {0}: {1}'.format(key, message), {}
                copy[key] = validated

    if strict:
        for key in d:
            if key not in schema:
                return False, 'Unexpected field "{0}"'.format(key), {}

    return True, '', copy


def make_rng(seed, *keys):
    """
    Returns a numpy Generator over the counter-based Philox bit generator, keyed by
    seed and any number of non-negative integer stream keys (consumer, replication, ...).
    The same (seed, keys) always yields the same stream, whatever the call order.
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ConfigError('Seed and stream keys must be non-negative integers')
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def run_tasks(func, items, workers=1, chunksize=1):
    """
    Map func over items, in a process pool when workers > 1.
    func must be a module-level function. Results are in input order.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(i) for i in items]

    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items, chunksize=max(1, chunksize)))


def utc_timestamp():
    """
    ISO-8601 UTC timestamp. SOURCE_DATE_EPOCH, when set, pins it for reproducible output files
    """
    epoch = os.environ.get('SOURCE_DATE_EPOCH')
    if epoch:
        moment = datetime.fromtimestamp(int(epoch), tz.tzutc())
    else:
        moment = datetime.now(tz.tzutc())
    return moment.replace(microsecond=0).isoformat()


def to_jsonable(value):
    """
    Converts numpy scalars and arrays (possibly nested in dicts, lists and tuples)
    into plain Python values
    """
    if isinstance(value, dict):
        return dict((str(k), to_jsonable(v)) for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def config_hash(config):
    canonical = json.dumps(to_jsonable(config), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def provenance(config, seed, version, **extra):
    """
    Provenance block attached to every output file
    """
    block = {
        'tool': __prog_name__,
        'version': version,
        'config_hash': config_hash(config),
        'seed': seed,
        'timestamp': utc_timestamp(),
    }
    block.update(to_jsonable(extra))
    return block
