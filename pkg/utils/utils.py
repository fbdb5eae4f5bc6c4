import os
import re
import json
import time
import logging
import contextlib

import config


@contextlib.contextmanager
def timer(label='Run'):
    """ Time the execution of a context block.

    Args:
        label (str, optional): Name of the timed block in the log line.

    Yields:
        None
    """
    time_start = time.time()

    yield

    elapsed = time.time() - time_start
    logging.info(f'{label} time: {elapsed:.2f}s')


def serialize(parts):
    """ Report file name from command parts.

    Parts are lowercased, runs of other characters than letters, digits and
    dots become '_', and missing parts are dropped, so
    ['table', 'commutators', 'L10', None] gives 'table-commutators-l10'.

    Args:
        parts (list | tuple | str | int): Parts of the name.

    Returns:
        str

    """
    if not isinstance(parts, (list, tuple)):
        parts = [parts]
    tokens = [
        re.sub(r'[^a-z0-9.]+', '_', str(part).lower()).strip('_')
        for part in parts if part is not None
    ]
    return '-'.join(token for token in tokens if token)


def dumps(report):
    """ Deterministic JSON text of a report (sorted keys, fixed indent) """
    return json.dumps(report, sort_keys=True, indent=2, default=str)


def dump(report, path):
    """ Write a report as deterministic JSON, creating parent directories """
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    with open(path, 'w') as f:
        f.write(dumps(report) + '\n')
    logging.info(f'Report written to {path}')


def load(path):
    with open(path) as f:
        return json.load(f)


def load_printed(name, path=None):
    """ Printed table `name` from the printed-data directory, or from `path` """
    return load(path or os.path.join(config.printed_data_dir, name))
