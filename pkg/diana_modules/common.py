import logging
import math
import os

from . import exceptions

VERSION = '2024.05.11.0'

log = logging.getLogger('diana')

# Scenarios quote dataset sizes in GB; the cost engine works in MB.
GB_TO_MB = 1024
DEFAULT_MSS_BYTES = 1460
DEFAULT_LOSS_FLOOR = 1e-6
DEFAULT_SHORTLIST_K = 5

def fetchgenerator(cursor):
    while True:
        item = cursor.fetchone()
        if item is None:
            break
        yield item

def format_float(x):
    '''
    Fixed formatting used everywhere a float reaches a file, so that CSV
    output is byte-stable across runs.
    '''
    if x is None:
        return ''
    if math.isinf(x):
        return 'inf'
    return '%.6f' % x

def human_seconds(seconds):
    if seconds < 60:
        return '%.1fs' % seconds
    if seconds < 3600:
        return '%.1fm' % (seconds / 60)
    if seconds < 86400:
        return '%.2fh' % (seconds / 3600)
    return '%.2fd' % (seconds / 86400)

def int_none(x, name='value'):
    if x is None:
        return None
    try:
        return int(x)
    except ValueError:
        raise exceptions.InvalidValue(name, 'an integer', x)

def resolve_seed(flag_seed=None, file_seed=None):
    '''
    The --seed flag wins, then the DIANA_SEED environment variable, then the
    scenario file, then 0.
    '''
    if flag_seed is not None:
        return int(flag_seed)
    env_seed = os.environ.get('DIANA_SEED', '').strip()
    if env_seed:
        try:
            return int(env_seed)
        except ValueError:
            raise exceptions.InvalidValue('DIANA_SEED', 'an integer', env_seed)
    if file_seed is not None:
        return int(file_seed)
    return 0

def split_any(text, delimiters):
    delimiters = list(delimiters)
    (splitter, replacers) = (delimiters[0], delimiters[1:])
    for replacer in replacers:
        text = text.replace(replacer, splitter)
    return text.split(splitter)

def split_list(text):
    '''
    Turn "a,b c" into ['a', 'b', 'c'], dropping blanks.
    '''
    if not text:
        return []
    if not isinstance(text, str):
        return list(text)
    return [item for item in split_any(text, [',', ' ', '+']) if item]
