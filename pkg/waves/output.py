"""
Deterministic CSV and JSON writers.

Floats are written with ``repr`` (shortest round-trip decimal), JSON keys are
sorted, and the -infinity marker is written as the literal ``-inf``. Run
metadata (timestamp, library versions, resolved configuration) goes to a
``<out>.meta.json`` sidecar so the data files stay byte-identical.
"""
import csv
import enum
import io
import json
import math
import platform
from functools import lru_cache
from pathlib import Path

import django
import jsonschema
import numpy as np
import scipy
from django.utils import timezone

from .exceptions import PreconditionError
from .mass import is_minus_infinity

SCHEMA_DIR = Path(__file__).resolve().parent / 'schemas'


def format_number(value):
    if value is None:
        return ''
    if is_minus_infinity(value):
        return '-inf'
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return repr(value)
    return str(value)


def to_jsonable(value):
    """Plain JSON types; non-finite floats become the strings inf/-inf/nan."""
    if is_minus_infinity(value):
        return '-inf'
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else format_number(value)
    return value


def render_csv(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise PreconditionError(f"row of length {len(row)} under a header of {len(header)} columns")
        writer.writerow([format_number(v) for v in row])
    return buffer.getvalue()


def render_json(payload, schema=None):
    data = to_jsonable(payload)
    if schema:
        validate_against_schema(data, schema)
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + '\n'


@lru_cache(maxsize=None)
def load_schema(name):
    with open(SCHEMA_DIR / f'{name}.json', encoding='utf-8') as fh:
        return json.load(fh)


def validate_against_schema(data, name):
    jsonschema.validate(instance=data, schema=load_schema(name))


def versions():
    return {
        'python': platform.python_version(),
        'django': django.get_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
    }


def sidecar_path(out):
    return Path(f'{out}.meta.json')


def write_sidecar(out, command, config):
    meta = {
        'command': command,
        'timestamp': timezone.now().isoformat(),
        'versions': versions(),
        'config': config.as_dict(),
    }
    sidecar_path(out).write_text(render_json(meta), encoding='utf-8')


def emit(text, out, stream, command=None, config=None):
    """Write text to out (plus its sidecar) or to the command's stdout."""
    if out:
        Path(out).write_text(text, encoding='utf-8')
        if config is not None:
            write_sidecar(out, command, config)
    else:
        stream.write(text, ending='')
