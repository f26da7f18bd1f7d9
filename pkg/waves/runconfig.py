"""
Run configuration for the management commands.

Values are resolved as explicit flags > ``--config`` key=value file >
``settings.WAVELAB``. The config file is parsed with python-dotenv's
``dotenv_values`` and never exported to the process environment.
"""
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

from django.conf import settings
from dotenv import dotenv_values

from .exceptions import PreconditionError
from .model import ModelParams

logger = logging.getLogger(__name__)


def _float_tuple(value):
    if isinstance(value, str):
        value = [part for part in value.replace(',', ' ').split() if part]
    return tuple(float(v) for v in value)


# knob name -> parser; the same names are accepted in config files and as flags
KNOBS = {
    'quad_tol': float,
    'inv_tol': float,
    'tail_tau': float,
    'r_schedule': _float_tuple,
    'pairing_tail_lengths': float,
    'near_critical_band': float,
    'cond_tol': float,
    'orthogonality_tol': float,
    'dt': float,
    'n': int,
    'box_lengths': float,
    't_max': float,
    'sample_every': int,
    'exit_factor': float,
    'lambda_scale': float,
}

FORMATS = ('csv', 'json')


def _parse(key, raw, source):
    try:
        return KNOBS[key](raw)
    except (TypeError, ValueError):
        raise PreconditionError(f"{source}: {key}={raw!r} is not a valid {KNOBS[key].__name__}")


def read_config_file(path):
    """Parsed knobs from a key=value file; unknown keys are rejected."""
    path = Path(path)
    if not path.is_file():
        raise PreconditionError(f"config file {path} does not exist")
    values = {}
    for key, raw in dotenv_values(path).items():
        name = key.strip().lower()
        if name not in KNOBS:
            raise PreconditionError(f"{path}: unknown key {key!r}")
        if raw is None:
            raise PreconditionError(f"{path}: key {key!r} has no value")
        values[name] = _parse(name, raw, str(path))
    return values


def defaults():
    return {key.lower(): value for key, value in getattr(settings, 'WAVELAB', {}).items()
            if key.lower() in KNOBS}


def _positive(knobs, *names):
    for name in names:
        if not knobs[name] > 0:
            raise PreconditionError(f"{name} must be positive ({name}={knobs[name]})")


def validate_knobs(knobs):
    _positive(knobs, 'quad_tol', 'inv_tol', 'tail_tau', 'pairing_tail_lengths', 'cond_tol',
              'orthogonality_tol', 'dt', 'box_lengths', 't_max', 'sample_every', 'lambda_scale')
    for name in ('quad_tol', 'inv_tol', 'tail_tau'):
        if knobs[name] >= 1e-2:
            raise PreconditionError(f"{name}={knobs[name]} is too loose (must be < 1e-2)")
    if knobs['near_critical_band'] < 0:
        raise PreconditionError(f"near_critical_band must be nonnegative ({knobs['near_critical_band']})")
    n = knobs['n']
    if n < 16 or n & (n - 1):
        raise PreconditionError(f"n must be a power of two >= 16 (n={n})")
    if not knobs['exit_factor'] > 1:
        raise PreconditionError(f"exit_factor must exceed 1 (exit_factor={knobs['exit_factor']})")
    schedule = knobs['r_schedule']
    if not schedule or any(r <= 0 for r in schedule):
        raise PreconditionError(f"r_schedule must be nonempty and positive ({schedule})")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise PreconditionError(f"r_schedule must be strictly increasing ({schedule})")


@dataclass(frozen=True)
class RunConfig:
    p: float
    q: float
    out: str = None
    format: str = 'csv'
    knobs: dict = field(default_factory=dict)

    @classmethod
    def resolve(cls, options, default_format='csv'):
        """Build a validated RunConfig from management-command options."""
        seedless = options.get('seedless')
        if seedless not in (None, False, True):
            raise PreconditionError(f"--seedless takes no value (got {seedless!r})")
        knobs = defaults()
        missing = sorted(set(KNOBS) - set(knobs))
        if missing:
            raise PreconditionError(f"settings.WAVELAB lacks {', '.join(missing)}")
        if options.get('config'):
            knobs.update(read_config_file(options['config']))
        for key in KNOBS:
            if options.get(key) is not None:
                knobs[key] = _parse(key, options[key], f"--{key.replace('_', '-')}")
        knobs['r_schedule'] = _float_tuple(knobs['r_schedule'])
        validate_knobs(knobs)
        fmt = options.get('format') or default_format
        if fmt not in FORMATS:
            raise PreconditionError(f"unknown format {fmt!r} (expected csv or json)")
        if options.get('p') is None or options.get('q') is None:
            raise PreconditionError("--p and --q are required")
        config = cls(p=float(options['p']), q=float(options['q']), out=options.get('out'), format=fmt,
                     knobs=knobs)
        config.params  # validates 1 < p < q
        logger.debug("resolved %r", config)
        return config

    @property
    def params(self):
        return ModelParams(self.p, self.q)

    @property
    def tolerances(self):
        return {key: self.knobs[key] for key in ('quad_tol', 'inv_tol', 'tail_tau')}

    def __getitem__(self, key):
        return self.knobs[key]

    def as_dict(self):
        data = asdict(self)
        data['knobs']['r_schedule'] = list(self.knobs['r_schedule'])
        return data
