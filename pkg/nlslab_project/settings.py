from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# The numerics are configured from the command line and optional key=value
# files only (see waves/runconfig.py); nothing here is read from the
# environment, so a given set of flags always reproduces the same output.
SECRET_KEY = 'nlslab-offline-not-secret'

DEBUG = False

ALLOWED_HOSTS = []


# Application definition
INSTALLED_APPS = [
    'waves',
]

# No database: every computation is a pure function of its flags.
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# --- LOGGING ---
# Library modules log under "waves.*"; data files never carry log lines.
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'waves': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
    },
}


# --- WAVELAB DEFAULTS ---
# Built-in defaults; a --config key=value file overrides them and explicit
# flags override both.
WAVELAB = {
    # quadrature absolute/relative tolerance
    'QUAD_TOL': 1e-13,
    # inversion tolerance on tau (applied in the chart variable)
    'INV_TOL': 1e-14,
    # phi_0 switches to its algebraic tail below this value of G
    'TAIL_TAU': 1e-14,
    # R schedule in units of the characteristic length
    'R_SCHEDULE': (50.0, 100.0, 200.0, 400.0, 800.0),
    # pairing-integral tail fit starts at this many characteristic lengths
    'PAIRING_TAIL_LENGTHS': 200.0,
    # band below p = 7/3 where mass_prime(0) warns about accuracy
    'NEAR_CRITICAL_BAND': 0.05,
    # |(phi_0, chi_R eta_0)| below COND_TOL * ||phi_0||^2 is ill-conditioned
    'COND_TOL': 1e-6,
    # relative orthogonality defect accepted for an unstable direction
    'ORTHOGONALITY_TOL': 1e-8,
    # split-step evolution
    'DT': 1e-3,
    'N': 2 ** 14,
    'BOX_LENGTHS': 100.0,
    'T_MAX': 50.0,
    'SAMPLE_EVERY': 100,
    'EXIT_FACTOR': 10.0,
    'LAMBDA_SCALE': 1e-2,
}
