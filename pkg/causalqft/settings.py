"""
Settings for the causalqft project.

Every physical default and numerical tolerance is read through python-decouple,
so any of them can be overridden from the environment or a settings.ini / .env
file placed next to manage.py. The batch commands merge these defaults with
causalqft/cli/defaults.json, a --config file and command-line flags.
"""

import os
from decouple import Csv
from decouple import config

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Django refuses to start without one; nothing here is signed or served
SECRET_KEY = config("SECRET_KEY", default="causalqft-batch-only")
DEBUG = config("DEBUG", default=False, cast=bool)
ALLOWED_HOSTS = config("ALLOWED_HOSTS", default="", cast=Csv())


# Application definition

INSTALLED_APPS = [
    "causalqft.grassmann",
    "causalqft.fock",
    "causalqft.wick",
    "causalqft.distributions",
    "causalqft.splitting",
    "causalqft.qed",
    "causalqft.adiabatic",
    "causalqft.induction",
    "causalqft.cli",
]

# No persistence beyond the files the commands write
DATABASES = {}

USE_TZ = True
TIME_ZONE = "UTC"


# Physical defaults. Units hbar = c = 1, metric signature (+,-,-,-).

ELECTRON_MASS = config("CAUSALQFT_ELECTRON_MASS", default=1.0, cast=float)

# Photon regulator mass as a fraction of the electron mass
PHOTON_MASS_RATIO = config("CAUSALQFT_PHOTON_MASS_RATIO", default=0.1, cast=float)


# Quadrature

QUAD_EPSABS = config("CAUSALQFT_QUAD_EPSABS", default=1e-13, cast=float)
QUAD_EPSREL = config("CAUSALQFT_QUAD_EPSREL", default=1e-11, cast=float)
QUAD_LIMIT = config("CAUSALQFT_QUAD_LIMIT", default=400, cast=int)

# Distance to a propagator pole below which evaluation without an i-epsilon
# prescription is refused
POLE_TOLERANCE = config("CAUSALQFT_POLE_TOLERANCE", default=1e-9, cast=float)


# Adiabatic switching: geometric epsilon schedule 2^-3 ... 2^-14

EPS_START = config("CAUSALQFT_EPS_START", default=2.0 ** -3, cast=float)
EPS_STOP = config("CAUSALQFT_EPS_STOP", default=2.0 ** -14, cast=float)
EPS_STEPS = config("CAUSALQFT_EPS_STEPS", default=12, cast=int)
EPS_SAFE_MINIMUM = config("CAUSALQFT_EPS_SAFE_MINIMUM", default=1e-9, cast=float)

# Verdict rule thresholds for epsilon sweeps
SWEEP_DIVERGENCE_SLOPE = config(
    "CAUSALQFT_SWEEP_DIVERGENCE_SLOPE", default=-0.25, cast=float
)
SWEEP_CONVERGENCE_SLOPE = config(
    "CAUSALQFT_SWEEP_CONVERGENCE_SLOPE", default=0.1, cast=float
)


# Caps for symbolic and Fock-grid work

MAX_SYMBOLIC_ORDER = config("CAUSALQFT_MAX_SYMBOLIC_ORDER", default=5, cast=int)
MAX_GRID_MODES = config("CAUSALQFT_MAX_GRID_MODES", default=8, cast=int)
MAX_CUTOFF = config("CAUSALQFT_MAX_CUTOFF", default=4, cast=int)

# Worker threads used for epsilon sweeps
THREADS = config("CAUSALQFT_THREADS", default=1, cast=int)


LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {"format": "%(levelname)s %(asctime)s %(name)s %(message)s"}
    },
    "handlers": {
        "console": {
            "level": config("LOG_LEVEL", "INFO"),
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        }
    },
    "loggers": {
        "django": {"handlers": ["console"], "level": "ERROR", "propagate": False},
        "causalqft": {
            "handlers": ["console"],
            "level": config("LOG_LEVEL", "INFO"),
            "propagate": False,
        },
    },
}
