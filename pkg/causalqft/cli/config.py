"""Run configuration of the batch commands.

Parameters come from the versioned defaults.json, then an optional --config
file, then command-line flags. Null physical defaults fall back to the
project settings, so environment overrides of those still apply.
"""

import json
import logging
import os
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from causalqft.exceptions import ValidationError

logger = logging.getLogger(__name__)

DEFAULTS_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "defaults.json")
DEFAULTS_VERSION = 1

SETTINGS_FALLBACKS = {
    "m": "ELECTRON_MASS",
    "eps_start": "EPS_START",
    "eps_stop": "EPS_STOP",
    "eps_steps": "EPS_STEPS",
    "threads": "THREADS",
}


class ConfigError(ValidationError):
    pass


def _read_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise ConfigError("cannot read %s: %s" % (path, e.strerror))
    except ValueError as e:
        raise ConfigError("%s is not valid JSON: %s" % (path, e))


def load_defaults(path=DEFAULTS_PATH):
    defaults = _read_json(path)
    if defaults.get("version") != DEFAULTS_VERSION:
        raise ConfigError(
            "defaults file version %r, expected %d" % (defaults.get("version"), DEFAULTS_VERSION)
        )
    return defaults


def _merge(base, override):
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


@dataclass
class RunConfig:
    command: str
    params: dict
    out: str

    def __getitem__(self, key):
        return self.params[key]

    def get(self, key, default=None):
        return self.params.get(key, default)

    def schedule(self):
        """The epsilon schedule: an explicit list or a geometric one."""
        if self.params.get("epsilons"):
            return tuple(float(e) for e in self.params["epsilons"])
        return tuple(
            float(e)
            for e in np.geomspace(
                self.params["eps_start"], self.params["eps_stop"], int(self.params["eps_steps"])
            )
        )

    def validate(self):
        for key, value in self.params.items():
            if "tolerance" in key and not (isinstance(value, (int, float)) and value > 0):
                raise ConfigError("%s must be a positive number, got %r" % (key, value))
        if "eps_start" in self.params:
            if int(self.params["eps_steps"]) < 1:
                raise ConfigError("the epsilon schedule needs at least one step")
            schedule = self.schedule()
            if any(e <= 0 for e in schedule):
                raise ConfigError("epsilons must be positive")
            if any(b >= a for a, b in zip(schedule, schedule[1:])):
                raise ConfigError("the epsilon schedule must decrease strictly")
        try:
            os.makedirs(self.out, exist_ok=True)
        except OSError as e:
            raise ConfigError("cannot create output directory %s: %s" % (self.out, e.strerror))
        if not os.access(self.out, os.W_OK):
            raise ConfigError("output directory %s is not writable" % self.out)

    def path(self, name):
        return os.path.join(self.out, name)


def load_config(command, path=None, overrides=None, out=None):
    defaults = load_defaults()
    if command not in defaults:
        raise ConfigError("no defaults for command %r" % command)
    params = dict(defaults[command])
    if path:
        data = _read_json(path)
        if not isinstance(data, dict):
            raise ConfigError("%s must hold a JSON object" % path)
        # a file may hold one block per command or a bare parameter block
        params = _merge(params, data.get(command, data))
    for key, value in (overrides or {}).items():
        if value is not None:
            params[key] = value
    for key, name in SETTINGS_FALLBACKS.items():
        if key in params and params[key] is None:
            params[key] = getattr(settings, name)
    out = out or params.pop("out", None) or "."
    params.pop("out", None)
    config = RunConfig(command, params, out)
    config.validate()
    logger.debug("%s configuration: %s", command, params)
    return config
