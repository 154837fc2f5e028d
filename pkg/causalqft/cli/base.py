import logging

from django.core.management.base import BaseCommand, CommandError

from causalqft.exceptions import NumericError, ValidationError
from causalqft.qed.green import ON_SHELL

from .config import ConfigError, load_config

logger = logging.getLogger(__name__)

VALIDATION_FAILURE = 2
NUMERIC_FAILURE = 3

ON_SHELL_FLAG = "on-shell"
CUSTOM_FLAG = "custom"


class BatchCommand(BaseCommand):
    """A batch computation: load the run configuration, compute, write files.

    ValidationError exits with status 2 and NumericError with status 3.
    """

    # block of defaults.json holding this command's parameters
    section = None
    # flag destinations copied into the parameters when given
    parameters = ()

    def add_arguments(self, parser):
        parser.add_argument(
            "--config",
            dest="config_path",
            metavar="PATH",
            help="JSON file merged over causalqft/cli/defaults.json",
        )
        parser.add_argument(
            "--out", metavar="DIR", help="output directory (default: results)"
        )
        self.add_parameters(parser)

    def add_parameters(self, parser):
        pass

    def handle(self, *args, **options):
        overrides = {name: options.get(name) for name in self.parameters}
        try:
            config = load_config(
                self.section, options.get("config_path"), overrides, options.get("out")
            )
            summary = self.run(config)
        except ValidationError as e:
            logger.debug("%s failed validation: %s", self.section, e)
            raise CommandError(str(e), returncode=VALIDATION_FAILURE)
        except NumericError as e:
            logger.debug("%s failed numerically: %s", self.section, e)
            raise CommandError(str(e), returncode=NUMERIC_FAILURE)
        if summary:
            self.stdout.write(summary)

    def run(self, config):
        raise NotImplementedError

    def warn(self, message):
        logger.warning(message)
        self.stderr.write("warning: %s" % message)


def add_mass_arguments(parser):
    parser.add_argument("--m", type=float, help="electron mass (default: ELECTRON_MASS, 1.0)")
    parser.add_argument(
        "--mu",
        type=float,
        help="photon regulator mass (default: PHOTON_MASS_RATIO * m, ratio 0.1)",
    )


def add_normalization_arguments(parser, constants=("c0", "c1")):
    parser.add_argument(
        "--normalization",
        choices=[ON_SHELL_FLAG, CUSTOM_FLAG],
        help="on-shell conditions, or constants at the configured subtraction point "
        "(default: on-shell)",
    )
    for name in constants:
        parser.add_argument(
            "--%s" % name,
            type=float,
            help="normalization constant %s added on top (default: 0)" % name,
        )


def normalization(config):
    """The normalization argument of the Green function builders."""
    name = config["normalization"]
    if name not in (ON_SHELL_FLAG, CUSTOM_FLAG):
        raise ConfigError(
            "normalization must be %r or %r, got %r" % (ON_SHELL_FLAG, CUSTOM_FLAG, name)
        )
    constants = [config.get(key) for key in ("c0", "c1")]
    if name == ON_SHELL_FLAG:
        if all(c is None for c in constants):
            return ON_SHELL
        point = {"mass_shell": 0.0}
    else:
        point = config.get("subtraction_point") or "zero"
    return {
        "normalization": [0.0 if c is None else float(c) for c in constants],
        "subtraction_point": point,
    }
