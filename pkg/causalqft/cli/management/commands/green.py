import numpy as np

from causalqft.cli.base import (
    BatchCommand,
    add_mass_arguments,
    add_normalization_arguments,
    normalization,
)
from causalqft.cli.config import ConfigError
from causalqft.cli.output import write_csv, write_json
from causalqft.qed.green import (
    build_self_energy,
    build_vacuum_polarization,
    check_on_shell,
)

VACUUM_POLARIZATION = "vacuum-pol"
SELF_ENERGY = "self-energy"


class Command(BatchCommand):
    help = (
        "Build the second-order vacuum polarization or electron self-energy. "
        "Writes green.csv over the p^2 grid and green.json with the on-shell report."
    )
    section = "green"
    parameters = ("which", "m", "mu", "normalization", "c0", "c1")

    def add_parameters(self, parser):
        parser.add_argument(
            "--which",
            choices=[VACUUM_POLARIZATION, SELF_ENERGY],
            help="Green function to build (default: vacuum-pol)",
        )
        add_mass_arguments(parser)
        add_normalization_arguments(parser)

    def run(self, config):
        which, m = config["which"], float(config["m"])
        if which == VACUUM_POLARIZATION:
            green = build_vacuum_polarization(m, normalization(config))
            header = ["p2", "re", "im"]

            def row(s):
                value = complex(green.scalar_part(s))
                return (s, value.real, value.imag)

            spec, mu = green.normalization, None
        elif which == SELF_ENERGY:
            green = build_self_energy(m, config["mu"], normalization(config))
            header = ["p2", "a_re", "a_im", "b_re", "b_im"]

            def row(s):
                a, b = complex(green.a(s)), complex(green.b(s))
                return (s, a.real, a.imag, b.real, b.imag)

            spec, mu = green.normalization, green.photon_mass
        else:
            raise ConfigError(
                "which must be %r or %r, got %r" % (VACUUM_POLARIZATION, SELF_ENERGY, which)
            )

        grid = config["grid"]
        s_values = np.linspace(grid["start"], grid["stop"], int(grid["count"]))
        write_csv(config.path("green.csv"), header, [row(s) for s in s_values])

        conditions = check_on_shell(green, config["tolerance"])
        passed = all(c.passed for c in conditions)
        write_json(
            config.path("green.json"),
            {
                "which": which,
                "m": m,
                "mu": mu,
                "normalization": spec.to_json(),
                "on_shell": [c.to_json() for c in conditions],
                "all_passed": passed,
            },
        )
        return "%s: on-shell conditions %s" % (which, "pass" if passed else "fail")
