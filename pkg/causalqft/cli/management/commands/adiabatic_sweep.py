from causalqft.adiabatic.switching import (
    CHANNELS,
    SIGMA_INTO_PSI,
    ScalingFamily,
    SmearingData,
    sweep,
)
from causalqft.cli.base import (
    BatchCommand,
    add_mass_arguments,
    add_normalization_arguments,
    normalization,
)
from causalqft.cli.config import ConfigError
from causalqft.cli.output import write_csv, write_json
from causalqft.fock.grid import BOSE, FERMI, MomentumGrid
from causalqft.qed.green import build_self_energy, build_vacuum_polarization


def _complex(value):
    return complex(*value) if isinstance(value, list) else complex(value)


class Command(BatchCommand):
    help = (
        "Sweep the adiabatic switching scale eps of a second-order channel. "
        "Writes sweep.csv (eps, re, im, abs) and sweep.json with the verdict."
    )
    section = "adiabatic_sweep"
    parameters = (
        "channel",
        "m",
        "mu",
        "normalization",
        "c0",
        "c1",
        "eps_start",
        "eps_stop",
        "eps_steps",
    )

    def add_parameters(self, parser):
        parser.add_argument(
            "--channel", choices=CHANNELS, help="channel (default: Sigma_into_psi)"
        )
        add_mass_arguments(parser)
        add_normalization_arguments(parser)
        parser.add_argument(
            "--eps-start", type=float, help="largest epsilon (default: EPS_START, 2^-3)"
        )
        parser.add_argument(
            "--eps-stop", type=float, help="smallest epsilon (default: EPS_STOP, 2^-14)"
        )
        parser.add_argument(
            "--eps-steps", type=int, help="number of epsilons (default: EPS_STEPS, 12)"
        )

    def run(self, config):
        channel, m = config["channel"], float(config["m"])
        if channel not in CHANNELS:
            raise ConfigError("unknown channel %r" % (channel,))
        if channel == SIGMA_INTO_PSI:
            green = build_self_energy(m, config["mu"], normalization(config))
            statistics = FERMI
        else:
            green = build_vacuum_polarization(m, normalization(config))
            statistics = BOSE
        grid_params = config["grid"]
        grid = MomentumGrid.trapezoid(
            int(grid_params["modes"]), grid_params["p_min"], grid_params["p_max"], statistics
        )
        data = SmearingData(
            grid,
            [_complex(v) for v in config["xi"]],
            [_complex(v) for v in config["phi"]],
        )
        family = ScalingFamily(
            config["alpha0"], tuple(config["widths"]), tuple(config["weights"]), config.schedule()
        )
        result = sweep(channel, green, data, family, int(config["threads"]))

        write_csv(config.path("sweep.csv"), ["eps", "re", "im", "abs"], result.rows())
        report = result.to_json()
        report.update(
            {
                "channel": channel,
                "m": m,
                "normalization": green.normalization.to_json(),
            }
        )
        write_json(config.path("sweep.json"), report)
        return "%s: %s (slope %.3f)" % (channel, result.verdict, result.fitted_exponent)
