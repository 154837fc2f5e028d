import numpy as np
from django.conf import settings

from causalqft.cli.base import BatchCommand
from causalqft.cli.config import ConfigError
from causalqft.cli.output import write_json
from causalqft.exceptions import NumericError
from causalqft.fock.grid import FockGridState, MomentumGrid, pairing
from causalqft.fock.kernels import (
    DiscreteKernel,
    apply_kernel,
    commutator_check,
    xi_matrix_element,
)


def pairing_deviation(grid, cutoff, trials, rng):
    """Largest relative gap between the eta-pairing matrix element and direct
    application, over random kernels of orders l, m <= 1."""
    worst = 0.0
    for trial in range(trials):
        l, m = trial % 2, (trial // 2) % 2
        kernel = DiscreteKernel.random(grid, l, m, rng)
        phi = FockGridState.random(grid, cutoff, rng, max_particles=cutoff - 1)
        psi = FockGridState.random(grid, cutoff, rng)
        via_eta = xi_matrix_element(kernel, phi, psi)
        direct = pairing(apply_kernel(kernel, phi), psi)
        worst = max(worst, abs(via_eta - direct) / max(1.0, abs(direct)))
    return worst


class Command(BatchCommand):
    help = (
        "Check the (anti)commutation relations and kernel pairings on a truncated "
        "Fock grid. Writes fock_check.json."
    )
    section = "fock_check"
    parameters = ("grid_modes", "cutoff")

    def add_parameters(self, parser):
        parser.add_argument(
            "--grid-modes",
            type=int,
            help="momentum grid points (default: 6, at most MAX_GRID_MODES)",
        )
        parser.add_argument(
            "--cutoff", type=int, help="particle number cutoff (default: 3, at most MAX_CUTOFF)"
        )

    def run(self, config):
        modes, cutoff = int(config["grid_modes"]), int(config["cutoff"])
        if modes > settings.MAX_GRID_MODES:
            raise ConfigError(
                "%d grid modes exceed MAX_GRID_MODES=%d" % (modes, settings.MAX_GRID_MODES)
            )
        if cutoff > settings.MAX_CUTOFF:
            raise ConfigError("cutoff %d exceeds MAX_CUTOFF=%d" % (cutoff, settings.MAX_CUTOFF))
        if cutoff < 2:
            raise ConfigError("the checks need a cutoff of at least 2")

        rng = np.random.default_rng(int(config["seed"]))
        report = {"grid_modes": modes, "cutoff": cutoff, "statistics": {}}
        passed = True
        for statistics in config["statistics"]:
            grid = MomentumGrid.trapezoid(modes, config["p_min"], config["p_max"], statistics)
            deviation = commutator_check(grid, cutoff)
            gap = pairing_deviation(grid, cutoff, int(config["pairing_trials"]), rng)
            ok = deviation <= config["tolerance"] and gap <= config["pairing_tolerance"]
            report["statistics"][statistics] = {
                "commutator_deviation": deviation,
                "pairing_deviation": gap,
                "passed": ok,
            }
            passed = passed and ok
        report["passed"] = passed
        report["tolerance"] = config["tolerance"]
        report["pairing_tolerance"] = config["pairing_tolerance"]
        write_json(config.path("fock_check.json"), report)
        if not passed:
            raise NumericError("Fock grid checks exceed their tolerances")
        return "fock grid with %d modes, cutoff %d: checks pass" % (modes, cutoff)
