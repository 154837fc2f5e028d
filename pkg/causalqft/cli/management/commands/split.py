import numpy as np

from causalqft.cli.base import BatchCommand
from causalqft.cli.output import write_csv, write_json
from causalqft.distributions.causal import from_json, scaling_degree_estimate
from causalqft.exceptions import NumericError
from causalqft.splitting.engine import (
    SplitSpec,
    SubtractionPoint,
    ambiguity_dimension,
    split,
)
from causalqft.splitting.toys import TOYS, toy


class Command(BatchCommand):
    help = (
        "Split a causal distribution into retarded and advanced parts. Writes "
        "split.csv (variable, d, ret, adv) and split.json."
    )
    section = "split"
    parameters = ("toy", "omega", "c0", "c1", "c2")

    def add_parameters(self, parser):
        parser.add_argument(
            "--toy",
            choices=sorted(TOYS),
            help="built-in distribution (default: decaying, the transform of sgn(t)exp(-|t|))",
        )
        parser.add_argument(
            "--omega", type=int, help="singularity order (default: that of the distribution)"
        )
        for name in ("c0", "c1", "c2"):
            parser.add_argument(
                "--%s" % name, type=float, help="normalization constant %s" % name
            )

    def constants(self, config):
        flags = [config.get(name) for name in ("c0", "c1", "c2")]
        if any(c is not None for c in flags):
            last = max(k for k, c in enumerate(flags) if c is not None)
            return tuple(0.0 if c is None else c for c in flags[: last + 1])
        return tuple(
            complex(*c) if isinstance(c, list) else complex(c)
            for c in config["normalization"]
        )

    def run(self, config):
        descriptor = config.get("distribution")
        distribution = from_json(descriptor) if descriptor else toy(config["toy"])
        omega = distribution.omega if config["omega"] is None else int(config["omega"])
        constants = self.constants(config)
        if omega < 0 and constants:
            self.warn(
                "omega=%d splits uniquely; normalization constants ignored" % omega
            )
        point = config["subtraction_point"]
        spec = SplitSpec(
            omega, constants, None if point is None else SubtractionPoint.parse(point)
        )
        result = split(distribution, spec)

        grid = config["grid"]
        xs = np.linspace(grid["start"], grid["stop"], int(grid["count"]))
        rows = []
        for x in xs:
            d = complex(distribution(x)) if result.splitter.in_support(x) else 0j
            r, a = complex(result.retarded(x)), complex(result.advanced(x))
            rows.append((x, d.real, d.imag, r.real, r.imag, a.real, a.imag))
        write_csv(
            config.path("split.csv"),
            ["x", "d_re", "d_im", "ret_re", "ret_im", "adv_re", "adv_im"],
            rows,
        )

        residual = result.reconstruction_error(xs)
        try:
            estimate = scaling_degree_estimate(distribution, [1.0])
        except NumericError:
            estimate = None
        tolerance = config["tolerance"]
        write_json(
            config.path("split.json"),
            {
                "distribution": distribution.label,
                "omega": omega,
                "omega_estimate": estimate,
                "ambiguity_dimension": ambiguity_dimension(omega),
                "normalization": spec.to_json(),
                "reconstruction_residual": residual,
                "tolerance": tolerance,
                "passed": residual <= tolerance,
            },
        )
        if residual > tolerance:
            raise NumericError(
                "reconstruction residual %.3e exceeds %.3e" % (residual, tolerance)
            )
        return "split %s: reconstruction residual %.3e" % (distribution.label, residual)
