"""Built-in causal distributions with known splits, for checks and the CLI."""

import math

from causalqft.distributions.causal import CausalDistribution

from .engine import SplitError


def decaying_toy():
    """Fourier transform of sgn(t) exp(-|t|): omega < 0."""
    return CausalDistribution(
        lambda w: 2j * w / (1.0 + w * w), "t", omega=-1, label="sgn(t)exp(-|t|)"
    )


def quadratic_toy():
    """2 pi i sgn(x) x^2 on |x| > 1: singularity order 2."""

    def evaluate(x):
        return 2j * math.pi * math.copysign(x * x, x) if abs(x) > 1 else 0j

    return CausalDistribution(
        evaluate,
        "t",
        omega=2,
        label="quadratic toy",
        extra={"support": ((-math.inf, -1.0), (1.0, math.inf))},
    )


TOYS = {"decaying": decaying_toy, "quadratic": quadratic_toy}


def toy(name):
    try:
        return TOYS[name]()
    except KeyError:
        raise SplitError(
            "unknown toy distribution %r, expected one of %s" % (name, ", ".join(sorted(TOYS)))
        )
