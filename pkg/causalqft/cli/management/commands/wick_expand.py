from django.conf import settings

from causalqft.cli.base import BatchCommand
from causalqft.cli.config import ConfigError
from causalqft.cli.output import write_json
from causalqft.induction.epstein_glaser import OrderData
from causalqft.wick.algebra import INTERACTIONS


class Command(BatchCommand):
    help = (
        "Build S_n by the inductive step, keeping retarded parts as symbolic "
        "ret(...) tags. Writes wick_expand.json with the canonical term list."
    )
    section = "wick_expand"
    parameters = ("theory", "order")

    def add_parameters(self, parser):
        parser.add_argument(
            "--theory", choices=sorted(INTERACTIONS), help="interaction (default: qed)"
        )
        parser.add_argument(
            "--order",
            type=int,
            help="perturbative order n (default: 2, at most MAX_SYMBOLIC_ORDER)",
        )

    def run(self, config):
        order = int(config["order"])
        if order < 1:
            raise ConfigError("order must be at least 1, got %d" % order)
        if order > settings.MAX_SYMBOLIC_ORDER:
            raise ConfigError(
                "order %d exceeds MAX_SYMBOLIC_ORDER=%d" % (order, settings.MAX_SYMBOLIC_ORDER)
            )
        data = OrderData.first_order(config["theory"], bool(config["sources"]))
        while data.order < order:
            data = data.extend()
        polynomial = data.S[order]
        write_json(
            config.path("wick_expand.json"),
            {
                "theory": config["theory"],
                "order": order,
                "term_count": len(polynomial),
                "terms": polynomial.to_json()["terms"],
            },
        )
        return "S_%d of %s: %d terms" % (order, config["theory"], len(polynomial))
