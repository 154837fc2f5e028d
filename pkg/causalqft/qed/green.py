"""Second-order QED Green functions built by causal splitting.

The vacuum polarization tensor is written as

    Pi^{mu nu}(p) = (p^mu p^nu - p^2 g^{mu nu}) Pi(p^2)

with the normalization polynomial C0 + C1 p^2 added to the scalar Pi, so a
change of constants moves the tensor by a polynomial in p. The self-energy
is Sigma(p) = a(p^2) + pslash b(p^2). Coupling prefactors are set to one.

Both are split in s = p^2: Pi takes two subtractions in s, one for each
constant; the self-energy has order 1 in p, i.e. one
subtraction in s for each of a and b.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from causalqft.distributions.causal import (
    CAUSAL,
    GAMMA,
    METRIC,
    CausalDistribution,
    minkowski_square,
    slash,
)
from causalqft.distributions.quadrature import quad
from causalqft.exceptions import ValidationError
from causalqft.splitting.engine import (
    MASS_SHELL,
    VALUE,
    SplitSpec,
    SubtractionPoint,
    split,
)

logger = logging.getLogger(__name__)

PI = "Pi"
SIGMA = "Sigma"
ON_SHELL = "on_shell"
OFF_SHELL = "off_shell"

# subtraction point of the massless off-shell constructions, -M^2
MASSLESS_SUBTRACTION = -1.0


class NormalizationError(ValidationError):
    pass


def kallen(x, y, z):
    return x * x + y * y + z * z - 2 * (x * y + y * z + z * x)


def two_body_phase_space(s, m1, m2):
    """int dPhi_2 = lambda^(1/2)(s, m1^2, m2^2) / (8 pi s); zero below threshold."""
    if s <= (m1 + m2) ** 2:
        return 0.0
    return math.sqrt(kallen(s, m1 * m1, m2 * m2)) / (8.0 * math.pi * s)


def _contract_gammas(matrix):
    """gamma^mu M gamma_mu."""
    return sum(METRIC[mu, mu] * GAMMA[mu] @ matrix @ GAMMA[mu] for mu in range(4))


def _angular_average(function):
    """(1 / 4 pi) int dOmega of function(unit vector)."""

    def polar(cos_theta):
        sin_theta = math.sqrt(max(0.0, 1.0 - cos_theta ** 2))
        return function(np.array([sin_theta, 0.0, cos_theta]))

    return 0.5 * quad(polar, -1.0, 1.0)


def _pi_density_numeric(m, s):
    root = math.sqrt(s)
    k = math.sqrt(s / 4.0 - m * m)

    def trace(direction):
        k1 = np.concatenate([[root / 2], k * direction])
        k2 = np.concatenate([[root / 2], -k * direction])
        product = _contract_gammas(slash(k1) + m * np.eye(4)) @ (slash(k2) - m * np.eye(4))
        return np.trace(product).real

    measure = k / (4.0 * math.pi * root)
    # the trace gives the density of s Pi
    return -measure * _angular_average(trace) / (6.0 * s)


def _sigma_density_numeric(m, mu, s):
    root = math.sqrt(s)
    k = math.sqrt(kallen(s, m * m, mu * mu)) / (2.0 * root)
    energy = (s + m * m - mu * mu) / (2.0 * root)

    def matrix(direction):
        momentum = np.concatenate([[energy], k * direction])
        return 0.5 * _contract_gammas(slash(momentum) + m * np.eye(4))

    measure = k / (4.0 * math.pi * root)
    a = measure * _angular_average(lambda n: np.trace(matrix(n)).real / 4.0)
    b = measure * _angular_average(lambda n: np.trace(matrix(n) @ GAMMA[0]).real / (4.0 * root))
    return a, b


def causal_imaginary_part(which, m, s, photon_mass=0.0):
    """Discontinuity weight of Pi (which="Pi") or of (a, b) (which="Sigma") at s,
    by angular quadrature of the one-loop trace over two-body phase space."""
    if m < 0 or photon_mass < 0:
        raise ValidationError("masses must be non-negative")
    if which == PI:
        if s <= 4 * m * m or s <= 0:
            return 0.0
        return _pi_density_numeric(m, s)
    if which == SIGMA:
        if s <= (m + photon_mass) ** 2 or s <= 0:
            return 0.0, 0.0
        return _sigma_density_numeric(m, photon_mass, s)
    raise ValidationError("unknown Green function %r, expected Pi or Sigma" % (which,))


def pi_density(m, s):
    """Closed form of causal_imaginary_part(Pi): (1 + 2m^2/s) beta / (12 pi)."""
    if s <= 4 * m * m or s <= 0:
        return 0.0
    beta = math.sqrt(1.0 - 4.0 * m * m / s)
    return (1.0 + 2.0 * m * m / s) * beta / (12.0 * math.pi)


def sigma_densities(m, mu, s):
    """Closed form of causal_imaginary_part(Sigma)."""
    phase_space = two_body_phase_space(s, m, mu)
    if phase_space == 0.0:
        return 0.0, 0.0
    return 2.0 * m * phase_space, -0.5 * (s + m * m - mu * mu) / s * phase_space


def _support(threshold):
    """[threshold, inf) cut into decades so quadrature sees every scale."""
    edges = [threshold]
    edge = threshold * 10 if threshold > 0 else 1e-3
    while edge < 1e4:
        edges.append(edge)
        edge *= 10
    edges.append(math.inf)
    return tuple(zip(edges, edges[1:]))


def density_distribution(density, threshold, label):
    def evaluate(s):
        return 2j * density(s)

    return CausalDistribution(
        evaluate, "s", omega=0, support_tag=CAUSAL, label=label,
        extra={"support": _support(threshold)},
    )


def parse_normalization(normalization, omega):
    """on_shell / off_shell strings, a SplitSpec, or its JSON form."""
    if isinstance(normalization, SplitSpec):
        return normalization
    if normalization == ON_SHELL:
        return SplitSpec(omega, (), SubtractionPoint(MASS_SHELL, 0.0))
    if normalization == OFF_SHELL:
        return SplitSpec(omega, (), SubtractionPoint.zero())
    if isinstance(normalization, dict):
        data = dict(normalization)
        data.setdefault("omega", omega)
        return SplitSpec.from_json(data)
    raise NormalizationError("cannot read normalization %r" % (normalization,))


@dataclass
class VacuumPolarization:
    electron_mass: float
    normalization: SplitSpec
    result: object

    def scalar_part(self, s):
        return self.result.retarded(s)

    __call__ = scalar_part

    def slope(self, s):
        """dPi/dp^2 at s, off the cut."""
        return self.result.splitter.derivative(s)

    def tensor(self, p):
        p = np.asarray(p, dtype=float)
        s = minkowski_square(p)
        return (np.outer(p, p) - s * np.linalg.inv(METRIC)) * self.scalar_part(s)

    def discontinuity(self, s, y):
        """(Pi(s + iy) - Pi(s - iy)) / 2i from the dispersion integral."""
        splitter = self.result.splitter
        return (splitter.off_axis(s, y) - splitter.off_axis(s, -y)) / 2j


def build_vacuum_polarization(m, normalization=ON_SHELL):
    spec = parse_normalization(normalization, 1)
    point = spec.subtraction_point or SubtractionPoint.zero()
    if m == 0 and point.location("s") >= 0:
        if point.kind == MASS_SHELL:
            raise NormalizationError(
                "on-shell normalization impossible: with m = 0 the subtraction point "
                "cannot be chosen at p^2 = 0"
            )
        raise NormalizationError(
            "with m = 0 the subtraction point must lie below p^2 = 0, got %g"
            % point.location("s")
        )
    if m < 0:
        raise ValidationError("the electron mass must be non-negative")
    d = density_distribution(lambda s: pi_density(m, s), 4 * m * m, "vacuum polarization")
    d.mass_params = (m,)
    logger.info("building vacuum polarization for m=%g with %s", m, spec.to_json())
    return VacuumPolarization(m, spec, split(d, spec))


@dataclass
class SelfEnergy:
    electron_mass: float
    photon_mass: float
    normalization: SplitSpec
    split_a: object
    split_b: object
    shift_a: complex = 0j
    shift_b: complex = 0j

    def a(self, s):
        return self.split_a.retarded(s) + self.shift_a

    def b(self, s):
        return self.split_b.retarded(s) + self.shift_b

    def matrix(self, p):
        s = minkowski_square(p)
        return self.a(s) * np.eye(4) + self.b(s) * slash(p)

    def derivatives(self, s):
        """(a'(s), b'(s)) below the threshold."""
        return self.split_a.splitter.derivative(s), self.split_b.splitter.derivative(s)

    def shell_values(self):
        """Sigma(m) and d Sigma / d pslash at pslash = m."""
        m = self.electron_mass
        s = m * m
        a, b = self.a(s), self.b(s)
        a_prime, b_prime = self.derivatives(s)
        return a + m * b, 2 * m * a_prime + b + 2 * m * m * b_prime


def build_self_energy(m, photon_mass=None, normalization=ON_SHELL):
    if photon_mass is None:
        photon_mass = settings.PHOTON_MASS_RATIO * m
    if m < 0 or photon_mass < 0:
        raise ValidationError("masses must be non-negative")
    spec = parse_normalization(normalization, 1)
    point = spec.subtraction_point or SubtractionPoint.zero()
    on_shell = point.kind == MASS_SHELL
    if on_shell and m == 0:
        raise NormalizationError(
            "on-shell normalization impossible: the electron shell degenerates at m = 0"
        )
    if on_shell and photon_mass == 0:
        raise NormalizationError(
            "on-shell derivative condition needs a photon mass regulator > 0"
        )
    threshold = (m + photon_mass) ** 2
    if point.kind == VALUE:
        anchor = SubtractionPoint.at(point.value)
    elif threshold == 0:
        anchor = SubtractionPoint.at(MASSLESS_SUBTRACTION)
    else:
        anchor = SubtractionPoint.zero()
    if anchor.location("s") >= threshold and threshold > 0:
        raise NormalizationError("subtraction point must lie below the threshold")
    raw = SplitSpec(0, (0j,), anchor)
    split_a = split(
        density_distribution(lambda s: sigma_densities(m, photon_mass, s)[0], threshold, "Sigma a"),
        raw,
    )
    split_b = split(
        density_distribution(lambda s: sigma_densities(m, photon_mass, s)[1], threshold, "Sigma b"),
        raw,
    )
    energy = SelfEnergy(m, photon_mass, spec, split_a, split_b)
    if on_shell:
        value, slope = energy.shell_values()
        energy.shift_a -= value - m * slope
        energy.shift_b -= slope
    c0, c1 = spec.normalization or (0j, 0j)
    reference = m if on_shell else 0.0
    energy.shift_a += c0 - reference * c1
    energy.shift_b += c1
    logger.info(
        "built self-energy for m=%g, mu=%g, normalization %s",
        m,
        photon_mass,
        spec.to_json(),
    )
    return energy


@dataclass
class Condition:
    name: str
    residual: float
    passed: bool

    def to_json(self):
        return {"name": self.name, "residual": self.residual, "passed": self.passed}


def _slope_residual(pi):
    # Pi(p^2)/p^2 -> dPi/dp^2 once Pi(0) = 0; undefined when the cut reaches 0
    if pi.result.splitter.in_support(0.0):
        return math.inf
    return abs(pi.slope(0.0))


def check_on_shell(obj, tol=1e-8):
    """Evaluate each on-mass-shell condition, returning a pass/fail report."""
    conditions = []
    if isinstance(obj, VacuumPolarization):
        values = [
            ("Pi(0) = 0", abs(obj.scalar_part(0.0))),
            ("Pi(p^2)/p^2 -> 0 at p^2 = 0", _slope_residual(obj)),
        ]
    elif isinstance(obj, SelfEnergy):
        value, slope = obj.shell_values()
        values = [
            ("(pslash + m) Sigma = 0 at p^2 = m^2", abs(value)),
            ("Sigma / (m - pslash) = 0 at p^2 = m^2", abs(slope)),
        ]
    else:
        raise ValidationError("check_on_shell takes a VacuumPolarization or SelfEnergy")
    for name, residual in values:
        conditions.append(Condition(name, float(residual), bool(residual <= tol)))
    for condition in conditions:
        if not condition.passed:
            logger.info("on-shell condition %r fails: %.3e", condition.name, condition.residual)
    return conditions
