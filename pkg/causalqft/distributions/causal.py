"""Momentum-space pairing and commutation functions, their retarded and
advanced combinations, and power counting.

Conventions: metric (+,-,-,-), hbar = c = 1, Fourier transform
f^(p) = int d^4x f(x) exp(i p.x), so that

    <D, f> = (2 pi)^-4 int d^4p D^(p) f^(-p).

The Pauli-Jordan function is D^_m(p) = 2 pi i sgn(p0) delta(p^2 - m^2); it is
represented by its mass-shell sampling rule rather than a mollified delta.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from causalqft.exceptions import NumericError, ValidationError

from .quadrature import quad

logger = logging.getLogger(__name__)

CAUSAL = "causal"
RETARDED = "retarded"
ADVANCED = "advanced"
NONE = "none"
SUPPORT_TAGS = (CAUSAL, RETARDED, ADVANCED, NONE)

# what the evaluator of a distribution takes: a 4-momentum, the scalar p^2,
# or a single real variable (frequency or time of the 1D models)
VARIABLES = ("p", "s", "t")

SPINOR_QED = "spinorqed"
YANG_MILLS = "yangmills"

METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


class DistributionError(ValidationError):
    pass


class PoleError(NumericError):
    pass


def minkowski_square(p):
    p = np.asarray(p, dtype=float)
    return float(p[0] ** 2 - p[1:] @ p[1:])


@dataclass(frozen=True)
class ShellRule:
    """Signed mass-shell measure: for spatial momentum k the weights
    +/- pi i / E(k) sit at p0 = +/- E(k), E = sqrt(k^2 + m^2)."""

    mass: float

    def energy(self, spatial):
        spatial = np.asarray(spatial, dtype=float)
        return math.sqrt(float(spatial @ spatial) + self.mass ** 2)

    def points(self, spatial):
        energy = self.energy(spatial)
        if energy == 0:
            raise PoleError("the massless shell degenerates at zero momentum")
        weight = math.pi * 1j / energy
        return [(energy, weight), (-energy, -weight)]

    def value(self, p0, spatial):
        """Weight attached to the shell point (p0, k); zero off the shell."""
        for point, weight in self.points(spatial):
            if math.isclose(point, p0, rel_tol=1e-12, abs_tol=1e-15):
                return weight
        return 0j


@dataclass
class CausalDistribution:
    function: object = None
    variable: str = "p"
    mass_params: tuple = ()
    omega: int = 0
    support_tag: str = CAUSAL
    shell: ShellRule = None
    label: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mass_params = tuple(float(m) for m in self.mass_params)
        if any(m < 0 for m in self.mass_params):
            raise DistributionError("masses must be non-negative")
        if not isinstance(self.omega, (int, np.integer)):
            raise DistributionError("the singularity order must be an integer")
        if self.support_tag not in SUPPORT_TAGS:
            raise DistributionError("unknown support tag %r" % (self.support_tag,))
        if self.variable not in VARIABLES:
            raise DistributionError("unknown variable %r" % (self.variable,))
        if self.function is None and self.shell is None:
            raise DistributionError("a distribution needs an evaluator or a shell rule")

    def __call__(self, argument):
        if self.function is None:
            raise DistributionError(
                "%s is a mass-shell measure without pointwise values"
                % (self.label or "distribution")
            )
        return self.function(argument)

    def with_function(self, function, support_tag, label=""):
        return CausalDistribution(
            function,
            self.variable,
            self.mass_params,
            self.omega,
            support_tag,
            None,
            label or self.label,
            dict(self.extra),
        )


@dataclass(frozen=True)
class ExternalLineSpec:
    fermion_lines: int = 0
    photon_lines: int = 0
    derivatives: int = 0
    boson_lines: int = 0
    ghost_lines: int = 0
    antighost_lines: int = 0

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not isinstance(value, (int, np.integer)) or value < 0:
                raise DistributionError("%s must be a non-negative integer" % name)


def singularity_bound(spec, theory=SPINOR_QED):
    """Power-counting bound on the singularity order."""
    theory = theory.lower()
    if theory == SPINOR_QED:
        bound = 4 - 1.5 * spec.fermion_lines - spec.photon_lines - spec.derivatives
        return int(math.floor(bound))
    if theory == YANG_MILLS:
        return (
            4
            - spec.boson_lines
            - spec.ghost_lines
            - spec.antighost_lines
            - spec.derivatives
        )
    raise DistributionError(
        "unknown theory %r, expected %s or %s" % (theory, SPINOR_QED, YANG_MILLS)
    )


def _ray_value(distribution, direction, scale):
    direction = np.asarray(direction, dtype=float)
    if distribution.variable == "p":
        return distribution(scale * direction)
    if distribution.variable == "s":
        return distribution(scale ** 2 * minkowski_square(direction))
    return distribution(scale * float(np.ravel(direction)[0]))


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    local_slopes: tuple
    confident: bool


def scaling_fit(distribution, direction, samples=16, scale_min=1e2, scale_max=1e6):
    """Least-squares slope of log|d(lambda p)| against log(lambda)."""
    if samples < 8:
        raise DistributionError("scaling fits need at least 8 samples")
    scales = np.geomspace(scale_min, scale_max, samples)
    try:
        values = np.array(
            [abs(complex(_ray_value(distribution, direction, s))) for s in scales]
        )
    except (ArithmeticError, ValueError) as e:
        raise NumericError("evaluation failed along the ray: %s" % e)
    if not np.all(np.isfinite(values)) or np.any(values == 0):
        raise NumericError("distribution vanishes or blows up along the ray")
    logs, log_values = np.log(scales), np.log(values)
    exponent = float(np.polyfit(logs, log_values, 1)[0])
    slopes = np.diff(log_values) / np.diff(logs)
    confident = bool(np.all(np.abs(slopes - exponent) < 0.5))
    if not confident:
        logger.warning(
            "scaling fit of %s is not monotone (slopes %.2f..%.2f); low confidence",
            distribution.label or "distribution",
            slopes.min(),
            slopes.max(),
        )
    return ScalingFit(exponent, tuple(float(s) for s in slopes), confident)


def scaling_degree_estimate(distribution, direction, samples=16):
    return scaling_fit(distribution, direction, samples).exponent


def pauli_jordan(mass):
    """D^_m as a CausalDistribution carrying only the shell rule."""
    if mass < 0:
        raise DistributionError("masses must be non-negative")
    return CausalDistribution(
        None,
        "p",
        (mass,),
        omega=-2,
        support_tag=CAUSAL,
        shell=ShellRule(float(mass)),
        label="pauli_jordan(m=%g)" % mass,
    )


def shell_pairing(distribution, test_hat, k_max=12.0):
    """<D, f> for a shell distribution and a rotation-invariant test function
    given by its Fourier transform test_hat(p0, |k|)."""
    shell = distribution.shell
    if shell is None:
        raise DistributionError("shell_pairing needs a mass-shell distribution")

    def radial(k):
        spatial = np.array([0.0, 0.0, k])
        total = 0j
        for p0, weight in shell.points(spatial):
            total += weight * test_hat(-p0, k)
        return 4.0 * math.pi * k * k * total

    lower = 0.0 if shell.mass > 0 else 1e-300
    real = quad(lambda k: radial(k).real, lower, k_max)
    imag = quad(lambda k: radial(k).imag, lower, k_max)
    return complex(real, imag) / (2.0 * math.pi) ** 4


def gamma_matrices():
    """Dirac representation gamma^0..gamma^3."""
    identity = np.eye(2)
    zero = np.zeros((2, 2))
    pauli = [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    gamma0 = np.block([[identity, zero], [zero, -identity]]).astype(complex)
    spatial = [np.block([[zero, s], [-s, zero]]) for s in pauli]
    return np.array([gamma0] + spatial)


GAMMA = gamma_matrices()


def slash(p):
    """p-slash = gamma^mu p_mu."""
    lowered = METRIC @ np.asarray(p, dtype=float)
    return np.einsum("m,mab->ab", lowered, GAMMA)


PROPAGATOR_KINDS = ("Dret", "Dav", "Sret", "Sav", "Feynman", "SFeynman")


def _denominator(kind, mass, p, eps):
    base = mass ** 2 - minkowski_square(p)
    if kind in ("Dret", "Sret"):
        return base - 1j * eps * p[0]
    if kind in ("Dav", "Sav"):
        return base + 1j * eps * p[0]
    return base - 1j * eps


def ret_adv_commutation(kind, mass, p, eps=0.0, pole_tolerance=None):
    """Momentum-space retarded, advanced or Feynman propagator.

    Scalar kinds return a complex number, the Dirac kinds (Sret, Sav,
    SFeynman) the 4x4 matrix (m + p-slash) times the scalar denominator.
    """
    if kind not in PROPAGATOR_KINDS:
        raise DistributionError(
            "unknown propagator %r, expected one of %s" % (kind, ", ".join(PROPAGATOR_KINDS))
        )
    if mass < 0 or eps < 0:
        raise DistributionError("mass and epsilon must be non-negative")
    pole_tolerance = settings.POLE_TOLERANCE if pole_tolerance is None else pole_tolerance
    p = np.asarray(p, dtype=float)
    denominator = _denominator(kind, mass, p, eps)
    if abs(denominator) < pole_tolerance * max(1.0, mass ** 2):
        raise PoleError(
            "%s evaluated %.2e from its pole at p=%r; supply eps > 0"
            % (kind, abs(denominator), p.tolist())
        )
    scalar = 1.0 / denominator
    if kind.startswith("S"):
        return (mass * np.eye(4) + slash(p)) * scalar
    return scalar


def propagator(kind, mass, eps=0.0):
    """ret_adv_commutation wrapped as a CausalDistribution."""
    tag = {"ret": RETARDED, "av": ADVANCED}.get(
        kind[1:] if kind[0] in "DS" else "", NONE
    )
    return CausalDistribution(
        lambda p: ret_adv_commutation(kind, mass, p, eps),
        "p",
        (mass,),
        omega=-2 if kind.startswith("D") or kind == "Feynman" else -1,
        support_tag=tag,
        label="%s(m=%g, eps=%g)" % (kind, mass, eps),
    )


def from_json(data):
    """Distribution descriptor: {"kind": ..., "mass": ..., "eps": ...}."""
    try:
        kind = data["kind"]
        mass = float(data.get("mass", settings.ELECTRON_MASS))
        eps = float(data.get("eps", 0.0))
    except (KeyError, TypeError, ValueError) as e:
        raise DistributionError("malformed distribution descriptor: %s" % e)
    if kind == "pauli_jordan":
        return pauli_jordan(mass)
    if kind in PROPAGATOR_KINDS:
        return propagator(kind, mass, eps)
    raise DistributionError("unknown distribution kind %r" % (kind,))
