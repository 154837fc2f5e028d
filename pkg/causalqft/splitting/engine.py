"""Splitting of causal distributions into retarded and advanced parts.

A causal distribution d is given in a scalar dispersion variable x (p^2 along
a timelike direction, or the frequency of a 1D model). With n = omega + 1
subtractions at x0 its retarded part is

    r(x) = (x - x0)^n / (2 pi i) int d(x') / ((x' - x0)^n (x' - x - i0)) dx'
           + sum_k C_k (x - x0)^k

and the advanced part is a = r - d. Writing 1/(x' - x - i0) as a principal
value plus i pi delta gives r = P + d/2 and a = P - d/2, P being the
principal-value term plus the polynomial.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from causalqft.distributions.causal import ADVANCED, CAUSAL, RETARDED
from causalqft.distributions.quadrature import principal_value, quad_complex
from causalqft.exceptions import ValidationError

logger = logging.getLogger(__name__)

ZERO = "zero"
MASS_SHELL = "mass_shell"
VALUE = "value"

EVERYWHERE = ((-math.inf, math.inf),)


class SplitError(ValidationError):
    pass


def ambiguity_dimension(omega):
    """Number of free normalization constants at singularity order omega."""
    return max(int(omega) + 1, 0)


@dataclass(frozen=True)
class SubtractionPoint:
    kind: str = ZERO
    value: float = 0.0

    @classmethod
    def zero(cls):
        return cls(ZERO, 0.0)

    @classmethod
    def mass_shell(cls, mass):
        if mass < 0:
            raise SplitError("mass_shell needs a non-negative mass")
        return cls(MASS_SHELL, float(mass))

    @classmethod
    def at(cls, value):
        return cls(VALUE, float(value))

    @classmethod
    def parse(cls, data):
        """"zero", {"mass_shell": m}, "mass_shell(m)" or a number."""
        if data is None or data == ZERO:
            return cls.zero()
        if isinstance(data, (int, float)):
            return cls.at(data)
        if isinstance(data, dict) and MASS_SHELL in data:
            return cls.mass_shell(float(data[MASS_SHELL]))
        if isinstance(data, str) and data.startswith(MASS_SHELL + "(") and data.endswith(")"):
            try:
                return cls.mass_shell(float(data[len(MASS_SHELL) + 1 : -1]))
            except ValueError:
                pass
        raise SplitError("cannot read subtraction point %r" % (data,))

    def location(self, variable):
        """The point in the dispersion variable; the shell sits at m^2 in s."""
        if self.kind == MASS_SHELL:
            return self.value ** 2 if variable == "s" else self.value
        return self.value

    def to_json(self):
        if self.kind == MASS_SHELL:
            return {MASS_SHELL: self.value}
        return ZERO if self.kind == ZERO else self.value


@dataclass(frozen=True)
class SplitSpec:
    omega: int
    normalization: tuple = ()
    subtraction_point: SubtractionPoint = None

    def __post_init__(self):
        object.__setattr__(self, "omega", int(self.omega))
        constants = tuple(complex(c) for c in self.normalization)
        expected = ambiguity_dimension(self.omega)
        if self.omega < 0 and constants:
            logger.warning(
                "omega=%d splits uniquely; %d normalization constants ignored",
                self.omega,
                len(constants),
            )
            constants = ()
        if constants and len(constants) != expected:
            raise SplitError(
                "omega=%d needs %d normalization constants, got %d"
                % (self.omega, expected, len(constants))
            )
        object.__setattr__(self, "normalization", constants)

    @property
    def constants(self):
        if self.normalization:
            return self.normalization
        return (0j,) * ambiguity_dimension(self.omega)

    def check_complete(self):
        if self.omega >= 0 and not self.normalization and self.subtraction_point is None:
            raise SplitError(
                "omega=%d needs %d normalization constants or a subtraction point"
                % (self.omega, ambiguity_dimension(self.omega))
            )

    @classmethod
    def from_json(cls, data):
        try:
            constants = [
                complex(*c) if isinstance(c, (list, tuple)) else complex(c)
                for c in data.get("normalization", [])
            ]
            point = data.get("subtraction_point")
            return cls(
                data["omega"],
                tuple(constants),
                None if point is None else SubtractionPoint.parse(point),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SplitError("malformed split spec: %s" % e)

    def to_json(self):
        return {
            "omega": self.omega,
            "normalization": [[c.real, c.imag] for c in self.normalization],
            "subtraction_point": None
            if self.subtraction_point is None
            else self.subtraction_point.to_json(),
        }


def support_of(distribution):
    return tuple(distribution.extra.get("support", EVERYWHERE))


class DispersionSplit:
    """Subtracted dispersion integral of one causal distribution."""

    def __init__(self, distribution, spec):
        if distribution.support_tag != CAUSAL:
            raise SplitError(
                "only causal distributions can be split, got %r" % distribution.support_tag
            )
        if distribution.function is None:
            raise SplitError("mass-shell measures have no dispersion integral")
        if distribution.variable == "p":
            raise SplitError("splitting works in a scalar variable (s or t)")
        spec.check_complete()
        self.distribution = distribution
        self.spec = spec
        self.subtractions = ambiguity_dimension(spec.omega)
        point = spec.subtraction_point or SubtractionPoint.zero()
        self.x0 = point.location(distribution.variable)
        self.support = support_of(distribution)

    def _weight(self, x):
        return self.distribution(x) / (x - self.x0) ** self.subtractions

    def _quad_around(self, function, a, b, center):
        """quad_complex with breakpoints next to a nearby pole."""
        cuts = [c for c in (center - 1.0, center, center + 1.0) if a < c < b]
        edges = [a] + cuts + [b]
        return sum(
            (quad_complex(function, lo, hi) for lo, hi in zip(edges, edges[1:])), 0j
        )

    def _pv(self, function, a, b, pole):
        real = principal_value(lambda x: complex(function(x)).real, a, b, pole)
        imag = principal_value(lambda x: complex(function(x)).imag, a, b, pole)
        return complex(real, imag)

    def _window(self, x):
        """Interval around x for the principal value, inside the support.

        Adjacent support intervals are merged first, so x may sit on an
        internal cut.
        """
        runs = []
        for a, b in sorted(self.support):
            if runs and runs[-1][1] == a:
                runs[-1][1] = b
            else:
                runs.append([a, b])
        for a, b in runs:
            if a < x < b:
                half = min(0.5 * max(1.0, abs(x)), 0.5 * (x - a), 0.5 * (b - x))
                return x - half, x + half
        return None

    def integral(self, x):
        """PV int d(x') / ((x' - x0)^n (x' - x)) dx' over the support."""
        window = self._window(x)
        total = 0j
        for a, b in self.support:
            pieces = [(a, b)]
            if window is not None:
                left, right = window
                pieces = [(a, min(b, left)), (max(a, right), b)]
            for lo, hi in pieces:
                if lo < hi:
                    total += quad_complex(lambda y: self._weight(y) / (y - x), lo, hi)
        if window is not None:
            total += self._pv(self._weight, window[0], window[1], x)
        return total

    def polynomial(self, x):
        return sum(c * (x - self.x0) ** k for k, c in enumerate(self.spec.constants))

    def principal_part(self, x):
        n = self.subtractions
        return (x - self.x0) ** n * self.integral(x) / (2j * math.pi) + self.polynomial(x)

    def in_support(self, x):
        return any(a <= x <= b for a, b in self.support)

    def retarded(self, x):
        half = 0.5 * self.distribution(x) if self.in_support(x) else 0j
        return self.principal_part(x) + half

    def advanced(self, x):
        half = 0.5 * self.distribution(x) if self.in_support(x) else 0j
        return self.principal_part(x) - half

    def off_axis(self, x, y):
        """The dispersion integral at z = x + iy: the retarded part continued
        into the upper half plane (y > 0), the advanced one below (y < 0)."""
        if y == 0:
            raise SplitError("off_axis needs a non-zero imaginary part")
        z = complex(x, y)
        n = self.subtractions
        integral = sum(
            (
                self._quad_around(lambda t: self._weight(t) / (t - z), a, b, x)
                for a, b in self.support
            ),
            0j,
        )
        return (z - self.x0) ** n * integral / (2j * math.pi) + self.polynomial(z)

    def derivative(self, x):
        """d r / dx at a point outside the support, where r is analytic."""
        if self.in_support(x):
            raise SplitError("derivative is only available outside the support")
        n = self.subtractions
        integral = self.integral(x)
        squared = sum(
            (quad_complex(lambda t: self._weight(t) / (t - x) ** 2, a, b) for a, b in self.support),
            0j,
        )
        value = (x - self.x0) ** n * squared
        if n:
            value += n * (x - self.x0) ** (n - 1) * integral
        polynomial = sum(
            k * c * (x - self.x0) ** (k - 1)
            for k, c in enumerate(self.spec.constants)
            if k
        )
        return value / (2j * math.pi) + polynomial


@dataclass
class SplitResult:
    retarded: object
    advanced: object
    splitter: DispersionSplit

    def reconstruction_error(self, samples):
        d = self.splitter.distribution
        worst = 0.0
        for x in samples:
            expected = d(x) if self.splitter.in_support(x) else 0j
            difference = self.retarded(x) - self.advanced(x) - expected
            worst = max(worst, abs(difference) / max(1.0, abs(expected)))
        return worst


def split(distribution, spec):
    splitter = DispersionSplit(distribution, spec)
    logger.debug(
        "splitting %s: omega=%d, %d subtractions at %g",
        distribution.label or "distribution",
        spec.omega,
        splitter.subtractions,
        splitter.x0,
    )
    retarded = distribution.with_function(splitter.retarded, RETARDED)
    advanced = distribution.with_function(splitter.advanced, ADVANCED)
    return SplitResult(retarded, advanced, splitter)


def split_on_lattice(times, values, omega):
    """Split sampled values d(t) by multiplication with theta(t); t = 0 gets
    half the value. Only defined below singularity order 0."""
    if omega >= 0:
        raise SplitError("step-function splitting needs omega < 0, got %d" % omega)
    times = np.asarray(times, dtype=float)
    values = np.asarray(values)
    theta = np.where(times > 0, 1.0, np.where(times < 0, 0.0, 0.5))
    retarded = values * theta
    return retarded, retarded - values
