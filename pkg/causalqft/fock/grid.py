"""Truncated Fock space over a finite momentum grid.

The continuum Hida operators a(p), a(p)+ are replaced by ladder operators at
grid points. A Dirac delta between grid points is represented as
delta_ij / w_i, so quadrature sums over the grid approximate the continuum
momentum integrals and [a_i, a_j+] = delta_ij / w_i holds exactly.

States are stored as sparse tables from occupation configurations
(a tuple of occupation numbers, one per mode) to complex amplitudes. The
occupation basis is orthonormal; with the delta normalization above the
operators act as b_i / sqrt(w_i) on it, b_i being the unit-normalized ladder
operators. Fermionic modes carry a Jordan-Wigner sign counting the occupied
fermionic modes of lower index.
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from causalqft.exceptions import NumericError, ValidationError

logger = logging.getLogger(__name__)

BOSE = "bose"
FERMI = "fermi"

# amplitudes smaller than this are dropped from the sparse table
ZERO_AMPLITUDE = 1e-300


class GridError(ValidationError):
    pass


class TruncationError(NumericError):
    pass


@dataclass(frozen=True)
class GridPoint:
    momentum: tuple
    spin: int = 0
    field: str = "scalar"

    def key(self):
        return (tuple(float(c) for c in self.momentum), self.spin, self.field)


class MomentumGrid:
    def __init__(self, points, weights, statistics, krein_sign=None):
        self.points = tuple(
            p if isinstance(p, GridPoint) else GridPoint(*p) for p in points
        )
        self.weights = np.asarray(weights, dtype=float)
        if isinstance(statistics, str):
            statistics = [statistics] * len(self.points)
        self.statistics = tuple(statistics)
        if krein_sign is None:
            krein_sign = [1] * len(self.points)
        self.krein_sign = tuple(int(s) for s in krein_sign)
        self.validate()

    def validate(self):
        n = len(self.points)
        if n == 0:
            raise GridError("a momentum grid needs at least one point")
        if self.weights.shape != (n,) or len(self.statistics) != n:
            raise GridError("one weight and one statistics flag per point required")
        if len(self.krein_sign) != n:
            raise GridError("one Krein sign per point required")
        if np.any(self.weights <= 0):
            raise GridError("quadrature weights must be positive")
        if any(s not in (BOSE, FERMI) for s in self.statistics):
            raise GridError("statistics must be 'bose' or 'fermi'")
        if any(s not in (1, -1) for s in self.krein_sign):
            raise GridError("Krein signs must be +1 or -1")
        keys = [p.key() for p in self.points]
        if len(set(keys)) != len(keys):
            raise GridError("grid points must be distinct (momentum, spin, field)")

    def __len__(self):
        return len(self.points)

    def is_fermi(self, mode):
        return self.statistics[mode] == FERMI

    @property
    def krein_trivial(self):
        return all(s == 1 for s in self.krein_sign)

    @property
    def uniform_statistics(self):
        return len(set(self.statistics)) == 1

    def check_mode(self, mode):
        if not 0 <= mode < len(self.points):
            raise GridError("mode %r outside a grid of %d points" % (mode, len(self)))

    @classmethod
    def trapezoid(
        cls,
        n_modes,
        p_min=0.1,
        p_max=2.0,
        statistics=BOSE,
        field="scalar",
        krein_sign=None,
    ):
        """Points along the p_z axis with trapezoid weights. p = 0 is avoided."""
        if n_modes < 2 or p_min <= 0 or p_max <= p_min:
            raise GridError("need n_modes >= 2 and 0 < p_min < p_max")
        nodes = np.linspace(p_min, p_max, n_modes)
        step = (p_max - p_min) / (n_modes - 1)
        weights = np.full(n_modes, step)
        weights[0] = weights[-1] = 0.5 * step
        points = [GridPoint((0.0, 0.0, float(c)), 0, field) for c in nodes]
        return cls(points, weights, statistics, krein_sign)

    def to_json(self):
        return {
            "points": [
                {"momentum": list(p.momentum), "spin": p.spin, "field": p.field}
                for p in self.points
            ],
            "weights": [float(w) for w in self.weights],
            "statistics": list(self.statistics),
            "krein_sign": list(self.krein_sign),
        }

    @classmethod
    def from_json(cls, data):
        points = [
            GridPoint(tuple(p["momentum"]), p.get("spin", 0), p.get("field", "scalar"))
            for p in data["points"]
        ]
        return cls(points, data["weights"], data["statistics"], data.get("krein_sign"))


class FockGridState:
    """Immutable state: occupation configuration -> complex amplitude."""

    def __init__(self, grid, amplitudes, cutoff):
        self.grid = grid
        self.cutoff = int(cutoff)
        table = {}
        for occupation, value in dict(amplitudes).items():
            occupation = tuple(int(n) for n in occupation)
            self._check_occupation(occupation)
            value = complex(value)
            if abs(value) > ZERO_AMPLITUDE:
                table[occupation] = table.get(occupation, 0j) + value
        self._amplitudes = table

    def _check_occupation(self, occupation):
        if len(occupation) != len(self.grid):
            raise GridError("occupation %r does not match the grid" % (occupation,))
        if any(n < 0 for n in occupation):
            raise GridError("negative occupation %r" % (occupation,))
        for mode, n in enumerate(occupation):
            if self.grid.is_fermi(mode) and n > 1:
                raise GridError("fermionic mode %d occupied %d times" % (mode, n))
        if sum(occupation) > self.cutoff:
            raise TruncationError(
                "%d particles exceed the cutoff %d" % (sum(occupation), self.cutoff)
            )

    @property
    def amplitudes(self):
        return dict(self._amplitudes)

    def items(self):
        return self._amplitudes.items()

    def amplitude(self, occupation):
        return self._amplitudes.get(tuple(occupation), 0j)

    def is_zero(self, tol=0.0):
        return all(abs(v) <= tol for v in self._amplitudes.values())

    def particle_numbers(self):
        return sorted({sum(occ) for occ in self._amplitudes})

    def _new(self, amplitudes):
        return FockGridState(self.grid, amplitudes, self.cutoff)

    def scaled(self, factor):
        return self._new({k: factor * v for k, v in self.items()})

    def conjugate(self):
        return self._new({k: v.conjugate() for k, v in self.items()})

    def __add__(self, other):
        table = dict(self._amplitudes)
        for k, v in other.items():
            table[k] = table.get(k, 0j) + v
        return self._new(table)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def with_cutoff(self, cutoff):
        return FockGridState(self.grid, self._amplitudes, cutoff)

    @classmethod
    def vacuum(cls, grid, cutoff):
        return cls(grid, {(0,) * len(grid): 1.0}, cutoff)

    @classmethod
    def zero(cls, grid, cutoff):
        return cls(grid, {}, cutoff)

    @classmethod
    def basis(cls, grid, occupation, cutoff, amplitude=1.0):
        return cls(grid, {tuple(occupation): amplitude}, cutoff)

    @classmethod
    def single_particle(cls, grid, mode, cutoff):
        """One particle whose wave function is the grid delta at `mode`.

        Its occupation amplitude is 1/sqrt(w_mode): the delta_ij / w_i
        function written in the orthonormal occupation basis.
        """
        grid.check_mode(mode)
        occupation = [0] * len(grid)
        occupation[mode] = 1
        return cls(grid, {tuple(occupation): 1.0 / math.sqrt(grid.weights[mode])}, cutoff)

    @classmethod
    def random(cls, grid, cutoff, rng, max_particles=None):
        """Random state on every configuration up to max_particles."""
        if max_particles is None:
            max_particles = cutoff
        table = {}
        for occupation in occupation_basis(grid, max_particles):
            table[occupation] = complex(rng.normal(), rng.normal())
        return cls(grid, table, cutoff)

    def to_json(self):
        return {
            "grid": self.grid.to_json(),
            "cutoff": self.cutoff,
            "amplitudes": [
                [list(occ), value.real, value.imag]
                for occ, value in sorted(self._amplitudes.items())
            ],
        }

    @classmethod
    def from_json(cls, data):
        grid = MomentumGrid.from_json(data["grid"])
        table = {tuple(occ): complex(re, im) for occ, re, im in data["amplitudes"]}
        return cls(grid, table, data["cutoff"])

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def occupation_basis(grid, max_particles):
    """Every occupation configuration with at most max_particles quanta."""
    ranges = [
        range(0, 2) if grid.is_fermi(mode) else range(0, max_particles + 1)
        for mode in range(len(grid))
    ]
    for occupation in itertools.product(*ranges):
        if sum(occupation) <= max_particles:
            yield occupation


def _jordan_wigner_sign(grid, occupation, mode):
    if not grid.is_fermi(mode):
        return 1
    below = sum(
        occupation[k] for k in range(mode) if grid.is_fermi(k)
    )
    return -1 if below % 2 else 1


def apply_annihilation(mode, state):
    grid = state.grid
    grid.check_mode(mode)
    scale = 1.0 / math.sqrt(grid.weights[mode])
    table = {}
    for occupation, value in state.items():
        n = occupation[mode]
        if n == 0:
            continue
        lowered = list(occupation)
        lowered[mode] = n - 1
        lowered = tuple(lowered)
        factor = _jordan_wigner_sign(grid, occupation, mode) * math.sqrt(n) * scale
        table[lowered] = table.get(lowered, 0j) + factor * value
    return FockGridState(grid, table, state.cutoff)


def apply_creation(mode, state):
    grid = state.grid
    grid.check_mode(mode)
    scale = 1.0 / math.sqrt(grid.weights[mode])
    table = {}
    for occupation, value in state.items():
        n = occupation[mode]
        if grid.is_fermi(mode) and n == 1:
            continue
        if sum(occupation) + 1 > state.cutoff:
            logger.debug("creation on mode %d hits the cutoff %d", mode, state.cutoff)
            raise TruncationError(
                "creating a quantum in mode %d exceeds the cutoff %d"
                % (mode, state.cutoff)
            )
        raised = list(occupation)
        raised[mode] = n + 1
        raised = tuple(raised)
        factor = _jordan_wigner_sign(grid, occupation, mode) * math.sqrt(n + 1) * scale
        table[raised] = table.get(raised, 0j) + factor * value
    return FockGridState(grid, table, state.cutoff)


def apply_eta(state):
    """The Gupta-Bleuler operator: diagonal sign prod_i eta_i^{n_i}."""
    signs = state.grid.krein_sign
    table = {}
    for occupation, value in state.items():
        sign = 1
        for mode, n in enumerate(occupation):
            if signs[mode] < 0 and n % 2:
                sign = -sign
        table[occupation] = sign * value
    return FockGridState(state.grid, table, state.cutoff)


def pairing(phi, psi, krein=False):
    """The bilinear pairing <<phi, psi>> in the occupation basis.

    With krein=True the Krein metric eta is inserted.
    """
    if krein:
        psi = apply_eta(psi)
    small, large = (phi, psi) if len(phi._amplitudes) <= len(psi._amplitudes) else (psi, phi)
    return sum(
        (value * large.amplitude(occ) for occ, value in small.items()), 0j
    )


def inner_product(phi, psi, krein=False):
    """Hermitian product, antilinear in phi."""
    return pairing(phi.conjugate(), psi, krein=krein)
