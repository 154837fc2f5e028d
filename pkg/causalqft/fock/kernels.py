"""Integral kernel operators Xi(kappa_lm) on the momentum grid.

Xi(kappa) = sum over grid tuples of w_p1..w_pl w_q1..w_qm kappa(p; q)
            a+_p1 .. a+_pl a_q1 .. a_qm

Matrix elements are fixed by the dual pairing <kappa, eta_{Phi,Psi}>, where
eta_{Phi,Psi}(p; q) = <<a+_p1 .. a+_pl a_q1 .. a_qm Phi, Psi>>.
"""

import itertools
import logging
import math

import numpy as np

from .grid import (
    FockGridState,
    GridError,
    TruncationError,
    apply_annihilation,
    apply_creation,
    apply_eta,
    occupation_basis,
    pairing,
)

logger = logging.getLogger(__name__)


class DiscreteKernel:
    def __init__(self, grid, l, m, values):
        self.grid = grid
        self.l = int(l)
        self.m = int(m)
        if self.l < 0 or self.m < 0:
            raise GridError("kernel orders must be non-negative")
        values = np.asarray(values, dtype=complex)
        expected = (len(grid),) * (self.l + self.m)
        if values.shape != expected:
            raise GridError(
                "kernel of shape %r does not fit a %d-point grid with l=%d, m=%d"
                % (values.shape, len(grid), self.l, self.m)
            )
        if not np.all(np.isfinite(values)):
            raise GridError("kernel values must be finite")
        self.values = values

    @classmethod
    def zeros(cls, grid, l, m):
        return cls(grid, l, m, np.zeros((len(grid),) * (l + m), dtype=complex))

    @classmethod
    def random(cls, grid, l, m, rng):
        shape = (len(grid),) * (l + m)
        return cls(grid, l, m, rng.normal(size=shape) + 1j * rng.normal(size=shape))

    def __add__(self, other):
        self._check_compatible(other)
        return DiscreteKernel(self.grid, self.l, self.m, self.values + other.values)

    def __mul__(self, factor):
        return DiscreteKernel(self.grid, self.l, self.m, factor * self.values)

    __rmul__ = __mul__

    def _check_compatible(self, other):
        if (self.l, self.m) != (other.l, other.m) or len(self.grid) != len(other.grid):
            raise GridError("kernels of different shape cannot be combined")

    def tuples(self):
        return itertools.product(range(len(self.grid)), repeat=self.l + self.m)

    def weight(self, indices):
        return float(np.prod([self.grid.weights[i] for i in indices]))

    def is_zero(self):
        return not np.any(self.values)


def adjoint_kernel(kernel):
    """kappa+(a_1..a_m; b_1..b_l) = conj kappa(b_l..b_1; a_m..a_1).

    Xi(adjoint_kernel(kappa)) is the Hilbert adjoint of Xi(kappa).
    """
    l, m = kernel.l, kernel.m
    axes = [l + (m - 1 - k) for k in range(m)] + [l - 1 - k for k in range(l)]
    values = np.conj(np.transpose(kernel.values, axes)) if axes else np.conj(kernel.values)
    return DiscreteKernel(kernel.grid, m, l, values)


def free_field_kernels(grid, test_function, mass):
    """Kernels kappa_10 and kappa_01 of a free scalar field smeared with a test
    function given in momentum space as test_function(p0, p_vec)."""
    creation = np.zeros(len(grid), dtype=complex)
    annihilation = np.zeros(len(grid), dtype=complex)
    for i, point in enumerate(grid.points):
        p = np.asarray(point.momentum, dtype=float)
        energy = math.sqrt(float(p @ p) + mass ** 2)
        norm = math.sqrt(2.0 * energy * (2.0 * math.pi) ** 3)
        annihilation[i] = test_function(energy, p) / norm
        creation[i] = test_function(-energy, -p) / norm
    return (
        DiscreteKernel(grid, 1, 0, creation),
        DiscreteKernel(grid, 0, 1, annihilation),
    )


def _annihilate_all(modes, state):
    # a_{modes[0]} .. a_{modes[-1]} state: the rightmost operator acts first
    for mode in reversed(modes):
        state = apply_annihilation(mode, state)
    return state


def eta_pairing(l, m, modes, phi, psi, krein=False):
    """<<a+_p1 .. a+_pl a_q1 .. a_qm Phi, Psi>> for modes = (p_1..p_l, q_1..q_m).

    The creators are moved onto Psi as annihilators: in the occupation basis
    the ladder matrices are real and a+_i is the transpose of a_i.
    """
    modes = tuple(modes)
    if len(modes) != l + m:
        raise GridError("expected %d modes, got %d" % (l + m, len(modes)))
    cutoff = max(phi.cutoff, psi.cutoff)
    if l + m > 2 * cutoff:
        raise TruncationError(
            "%d operators cannot connect states below the cutoff %d" % (l + m, cutoff)
        )
    left = _annihilate_all(modes[l:], phi)
    if krein:
        psi = apply_eta(psi)
    right = psi
    for mode in modes[:l]:
        right = apply_annihilation(mode, right)
    return pairing(left, right)


def xi_matrix_element(kernel, phi, psi, krein=False):
    """Weighted grid sum of kappa * eta_{Phi,Psi}: the discrete <<Xi(kappa) Phi, Psi>>."""
    grid = kernel.grid
    if len(grid) != len(phi.grid) or len(grid) != len(psi.grid):
        raise GridError("kernel and states live on different grids")
    l, m = kernel.l, kernel.m
    cutoff = max(phi.cutoff, psi.cutoff)
    if l + m > 2 * cutoff:
        raise TruncationError(
            "%d operators cannot connect states below the cutoff %d" % (l + m, cutoff)
        )
    if krein:
        psi = apply_eta(psi)
    n = len(grid)
    lefts = {}
    for qs in itertools.product(range(n), repeat=m):
        state = _annihilate_all(qs, phi)
        if not state.is_zero():
            lefts[qs] = state
    rights = {}
    for ps in itertools.product(range(n), repeat=l):
        state = psi
        for mode in ps:
            state = apply_annihilation(mode, state)
        if not state.is_zero():
            rights[ps] = state
    total = 0j
    for ps, right in rights.items():
        for qs, left in lefts.items():
            value = kernel.values[ps + qs]
            if value == 0:
                continue
            total += kernel.weight(ps + qs) * value * pairing(left, right)
    return total


def apply_kernel(kernel, state):
    """Xi(kappa) applied directly by ladder operators."""
    result = FockGridState.zero(state.grid, state.cutoff)
    l = kernel.l
    for indices in kernel.tuples():
        value = kernel.values[indices]
        if value == 0:
            continue
        term = _annihilate_all(indices[l:], state)
        if term.is_zero():
            continue
        for mode in reversed(indices[:l]):
            term = apply_creation(mode, term)
        result = result + term.scaled(kernel.weight(indices) * value)
    return result


def commutator_check(grid, cutoff):
    """max over (i, j) of |[a_i, a+_j]_(-/+) - delta_ij / w_i| on every
    configuration strictly below the cutoff."""
    if cutoff < 2:
        raise GridError("commutator_check needs a cutoff of at least 2")
    worst = 0.0
    basis = list(occupation_basis(grid, cutoff - 1))
    n = len(grid)
    for i in range(n):
        for j in range(n):
            anti = grid.is_fermi(i) and grid.is_fermi(j)
            expected = 1.0 / grid.weights[i] if i == j else 0.0
            for occupation in basis:
                state = FockGridState.basis(grid, occupation, cutoff)
                forward = apply_annihilation(i, apply_creation(j, state))
                backward = apply_creation(j, apply_annihilation(i, state))
                combined = forward + backward if anti else forward - backward
                residual = combined - state.scaled(expected)
                for _, value in residual.items():
                    worst = max(worst, abs(value))
    logger.info(
        "commutation relations on %d modes, cutoff %d: max deviation %.3e",
        n,
        cutoff,
        worst,
    )
    return worst
