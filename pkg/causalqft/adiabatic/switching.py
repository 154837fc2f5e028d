"""Adiabatic switching g(eps x) and the eps -> 0 limit of smeared kernels.

The switching profile is a mixture of Euclidean Gaussians,

    g(x) = alpha0 sum_j c_j exp(-|x|^2 / (2 w_j^2)),   sum_j c_j = 1,

so g(0) = alpha0 and g_eps(x) = g(eps x) has the transform
g^_eps(p) = eps^-4 g^(p / eps). Smearing against g^_eps,

    (2 pi)^-4 int d^4k g^_eps(k) F(k) = alpha0 sum_j c_j E[F(sigma_j Z)],

with Z a standard normal 4-vector and sigma_j = eps / w_j, is done with
Gauss-Hermite rules.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from numpy.polynomial import hermite_e, laguerre, legendre
from scipy import special

from causalqft.exceptions import NumericError, ValidationError
from causalqft.fock.grid import GridError
from causalqft.fock.kernels import DiscreteKernel, xi_matrix_element
from causalqft.grassmann.signs import FERMI, BOSE, GradedVar, reorder_sign
from causalqft.qed.green import (
    SelfEnergy,
    VacuumPolarization,
    density_distribution,
    two_body_phase_space,
)
from causalqft.splitting.engine import SplitSpec, SubtractionPoint, split
from causalqft.wick.algebra import (
    Dplus,
    first_order,
    operator_product,
    vacuum_expectation,
)

logger = logging.getLogger(__name__)

SIGMA_INTO_PSI = "Sigma_into_psi"
PI_INTO_A = "Pi_into_A"
PI_INTO_CURRENT = "Pi_into_current"
CHANNELS = (SIGMA_INTO_PSI, PI_INTO_A, PI_INTO_CURRENT)

CONVERGED = "converged"
DIVERGED = "diverged"
INCONCLUSIVE = "inconclusive"

# Gauss rule sizes: Hermite nodes per axis, Laguerre nodes for the transverse
# momentum, radial and angular nodes of the vacuum integral
HERMITE_NODES = 4
TRANSVERSE_NODES = 2
RADIAL_NODES = 10
ANGULAR_NODES = 16

# increments must shrink by this factor across the fitted tail to count as Cauchy
CAUCHY_RATIO = 0.75


def default_schedule():
    return tuple(
        float(e)
        for e in np.geomspace(settings.EPS_START, settings.EPS_STOP, settings.EPS_STEPS)
    )


@dataclass(frozen=True)
class ScalingFamily:
    alpha0: float = 1.0
    widths: tuple = (1.0,)
    weights: tuple = (1.0,)
    epsilon_schedule: tuple = ()

    def __post_init__(self):
        widths = tuple(float(w) for w in self.widths)
        weights = tuple(float(c) for c in self.weights)
        if not widths or len(widths) != len(weights):
            raise ValidationError("a profile needs one weight per Gaussian width")
        if any(w <= 0 for w in widths) or any(c <= 0 for c in weights):
            raise ValidationError("profile widths and weights must be positive")
        if not math.isclose(sum(weights), 1.0, rel_tol=1e-12):
            raise ValidationError("profile weights must sum to one, got %r" % sum(weights))
        schedule = tuple(float(e) for e in self.epsilon_schedule) or default_schedule()
        if any(b >= a for a, b in zip(schedule, schedule[1:])):
            raise ValidationError("the epsilon schedule must decrease strictly")
        if schedule[-1] < settings.EPS_SAFE_MINIMUM:
            raise NumericError(
                "epsilon %.3e is below the safe minimum %.3e"
                % (schedule[-1], settings.EPS_SAFE_MINIMUM)
            )
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "epsilon_schedule", schedule)

    @classmethod
    def gaussian(cls, alpha0=1.0, width=1.0, schedule=()):
        return cls(alpha0, (width,), (1.0,), schedule)

    def g(self, x):
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return self.alpha0 * sum(
            c * math.exp(-r2 / (2 * w * w)) for w, c in zip(self.widths, self.weights)
        )

    def g_hat(self, p):
        p = np.asarray(p, dtype=float)
        r2 = float(p @ p)
        return self.alpha0 * sum(
            c * (2 * math.pi * w * w) ** 2 * math.exp(-w * w * r2 / 2)
            for w, c in zip(self.widths, self.weights)
        )

    def g_hat_eps(self, p, eps):
        return eps ** -4 * self.g_hat(np.asarray(p, dtype=float) / eps)

    def sigmas(self, eps):
        return [eps / w for w in self.widths]

    def smear(self, function, eps, nodes=6):
        """(2 pi)^-4 int d^4k g^_eps(k) F(k) by a tensor Gauss-Hermite rule."""
        x, w = hermite_e.hermegauss(nodes)
        w = w / math.sqrt(2 * math.pi)
        total = 0j
        for sigma, c in zip(self.sigmas(eps), self.weights):
            inner = 0j
            for i in np.ndindex(*(nodes,) * 4):
                k = sigma * x[list(i)]
                inner += np.prod(w[list(i)]) * function(k)
            total += c * inner
        return self.alpha0 * total


def _axial_rule(order=HERMITE_NODES, transverse=TRANSVERSE_NODES):
    """Nodes (k0, k_parallel, k_perp^2) and weights of a standard normal
    4-vector, for integrands symmetric about the parallel axis."""
    x, w = hermite_e.hermegauss(order)
    w = w / math.sqrt(2 * math.pi)
    t, v = laguerre.laggauss(transverse)
    nodes, weights = [], []
    for i in range(order):
        for j in range(order):
            for l in range(transverse):
                nodes.append((x[i], x[j], 2.0 * t[l]))
                weights.append(w[i] * w[j] * v[l])
    return np.array(nodes), np.array(weights)


@dataclass
class SmearingData:
    """Single-particle profile xi and spacetime test function phi^, both
    sampled at the shell points of a momentum grid."""

    grid: object
    xi: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=complex)
        self.phi = np.asarray(self.phi, dtype=complex)
        if self.xi.shape != (len(self.grid),) or self.phi.shape != (len(self.grid),):
            raise ValidationError("test data must have one value per grid point")

    @classmethod
    def from_functions(cls, grid, xi, phi):
        xs = [xi(np.asarray(p.momentum, dtype=float)) for p in grid.points]
        phis = [phi(np.asarray(p.momentum, dtype=float)) for p in grid.points]
        return cls(grid, xs, phis)


def _numerator(channel, green):
    """N(p, k): the Green function on the shifted momentum q = p + k,
    projected on the shell state of momentum p (p^2 = m^2)."""
    if channel == SIGMA_INTO_PSI:
        if not isinstance(green, SelfEnergy):
            raise ValidationError("%s needs a SelfEnergy" % channel)
        m = green.electron_mass
        if m == 0:
            raise ValidationError("the spinor projection needs an electron mass > 0")

        def numerator(pk, kk):
            s = m * m + 2 * pk + kk
            # u-bar Sigma(q) u / 2m with u-bar qslash u = 2 p.q
            return green.a(s) + green.b(s) * (m * m + pk) / m

        return m, numerator
    if channel in (PI_INTO_A, PI_INTO_CURRENT):
        if not isinstance(green, VacuumPolarization):
            raise ValidationError("%s needs a VacuumPolarization" % channel)
        if channel == PI_INTO_A:
            return 0.0, lambda pk, kk: green.scalar_part(2 * pk + kk)

        def current(pk, kk):
            # q^2 Pi(q^2) with p^2 = 0
            s = 2 * pk + kk
            return s * green.scalar_part(s)

        return 0.0, current
    raise ValidationError(
        "unknown channel %r, expected one of %s" % (channel, ", ".join(CHANNELS))
    )


def _shell_factors(grid, mass):
    energies, moduli = [], []
    for point in grid.points:
        p = np.asarray(point.momentum, dtype=float)
        modulus = math.sqrt(float(p @ p))
        energies.append(math.sqrt(modulus ** 2 + mass ** 2))
        moduli.append(modulus)
    return np.array(energies), np.array(moduli)


def smeared_contribution(channel, green, data, eps, family=None, rule=None):
    """<S_ret * G * kappa(xi), phi> with the retarded shell factor
    1 / (-i eps p0) written out and the Green function smeared by g^_eps."""
    family = family or ScalingFamily.gaussian()
    if eps < settings.EPS_SAFE_MINIMUM:
        raise NumericError(
            "epsilon %.3e is below the safe minimum %.3e" % (eps, settings.EPS_SAFE_MINIMUM)
        )
    mass, numerator = _numerator(channel, green)
    if not np.any(data.xi * data.phi):
        return 0j
    nodes, weights = rule or _axial_rule()
    energies, moduli = _shell_factors(data.grid, mass)
    total = 0j
    for i, weight in enumerate(data.grid.weights):
        if data.xi[i] * data.phi[i] == 0:
            continue
        smeared = 0j
        for sigma, c in zip(family.sigmas(eps), family.weights):
            k0 = sigma * nodes[:, 0]
            parallel = sigma * nodes[:, 1]
            perp2 = sigma * sigma * nodes[:, 2]
            pk = energies[i] * k0 - moduli[i] * parallel
            kk = k0 * k0 - parallel * parallel - perp2
            values = np.array([numerator(a, b) for a, b in zip(pk, kk)], dtype=complex)
            smeared += c * (weights @ values)
        total += weight * data.xi[i] * data.phi[i] * smeared / (-1j * eps * energies[i])
    return family.alpha0 * total


def on_shell_limit(channel, green, data, family=None, tol=1e-8):
    """The eps-free evaluation: the residue of the 1/eps pole must vanish,
    and the even profile leaves no eps^0 term, so the limit is zero."""
    family = family or ScalingFamily.gaussian()
    mass, numerator = _numerator(channel, green)
    energies, _ = _shell_factors(data.grid, mass)
    residue = family.alpha0 * sum(
        w * x * f * numerator(0.0, 0.0) / (-1j * e)
        for w, x, f, e in zip(data.grid.weights, data.xi, data.phi, energies)
    )
    scale = max(1.0, float(np.sum(data.grid.weights * np.abs(data.xi * data.phi))))
    if abs(residue) > tol * scale:
        raise NumericError(
            "no finite limit: the shell residue %.3e does not vanish" % abs(residue)
        )
    return 0j


@dataclass
class SweepResult:
    epsilons: tuple
    values: tuple
    verdict: str
    fitted_exponent: float
    limit_estimate: complex = None

    def rows(self):
        return [(e, v.real, v.imag, abs(v)) for e, v in zip(self.epsilons, self.values)]

    def to_json(self):
        limit = self.limit_estimate
        return {
            "verdict": self.verdict,
            "fitted_exponent": None
            if math.isnan(self.fitted_exponent)
            else self.fitted_exponent,
            "limit_estimate": None if limit is None else [limit.real, limit.imag],
            "epsilons": list(self.epsilons),
            "values": [[v.real, v.imag] for v in self.values],
        }


def _tail(n):
    start = n // 2
    return slice(min(start, max(n - 3, 0)), n)


def classify(epsilons, values):
    """Verdict of a sweep from the last half of the schedule.

    The slope of log|value| against log eps decides: at or below the
    divergence slope the sweep diverges. Above minus the convergence slope,
    with Cauchy increments shrinking, it converges (a clearly positive slope
    means decay to zero). Everything else is inconclusive.
    """
    epsilons = np.asarray(epsilons, dtype=float)
    values = np.asarray(values, dtype=complex)
    if len(values) < 3:
        return INCONCLUSIVE, float("nan"), None
    tail = _tail(len(values))
    eps, vals = epsilons[tail], values[tail]
    magnitudes = np.abs(vals)
    if np.all(magnitudes == 0):
        return CONVERGED, 0.0, 0j
    logs = np.log(np.maximum(magnitudes, np.finfo(float).tiny))
    slope = float(np.polyfit(np.log(eps), logs, 1)[0])
    increments = np.abs(np.diff(vals))
    shrinking = bool(increments[-1] < CAUCHY_RATIO * increments[0]) or not np.any(increments)
    if slope <= settings.SWEEP_DIVERGENCE_SLOPE:
        return DIVERGED, slope, None
    if shrinking and slope > -settings.SWEEP_CONVERGENCE_SLOPE:
        degree = min(2, len(eps) - 1)
        real = np.polyfit(eps, vals.real, degree)[-1]
        imag = np.polyfit(eps, vals.imag, degree)[-1]
        return CONVERGED, slope, complex(real, imag)
    return INCONCLUSIVE, slope, None


def _run(evaluate, schedule, threads):
    threads = settings.THREADS if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(evaluate, schedule))
    return [evaluate(eps) for eps in schedule]


def _result(schedule, values, label):
    verdict, exponent, limit = classify(schedule, values)
    logger.info(
        "sweep %s over %d epsilons: %s (slope %.3f)", label, len(schedule), verdict, exponent
    )
    return SweepResult(tuple(schedule), tuple(complex(v) for v in values), verdict, exponent, limit)


def sweep(channel, green, data, family=None, threads=None):
    family = family or ScalingFamily.gaussian()
    rule = _axial_rule()
    schedule = family.epsilon_schedule
    values = _run(
        lambda eps: smeared_contribution(channel, green, data, eps, family, rule),
        schedule,
        threads,
    )
    return _result(schedule, values, channel)


def vacuum_graph(theory="phi2"):
    """Prefactor of the second-order vacuum graph c D+(m, x1 - x2)^2."""
    expectation = vacuum_expectation(
        operator_product(first_order(theory, "x1"), first_order(theory, "x2"))
    )
    coefficient, factor = expectation.as_coeff_Mul()
    if not (factor.is_Pow and factor.base.func == Dplus and factor.exp == 2):
        raise ValidationError(
            "the %s vacuum graph %s is not a two-line loop" % (theory, expectation)
        )
    return complex(coefficient)


def vacuum_function(mass, normalization=None):
    """The split two-line loop F(k^2) with its normalization constants."""
    if mass <= 0:
        raise ValidationError("the vacuum loop is normalized at k^2 = 0 and needs m > 0")
    normalization = normalization or SplitSpec(2, (0.0, 0.0, 0.0), SubtractionPoint.zero())
    distribution = density_distribution(
        lambda s: two_body_phase_space(s, mass, mass), 4 * mass * mass, "two-line loop"
    )
    return split(distribution, normalization).retarded


def _vacuum_value(function, family, eps):
    t, v = special.roots_genlaguerre(RADIAL_NODES, 1)
    x, u = legendre.leggauss(ANGULAR_NODES)
    theta = 0.5 * math.pi * (x + 1)
    angular = 0.5 * math.pi * u * np.sin(theta) ** 2
    total = 0j
    for wj, cj in zip(family.widths, family.weights):
        for wk, ck in zip(family.widths, family.weights):
            a = 0.5 * (wj * wj + wk * wk)
            prefactor = cj * ck * (2 * math.pi * wj * wj) ** 2 * (2 * math.pi * wk * wk) ** 2
            radial = 0j
            for tl, vl in zip(t, v):
                rho2 = tl / a
                values = np.array([function(eps * eps * rho2 * math.cos(2 * th)) for th in theta])
                radial += vl * (angular @ values)
            total += prefactor * 4 * math.pi * radial / (2 * a * a)
    return family.alpha0 ** 2 * total / (eps ** 4 * (2 * math.pi) ** 4)


def weak_limit_sweep(family=None, theory="phi2", mass=None, normalization=None, threads=None):
    """<<S_2(g_eps x g_eps) Phi_0, Phi_0>> along the schedule."""
    family = family or ScalingFamily.gaussian()
    mass = settings.ELECTRON_MASS if mass is None else mass
    coefficient = vacuum_graph(theory)
    function = vacuum_function(mass, normalization)
    schedule = family.epsilon_schedule
    values = _run(
        lambda eps: coefficient * _vacuum_value(function, family, eps), schedule, threads
    )
    return _result(schedule, values, "vacuum S_2")


def weak_limit_vacuum(n, family=None, theory="phi2", mass=None, normalization=None):
    if n < 1:
        raise ValidationError("order must be at least 1")
    if n == 1:
        # S_1 = i :L: has no vacuum part
        expectation = vacuum_expectation(first_order(theory, "x1"))
        return complex(expectation)
    if n > 2:
        raise ValidationError("the vacuum limit is evaluated numerically up to n = 2")
    result = weak_limit_sweep(family, theory, mass, normalization)
    if result.verdict != CONVERGED:
        raise NumericError(
            "vacuum sweep %s (slope %.3f); tune the normalization constants"
            % (result.verdict, result.fitted_exponent)
        )
    return result.limit_estimate


class KernelSeries:
    """A sum of kernel operators Xi(kappa_lm) of different orders."""

    def __init__(self, kernels):
        self.kernels = list(kernels)

    def __iter__(self):
        return iter(self.kernels)

    def __len__(self):
        return len(self.kernels)

    def order(self, l, m):
        for kernel in self.kernels:
            if (kernel.l, kernel.m) == (l, m):
                return kernel
        return None

    def is_zero(self):
        return all(kernel.is_zero() for kernel in self.kernels)

    def matrix_element(self, phi, psi):
        return sum((xi_matrix_element(kernel, phi, psi) for kernel in self.kernels), 0j)

    def __sub__(self, other):
        kernels = {(k.l, k.m): k for k in self.kernels}
        for kernel in other.kernels:
            key = (kernel.l, kernel.m)
            kernels[key] = kernels[key] + (-1.0) * kernel if key in kernels else (-1.0) * kernel
        return KernelSeries(kernels.values())


def _matchings(m, l, start=0, used=frozenset()):
    if start == m:
        yield ()
        return
    yield from _matchings(m, l, start + 1, used)
    for j in range(l):
        if j not in used:
            for rest in _matchings(m, l, start + 1, used | {j}):
                yield ((start, j),) + rest


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def product_of_limits(kernel_a, kernel_b):
    """Xi(kappa_A) Xi(kappa_B) written as a sum of normal-ordered kernels.

    Each annihilator of A may contract with a creator of B; a contraction
    contributes delta_qp / w_q, i.e. the grid sum weighted by w. The
    uncontracted part is the tensor product of the two kernels.
    """
    grid = kernel_a.grid
    if len(grid) != len(kernel_b.grid):
        raise GridError("kernels live on grids of different size")
    if not grid.uniform_statistics:
        raise GridError("products are formed on grids of uniform statistics")
    grade = FERMI if grid.is_fermi(0) else BOSE
    la, ma, lb, mb = kernel_a.l, kernel_a.m, kernel_b.l, kernel_b.m
    if la + ma + lb + mb > len(_LETTERS):
        raise GridError("too many legs for a kernel product")
    # operator string: A creators, A annihilators, B creators, B annihilators
    source = tuple(GradedVar(k, grade) for k in range(la + ma + lb + mb))
    by_order = {}
    for pairs in _matchings(ma, lb):
        letters = list(_LETTERS[: la + ma + lb + mb])
        contracted_a = {i for i, _ in pairs}
        contracted_b = {j for _, j in pairs}
        for i, j in pairs:
            letters[la + ma + j] = letters[la + i]
        a_letters = "".join(letters[: la + ma])
        b_letters = "".join(letters[la + ma :])
        creators = [la + ma + j for j in range(lb) if j not in contracted_b]
        annihilators = [la + i for i in range(ma) if i not in contracted_a]
        output = (
            letters[:la]
            + [letters[k] for k in creators]
            + [letters[k] for k in annihilators]
            + letters[la + ma + lb :]
        )
        operands = [kernel_a.values, kernel_b.values]
        subscripts = [a_letters, b_letters]
        for i, _ in pairs:
            operands.append(grid.weights)
            subscripts.append(letters[la + i])
        values = np.einsum(",".join(subscripts) + "->" + "".join(output), *operands)
        paired = [k for i, j in pairs for k in (la + i, la + ma + j)]
        order = (
            paired
            + list(range(la))
            + creators
            + annihilators
            + list(range(la + ma + lb, la + ma + lb + mb))
        )
        sign = reorder_sign(source, tuple(source[k] for k in order))
        key = (la + lb - len(pairs), ma + mb - len(pairs))
        by_order[key] = by_order.get(key, 0) + sign * values
    kernels = [DiscreteKernel(grid, l, m, values) for (l, m), values in sorted(by_order.items())]
    logger.debug(
        "kernel product (%d,%d) x (%d,%d) -> orders %s", la, ma, lb, mb, sorted(by_order)
    )
    return KernelSeries(kernels)
