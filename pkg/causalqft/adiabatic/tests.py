import math

import numpy as np
from django.test import SimpleTestCase

from causalqft.exceptions import NumericError, ValidationError
from causalqft.fock.grid import BOSE, FERMI, FockGridState, GridError, MomentumGrid, pairing
from causalqft.fock.kernels import DiscreteKernel, apply_kernel
from causalqft.qed.green import OFF_SHELL, build_self_energy, build_vacuum_polarization
from causalqft.splitting.engine import SplitSpec, SubtractionPoint

from .switching import (
    CONVERGED,
    DIVERGED,
    INCONCLUSIVE,
    PI_INTO_A,
    PI_INTO_CURRENT,
    SIGMA_INTO_PSI,
    ScalingFamily,
    SmearingData,
    classify,
    default_schedule,
    on_shell_limit,
    product_of_limits,
    smeared_contribution,
    sweep,
    vacuum_graph,
    weak_limit_sweep,
    weak_limit_vacuum,
)

SHORT_SCHEDULE = tuple(2.0 ** -k for k in range(3, 11))


def family(width=1.0, schedule=SHORT_SCHEDULE):
    return ScalingFamily.gaussian(1.0, width, schedule)


PROFILES = [
    family(1.0),
    family(2.0),
    ScalingFamily(1.0, (0.5, 2.0), (0.3, 0.7), SHORT_SCHEDULE),
]


def shell_data(statistics=FERMI):
    grid = MomentumGrid.trapezoid(2, 0.3, 0.6, statistics=statistics)
    return SmearingData(grid, [1.0, 0.5], [1.0, 1j])


class ScalingFamilyTest(SimpleTestCase):
    def test_profile_at_the_origin(self):
        mixture = ScalingFamily(2.5, (0.5, 2.0), (0.3, 0.7), SHORT_SCHEDULE)
        self.assertAlmostEqual(mixture.g(np.zeros(4)), 2.5)

    def test_smeared_constant_is_alpha0(self):
        mixture = ScalingFamily(2.5, (0.5, 2.0), (0.3, 0.7), SHORT_SCHEDULE)
        self.assertAlmostEqual(mixture.smear(lambda k: 1.0, 0.3), 2.5, delta=1e-12)

    def test_second_moment(self):
        mixture = ScalingFamily(1.0, (0.5, 2.0), (0.3, 0.7), SHORT_SCHEDULE)
        expected = 0.3 * (0.5 / 0.5) ** 2 + 0.7 * (0.5 / 2.0) ** 2
        self.assertAlmostEqual(mixture.smear(lambda k: k[0] ** 2, 0.5), expected, delta=1e-12)

    def test_scaled_transform_is_a_delta_family(self):
        g = family()

        def test_function(k):
            return 2.0 + math.exp(-float(k @ k)) * math.cos(k[0])

        for eps in [1e-2, 1e-3]:
            self.assertAlmostEqual(g.smear(test_function, eps), 3.0, delta=10 * eps ** 2)

    def test_transform_matches_the_gaussian_density(self):
        g = family(2.0)
        k = np.array([0.1, -0.2, 0.05, 0.3])
        eps = 0.5
        sigma = eps / 2.0
        density = (2 * math.pi * sigma ** 2) ** -2 * math.exp(-float(k @ k) / (2 * sigma ** 2))
        self.assertAlmostEqual(
            g.g_hat_eps(k, eps) / (2 * math.pi) ** 4, density, delta=1e-12 * density
        )

    def test_default_schedule(self):
        schedule = default_schedule()
        self.assertEqual(len(schedule), 12)
        self.assertAlmostEqual(schedule[0], 2.0 ** -3)
        self.assertAlmostEqual(schedule[-1], 2.0 ** -14)

    def test_invalid_families(self):
        with self.assertRaises(ValidationError):
            ScalingFamily.gaussian(1.0, 1.0, (0.1, 0.2))
        with self.assertRaises(ValidationError):
            ScalingFamily(1.0, (1.0, 2.0), (0.5, 0.6), SHORT_SCHEDULE)
        with self.assertRaises(NumericError):
            ScalingFamily.gaussian(1.0, 1.0, (1e-3, 1e-12))


class ClassifyTest(SimpleTestCase):
    epsilons = np.geomspace(2.0 ** -3, 2.0 ** -14, 12)

    def test_pole_diverges(self):
        verdict, exponent, limit = classify(self.epsilons, 0.3j / self.epsilons)
        self.assertEqual(verdict, DIVERGED)
        self.assertAlmostEqual(exponent, -1.0, delta=1e-10)
        self.assertIsNone(limit)

    def test_constant_plus_linear_converges(self):
        verdict, _, limit = classify(self.epsilons, 1.0 - 0.5j + 2 * self.epsilons)
        self.assertEqual(verdict, CONVERGED)
        self.assertAlmostEqual(limit, 1.0 - 0.5j, delta=1e-10)

    def test_decay_converges_to_zero(self):
        verdict, exponent, limit = classify(self.epsilons, 3 * self.epsilons)
        self.assertEqual(verdict, CONVERGED)
        self.assertAlmostEqual(exponent, 1.0, delta=1e-10)
        self.assertAlmostEqual(limit, 0.0, delta=1e-12)

    def test_logarithmic_growth_is_inconclusive(self):
        verdict, _, _ = classify(self.epsilons, np.log(1.0 / self.epsilons))
        self.assertEqual(verdict, INCONCLUSIVE)

    def test_too_few_points(self):
        self.assertEqual(classify([0.1, 0.05], [1.0, 1.0])[0], INCONCLUSIVE)

    def test_all_zero(self):
        self.assertEqual(classify(self.epsilons, np.zeros(12)), (CONVERGED, 0.0, 0j))


class SelfEnergyChannelTest(SimpleTestCase):
    def setUp(self):
        self.on_shell = build_self_energy(1.0, 0.1)
        self.off_shell = build_self_energy(1.0, 0.1, OFF_SHELL)
        self.data = shell_data()

    def test_zero_test_vector(self):
        data = SmearingData(self.data.grid, [0.0, 0.0], [1.0, 1.0])
        for eps in SHORT_SCHEDULE[:3]:
            self.assertEqual(smeared_contribution(SIGMA_INTO_PSI, self.off_shell, data, eps), 0j)

    def test_on_shell_normalization_converges_to_zero(self):
        result = sweep(SIGMA_INTO_PSI, self.on_shell, self.data, family())
        self.assertEqual(result.verdict, CONVERGED)
        direct = on_shell_limit(SIGMA_INTO_PSI, self.on_shell, self.data)
        self.assertAlmostEqual(result.limit_estimate, direct, delta=1e-6)
        self.assertLess(abs(result.values[-1]), abs(result.values[0]))

    def test_off_shell_normalization_diverges_like_one_over_eps(self):
        result = sweep(SIGMA_INTO_PSI, self.off_shell, self.data, family())
        self.assertEqual(result.verdict, DIVERGED)
        self.assertAlmostEqual(result.fitted_exponent, -1.0, delta=0.05)
        tail = [abs(v) for v in result.values[len(result.values) // 2 :]]
        self.assertTrue(all(b > a for a, b in zip(tail, tail[1:])))

    def test_off_shell_has_no_eps_free_limit(self):
        with self.assertRaises(NumericError):
            on_shell_limit(SIGMA_INTO_PSI, self.off_shell, self.data)

    def test_verdicts_do_not_depend_on_the_profile(self):
        for profile in PROFILES:
            self.assertEqual(sweep(SIGMA_INTO_PSI, self.on_shell, self.data, profile).verdict, CONVERGED)
            self.assertEqual(sweep(SIGMA_INTO_PSI, self.off_shell, self.data, profile).verdict, DIVERGED)

    def test_threads_keep_the_schedule_order(self):
        short = family(schedule=SHORT_SCHEDULE[:3])
        serial = sweep(SIGMA_INTO_PSI, self.off_shell, self.data, short, threads=1)
        parallel = sweep(SIGMA_INTO_PSI, self.off_shell, self.data, short, threads=2)
        self.assertEqual(serial.values, parallel.values)
        self.assertEqual(serial.to_json()["epsilons"], list(SHORT_SCHEDULE[:3]))

    def test_channel_must_match_the_green_function(self):
        with self.assertRaises(ValidationError):
            smeared_contribution(PI_INTO_A, self.on_shell, self.data, 0.1)
        with self.assertRaises(ValidationError):
            smeared_contribution("Gamma_into_psi", self.on_shell, self.data, 0.1)

    def test_eps_below_the_safe_minimum(self):
        with self.assertRaises(NumericError):
            smeared_contribution(SIGMA_INTO_PSI, self.on_shell, self.data, 1e-12)


class PhotonChannelTest(SimpleTestCase):
    def setUp(self):
        self.data = shell_data(BOSE)

    def test_on_shell_vacuum_polarization_converges(self):
        pi = build_vacuum_polarization(1.0)
        for channel in (PI_INTO_A, PI_INTO_CURRENT):
            result = sweep(channel, pi, self.data, family())
            self.assertEqual(result.verdict, CONVERGED, channel)
            self.assertAlmostEqual(result.limit_estimate, 0.0, delta=1e-6)

    def test_charge_renormalization_only_matters_for_the_field(self):
        shifted = build_vacuum_polarization(1.0, SplitSpec(1, (0.1, 0.0), SubtractionPoint.zero()))
        self.assertEqual(sweep(PI_INTO_A, shifted, self.data, family()).verdict, DIVERGED)
        self.assertEqual(sweep(PI_INTO_CURRENT, shifted, self.data, family()).verdict, CONVERGED)

    def test_massless_charge_diverges_for_sampled_constants(self):
        point = SubtractionPoint.at(-1.0)
        for constants in ((0.0, 0.0), (0.1, 0.0), (-0.1, 0.1), (0.5, -0.5)):
            pi = build_vacuum_polarization(0.0, SplitSpec(1, constants, point))
            result = sweep(PI_INTO_A, pi, self.data, family())
            self.assertEqual(result.verdict, DIVERGED, constants)


class WeakLimitVacuumTest(SimpleTestCase):
    def test_two_line_vacuum_graph(self):
        self.assertAlmostEqual(vacuum_graph("phi2"), -0.5)
        with self.assertRaises(ValidationError):
            vacuum_graph("phi")

    def test_first_order_has_no_vacuum_part(self):
        for theory in ("phi2", "qed", "phi4"):
            self.assertEqual(weak_limit_vacuum(1, family(), theory), 0j)

    def test_normalized_second_order_vanishes(self):
        result = weak_limit_sweep(family())
        self.assertEqual(result.verdict, CONVERGED)
        self.assertAlmostEqual(result.limit_estimate, 0.0, delta=1e-6 * abs(result.values[0]))
        self.assertAlmostEqual(weak_limit_vacuum(2, family()), 0.0, delta=1e-6 * abs(result.values[0]))

    def test_independent_of_the_profile(self):
        for profile in PROFILES[1:]:
            self.assertEqual(weak_limit_sweep(profile).verdict, CONVERGED)

    def test_untuned_constant_diverges(self):
        spec = SplitSpec(2, (1e-3, 0.0, 0.0), SubtractionPoint.zero())
        result = weak_limit_sweep(family(), normalization=spec)
        self.assertEqual(result.verdict, DIVERGED)
        self.assertAlmostEqual(result.fitted_exponent, -4.0, delta=0.05)
        with self.assertRaises(NumericError):
            weak_limit_vacuum(2, family(), normalization=spec)

    def test_higher_orders_are_not_evaluated(self):
        with self.assertRaises(ValidationError):
            weak_limit_vacuum(3, family())


class ProductOfLimitsTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)

    def grid(self, statistics=BOSE):
        return MomentumGrid.trapezoid(4, 0.2, 1.4, statistics=statistics)

    def composed(self, kernel_a, kernel_b, phi, psi):
        return pairing(apply_kernel(kernel_a, apply_kernel(kernel_b, phi)), psi)

    def test_zero_kernel(self):
        grid = self.grid()
        a = DiscreteKernel.zeros(grid, 0, 1)
        b = DiscreteKernel.random(grid, 1, 0, self.rng)
        self.assertTrue(product_of_limits(a, b).is_zero())
        self.assertTrue(product_of_limits(b, a).is_zero())

    def test_one_leg_kernels(self):
        for statistics in (BOSE, FERMI):
            grid = self.grid(statistics)
            a = DiscreteKernel.random(grid, 0, 1, self.rng)
            b = DiscreteKernel.random(grid, 1, 0, self.rng)
            series = product_of_limits(a, b)
            self.assertEqual(sorted((k.l, k.m) for k in series), [(0, 0), (1, 1)])
            phi = FockGridState.random(grid, 3, self.rng, max_particles=2)
            psi = FockGridState.random(grid, 3, self.rng, max_particles=2)
            expected = self.composed(a, b, phi, psi)
            self.assertAlmostEqual(
                series.matrix_element(phi, psi), expected, delta=1e-10 * max(1.0, abs(expected))
            )

    def test_ordering_differs_by_the_pairing(self):
        grid = self.grid()
        a = DiscreteKernel.random(grid, 0, 1, self.rng)
        b = DiscreteKernel.random(grid, 1, 0, self.rng)
        difference = product_of_limits(a, b) - product_of_limits(b, a)
        pairing_term = np.sum(grid.weights * a.values * b.values)
        self.assertTrue(difference.order(1, 1).is_zero())
        self.assertAlmostEqual(complex(difference.order(0, 0).values), pairing_term, delta=1e-12)

    def test_fermionic_ordering_anticommutes(self):
        grid = self.grid(FERMI)
        a = DiscreteKernel.random(grid, 0, 1, self.rng)
        b = DiscreteKernel.random(grid, 1, 0, self.rng)
        forward = product_of_limits(a, b).order(1, 1)
        backward = product_of_limits(b, a).order(1, 1)
        np.testing.assert_allclose(forward.values, -backward.values, atol=1e-12)

    def test_two_leg_kernels_with_double_contractions(self):
        for statistics in (BOSE, FERMI):
            grid = self.grid(statistics)
            a = DiscreteKernel.random(grid, 1, 2, self.rng)
            b = DiscreteKernel.random(grid, 2, 0, self.rng)
            series = product_of_limits(a, b)
            self.assertEqual(sorted((k.l, k.m) for k in series), [(1, 0), (2, 1), (3, 2)])
            phi = FockGridState.random(grid, 4, self.rng, max_particles=1)
            psi = FockGridState.random(grid, 4, self.rng, max_particles=2)
            expected = self.composed(a, b, phi, psi)
            self.assertAlmostEqual(
                series.matrix_element(phi, psi), expected, delta=1e-10 * max(1.0, abs(expected))
            )

    def test_grid_mismatch(self):
        a = DiscreteKernel.random(self.grid(), 0, 1, self.rng)
        b = DiscreteKernel.random(MomentumGrid.trapezoid(3), 1, 0, self.rng)
        with self.assertRaises(GridError):
            product_of_limits(a, b)
