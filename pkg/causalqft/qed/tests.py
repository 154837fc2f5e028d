import math

import numpy as np
from django.test import SimpleTestCase

from causalqft.distributions.causal import METRIC, minkowski_square, scaling_fit
from causalqft.exceptions import ValidationError
from causalqft.splitting.engine import SplitSpec, SubtractionPoint

from .green import (
    OFF_SHELL,
    PI,
    SIGMA,
    NormalizationError,
    build_self_energy,
    build_vacuum_polarization,
    causal_imaginary_part,
    check_on_shell,
    parse_normalization,
    pi_density,
    sigma_densities,
)


class CausalImaginaryPartTest(SimpleTestCase):
    def test_vanishes_below_threshold(self):
        self.assertEqual(causal_imaginary_part(PI, 1.0, 3.9), 0.0)
        self.assertEqual(causal_imaginary_part(PI, 1.0, -2.0), 0.0)
        self.assertEqual(causal_imaginary_part(SIGMA, 1.0, 1.2, 0.1), (0.0, 0.0))

    def test_vacuum_polarization_trace_matches_closed_form(self):
        for s in [4.5, 8.0, 30.0, 500.0]:
            numeric = causal_imaginary_part(PI, 1.0, s)
            self.assertAlmostEqual(numeric, pi_density(1.0, s), delta=1e-9 * pi_density(1.0, s))

    def test_self_energy_trace_matches_closed_form(self):
        for s in [1.5, 4.0, 40.0]:
            a, b = causal_imaginary_part(SIGMA, 1.0, s, 0.3)
            expected_a, expected_b = sigma_densities(1.0, 0.3, s)
            self.assertAlmostEqual(a, expected_a, delta=1e-9)
            self.assertAlmostEqual(b, expected_b, delta=1e-9)

    def test_threshold_behaviour(self):
        # beta -> 0 at s = 4m^2, growing like sqrt(s - 4m^2)
        near = pi_density(1.0, 4.0 + 1e-6)
        nearer = pi_density(1.0, 4.0 + 1e-8)
        self.assertAlmostEqual(near / nearer, 10.0, delta=1e-3)

    def test_invalid_input(self):
        with self.assertRaises(ValidationError):
            causal_imaginary_part("Gamma", 1.0, 5.0)
        with self.assertRaises(ValidationError):
            causal_imaginary_part(PI, -1.0, 5.0)


class VacuumPolarizationTest(SimpleTestCase):
    def setUp(self):
        self.pi = build_vacuum_polarization(1.0)

    def test_on_shell_conditions(self):
        self.assertLess(abs(self.pi.scalar_part(0.0)), 1e-10)
        self.assertLess(abs(self.pi.slope(0.0)), 1e-10)
        self.assertTrue(all(c.passed for c in check_on_shell(self.pi)))

    def test_pi_over_p_squared_vanishes_at_zero(self):
        h = -1e-3
        extrapolated = 2 * self.pi(h / 2) / (h / 2) - self.pi(h) / h
        self.assertLess(abs(extrapolated), 1e-7)

    def test_real_below_threshold(self):
        for s in [-20.0, -1.0, 0.5, 3.0]:
            self.assertEqual(self.pi(s).imag, 0.0)

    def test_imaginary_part_above_threshold(self):
        for s in [5.0, 12.0, 60.0]:
            self.assertAlmostEqual(self.pi(s).imag, pi_density(1.0, s), delta=1e-12)

    def test_transversality(self):
        rng = np.random.default_rng(1729)
        momenta = rng.normal(scale=2.0, size=(1000, 4))
        # a fifth of the sample hugs the light cone from both sides
        near = momenta[:200]
        offsets = 10.0 ** rng.uniform(-8.0, -2.0, size=200) * rng.choice([-1.0, 1.0], size=200)
        near[:, 0] = np.linalg.norm(near[:, 1:], axis=1) * (1.0 + offsets)
        for p in momenta:
            tensor = self.pi.tensor(p)
            self.assertTrue(np.all(np.isfinite(tensor)))
            scale = max(1.0, np.max(np.abs(tensor))) * max(1.0, np.max(np.abs(p)))
            np.testing.assert_allclose((METRIC @ p) @ tensor, 0.0, atol=1e-12 * scale)

    def test_discontinuity_across_the_cut(self):
        s = 10.0
        extrapolated = 2 * self.pi.discontinuity(s, 0.01) - self.pi.discontinuity(s, 0.02)
        expected = pi_density(1.0, s)
        self.assertAlmostEqual(extrapolated.real, expected, delta=1e-3 * expected)

    def test_shifted_slope_breaks_the_derivative_condition(self):
        shifted = build_vacuum_polarization(
            1.0, SplitSpec(1, (0.0, 0.1), SubtractionPoint.zero())
        )
        conditions = check_on_shell(shifted)
        self.assertTrue(conditions[0].passed)
        self.assertFalse(conditions[1].passed)
        self.assertAlmostEqual(conditions[1].residual, 0.1, delta=1e-8)

    def test_constant_term_sets_the_value_at_zero(self):
        normalized = build_vacuum_polarization(
            1.0, {"normalization": [1.0, 0.0], "subtraction_point": "zero"}
        )
        self.assertAlmostEqual(normalized.scalar_part(0.0), 1.0, delta=1e-12)
        conditions = check_on_shell(normalized)
        self.assertFalse(conditions[0].passed)
        self.assertAlmostEqual(conditions[0].residual, 1.0, delta=1e-12)
        self.assertTrue(conditions[1].passed)

    def test_normalizations_differ_by_a_polynomial(self):
        other = build_vacuum_polarization(
            1.0, SplitSpec(1, (0.3, -0.2), SubtractionPoint.zero())
        )
        for s in [-5.0, 1.0, 6.0, 25.0]:
            self.assertAlmostEqual(other(s) - self.pi(s), 0.3 - 0.2 * s, delta=1e-9)

    def test_normalization_moves_the_tensor_by_a_polynomial(self):
        other = build_vacuum_polarization(
            1.0, SplitSpec(1, (0.3, -0.2), SubtractionPoint.zero())
        )
        unit = build_vacuum_polarization(
            1.0, {"normalization": [1.0, 0.0], "subtraction_point": "zero"}
        )
        for delta in (1e-2, 1e-4, 1e-6):
            p = np.array([1.0 + delta, 1.0, 0.0, 0.0])
            s = minkowski_square(p)
            transverse = np.outer(p, p) - s * np.linalg.inv(METRIC)
            difference = other.tensor(p) - self.pi.tensor(p)
            np.testing.assert_allclose(difference, transverse * (0.3 - 0.2 * s), atol=1e-9)
            # p^0 p^0 - p^2 g^00 = |p|^2, bounded on the light cone
            self.assertAlmostEqual((unit.tensor(p) - self.pi.tensor(p))[0, 0], 1.0, delta=1e-9)

    def test_subtraction_points_differ_by_a_polynomial(self):
        moved = build_vacuum_polarization(
            1.0, SplitSpec(1, subtraction_point=SubtractionPoint.at(-1.0))
        )
        xs = np.array([-6.0, -3.0, -1.5, 0.5, 2.0, 3.5])
        difference = np.array([(moved(s) - self.pi(s)).real for s in xs])
        fit = np.polyfit(xs, difference, 1)
        np.testing.assert_allclose(np.polyval(fit, xs), difference, atol=1e-8)

    def test_power_divergence_in_the_massless_limit(self):
        # twice subtracted at 0, Pi(-1) ~ 1 / (60 pi^2 m^2)
        for m in (1e-2, 1e-3):
            value = abs(build_vacuum_polarization(m).scalar_part(-1.0))
            self.assertAlmostEqual(60.0 * math.pi ** 2 * m * m * value, 1.0, delta=0.02)

    def test_logarithmic_growth_of_the_charge_part(self):
        def charge_part(m):
            pi = build_vacuum_polarization(m)
            # cancels the -p^2 Pi'(0) term, leaving -(1/pi) int rho / (t (t+1) (t+2))
            return (pi(-1.0) - pi(-2.0) / 2).real

        per_decade = math.log(10.0) / (12.0 * math.pi ** 2)
        self.assertAlmostEqual(charge_part(1e-2) - charge_part(1e-3), per_decade, delta=1e-3)

    def test_massless_on_shell_is_impossible(self):
        with self.assertRaisesRegex(NormalizationError, "on-shell normalization impossible"):
            build_vacuum_polarization(0.0)

    def test_massless_needs_a_negative_subtraction_point(self):
        for normalization in (
            OFF_SHELL,
            {"normalization": [0.0, 0.0], "subtraction_point": "zero"},
            SplitSpec(1, subtraction_point=SubtractionPoint.at(0.5)),
        ):
            with self.assertRaisesRegex(NormalizationError, "must lie below p\\^2 = 0") as raised:
                build_vacuum_polarization(0.0, normalization)
            self.assertNotIn("on-shell", str(raised.exception))

    def test_massless_off_shell_at_a_negative_point(self):
        massless = build_vacuum_polarization(
            0.0, SplitSpec(1, subtraction_point=SubtractionPoint.at(-1.0))
        )
        self.assertAlmostEqual(massless(-1.0), 0.0, delta=1e-12)

    def test_causal_distribution_scales_like_a_constant(self):
        distribution = self.pi.result.splitter.distribution
        fit = scaling_fit(distribution, [1.0, 0.0, 0.0, 0.0])
        self.assertAlmostEqual(fit.exponent, 0.0, delta=0.05)
        self.assertTrue(fit.confident)


class SelfEnergyTest(SimpleTestCase):
    def setUp(self):
        self.sigma = build_self_energy(1.0, 0.1)

    def test_on_shell_conditions(self):
        for condition in check_on_shell(self.sigma):
            self.assertLessEqual(condition.residual, 1e-8, condition.name)
            self.assertTrue(condition.passed)

    def test_matrix_vanishes_on_the_shell_spinor(self):
        p = np.array([1.0, 0.0, 0.0, 0.0])
        # Sigma acting on the positive-energy rest spinor, pslash u = m u
        spinor = np.array([1.0, 0.0, 0.0, 0.0])
        self.assertLess(np.max(np.abs(self.sigma.matrix(p) @ spinor)), 1e-8)

    def test_smooth_below_threshold(self):
        for s in [-3.0, 0.0, 0.9, 1.1]:
            self.assertEqual(self.sigma.a(s).imag, 0.0)
            self.assertEqual(self.sigma.b(s).imag, 0.0)
            a_prime, b_prime = self.sigma.derivatives(s)
            self.assertTrue(np.isfinite(abs(a_prime)) and np.isfinite(abs(b_prime)))

    def test_imaginary_parts_above_threshold(self):
        for s in [2.0, 9.0]:
            rho_a, rho_b = sigma_densities(1.0, 0.1, s)
            self.assertAlmostEqual(self.sigma.a(s).imag, rho_a, delta=1e-12)
            self.assertAlmostEqual(self.sigma.b(s).imag, rho_b, delta=1e-12)

    def test_mass_scaling_off_shell(self):
        base = build_self_energy(1.0, 0.1, OFF_SHELL)
        scaled = build_self_energy(2.0, 0.2, OFF_SHELL)
        for s in [-2.0, 0.5, 3.0]:
            self.assertAlmostEqual(scaled.a(4 * s), 2 * base.a(s), delta=1e-7)
            self.assertAlmostEqual(scaled.b(4 * s), base.b(s), delta=1e-7)

    def test_off_shell_normalization_fails_the_check(self):
        off_shell = build_self_energy(1.0, 0.1, OFF_SHELL)
        self.assertFalse(all(c.passed for c in check_on_shell(off_shell)))

    def test_default_photon_mass_comes_from_settings(self):
        with self.settings(PHOTON_MASS_RATIO=0.2):
            self.assertAlmostEqual(build_self_energy(1.0).photon_mass, 0.2)

    def test_on_shell_needs_a_photon_mass(self):
        with self.assertRaises(NormalizationError):
            build_self_energy(1.0, 0.0)

    def test_subtraction_point_inside_the_cut(self):
        spec = SplitSpec(1, subtraction_point=SubtractionPoint.at(5.0))
        with self.assertRaises(NormalizationError):
            build_self_energy(1.0, 0.1, spec)


class NormalizationParsingTest(SimpleTestCase):
    def test_named_normalizations(self):
        self.assertEqual(parse_normalization(OFF_SHELL, 1).subtraction_point, SubtractionPoint.zero())
        with self.assertRaises(NormalizationError):
            parse_normalization("dimensional", 1)

    def test_check_on_shell_rejects_other_objects(self):
        with self.assertRaises(ValidationError):
            check_on_shell(object())
