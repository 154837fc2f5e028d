import numpy as np
from django.test import SimpleTestCase

from causalqft.distributions.causal import (
    ADVANCED,
    RETARDED,
    CausalDistribution,
    pauli_jordan,
    scaling_degree_estimate,
)

from .engine import (
    SplitError,
    SplitSpec,
    SubtractionPoint,
    ambiguity_dimension,
    split,
    split_on_lattice,
)
from .toys import decaying_toy, quadratic_toy


class AmbiguityDimensionTest(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(ambiguity_dimension(-2), 0)
        self.assertEqual(ambiguity_dimension(-1), 0)
        self.assertEqual(ambiguity_dimension(0), 1)
        self.assertEqual(ambiguity_dimension(2), 3)


class DecayingToySplitTest(SimpleTestCase):
    def setUp(self):
        self.result = split(decaying_toy(), SplitSpec(-1))

    def test_retarded_part_is_the_transform_of_theta_exp(self):
        for w in [-7.0, -1.3, -0.2, 0.0, 0.4, 1.0, 2.5, 11.0]:
            self.assertAlmostEqual(self.result.retarded(w), 1.0 / (1.0 - 1j * w), delta=1e-8)
            self.assertAlmostEqual(self.result.advanced(w), 1.0 / (1.0 + 1j * w), delta=1e-8)

    def test_support_tags(self):
        self.assertEqual(self.result.retarded.support_tag, RETARDED)
        self.assertEqual(self.result.advanced.support_tag, ADVANCED)

    def test_reconstruction(self):
        self.assertLessEqual(
            self.result.reconstruction_error([-3.0, -0.5, 0.0, 0.7, 4.0]), 1e-8
        )

    def test_resplitting_the_difference(self):
        recombined = CausalDistribution(
            lambda w: self.result.retarded(w) - self.result.advanced(w), "t", omega=-1
        )
        again = split(recombined, SplitSpec(-1))
        for w in [-2.0, 0.3, 1.7]:
            self.assertAlmostEqual(again.retarded(w), self.result.retarded(w), delta=1e-8)

    def test_analytic_in_the_upper_half_plane(self):
        # retarded support in time means analyticity above the real frequency axis
        z = complex(0.3, 0.5)
        value = self.result.splitter.off_axis(z.real, z.imag)
        self.assertAlmostEqual(value, 1.0 / (1.0 - 1j * z), delta=1e-8)
        below = self.result.splitter.off_axis(0.3, -0.5)
        z = complex(0.3, -0.5)
        self.assertAlmostEqual(below, 1.0 / (1.0 + 1j * z), delta=1e-8)

    def test_singularity_order_is_preserved(self):
        direction = [1.0, 0.0, 0.0, 0.0]
        original = scaling_degree_estimate(decaying_toy(), direction)
        self.assertAlmostEqual(
            scaling_degree_estimate(self.result.retarded, direction), original, delta=0.2
        )
        self.assertAlmostEqual(
            scaling_degree_estimate(self.result.advanced, direction), original, delta=0.2
        )

    def test_constants_are_ignored_below_order_zero(self):
        with self.assertLogs("causalqft.splitting.engine", "WARNING"):
            spec = SplitSpec(-1, (1.0,))
        self.assertEqual(spec.normalization, ())


class LatticeSplitTest(SimpleTestCase):
    def test_step_function_split_of_the_decaying_toy(self):
        times = np.linspace(-4.0, 4.0, 81)
        values = np.sign(times) * np.exp(-np.abs(times))
        retarded, advanced = split_on_lattice(times, values, -1)
        expected = np.where(times > 0, np.exp(-times), 0.0)
        np.testing.assert_allclose(retarded, expected, atol=1e-8)
        np.testing.assert_allclose(retarded - advanced, values, atol=1e-15)
        self.assertTrue(np.all(retarded[times < 0] == 0))

    def test_step_function_needs_negative_order(self):
        with self.assertRaises(SplitError):
            split_on_lattice([0.0, 1.0], [0.0, 1.0], 0)


class QuadraticToySplitTest(SimpleTestCase):
    samples = [-3.0, -1.8, -0.6, 0.3, 0.8, 1.5, 2.2, 4.0]

    def test_constants_shift_by_a_polynomial(self):
        first = split(quadratic_toy(), SplitSpec(2, (0.0, 0.0, 0.0), SubtractionPoint.zero()))
        second = split(quadratic_toy(), SplitSpec(2, (1.0, -2.0, 0.5j), SubtractionPoint.zero()))
        xs = np.array(self.samples)
        difference = np.array([second.retarded(x) - first.retarded(x) for x in xs])
        fit = np.polyfit(xs, difference, 2)
        residual = np.max(np.abs(np.polyval(fit, xs) - difference))
        self.assertLessEqual(residual, 1e-6)
        np.testing.assert_allclose(fit[::-1], [1.0, -2.0, 0.5j], atol=1e-6)

    def test_subtraction_points_differ_by_a_polynomial(self):
        at_zero = split(quadratic_toy(), SplitSpec(2, subtraction_point=SubtractionPoint.zero()))
        at_half = split(quadratic_toy(), SplitSpec(2, subtraction_point=SubtractionPoint.at(0.5)))
        xs = np.array(self.samples)
        difference = np.array([at_half.retarded(x) - at_zero.retarded(x) for x in xs])
        fit = np.polyfit(xs, difference, 2)
        scale = max(1.0, np.max(np.abs(difference)))
        self.assertLessEqual(np.max(np.abs(np.polyval(fit, xs) - difference)), 1e-6 * scale)

    def test_normalization_conditions_at_the_subtraction_point(self):
        result = split(quadratic_toy(), SplitSpec(2, (0.25, 0.0, 0.0), SubtractionPoint.zero()))
        self.assertAlmostEqual(result.retarded(0.0), 0.25, delta=1e-12)
        self.assertAlmostEqual(result.splitter.derivative(0.0), 0.0, delta=1e-10)

    def test_derivative_matches_a_central_difference(self):
        result = split(quadratic_toy(), SplitSpec(2, (0.0, 1.0, 0.5), SubtractionPoint.zero()))
        x, h = 0.5, 1e-4
        difference = (result.retarded(x + h) - result.retarded(x - h)) / (2 * h)
        self.assertAlmostEqual(result.splitter.derivative(x), difference, delta=1e-6)

    def test_reconstruction(self):
        result = split(quadratic_toy(), SplitSpec(2, (0.0, 1.0, 0.0)))
        self.assertLessEqual(result.reconstruction_error(self.samples), 1e-8)

    def test_boundary_value_of_the_off_axis_integral(self):
        splitter = split(quadratic_toy(), SplitSpec(2, (0.0, 0.0, 0.0))).splitter
        x = 2.2
        extrapolated = 2 * splitter.off_axis(x, 0.005) - splitter.off_axis(x, 0.01)
        exact = splitter.retarded(x)
        self.assertAlmostEqual(extrapolated, exact, delta=1e-3 * abs(exact))

    def test_missing_normalization(self):
        with self.assertRaises(SplitError):
            split(quadratic_toy(), SplitSpec(2))

    def test_wrong_number_of_constants(self):
        with self.assertRaises(SplitError):
            SplitSpec(2, (1.0, 2.0))


class SplitValidationTest(SimpleTestCase):
    def test_non_causal_input(self):
        d = CausalDistribution(lambda w: 1.0, "t", omega=-1, support_tag=RETARDED)
        with self.assertRaises(SplitError):
            split(d, SplitSpec(-1))

    def test_shell_measures_cannot_be_split(self):
        with self.assertRaises(SplitError):
            split(pauli_jordan(1.0), SplitSpec(-2))

    def test_subtraction_point_parsing(self):
        self.assertEqual(SubtractionPoint.parse("zero"), SubtractionPoint.zero())
        self.assertEqual(SubtractionPoint.parse({"mass_shell": 1.0}).location("s"), 1.0)
        self.assertEqual(SubtractionPoint.parse("mass_shell(2)").location("s"), 4.0)
        self.assertEqual(SubtractionPoint.parse(-3.0).location("s"), -3.0)
        with self.assertRaises(SplitError):
            SubtractionPoint.parse("halfway")

    def test_spec_from_json(self):
        spec = SplitSpec.from_json(
            {"omega": 1, "normalization": [[1, 0], 2.5], "subtraction_point": "zero"}
        )
        self.assertEqual(spec.normalization, (1 + 0j, 2.5 + 0j))
        self.assertEqual(SplitSpec.from_json(spec.to_json()), spec)
        with self.assertRaises(SplitError):
            SplitSpec.from_json({"normalization": []})
