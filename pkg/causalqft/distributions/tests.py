import math

import numpy as np
from django.test import SimpleTestCase

from causalqft.exceptions import NumericError

from .causal import (
    ADVANCED,
    RETARDED,
    CausalDistribution,
    DistributionError,
    ExternalLineSpec,
    PoleError,
    from_json,
    minkowski_square,
    pauli_jordan,
    ret_adv_commutation,
    scaling_degree_estimate,
    scaling_fit,
    shell_pairing,
    singularity_bound,
    slash,
)
from .quadrature import principal_value, quad, quad_complex


class SingularityBoundTest(SimpleTestCase):
    def test_self_energy(self):
        self.assertEqual(singularity_bound(ExternalLineSpec(fermion_lines=2)), 1)

    def test_vacuum_polarization(self):
        self.assertEqual(singularity_bound(ExternalLineSpec(photon_lines=2)), 2)

    def test_yang_mills_boson_lines(self):
        self.assertEqual(singularity_bound(ExternalLineSpec(boson_lines=2), "yangmills"), 2)

    def test_vertex_function(self):
        spec = ExternalLineSpec(fermion_lines=2, photon_lines=1)
        self.assertEqual(singularity_bound(spec, "spinorQED"), 0)

    def test_bound_decreases_with_every_line(self):
        for base in [(0, 0, 0), (1, 0, 0), (2, 1, 0), (0, 2, 1)]:
            start = singularity_bound(ExternalLineSpec(*base))
            for position in range(3):
                grown = list(base)
                grown[position] += 1
                self.assertLess(singularity_bound(ExternalLineSpec(*grown)), start)

    def test_negative_counts_are_rejected(self):
        with self.assertRaises(DistributionError):
            ExternalLineSpec(fermion_lines=-1)

    def test_unknown_theory(self):
        with self.assertRaises(DistributionError):
            singularity_bound(ExternalLineSpec(), "phi4")


class ScalingDegreeTest(SimpleTestCase):
    direction = np.array([1.0, 0.3, 0.1, 0.0])

    def test_quadratic_growth(self):
        d = CausalDistribution(
            lambda p: minkowski_square(p) * (2.0 + 1.0 / (1.0 + abs(p[0]))), label="p2"
        )
        self.assertAlmostEqual(scaling_degree_estimate(d, self.direction), 2.0, delta=0.1)

    def test_constant(self):
        d = CausalDistribution(lambda p: 3.0 - 1j)
        self.assertAlmostEqual(scaling_degree_estimate(d, self.direction), 0.0, delta=0.01)

    def test_product_adds_exponents(self):
        first = CausalDistribution(lambda s: s * (1.0 + 1.0 / (1.0 + abs(s))), "s")
        second = CausalDistribution(lambda s: math.sqrt(abs(s)) + 1j, "s")
        both = CausalDistribution(lambda s: first(s) * second(s), "s")
        total = scaling_degree_estimate(both, self.direction)
        parts = scaling_degree_estimate(first, self.direction) + scaling_degree_estimate(
            second, self.direction
        )
        self.assertAlmostEqual(total, parts, delta=0.2)

    def test_wobbling_growth_is_low_confidence(self):
        d = CausalDistribution(
            lambda t: t ** 2 * (1.0 + 0.95 * math.sin(6.0 * math.log(t))), "t"
        )
        with self.assertLogs("causalqft.distributions.causal", "WARNING"):
            fit = scaling_fit(d, [1.0, 0, 0, 0])
        self.assertFalse(fit.confident)

    def test_too_few_samples(self):
        with self.assertRaises(DistributionError):
            scaling_fit(CausalDistribution(lambda p: 1.0), self.direction, samples=4)

    def test_vanishing_along_the_ray(self):
        with self.assertRaises(NumericError):
            scaling_fit(CausalDistribution(lambda p: 0.0), self.direction)


class PauliJordanTest(SimpleTestCase):
    def test_shell_points(self):
        shell = pauli_jordan(1.0).shell
        spatial = np.array([0.3, 0.0, 0.4])
        points = shell.points(spatial)
        energy = math.sqrt(1.25)
        self.assertAlmostEqual(points[0][0], energy)
        self.assertAlmostEqual(points[1][0], -energy)

    def test_antisymmetry(self):
        shell = pauli_jordan(0.5).shell
        spatial = np.array([0.0, 1.0, 0.0])
        energy = shell.energy(spatial)
        self.assertEqual(shell.value(-energy, spatial), -shell.value(energy, spatial))
        self.assertEqual(shell.value(0.1, spatial), 0)

    def test_measure_has_no_pointwise_values(self):
        with self.assertRaises(DistributionError):
            pauli_jordan(1.0)(np.zeros(4))

    def test_negative_mass(self):
        with self.assertRaises(DistributionError):
            pauli_jordan(-1.0)

    def test_smeared_massless_commutator_matches_position_space(self):
        t0 = 1.0

        def test_hat(p0, k):
            return (
                math.sqrt(2 * math.pi)
                * math.exp(-p0 * p0 / 2)
                * np.exp(1j * p0 * t0)
                * (2 * math.pi) ** 1.5
                * math.exp(-k * k / 2)
            )

        def f(t, r):
            return math.exp(-((t - t0) ** 2) / 2 - r * r / 2)

        # D_0(x) = sgn(t) delta(x^2) / (2 pi) leaves the light-cone integral
        position = quad(lambda r: r * (f(r, r) - f(-r, r)), 0.0, 20.0)
        momentum = shell_pairing(pauli_jordan(0.0), test_hat)
        self.assertAlmostEqual(momentum.real, position, delta=1e-6)
        self.assertAlmostEqual(momentum.imag, 0.0, delta=1e-6)


class PropagatorTest(SimpleTestCase):
    def test_static_limit(self):
        self.assertAlmostEqual(ret_adv_commutation("Dret", 1.5, np.zeros(4)), 1 / 2.25)

    def test_pole_without_prescription(self):
        on_shell = np.array([math.sqrt(1.25), 0.5, 0.0, 0.0])
        with self.assertRaises(PoleError):
            ret_adv_commutation("Dret", 1.0, on_shell)
        self.assertTrue(np.isfinite(ret_adv_commutation("Dret", 1.0, on_shell, eps=1e-3)))

    def test_retarded_minus_advanced_gives_shell_weights(self):
        mass, k = 1.0, 0.5
        energy = math.sqrt(mass ** 2 + k ** 2)

        def g(p0):
            return math.exp(-((p0 - 0.3) ** 2))

        def smeared(eps):
            def integrand(p0):
                p = np.array([p0, 0.0, 0.0, k])
                difference = ret_adv_commutation("Dret", mass, p, eps) - ret_adv_commutation(
                    "Dav", mass, p, eps
                )
                return difference * g(p0)

            return quad_complex(integrand, -10.0, 10.0, points=[-energy, energy])

        extrapolated = 2 * smeared(0.01) - smeared(0.02)
        expected = math.pi * 1j / energy * (g(energy) - g(-energy))
        self.assertAlmostEqual(extrapolated, expected, delta=1e-3 * abs(expected))

    def test_feynman_agrees_with_retarded_off_shell(self):
        p = np.array([2.0, 0.0, 0.5, 0.0])
        self.assertAlmostEqual(
            ret_adv_commutation("Feynman", 1.0, p, 1e-9),
            ret_adv_commutation("Dret", 1.0, p, 1e-9),
            delta=1e-7,
        )

    def test_dirac_numerator(self):
        p = np.array([1.7, 0.2, -0.4, 0.1])
        retarded = ret_adv_commutation("Sret", 1.0, p, 1e-3)
        scalar = ret_adv_commutation("Dret", 1.0, p, 1e-3)
        np.testing.assert_allclose(retarded, (np.eye(4) + slash(p)) * scalar)
        np.testing.assert_allclose(slash(p) @ slash(p), minkowski_square(p) * np.eye(4), atol=1e-12)

    def test_unknown_kind(self):
        with self.assertRaises(DistributionError):
            ret_adv_commutation("Dsym", 1.0, np.zeros(4))

    def test_descriptor_from_json(self):
        d = from_json({"kind": "Dav", "mass": 2.0, "eps": 0.1})
        self.assertEqual(d.support_tag, ADVANCED)
        self.assertEqual(from_json({"kind": "Sret", "mass": 1.0}).support_tag, RETARDED)
        self.assertIsNotNone(from_json({"kind": "pauli_jordan", "mass": 0}).shell)
        with self.assertRaises(DistributionError):
            from_json({"mass": 1.0})


class QuadratureTest(SimpleTestCase):
    def test_principal_value(self):
        # PV int_{-1}^{1} dx / (x - 0.5) = log(1/3)
        self.assertAlmostEqual(
            principal_value(lambda x: 1.0, -1.0, 1.0, 0.5), math.log(1.0 / 3.0), delta=1e-10
        )
