import math

import numpy as np
from django.test import SimpleTestCase
from scipy import integrate

from .grid import (
    BOSE,
    FERMI,
    FockGridState,
    GridError,
    MomentumGrid,
    TruncationError,
    apply_annihilation,
    apply_creation,
    inner_product,
    occupation_basis,
    pairing,
)
from .kernels import (
    DiscreteKernel,
    adjoint_kernel,
    apply_kernel,
    commutator_check,
    eta_pairing,
    free_field_kernels,
    xi_matrix_element,
)


def dense_ladder(grid, cutoff):
    """Oracle: annihilation matrices on the truncated occupation basis, built
    mode by mode with explicit Jordan-Wigner strings."""
    basis = list(occupation_basis(grid, cutoff))
    index = {occ: k for k, occ in enumerate(basis)}
    matrices = []
    for mode in range(len(grid)):
        a = np.zeros((len(basis), len(basis)))
        for occ in basis:
            n = occ[mode]
            if n == 0:
                continue
            target = list(occ)
            target[mode] -= 1
            string = 1
            if grid.statistics[mode] == FERMI:
                string = (-1) ** sum(
                    occ[k] for k in range(mode) if grid.statistics[k] == FERMI
                )
            a[index[tuple(target)], index[occ]] = string * math.sqrt(n)
        matrices.append(a / math.sqrt(grid.weights[mode]))
    return basis, matrices


def to_vector(state, basis):
    return np.array([state.amplitude(occ) for occ in basis])


class LadderOperatorTest(SimpleTestCase):
    def setUp(self):
        self.grid = MomentumGrid.trapezoid(4, statistics=BOSE)
        self.fermi_grid = MomentumGrid.trapezoid(4, statistics=FERMI)

    def test_annihilating_the_vacuum_gives_zero(self):
        vacuum = FockGridState.vacuum(self.grid, 3)
        self.assertTrue(apply_annihilation(2, vacuum).is_zero())

    def test_delta_normalization(self):
        state = FockGridState.single_particle(self.grid, 1, 3)
        lowered = apply_annihilation(1, state)
        self.assertAlmostEqual(
            lowered.amplitude((0, 0, 0, 0)), 1.0 / self.grid.weights[1], delta=1e-12
        )

    def test_orthogonal_modes(self):
        state = FockGridState.single_particle(self.grid, 1, 3)
        self.assertTrue(apply_annihilation(2, state).is_zero())

    def test_first_quantum(self):
        created = apply_creation(0, FockGridState.vacuum(self.grid, 3))
        self.assertEqual(created.particle_numbers(), [1])
        self.assertAlmostEqual(
            created.amplitude((1, 0, 0, 0)),
            1.0 / math.sqrt(self.grid.weights[0]),
            delta=1e-12,
        )

    def test_pauli_exclusion(self):
        vacuum = FockGridState.vacuum(self.fermi_grid, 3)
        twice = apply_creation(2, apply_creation(2, vacuum))
        self.assertTrue(twice.is_zero())

    def test_bose_double_creation_matches_dense_oracle(self):
        basis, matrices = dense_ladder(self.grid, 2)
        vacuum = FockGridState.vacuum(self.grid, 2)
        twice = apply_creation(3, apply_creation(3, vacuum))
        dense = matrices[3].T @ matrices[3].T @ to_vector(vacuum, basis)
        np.testing.assert_allclose(to_vector(twice, basis), dense, atol=1e-12)
        norm = math.sqrt(inner_product(twice, twice).real)
        self.assertAlmostEqual(norm, math.sqrt(2.0) / self.grid.weights[3], delta=1e-10)

    def test_ladder_operators_match_dense_oracle_on_mixed_grid(self):
        grid = MomentumGrid.trapezoid(4, statistics=[FERMI, BOSE, FERMI, FERMI])
        basis, matrices = dense_ladder(grid, 3)
        rng = np.random.default_rng(7)
        state = FockGridState.random(grid, 3, rng, max_particles=2)
        for mode in range(4):
            np.testing.assert_allclose(
                to_vector(apply_annihilation(mode, state), basis),
                matrices[mode] @ to_vector(state, basis),
                atol=1e-12,
            )
            np.testing.assert_allclose(
                to_vector(apply_creation(mode, state), basis),
                matrices[mode].T @ to_vector(state, basis),
                atol=1e-12,
            )

    def test_cutoff_is_signalled(self):
        state = FockGridState.basis(self.grid, (1, 1, 0, 0), 2)
        with self.assertRaises(TruncationError):
            apply_creation(0, state)

    def test_invalid_mode(self):
        with self.assertRaises(GridError):
            apply_annihilation(9, FockGridState.vacuum(self.grid, 2))

    def test_json_round_trip_keeps_amplitudes(self):
        rng = np.random.default_rng(1)
        state = FockGridState.random(self.fermi_grid, 2, rng)
        again = FockGridState.from_json(state.to_json())
        self.assertEqual(again.amplitudes, state.amplitudes)
        self.assertEqual(again.grid.statistics, self.fermi_grid.statistics)


class GridValidationTest(SimpleTestCase):
    def test_weights_must_be_positive(self):
        with self.assertRaises(GridError):
            MomentumGrid([((0, 0, 1),), ((0, 0, 2),)], [1.0, 0.0], BOSE)

    def test_points_must_be_distinct(self):
        with self.assertRaises(GridError):
            MomentumGrid([((0, 0, 1),), ((0, 0, 1),)], [1.0, 1.0], BOSE)


class EtaPairingTest(SimpleTestCase):
    def setUp(self):
        self.grid = MomentumGrid.trapezoid(3, statistics=BOSE)

    def test_empty_operator_string_is_the_plain_pairing(self):
        rng = np.random.default_rng(3)
        phi = FockGridState.random(self.grid, 2, rng)
        psi = FockGridState.random(self.grid, 2, rng)
        self.assertAlmostEqual(eta_pairing(0, 0, (), phi, psi), pairing(phi, psi))

    def test_single_annihilator(self):
        phi = FockGridState.single_particle(self.grid, 1, 2)
        vacuum = FockGridState.vacuum(self.grid, 2)
        for q in range(3):
            expected = 1.0 / self.grid.weights[1] if q == 1 else 0.0
            self.assertAlmostEqual(eta_pairing(0, 1, (q,), phi, vacuum), expected)

    def test_particle_number_mismatch(self):
        vacuum = FockGridState.vacuum(self.grid, 2)
        self.assertEqual(eta_pairing(1, 0, (0,), vacuum, vacuum), 0)
        self.assertEqual(eta_pairing(2, 1, (0, 1, 2), vacuum, vacuum), 0)

    def test_too_many_operators(self):
        vacuum = FockGridState.vacuum(self.grid, 1)
        with self.assertRaises(TruncationError):
            eta_pairing(2, 1, (0, 1, 2), vacuum, vacuum)


class XiMatrixElementTest(SimpleTestCase):
    def setUp(self):
        self.grid = MomentumGrid.trapezoid(3, statistics=BOSE)
        self.rng = np.random.default_rng(11)

    def test_zero_kernel(self):
        phi = FockGridState.random(self.grid, 2, self.rng)
        psi = FockGridState.random(self.grid, 2, self.rng)
        self.assertEqual(xi_matrix_element(DiscreteKernel.zeros(self.grid, 1, 1), phi, psi), 0)

    def test_single_mode_creation_kernel(self):
        values = np.zeros(3, dtype=complex)
        values[2] = 0.5 - 1j
        kernel = DiscreteKernel(self.grid, 1, 0, values)
        phi = FockGridState.random(self.grid, 3, self.rng, max_particles=2)
        psi = FockGridState.random(self.grid, 3, self.rng)
        direct = self.grid.weights[2] * values[2] * pairing(apply_creation(2, phi), psi)
        self.assertAlmostEqual(xi_matrix_element(kernel, phi, psi), direct, delta=1e-12)

    def test_free_field_mode_sum(self):
        mass = 0.7

        def test_function(p0, p):
            return math.exp(-float(p @ p)) * (1.0 + 0.3j * p0)

        creation, annihilation = free_field_kernels(self.grid, test_function, mass)
        vacuum = FockGridState.vacuum(self.grid, 2)
        for mode in range(3):
            occupation = [0, 0, 0]
            occupation[mode] = 1
            one = FockGridState.basis(self.grid, occupation, 2)
            element = xi_matrix_element(creation, vacuum, one) + xi_matrix_element(
                annihilation, vacuum, one
            )
            p = np.asarray(self.grid.points[mode].momentum)
            energy = math.sqrt(float(p @ p) + mass ** 2)
            expected = (
                math.sqrt(self.grid.weights[mode])
                * test_function(-energy, -p)
                / math.sqrt(2 * energy * (2 * math.pi) ** 3)
            )
            self.assertAlmostEqual(element, expected, delta=1e-12)

    def test_pairing_formula_matches_ladder_application(self):
        worst = 0.0
        for trial in range(100):
            l, m = trial % 3, (trial // 3) % 3
            kernel = DiscreteKernel.random(self.grid, l, m, self.rng)
            phi = FockGridState.random(self.grid, 4, self.rng, max_particles=2)
            psi = FockGridState.random(self.grid, 4, self.rng)
            via_eta = xi_matrix_element(kernel, phi, psi)
            direct = pairing(apply_kernel(kernel, phi), psi)
            worst = max(worst, abs(via_eta - direct) / max(1.0, abs(direct)))
        self.assertLessEqual(worst, 1e-10)

    def test_linearity_in_the_kernel(self):
        a = DiscreteKernel.random(self.grid, 1, 1, self.rng)
        b = DiscreteKernel.random(self.grid, 1, 1, self.rng)
        phi = FockGridState.random(self.grid, 2, self.rng)
        psi = FockGridState.random(self.grid, 2, self.rng)
        combined = xi_matrix_element(a + b * 2.0, phi, psi)
        separate = xi_matrix_element(a, phi, psi) + 2.0 * xi_matrix_element(b, phi, psi)
        self.assertAlmostEqual(combined, separate, delta=1e-10)

    def test_conjugate_symmetry_under_adjoint_kernel(self):
        for l, m in [(1, 0), (0, 2), (2, 1)]:
            kernel = DiscreteKernel.random(self.grid, l, m, self.rng)
            phi = FockGridState.random(self.grid, 3, self.rng)
            psi = FockGridState.random(self.grid, 3, self.rng)
            lhs = xi_matrix_element(kernel, phi, psi)
            rhs = xi_matrix_element(adjoint_kernel(kernel), psi.conjugate(), phi.conjugate())
            self.assertAlmostEqual(lhs, rhs.conjugate(), delta=1e-9 * max(1, abs(lhs)))

    def test_fermionic_adjoint(self):
        grid = MomentumGrid.trapezoid(3, statistics=FERMI)
        kernel = DiscreteKernel.random(grid, 2, 1, self.rng)
        phi = FockGridState.random(grid, 3, self.rng)
        psi = FockGridState.random(grid, 3, self.rng)
        lhs = xi_matrix_element(kernel, phi, psi)
        rhs = xi_matrix_element(adjoint_kernel(kernel), psi.conjugate(), phi.conjugate())
        self.assertAlmostEqual(lhs, rhs.conjugate(), delta=1e-9 * max(1, abs(lhs)))

    def test_grid_refinement_converges_quadratically(self):
        def element(n):
            grid = MomentumGrid.trapezoid(n, p_min=0.1, p_max=2.0)
            pz = np.array([p.momentum[2] for p in grid.points])
            f = np.exp(-pz ** 2)
            kernel = DiscreteKernel(grid, 1, 1, np.outer(f, f))
            phi = FockGridState(
                grid,
                {
                    tuple(int(k == j) for k in range(n)): math.cos(pz[j])
                    * math.sqrt(grid.weights[j])
                    for j in range(n)
                },
                1,
            )
            psi = FockGridState(
                grid,
                {
                    tuple(int(k == j) for k in range(n)): math.sqrt(grid.weights[j])
                    for j in range(n)
                },
                1,
            )
            return xi_matrix_element(kernel, phi, psi).real

        left = integrate.quad(lambda p: math.exp(-p * p), 0.1, 2.0)[0]
        right = integrate.quad(lambda q: math.exp(-q * q) * math.cos(q), 0.1, 2.0)[0]
        exact = left * right
        errors = [abs(element(n) - exact) for n in (9, 17, 33)]
        self.assertLess(errors[1], errors[0] / 3.0)
        self.assertLess(errors[2], errors[1] / 3.0)


class CommutationRelationTest(SimpleTestCase):
    def test_bose_six_modes(self):
        grid = MomentumGrid.trapezoid(6, statistics=BOSE)
        self.assertLessEqual(commutator_check(grid, 3), 1e-12)

    def test_fermi_six_modes(self):
        grid = MomentumGrid.trapezoid(6, statistics=FERMI)
        self.assertLessEqual(commutator_check(grid, 3), 1e-12)

    def test_distinct_bose_modes_commute_exactly(self):
        grid = MomentumGrid.trapezoid(3, statistics=BOSE)
        vacuum = FockGridState.basis(grid, (1, 0, 1), 3)
        forward = apply_annihilation(0, apply_creation(1, vacuum))
        backward = apply_creation(1, apply_annihilation(0, vacuum))
        self.assertTrue((forward - backward).is_zero())

    def test_fermi_anticommutator_on_the_diagonal(self):
        grid = MomentumGrid.trapezoid(3, statistics=FERMI)
        state = FockGridState.basis(grid, (1, 0, 0), 3)
        combined = apply_annihilation(1, apply_creation(1, state)) + apply_creation(
            1, apply_annihilation(1, state)
        )
        self.assertAlmostEqual(
            combined.amplitude((1, 0, 0)), 1.0 / grid.weights[1], delta=1e-12
        )

    def test_cutoff_below_two_is_rejected(self):
        with self.assertRaises(GridError):
            commutator_check(MomentumGrid.trapezoid(3), 1)


class KreinAdjointTest(SimpleTestCase):
    def test_eta_conjugated_adjoint(self):
        grid = MomentumGrid.trapezoid(3, statistics=BOSE, krein_sign=[1, -1, -1])
        rng = np.random.default_rng(5)
        for mode in range(3):
            phi = FockGridState.random(grid, 3, rng)
            psi = FockGridState.random(grid, 3, rng, max_particles=2)
            lhs = inner_product(apply_annihilation(mode, phi), psi, krein=True)
            rhs = grid.krein_sign[mode] * inner_product(
                phi, apply_creation(mode, psi), krein=True
            )
            self.assertAlmostEqual(lhs, rhs, delta=1e-10)

    def test_krein_pairing_changes_sign_of_odd_photon_sectors(self):
        grid = MomentumGrid.trapezoid(2, statistics=BOSE, krein_sign=[-1, 1])
        one = FockGridState.basis(grid, (1, 0), 2)
        self.assertEqual(inner_product(one, one, krein=True), -1)
        self.assertEqual(inner_product(one, one), 1)
