import sympy
from django.test import SimpleTestCase

from causalqft.grassmann.signs import GradedVar, reorder_sign

from .algebra import (
    ANNIHILATION,
    CREATION,
    DEFAULT_RULES,
    Dplus,
    FieldKind,
    FieldLeg,
    Gamma,
    Sminus,
    Splus,
    WickError,
    WickMonomial,
    WickPolynomial,
    contractions,
    field,
    first_order,
    normal_order,
    operator_product,
    qed_source_terms,
    qed_vertex,
    scalar_power,
    vacuum_expectation,
    wick_product,
)


def bubble_expand(coefficient, legs, rules=DEFAULT_RULES):
    """Oracle: normal-order an operator string by adjacent exchanges.

    Whenever an annihilation leg stands left of a creation leg the pair is
    swapped (with a sign for two fermions) and, if the fields pair, the
    contracted string is added. No contraction enumeration is involved.
    """
    legs = tuple(legs)
    for k in range(len(legs) - 1):
        left, right = legs[k], legs[k + 1]
        if left.character == ANNIHILATION and right.character == CREATION:
            swap = -1 if left.is_fermi and right.is_fermi else 1
            swapped = legs[:k] + (right, left) + legs[k + 2 :]
            result = bubble_expand(swap * coefficient, swapped, rules)
            if rules.can_contract(left, right):
                contracted = legs[:k] + legs[k + 2 :]
                value = rules.contract(left, right)
                result = result + bubble_expand(coefficient * value, contracted, rules)
            return result
    return WickPolynomial([WickMonomial(coefficient, legs)])


def oracle_product(a, b):
    total = WickPolynomial.zero()
    for left in a.terms:
        for right in b.terms:
            total = total + bubble_expand(
                left.coefficient * right.coefficient, left.legs + right.legs
            )
    return total


class WickProductTest(SimpleTestCase):
    def test_single_field_is_itself(self):
        phi = field(FieldKind.SCALAR, "x1")
        self.assertEqual(wick_product([phi]), phi)

    def test_scalar_square_groups_into_three_terms(self):
        phi = field(FieldKind.SCALAR, "x1")
        square = wick_product([phi, phi])
        self.assertEqual(len(square), 3)
        mixed = (
            FieldLeg(FieldKind.SCALAR, CREATION, "x1"),
            FieldLeg(FieldKind.SCALAR, ANNIHILATION, "x1"),
        )
        self.assertEqual(square.coefficient(mixed), 2)
        self.assertEqual(square.coefficient(mixed[:1] * 2), 1)

    def test_qed_vertex_has_eight_signed_terms(self):
        vertex = qed_vertex("x1")
        self.assertEqual(len(vertex), 8)
        self.assertTrue(all(len(term.legs) == 3 for term in vertex.terms))
        positive = [term for term in vertex.terms if term.sign > 0]
        # only psibar emitting with psi absorbing keeps the fermions in place
        self.assertEqual(len(positive), 2)
        for term in positive:
            fields = {(leg.field, leg.character) for leg in term.legs}
            self.assertIn((FieldKind.PSIBAR, CREATION), fields)
            self.assertIn((FieldKind.PSI, ANNIHILATION), fields)

    def test_repeated_fermion_leg_vanishes(self):
        leg = FieldLeg(FieldKind.PSI, CREATION, "x1", "a_x1")
        self.assertTrue(WickPolynomial([WickMonomial(1, (leg, leg))]).is_zero())

    def test_normal_form_is_idempotent(self):
        vertex = qed_vertex("x1")
        self.assertEqual(WickPolynomial(vertex.terms), vertex)
        for term in vertex.terms:
            self.assertEqual(normal_order(term.legs), (1, term.legs))

    def test_scalar_toys_carry_factorials(self):
        cube = scalar_power("x1", 3)
        creators = (FieldLeg(FieldKind.SCALAR, CREATION, "x1"),) * 3
        self.assertEqual(cube.coefficient(creators), sympy.Rational(1, 6))
        self.assertEqual(len(scalar_power("x1", 4)), 5)

    def test_legs_reject_wrong_character(self):
        with self.assertRaises(WickError):
            FieldLeg(FieldKind.SOURCE_H, CREATION, "x1")
        with self.assertRaises(WickError):
            FieldLeg(FieldKind.PSI, "sideways", "x1")


class OperatorProductTest(SimpleTestCase):
    def test_two_scalar_fields(self):
        x, y = sympy.symbols("x1 x2")
        product = operator_product(field(FieldKind.SCALAR, "x1"), field(FieldKind.SCALAR, "x2"))
        expected = wick_product(
            [field(FieldKind.SCALAR, "x1"), field(FieldKind.SCALAR, "x2")]
        ) + WickPolynomial([WickMonomial(Dplus(DEFAULT_RULES.scalar_mass, x - y), ())])
        self.assertEqual(product, expected)
        self.assertEqual(
            vacuum_expectation(product), Dplus(DEFAULT_RULES.scalar_mass, x - y)
        )

    def test_product_with_zero(self):
        self.assertTrue(operator_product(qed_vertex("x1"), WickPolynomial.zero()).is_zero())

    def test_vertex_times_vertex_matches_bubble_oracle(self):
        a, b = qed_vertex("x1"), qed_vertex("x2")
        product = operator_product(a, b)
        self.assertEqual(product, oracle_product(a, b))

    def test_vertex_times_vertex_topologies(self):
        product = operator_product(qed_vertex("x1"), qed_vertex("x2"))
        shapes = set()
        for term in product.terms:
            shapes.add(tuple(sorted(leg.field for leg in term.legs)))
        psi, psibar, photon = FieldKind.PSI, FieldKind.PSIBAR, FieldKind.PHOTON
        self.assertIn((psi, psi, psibar, psibar, photon, photon), shapes)
        self.assertIn((psi, psibar, photon, photon), shapes)
        self.assertIn((psi, psi, psibar, psibar), shapes)
        self.assertIn((psi, psibar), shapes)
        self.assertIn((photon, photon), shapes)
        self.assertIn((), shapes)

    def test_vacuum_graph_coefficient(self):
        product = operator_product(qed_vertex("x1"), qed_vertex("x2"))
        vacuum = vacuum_expectation(product)
        self.assertEqual(vacuum, product.coefficient(()))
        functions = {f.func for f in vacuum.atoms(sympy.Function)}
        self.assertTrue({Splus, Sminus, Dplus, Gamma} <= functions)
        self.assertEqual(vacuum_expectation(qed_vertex("x1")), 0)

    def test_normal_product_has_no_vacuum_value(self):
        phi = field(FieldKind.SCALAR, "x1")
        self.assertEqual(vacuum_expectation(wick_product([phi, phi])), 0)

    def test_leg_count_conservation(self):
        a, b = qed_vertex("x1"), qed_vertex("x2")
        for left in a.terms:
            for right in b.terms:
                for _, _, remaining, pairs in contractions(left.legs, right.legs):
                    self.assertEqual(
                        len(remaining), len(left.legs) + len(right.legs) - 2 * len(pairs)
                    )

    def test_fermionic_contraction_antisymmetry(self):
        psi_x = FieldLeg(FieldKind.PSI, ANNIHILATION, "x1", "a_x1")
        psi_y = FieldLeg(FieldKind.PSI, CREATION, "x2", "b_x2")
        psibar_y = FieldLeg(FieldKind.PSIBAR, CREATION, "x2", "c_x2")
        alone = operator_product(
            WickPolynomial([WickMonomial(1, (psi_x,))]),
            WickPolynomial([WickMonomial(1, (psibar_y,))]),
        )
        behind = operator_product(
            WickPolynomial([WickMonomial(1, (psi_x,))]),
            WickPolynomial([WickMonomial(1, (psi_y, psibar_y))]),
        )
        contraction = alone.coefficient(())
        expected_sign = reorder_sign(
            (GradedVar(0, 1), GradedVar(1, 1), GradedVar(2, 1)),
            (GradedVar(0, 1), GradedVar(2, 1), GradedVar(1, 1)),
        )
        self.assertEqual(expected_sign, -1)
        self.assertEqual(behind.coefficient((psi_y,)), expected_sign * contraction)

    def test_associativity(self):
        a = field(FieldKind.PSI, "x1", "a_x1")
        b = wick_product([field(FieldKind.PSIBAR, "x2", "a_x2"), field(FieldKind.PSI, "x2", "b_x2")])
        c = field(FieldKind.PSIBAR, "x3", "a_x3")
        self.assertEqual(
            operator_product(operator_product(a, b), c),
            operator_product(a, operator_product(b, c)),
        )

    def test_associativity_of_three_vertices(self):
        v1, v2, v3 = qed_vertex("x1"), qed_vertex("x2"), qed_vertex("x3")
        self.assertEqual(
            operator_product(operator_product(v1, v2), v3),
            operator_product(v1, operator_product(v2, v3)),
        )

    def test_incompatible_contraction_is_refused(self):
        photon = FieldLeg(FieldKind.PHOTON, ANNIHILATION, "x1", "mu_x1")
        psi = FieldLeg(FieldKind.PSI, CREATION, "x2", "a_x2")
        with self.assertRaises(WickError):
            DEFAULT_RULES.contract(photon, psi)


class SourceAndRelabelTest(SimpleTestCase):
    def test_source_terms_never_contract(self):
        sources = qed_source_terms("x1")
        self.assertEqual(len(sources), 6)
        product = operator_product(sources, qed_source_terms("x2"))
        for term in product.terms:
            self.assertEqual(sum(leg.is_classical for leg in term.legs), 2)

    def test_first_order_with_sources(self):
        s1 = first_order("qed", "x1", sources=True)
        self.assertEqual(len(s1), 14)
        with self.assertRaises(WickError):
            first_order("phi3", "x1", sources=True)
        with self.assertRaises(WickError):
            first_order("yukawa", "x1")

    def test_relabel_moves_slots_and_indices(self):
        moved = qed_vertex("x1").relabel({"x1": "x3"})
        self.assertEqual(moved, qed_vertex("x3"))

    def test_relabel_swaps_simultaneously(self):
        product = operator_product(qed_vertex("x1"), qed_vertex("x2"))
        swapped = product.relabel({"x1": "x2", "x2": "x1"})
        self.assertEqual(swapped, operator_product(qed_vertex("x2"), qed_vertex("x1")))

    def test_json_round_trip_is_canonical(self):
        product = operator_product(qed_vertex("x1"), qed_vertex("x2"))
        again = WickPolynomial.from_json(product.to_json())
        self.assertEqual(again, product)
        self.assertEqual(again.dumps(), product.dumps())

    def test_malformed_json(self):
        with self.assertRaises(WickError):
            WickPolynomial.from_json({"terms": [{"legs": [["gluon", "creation", "x1", ""]]}]})
