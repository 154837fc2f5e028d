import dataclasses

import numpy as np
import sympy
from django.test import SimpleTestCase

from causalqft.grassmann.signs import FERMI
from causalqft.wick.algebra import (
    Dplus,
    FieldKind,
    Splus,
    WickPolynomial,
    field,
    first_order,
    operator_product,
    wick_product,
)

from .epstein_glaser import (
    InductionError,
    LatticeModel,
    LocalSplit,
    OrderData,
    assemble_Sn,
    assembly_routes,
    build_Aprime_Rprime,
    check_series_identity,
    inverse_order,
    invert_series,
    lattice_assembly,
    lattice_support_check,
    slot,
    symbolic_splits,
)


def constants(order):
    """S_k = c_k for k <= order: commuting kernels, so D vanishes."""
    return OrderData(
        {k: WickPolynomial.one().scaled(sympy.Symbol("c%d" % k)) for k in range(1, order + 1)}
    )


def s1(theory, slot):
    return first_order(theory, slot)


class InvertSeriesTest(SimpleTestCase):
    def test_first_order_inverse(self):
        Sbar = invert_series({1: s1("phi3", "x1")})
        self.assertEqual(Sbar[1], s1("phi3", "x1").scaled(-1))

    def test_second_order_inverse(self):
        S2 = wick_product(
            [field(FieldKind.SCALAR, "x1"), field(FieldKind.SCALAR, "x2")]
        ).scaled(sympy.Symbol("c2"))
        Sbar = invert_series({1: s1("phi", "x1"), 2: S2})
        expected = (
            operator_product(s1("phi", "x1"), s1("phi", "x2"))
            + operator_product(s1("phi", "x2"), s1("phi", "x1"))
            - S2
        )
        self.assertEqual(Sbar[2], expected)

    def test_series_identity(self):
        S2 = wick_product(
            [field(FieldKind.SCALAR, "x1"), field(FieldKind.SCALAR, "x2")]
        ).scaled(sympy.Symbol("c2"))
        S3 = WickPolynomial.one().scaled(sympy.Symbol("c3"))
        data = OrderData({1: s1("phi", "x1"), 2: S2, 3: S3})
        for order, residual in check_series_identity(data).items():
            self.assertTrue(residual.is_zero(), order)

    def test_series_identity_with_odd_variables(self):
        data = OrderData({1: s1("phi", "x1"), 2: WickPolynomial.one()}, grade=FERMI)
        for residual in check_series_identity(data).values():
            self.assertTrue(residual.is_zero())

    def test_zero_series(self):
        Sbar = invert_series({1: WickPolynomial.zero(), 2: WickPolynomial.zero()})
        self.assertTrue(all(kernel.is_zero() for kernel in Sbar.values()))

    def test_missing_order(self):
        with self.assertRaisesRegex(InductionError, "missing"):
            invert_series({1: s1("phi", "x1")}, 2)
        with self.assertRaises(InductionError):
            OrderData({2: WickPolynomial.one()})


class InductiveStepTest(SimpleTestCase):
    def test_first_order_has_no_partitions(self):
        step = build_Aprime_Rprime(1, OrderData.first_order("phi3"))
        self.assertEqual(step.terms, ())
        self.assertTrue(step.Aprime.is_zero())
        self.assertTrue(step.Rprime.is_zero())
        self.assertTrue(step.D.is_zero())

    def test_second_order_scalar_toy(self):
        data = OrderData.first_order("phi3")
        step = build_Aprime_Rprime(2, data)
        a, b = s1("phi3", "x1"), s1("phi3", "x2")
        self.assertEqual(step.Aprime, operator_product(a.scaled(-1), b))
        self.assertEqual(step.Rprime, operator_product(b, a.scaled(-1)))
        self.assertEqual(step.D, operator_product(a, b) - operator_product(b, a))

    def test_partition_counts(self):
        data = constants(4)
        for n in range(1, 6):
            step = build_Aprime_Rprime(n, data)
            self.assertEqual(len(step.terms), 2 ** (n - 1) - 1)

    def test_bosonic_signs_are_positive(self):
        step = build_Aprime_Rprime(4, constants(3))
        self.assertEqual(set(step.signs), {(1, 1)})

    def test_odd_variables_give_negative_signs(self):
        data = dataclasses.replace(constants(2), grade=FERMI)
        step = build_Aprime_Rprime(3, data)
        by_split = {(term.X, term.Y): term for term in step.terms}
        # (x2, x1, x3) is one transposition away from (x1, x2, x3)
        self.assertEqual(by_split[(("x2",), ("x1",))].advanced_sign, -1)
        self.assertEqual(by_split[(("x1",), ("x2",))].advanced_sign, 1)
        # (x1, x3, x2) likewise
        self.assertEqual(by_split[(("x2",), ("x1",))].retarded_sign, -1)

    def test_qed_causal_coefficients_are_antisymmetric(self):
        step = build_Aprime_Rprime(2, OrderData.first_order("qed"))
        even = sympy.Function("even")
        four_fermion = [
            (legs, coefficient)
            for legs, coefficient in step.D.items()
            if len(legs) == 4 and all(leg.is_fermi for leg in legs)
        ]
        self.assertTrue(four_fermion)
        for legs, coefficient in four_fermion:
            self.assertTrue(coefficient.has(Dplus))
            symmetrized = coefficient.replace(
                Dplus, lambda mass, x: even(mass, sympy.expand(x ** 2))
            )
            self.assertEqual(sympy.expand(symmetrized), 0)

    def test_threads_do_not_change_the_result(self):
        data = OrderData.first_order("phi")
        data = data.extend()
        serial = build_Aprime_Rprime(3, data, threads=1)
        parallel = build_Aprime_Rprime(3, data, threads=3)
        self.assertEqual(serial.D, parallel.D)
        self.assertEqual([t.X for t in serial.terms], [t.X for t in parallel.terms])

    def test_symbolic_order_is_capped(self):
        with self.settings(MAX_SYMBOLIC_ORDER=2):
            with self.assertRaisesRegex(InductionError, "MAX_SYMBOLIC_ORDER"):
                build_Aprime_Rprime(3, constants(2))
        with self.assertRaises(InductionError):
            build_Aprime_Rprime(6, constants(5))
        with self.assertRaises(InductionError):
            build_Aprime_Rprime(0, constants(1))

    def test_missing_lower_order(self):
        with self.assertRaisesRegex(InductionError, "missing"):
            build_Aprime_Rprime(3, OrderData.first_order("phi"))


class AssemblyTest(SimpleTestCase):
    def test_both_routes_agree(self):
        step = build_Aprime_Rprime(2, OrderData.first_order("phi3"))
        by_retarded, by_advanced = assembly_routes(step, symbolic_splits(step))
        self.assertEqual(by_retarded, by_advanced)
        self.assertEqual(assemble_Sn(step), by_retarded)

    def test_both_routes_agree_up_to_order_five(self):
        data = OrderData.first_order("phi")
        for n in range(2, 6):
            step = build_Aprime_Rprime(n, data)
            self.assertEqual(len(step.terms), 2 ** (n - 1) - 1)
            by_retarded, by_advanced = assembly_routes(step, symbolic_splits(step))
            self.assertEqual(by_retarded, by_advanced, "order %d" % n)
            self.assertEqual(sorted(by_retarded.slots()), [slot(k) for k in range(1, n + 1)])
            if n < 5:
                S = dict(data.S)
                S[n] = by_retarded
                Sbar = dict(data.Sbar)
                Sbar[n] = inverse_order(S, n, data.grade)
                data = OrderData(S, Sbar, data.grade)

    def test_both_routes_agree_on_a_nonvanishing_causal_part(self):
        step = build_Aprime_Rprime(3, OrderData.first_order("phi3").extend())
        self.assertFalse(step.D.is_zero())
        by_retarded, by_advanced = assembly_routes(step, symbolic_splits(step))
        self.assertEqual(by_retarded, by_advanced)
        self.assertFalse(by_retarded.is_zero())

    def test_vanishing_causal_part(self):
        step = build_Aprime_Rprime(3, constants(2))
        self.assertTrue(step.D.is_zero())
        self.assertEqual(step.Aprime, step.Rprime)
        self.assertEqual(assemble_Sn(step, {}), step.Aprime.scaled(-1))

    def test_missing_split(self):
        step = build_Aprime_Rprime(2, OrderData.first_order("phi"))
        with self.assertRaisesRegex(InductionError, "no split"):
            assemble_Sn(step, {})

    def test_inconsistent_split(self):
        step = build_Aprime_Rprime(2, OrderData.first_order("phi"))
        splits = {legs: LocalSplit(c, c) for legs, c in step.D.items()}
        with self.assertRaisesRegex(InductionError, "differ"):
            assemble_Sn(step, splits)

    def test_extension_keeps_the_series_identity(self):
        data = OrderData.first_order("phi").extend().extend()
        self.assertEqual(data.order, 3)
        self.assertEqual(sorted(data.S[3].slots()), ["x1", "x2", "x3"])
        for residual in check_series_identity(data).values():
            self.assertTrue(residual.is_zero())


class LatticeTest(SimpleTestCase):
    def setUp(self):
        self.model = LatticeModel(mass=1.0, steps=40, spacing=0.1)
        self.times = self.model.times
        self.off_diagonal = self.times != 0

    def kernels(self, theory):
        step = build_Aprime_Rprime(2, OrderData.first_order(theory))
        return {entry.legs: entry for entry in lattice_assembly(step, self.model)}

    def product(self, theory, first, second):
        return operator_product(s1(theory, first), s1(theory, second))

    def test_vacuum_kernel_is_the_time_ordered_product(self):
        vacuum = self.kernels("phi")[()]
        t = self.times
        dplus = np.exp(-1j * t) / 2
        time_ordered = np.where(t > 0, dplus, np.conj(dplus))
        np.testing.assert_allclose(
            vacuum.S[self.off_diagonal], -time_ordered[self.off_diagonal], atol=1e-12
        )
        np.testing.assert_allclose(vacuum.S, vacuum.S_advanced, atol=1e-12)

    def test_cubic_toy_agrees_with_theta_ordering(self):
        later = self.product("phi3", "x1", "x2")
        earlier = self.product("phi3", "x2", "x1")
        positions = {"x1": self.times, "x2": 0.0}
        future, past = self.times > 0, self.times < 0
        for legs, entry in self.kernels("phi3").items():
            expected = np.where(
                future,
                self.model.evaluate(later.coefficient(legs), positions),
                self.model.evaluate(earlier.coefficient(legs), positions),
            )
            np.testing.assert_allclose(
                entry.S[future | past], expected[future | past], atol=1e-12
            )

    def test_support_of_the_split(self):
        report = lattice_support_check(self.kernels("phi3").values())
        self.assertTrue(report.passed)
        self.assertLessEqual(report.retarded_leakage, 1e-8)
        self.assertLessEqual(report.advanced_leakage, 1e-8)
        self.assertLessEqual(report.causal_leakage, 1e-8)

    def test_swapped_split_leaks(self):
        swapped = [
            dataclasses.replace(entry, retarded=entry.advanced, advanced=entry.retarded)
            for entry in self.kernels("phi").values()
        ]
        report = lattice_support_check(swapped)
        self.assertFalse(report.passed)
        self.assertGreater(report.retarded_leakage, 0.5)
        self.assertGreater(report.advanced_leakage, 0.5)

    def test_causal_factorization(self):
        # g late on [2, 3], h early on [-1, 0]: S_2(g, h) = S_1(g) S_1(h)
        t = self.times
        late = np.where(np.abs(t - 2.5) <= 0.5, np.exp(-((t - 2.5) ** 2)), 0.0)
        early = np.where(np.abs(t + 0.5) <= 0.5, 1.0 + t, 0.0)
        product = self.product("phi3", "x1", "x2")
        positions = {"x1": t, "x2": 0.0}
        centre = self.model.steps
        pairs = [
            (i, j)
            for i in np.nonzero(late)[0]
            for j in np.nonzero(early)[0]
        ]
        for legs, entry in self.kernels("phi3").items():
            factorized = self.model.evaluate(product.coefficient(legs), positions)
            smeared = sum(late[i] * early[j] * entry.S[i - j + centre] for i, j in pairs)
            expected = sum(late[i] * early[j] * factorized[i - j + centre] for i, j in pairs)
            self.assertLessEqual(abs(smeared - expected), 1e-6)

    def test_only_second_order(self):
        step = build_Aprime_Rprime(1, OrderData.first_order("phi"))
        with self.assertRaises(InductionError):
            lattice_assembly(step, self.model)

    def test_spinor_lines_are_not_evaluable(self):
        x1, x2 = sympy.symbols("x1 x2")
        with self.assertRaisesRegex(InductionError, "not evaluable"):
            self.model.evaluate(Splus(0, 0, 1, x1 - x2), {"x1": self.times, "x2": 0.0})
        with self.assertRaises(InductionError):
            self.model.evaluate(Dplus(0, x1 - x2), {"x1": self.times, "x2": 0.0})
        with self.assertRaises(InductionError):
            LatticeModel(mass=0.0)
