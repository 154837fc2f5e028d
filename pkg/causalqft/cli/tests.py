import csv
import json
import os
import tempfile
from io import StringIO

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from .config import ConfigError, load_config
from .output import plain

SHORT_SWEEP = {"eps_start": 2.0 ** -3, "eps_stop": 2.0 ** -10, "eps_steps": 8}
TESTDATA = os.path.join(os.path.dirname(__file__), "testdata")


def leg_signatures(terms):
    """Sorted multiset of the leg lists of a Wick polynomial in JSON form."""
    return sorted(tuple(sorted(tuple(leg) for leg in term["legs"])) for term in terms)


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, name, **options):
        stdout, stderr = StringIO(), StringIO()
        options.setdefault("out", self.out)
        call_command(name, stdout=stdout, stderr=stderr, **options)
        return stdout.getvalue(), stderr.getvalue()

    def assertExits(self, code, name, **options):
        with self.assertRaises(CommandError) as caught:
            self.call(name, **options)
        self.assertEqual(caught.exception.returncode, code)
        return str(caught.exception)

    def report(self, filename, directory=None):
        with open(os.path.join(directory or self.out, filename)) as f:
            return json.load(f)

    def rows(self, filename):
        with open(os.path.join(self.out, filename)) as f:
            return list(csv.reader(f))

    def write_config(self, data):
        path = os.path.join(self.out, "config.json")
        with open(path, "w") as f:
            json.dump(data, f)
        return path


class SplitCommandTest(CommandTestCase):
    def test_decaying_toy(self):
        self.call("split")
        report = self.report("split.json")
        self.assertLessEqual(report["reconstruction_residual"], 1e-8)
        self.assertTrue(report["passed"])
        self.assertEqual(report["omega"], -1)
        self.assertAlmostEqual(report["omega_estimate"], -1.0, delta=0.05)
        rows = self.rows("split.csv")
        self.assertEqual(rows[0], ["x", "d_re", "d_im", "ret_re", "ret_im", "adv_re", "adv_im"])
        self.assertEqual(len(rows), 41)

    def test_missing_constants(self):
        self.assertExits(2, "split", toy="quadratic")

    def test_quadratic_toy_with_constants(self):
        self.call("split", toy="quadratic", c0=0.5, c1=0.0, c2=-1.0)
        report = self.report("split.json")
        self.assertEqual(report["ambiguity_dimension"], 3)
        self.assertTrue(report["passed"])

    def test_constants_ignored_below_order_zero(self):
        _, stderr = self.call("split", omega=-2, c0=1.0)
        self.assertIn("constants ignored", stderr)
        self.assertEqual(self.report("split.json")["normalization"]["normalization"], [])

    def test_config_file(self):
        path = self.write_config(
            {"split": {"toy": "quadratic", "normalization": [0, 0, 0], "subtraction_point": "zero"}}
        )
        self.call("split", config_path=path)
        self.assertEqual(self.report("split.json")["omega"], 2)

    def test_unreadable_config(self):
        self.assertExits(2, "split", config_path=os.path.join(self.out, "missing.json"))

    def test_reports_are_byte_identical(self):
        other = os.path.join(self.out, "again")
        self.call("split")
        self.call("split", out=other)
        for name in ("split.json", "split.csv"):
            with open(os.path.join(self.out, name), "rb") as first:
                with open(os.path.join(other, name), "rb") as second:
                    self.assertEqual(first.read(), second.read())


class GreenCommandTest(CommandTestCase):
    def test_on_shell_defaults(self):
        self.call("green")
        report = self.report("green.json")
        self.assertTrue(report["all_passed"])
        self.assertEqual(report["m"], 1.0)
        self.assertEqual(len(self.rows("green.csv")), 33)

    def test_shifted_constant(self):
        self.call("green", c0=0.1)
        report = self.report("green.json")
        self.assertAlmostEqual(report["on_shell"][0]["residual"], 0.1, delta=1e-8)
        self.assertFalse(report["all_passed"])

    def test_massless_on_shell(self):
        message = self.assertExits(2, "green", m=0.0, normalization="on-shell")
        self.assertIn("on-shell normalization impossible", message)

    def test_massless_custom_needs_a_negative_subtraction_point(self):
        message = self.assertExits(2, "green", m=0.0, normalization="custom")
        self.assertIn("subtraction point must lie below", message)
        self.assertNotIn("on-shell", message)

    def test_self_energy(self):
        self.call("green", which="self-energy")
        report = self.report("green.json")
        self.assertTrue(report["all_passed"])
        self.assertAlmostEqual(report["mu"], 0.1)
        self.assertEqual(self.rows("green.csv")[0], ["p2", "a_re", "a_im", "b_re", "b_im"])


class AdiabaticSweepCommandTest(CommandTestCase):
    def test_on_shell_converges(self):
        self.call("adiabatic_sweep", **SHORT_SWEEP)
        report = self.report("sweep.json")
        self.assertEqual(report["verdict"], "converged")
        self.assertEqual(len(self.rows("sweep.csv")), 9)

    def test_off_shell_diverges(self):
        self.call("adiabatic_sweep", normalization="custom", **SHORT_SWEEP)
        report = self.report("sweep.json")
        self.assertEqual(report["verdict"], "diverged")
        self.assertAlmostEqual(report["fitted_exponent"], -1.0, delta=0.15)

    def test_two_points_are_inconclusive(self):
        self.call("adiabatic_sweep", eps_start=0.125, eps_stop=0.0625, eps_steps=2)
        report = self.report("sweep.json")
        self.assertEqual(report["verdict"], "inconclusive")
        self.assertIsNone(report["fitted_exponent"])

    def test_epsilon_below_the_safe_minimum(self):
        self.assertExits(3, "adiabatic_sweep", eps_start=0.125, eps_stop=1e-12, eps_steps=4)

    def test_increasing_schedule(self):
        self.assertExits(2, "adiabatic_sweep", eps_start=0.01, eps_stop=0.1, eps_steps=4)

    def test_massless_photon_channel_names_the_subtraction_point(self):
        message = self.assertExits(
            2, "adiabatic_sweep", channel="Pi_into_A", m=0.0, normalization="custom", **SHORT_SWEEP
        )
        self.assertIn("subtraction point must lie below p^2 = 0", message)
        self.assertNotIn("on-shell", message)


class FockCheckCommandTest(CommandTestCase):
    def test_six_modes_cutoff_three(self):
        self.call("fock_check")
        report = self.report("fock_check.json")
        self.assertTrue(report["passed"])
        for statistics in ("bose", "fermi"):
            self.assertLessEqual(report["statistics"][statistics]["commutator_deviation"], 1e-12)
            self.assertLessEqual(report["statistics"][statistics]["pairing_deviation"], 1e-10)

    def test_caps(self):
        self.assertExits(2, "fock_check", grid_modes=9)
        self.assertExits(2, "fock_check", cutoff=5)


class WickExpandCommandTest(CommandTestCase):
    def test_second_order_qed(self):
        self.call("wick_expand", order=2)
        report = self.report("wick_expand.json")
        with open(os.path.join(TESTDATA, "wick_expand_qed_order2.json")) as f:
            golden = json.load(f)
        self.assertEqual(report["term_count"], golden["term_count"])
        self.assertEqual(leg_signatures(report["terms"]), leg_signatures(golden["terms"]))

    def test_deterministic_output(self):
        other = os.path.join(self.out, "again")
        self.call("wick_expand", theory="phi3", order=2)
        self.call("wick_expand", theory="phi3", order=2, out=other)
        self.assertEqual(
            self.report("wick_expand.json"), self.report("wick_expand.json", other)
        )

    def test_order_cap(self):
        self.assertExits(2, "wick_expand", order=6)


class ConfigTest(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_null_defaults_come_from_settings(self):
        with self.settings(ELECTRON_MASS=2.0, EPS_STEPS=5):
            config = load_config("adiabatic_sweep", out=self.tmp.name)
        self.assertEqual(config["m"], 2.0)
        self.assertEqual(len(config.schedule()), 5)

    def test_flags_override_files(self):
        path = os.path.join(self.tmp.name, "config.json")
        with open(path, "w") as f:
            json.dump({"green": {"m": 3.0, "which": "self-energy"}}, f)
        config = load_config("green", path, {"m": 4.0, "c0": None}, out=self.tmp.name)
        self.assertEqual(config["m"], 4.0)
        self.assertEqual(config["which"], "self-energy")
        self.assertIsNone(config["c0"])

    def test_tolerances_must_be_positive(self):
        with self.assertRaises(ConfigError):
            load_config("split", overrides={"tolerance": 0.0}, out=self.tmp.name)

    def test_unknown_command(self):
        with self.assertRaises(ConfigError):
            load_config("plot", out=self.tmp.name)

    def test_plain_values(self):
        self.assertEqual(plain({"z": 1 + 2j, "x": float("nan"), "y": float("inf"), 3: (1, 2.5)}), {
            "z": [1.0, 2.0],
            "x": None,
            "y": None,
            "3": [1, 2.5],
        })
