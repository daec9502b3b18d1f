# Copyright (c) 2026, LGT Contributors
# See license.txt

import contextlib
import csv
import io
import json
import math
import os
import tempfile
import unittest

import pytest
from scipy import special

from lgt import hooks
from lgt.commands import RunConfig, execute, main
from lgt.exceptions import ValidationError
from lgt.lattice_gauge.unitary.unitary import LOG_2PI


class CommandTestCase(unittest.TestCase):
	def setUp(self):
		self.tmp = tempfile.TemporaryDirectory()
		self.addCleanup(self.tmp.cleanup)

	def run_main(self, *argv):
		"""(exit status, stdout, stderr)"""
		out, err = io.StringIO(), io.StringIO()
		with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
			status = main(list(argv))
		return status, out.getvalue(), err.getvalue()

	def path(self, name):
		return os.path.join(self.tmp.name, name)


class TestMaxwellKd(CommandTestCase):
	def test_two_dimensional_table(self):
		status, _, _ = self.run_main("maxwell-kd", "--dim", "2", "--n-min", "2", "--n-max", "8", "--out", self.path("k2.csv"))
		self.assertEqual(status, 0)
		with open(self.path("k2.csv"), encoding="utf-8") as f:
			lines = f.read().splitlines()

		rows = list(csv.DictReader(line for line in lines if not line.startswith("#")))
		self.assertEqual(tuple(lines[0].split(",")), hooks.csv_columns["maxwell-kd"])
		self.assertEqual([int(r["n"]) for r in rows], list(range(2, 9)))
		for row in rows:
			self.assertAlmostEqual(float(row["K_nd"]), 0.0, delta=1e-9)
		self.assertTrue(lines[-1].startswith("# K_2 = "))

	def test_json_has_extrapolation(self):
		status, out, _ = self.run_main("maxwell-kd", "--dim", "3", "--n-min", "2", "--n-max", "5", "--format", "json")
		self.assertEqual(status, 0)
		report = json.loads(out)
		self.assertEqual(report["schema"], "lgt-report/1")
		self.assertEqual(len(report["results"]["rows"]), 4)
		self.assertTrue(math.isfinite(report["results"]["K_d"]))

	def test_bad_dimension(self):
		status, out, err = self.run_main("maxwell-kd", "--dim", "1", "--n-min", "2", "--n-max", "4")
		self.assertEqual(status, 2)
		self.assertEqual(out, "")
		self.assertIn("--dim", err)


class TestFreeEnergy(CommandTestCase):
	def test_exact2d(self):
		status, out, _ = self.run_main("free-energy", "exact2d", "--n", "6", "--beta", "4")
		self.assertEqual(status, 0)
		results = json.loads(out)["results"]
		self.assertAlmostEqual(results["F"], 25 / 36 * math.log(special.i0e(4.0)))
		self.assertAlmostEqual(results["g0"], 0.5)

	def test_g0_is_converted(self):
		_, out, _ = self.run_main("free-energy", "exact2d", "--n", "2", "--g0", "1")
		results = json.loads(out)["results"]
		self.assertEqual(results["beta"], 1.0)
		self.assertAlmostEqual(results["F"], -0.19103, delta=1e-4)

	def test_exact2d_needs_two_dimensions(self):
		status, _, err = self.run_main("free-energy", "exact2d", "--dim", "3", "--n", "4", "--beta", "1")
		self.assertEqual(status, 2)
		self.assertIn("exact2d", err)

	def test_formula(self):
		status, out, _ = self.run_main(
			"free-energy", "formula", "--dim", "3", "--n", "20", "--nmatrix", "1", "--eps", "0.1", "--g", "1", "--kd", "0.2"
		)
		self.assertEqual(status, 0)
		results = json.loads(out)["results"]
		self.assertAlmostEqual(results["log_Z"], 8000 * (math.log(0.1) - LOG_2PI + 0.2), places=6)
		self.assertAlmostEqual(results["per_site"], results["log_Z"] / 8000)

	def test_formula_needs_kd(self):
		status, _, err = self.run_main("free-energy", "formula", "--dim", "3", "--n", "4", "--eps", "0.1", "--g", "1")
		self.assertEqual(status, 2)
		self.assertIn("--kd", err)

	def test_mc_needs_seed(self):
		status, _, err = self.run_main("free-energy", "mc", "--n", "2", "--beta", "1", "--sweeps", "50", "--burn-in", "10")
		self.assertEqual(status, 2)
		self.assertIn("--seed", err)

	def test_mc_report(self):
		argv = ["free-energy", "mc", "--n", "2", "--beta", "1", "--sweeps", "120", "--burn-in", "20", "--chains", "2"]
		status, _, _ = self.run_main(*argv, "--seed", "7", "--format", "csv", "--out", self.path("grid.csv"))
		self.assertEqual(status, 0)
		with open(self.path("grid.csv"), encoding="utf-8") as f:
			rows = list(csv.DictReader(f))
		self.assertEqual(tuple(rows[0]), hooks.csv_columns["beta-grid"])
		self.assertEqual(len(rows), 13)
		self.assertEqual(rows[0]["source"], "exact")
		self.assertEqual(rows[0]["acceptance"], "")

		_, out, _ = self.run_main(*argv, "--seed", "7")
		results = json.loads(out)["results"]
		self.assertLessEqual(results["F"], 0.0)
		self.assertIsNotNone(results["residual"])

	def test_mc_is_reproducible(self):
		run = RunConfig(
			"free-energy/mc",
			{"n": 2, "dim": 2, "nmatrix": 1, "beta": 1.0, "sweeps": 80, "burn_in": 20, "chains": 2},
			seed=3,
		)
		first, second = execute(run), execute(run)
		self.assertEqual(json.dumps(first.canonical(), sort_keys=True), json.dumps(second.canonical(), sort_keys=True))
		self.assertIn("timestamp", first.as_dict())
		self.assertNotIn("timestamp", first.canonical())
		self.assertNotIn("runtime_ms", first.canonical())


class TestVerify(CommandTestCase):
	def test_theorem1_suite(self):
		status, _, _ = self.run_main("verify", "theorem1", "--out", self.path("v.json"))
		self.assertEqual(status, 0)
		with open(self.path("v.json"), encoding="utf-8") as f:
			report = json.load(f)
		self.assertTrue(report["results"]["passed"])
		self.assertEqual(report["config"]["seed"], 2024)
		self.assertTrue(all(c["suite"] == "theorem1" for c in report["results"]["checks"]))

	def test_csv(self):
		status, out, _ = self.run_main("verify", "combinatorics", "--format", "csv")
		self.assertEqual(status, 0)
		rows = list(csv.DictReader(io.StringIO(out)))
		self.assertEqual(len(rows), 27)
		self.assertTrue(all(r["passed"] == "True" for r in rows))

	@pytest.mark.slow
	def test_smallball_is_reproducible(self):
		run = RunConfig("verify", {"suite": "smallball"}, seed=11)
		first, second = execute(run), execute(run)
		self.assertEqual(json.dumps(first.canonical(), sort_keys=True), json.dumps(second.canonical(), sort_keys=True))
		self.assertEqual(first.as_dict()["config"]["seed"], 11)

		_, out, _ = self.run_main("verify", "smallball", "--seed", "11")
		report = json.loads(out)
		self.assertEqual(
			json.dumps({k: v for k, v in report.items() if k not in hooks.volatile_report_fields}, sort_keys=True),
			json.dumps(first.canonical(), sort_keys=True),
		)

	def test_unknown_suite(self):
		status, _, err = self.run_main("verify", "nonsense")
		self.assertEqual(status, 2)
		self.assertIn("nonsense", err)


class TestRunConfig(unittest.TestCase):
	def test_unknown_keys(self):
		with self.assertRaises(ValidationError):
			RunConfig("maxwell-kd", {"dim": 2, "n_min": 2, "n_max": 4, "colour": "red"})

	def test_unknown_command(self):
		with self.assertRaises(ValidationError):
			RunConfig("plot", {})

	def test_seed_required_for_stochastic(self):
		with self.assertRaises(ValidationError):
			RunConfig("free-energy/mc", {"n": 2})
		RunConfig("free-energy/exact2d", {"n": 2, "beta": 1.0})
