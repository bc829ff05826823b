"""
tests/test_cli.py

Tests for the command-line front end: argument handling, exit codes and the
files each subcommand writes.
"""

import contextlib
import io
import math
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from scatter_bench import cli, config
from scatter_bench.geometry import make_cube, save_mesh, translate_mesh
from scatter_bench.helpers import read_csv

SCENARIO = """# unit cube lit along x
k = 1.0
wave1.dx = 1
wave1.dy = 0
wave1.dz = 0
wave1.px = 0
wave1.py = 0
wave1.pz = 1
x0.x = 3.0
mesh.h = none
distance.res = 0.05
"""


class TestCli(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.scenario = self.dir / "scenario.cfg"
        self.scenario.write_text(SCENARIO)
        self.out = self.dir / "out"

    def tearDown(self):
        self.tmp.cleanup()

    def run_cli(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            try:
                code = cli.main(list(argv))
            except SystemExit as e:
                code = e.code
        return code, stdout.getvalue(), stderr.getvalue()

    def test_unknown_subcommand(self):
        code, _, stderr = self.run_cli("bogus")
        self.assertEqual(code, 1)
        self.assertIn("usage", stderr)

    def test_missing_required_option(self):
        code, _, _ = self.run_cli("solve")
        self.assertEqual(code, 1)

    def test_missing_scenario_file(self):
        code, _, stderr = self.run_cli("solve", "--config", str(self.dir / "nope.cfg"), "--out", str(self.out))
        self.assertEqual(code, 1)
        self.assertIn("error", stderr)

    def test_solve(self):
        code, stdout, _ = self.run_cli("solve", "--config", str(self.scenario), "--out", str(self.out))
        self.assertEqual(code, 0)
        self.assertIn("unknowns: 18", stdout)
        _, rows = read_csv(self.out / "current_wave1.csv")
        self.assertEqual(len(rows), 18)

    def test_solver_failure_exit_code(self):
        with mock.patch.object(config, "CONDITION_LIMIT", 1.0):
            code, _, stderr = self.run_cli("solve", "--config", str(self.scenario), "--out", str(self.out))
        self.assertEqual(code, 2)
        self.assertIn("solver failure", stderr)

    def test_farfield(self):
        code, _, _ = self.run_cli("farfield", "--config", str(self.scenario), "--out", str(self.out))
        self.assertEqual(code, 0)
        _, rows = read_csv(self.out / "farfield_wave1.csv")
        self.assertEqual(len(rows), config.FARFIELD_N_THETA * config.FARFIELD_N_PHI)
        _, rows = read_csv(self.out / "farfield_identities.csv")
        self.assertEqual({row[4] for row in rows}, {"pass"})

    def test_mie_validate_reports(self):
        code, stdout, _ = self.run_cli("mie-validate", "--mesh-level", "1", "--n-theta", "8", "--n-phi", "16",
                                       "--out", str(self.out))
        self.assertEqual(code, 0)
        self.assertIn("relative far-field error:", stdout)
        header, rows = read_csv(self.out / "mie_validate.csv")
        self.assertEqual(rows[0][0], "mie_far_field")

    def test_distance(self):
        a = save_mesh(make_cube(), self.dir / "a.msh")
        b = save_mesh(translate_mesh(make_cube(), (0.1, 0.0, 0.0)), self.dir / "b.msh")
        code, _, _ = self.run_cli("distance", "--a", str(a), "--b", str(b), "--res", "0.05", "--out", str(self.out))
        self.assertEqual(code, 0)
        header, rows = read_csv(self.out / "distance.csv")
        self.assertEqual(header, ["d", "d_hat", "d_tilde", "res"])
        self.assertAlmostEqual(float(rows[0][0]), 0.1, delta=0.05)

    def test_three_spheres(self):
        code, _, _ = self.run_cli("three-spheres", "--out", str(self.out))
        self.assertEqual(code, 0)
        _, rows = read_csv(self.out / "three_spheres.csv")
        self.assertAlmostEqual(float(rows[0][2]), math.log(2.0) / math.log(4.0), places=8)
        self.assertAlmostEqual(float(rows[1][2]), math.sqrt(3.0 / (4.0 * math.pi)), places=8)

    def test_transform_check(self):
        code, _, _ = self.run_cli("transform-check", "--map", "affine", "--halvings", "1", "--out", str(self.out))
        self.assertEqual(code, 0)
        _, rows = read_csv(self.out / "transform_check_affine.csv")
        self.assertEqual(len(rows), 2)

    def test_invalid_map(self):
        code, _, _ = self.run_cli("transform-check", "--map", "twist")
        self.assertEqual(code, 1)

    def test_empty_sweep(self):
        code, _, _ = self.run_cli("stability-sweep", "--config", str(self.scenario), "--family", "translate",
                                  "--params", "", "--out", str(self.out))
        self.assertEqual(code, 0)
        _, rows = read_csv(self.out / "stability_translate.csv")
        self.assertEqual(rows, [])

    def test_bad_sweep_parameters(self):
        code, _, _ = self.run_cli("stability-sweep", "--config", str(self.scenario), "--params", "a,b",
                                  "--out", str(self.out))
        self.assertEqual(code, 1)


if __name__ == "__main__":
    unittest.main()
