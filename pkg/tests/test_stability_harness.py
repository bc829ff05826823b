"""
tests/test_stability_harness.py

Unit tests for scenarios, error measures, sweeps and the stability-curve
analysis.
"""

import math
import os
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np

from scatter_bench.geometry import make_cube
from scatter_bench.helpers import SolverError, ValidationError, read_csv
from scatter_bench.incident_fields import PlaneWaveSpec, plane_wave_fields
from scatter_bench.quadrature import sphere_grid
from scatter_bench.efie_solver import FarFieldPattern
from scatter_bench.stability_harness import (RECORD_COLUMNS, ScenarioConfig, SolutionCache,
                                             StabilityRecord, build_mesh, check_sweep_monotonicity,
                                             eta_of_error, far_field_error, fit_stability_curve,
                                             logarithmic_envelope, near_field_error,
                                             read_records_csv, refined_scenario, run_convergence_study,
                                             run_pair, run_sweep, spearman_rank_correlation,
                                             summarize_sweep, write_records_csv)
from scatter_bench.transforms_diagnostics import eta

SLOW = os.environ.get("SCATTER_BENCH_SLOW") == "1"

BASE_VALUES = {
    "k": "1.0",
    "wave1.dx": "1", "wave1.dy": "0", "wave1.dz": "0",
    "wave1.px": "0", "wave1.py": "0", "wave1.pz": "1",
    "x0.x": "3.0",
    "mesh.h": "none",
    "distance.res": "0.05",
}


def scenario(**overrides):
    values = dict(BASE_VALUES)
    values.update(overrides)
    return ScenarioConfig.from_mapping(values)


class WaveSolution:
    """Stand-in exposing ``total`` for a bare plane wave."""

    def __init__(self, w):
        self.w = w

    def total(self, points):
        return plane_wave_fields(self.w, points)


def record(t, d, eps, eps_far=None):
    return StabilityRecord(f"r{t}", t, d, d, d, eps, eps if eps_far is None else eps_far,
                           eta_of_error(eps), 1.0, 1, 18, 18)


class TestScenarioConfig(unittest.TestCase):
    def test_defaults(self):
        s = scenario()
        self.assertEqual(s.k, 1.0)
        self.assertEqual(len(s.waves), 1)
        self.assertIsNone(s.mesh_h)
        self.assertEqual(s.b_constant, 1.0)
        self.assertEqual(s.base_shape, "cube")

    def test_two_waves(self):
        s = scenario(**{"wave1.dx": "0", "wave1.dz": "1", "wave1.px": "1", "wave1.pz": "0",
                        "wave2.dx": "0", "wave2.dy": "0", "wave2.dz": "1",
                        "wave2.px": "0", "wave2.py": "1", "wave2.pz": "0"})
        self.assertEqual(len(s.waves), 2)
        self.assertAlmostEqual(s.b_constant, math.sqrt(0.5), delta=0.01)

    def test_parsing(self):
        s = scenario(**{"mesh.h": "0.5", "near.order": "4,6,8", "field": "H", "workers": "3"})
        self.assertEqual(s.mesh_h, 0.5)
        self.assertEqual(s.near_order, (4, 6, 8))
        self.assertEqual(s.field, "H")
        self.assertEqual(s.workers, 3)

    def test_unknown_key(self):
        with self.assertRaises(ValidationError):
            scenario(colour="blue")

    def test_measurement_point_too_close(self):
        with self.assertRaises(ValidationError):
            scenario(**{"x0.x": "2.0"})
        with self.assertRaises(ValidationError):
            scenario(**{"x0.x": "20.0"})

    def test_polarization_along_direction(self):
        with self.assertRaises(ValidationError):
            scenario(**{"wave1.px": "1", "wave1.pz": "0"})

    def test_bad_values(self):
        with self.assertRaises(ValidationError):
            scenario(k="fast")
        with self.assertRaises(ValidationError):
            scenario(quad_order="5")
        with self.assertRaises(ValidationError):
            scenario(**{"mesh.a": "blob"})

    def test_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "scenario.cfg"
            path.write_text("# translated cube\n" + "\n".join(f"{k} = {v}" for k, v in BASE_VALUES.items()) + "\n")
            self.assertEqual(ScenarioConfig.from_file(path).x0[0], 3.0)


class TestBuildMesh(unittest.TestCase):
    def setUp(self):
        self.s = scenario(**{"mesh.h": "0.25"})

    def test_translate(self):
        mesh = build_mesh("translate", 0.2, self.s)
        np.testing.assert_allclose(mesh.bounds[0], [-0.3, -0.5, -0.5])

    def test_scale(self):
        mesh = build_mesh("scale", 0.1, self.s)
        np.testing.assert_allclose(mesh.bounds[1], [0.55, 0.55, 0.55])

    def test_zero_dent_is_cube(self):
        self.assertTrue(build_mesh("dent", 0.0, self.s).same_as(make_cube(h=0.25)))
        self.assertTrue(build_mesh("notch", 0.0, self.s).same_as(make_cube(h=0.25)))

    def test_dent_volume(self):
        self.assertAlmostEqual(build_mesh("dent", 0.1, self.s).signed_volume, 1.0 - 0.025, places=12)

    def test_negative_parameter(self):
        with self.assertRaises(ValidationError):
            build_mesh("translate", -0.1, self.s)

    def test_refined_scenario(self):
        self.assertEqual(refined_scenario(self.s).mesh_h, 0.125)
        sphere = replace(self.s, mesh_a="sphere")
        self.assertEqual(refined_scenario(sphere).mesh_level, self.s.mesh_level + 1)
        with self.assertRaises(ValidationError):
            refined_scenario(replace(self.s, mesh_a="part.msh"))


class TestErrors(unittest.TestCase):
    def test_near_field_error_of_scaled_wave(self):
        w = PlaneWaveSpec(1.0, (1.0, 0.0, 0.0), (0.0, 0.0, 1.0))
        alpha, rho = 0.1, 0.5
        error = near_field_error(WaveSolution(w), WaveSolution(w.scaled(1.0 + alpha)),
                                 (3.0, 0.0, 0.0), rho, (6, 8, 16))
        self.assertAlmostEqual(error, alpha * w.k * w.b * math.sqrt(4.0 * math.pi * rho ** 3 / 3.0), places=10)

    def test_identical_solutions(self):
        solution = WaveSolution(PlaneWaveSpec(1.0, (1.0, 0.0, 0.0), (0.0, 0.0, 1.0)))
        self.assertEqual(near_field_error(solution, solution, (3.0, 0.0, 0.0), 0.5), 0.0)

    def test_far_field_error(self):
        grid = sphere_grid(4, 8)
        a = FarFieldPattern(grid, np.ones((grid.size, 3)), np.zeros((grid.size, 3)))
        b = FarFieldPattern(grid, np.zeros((grid.size, 3)), np.zeros((grid.size, 3)))
        self.assertAlmostEqual(far_field_error(a, b), math.sqrt(3.0 * 4.0 * math.pi), places=10)
        self.assertEqual(far_field_error(a, b, "H"), 0.0)
        other = sphere_grid(4, 9)
        with self.assertRaises(ValidationError):
            far_field_error(a, FarFieldPattern(other, np.ones((other.size, 3)), np.ones((other.size, 3))))

    def test_eta_of_error(self):
        self.assertEqual(eta_of_error(0.0), 0.0)
        self.assertAlmostEqual(eta_of_error(math.exp(-math.e)), math.exp(-1.0), places=12)
        self.assertTrue(math.isnan(eta_of_error(0.5)))


class TestAnalysis(unittest.TestCase):
    def test_fit_recovers_synthetic_curve(self):
        eps = [1e-6, 1e-4, 1e-3, 1e-2]
        fit = fit_stability_curve([record(i, eta(e), e) for i, e in enumerate(eps)])
        self.assertAlmostEqual(fit.A, 1.0, places=10)
        self.assertAlmostEqual(fit.C, 1.0, places=10)
        fit = fit_stability_curve([record(i, 0.5 * eta(e) ** 2, e) for i, e in enumerate(eps)])
        self.assertAlmostEqual(fit.A, 0.5, places=10)
        self.assertAlmostEqual(fit.C, 2.0, places=10)
        self.assertEqual(fit.n_used, 4)

    def test_fit_needs_usable_records(self):
        with self.assertRaises(ValidationError):
            fit_stability_curve([record(0, 0.1, 1e-3), record(1, 0.2, 0.5), record(2, 0.0, 1e-2)])
        with self.assertRaises(ValidationError):
            fit_stability_curve([record(i, 0.1 * (i + 1), 1e-3) for i in range(3)])

    def test_logarithmic_envelope(self):
        eps = [1e-6, 1e-4, 1e-2]
        records = [record(i, 2.0 * math.e * eta(e) ** 1.5, e) for i, e in enumerate(eps)]
        self.assertAlmostEqual(logarithmic_envelope(records, 100.0, 1.0), 1.5, places=10)
        self.assertTrue(math.isnan(logarithmic_envelope([], 1.0, 1.0)))

    def test_monotonicity(self):
        good = [record(0.1, 0.1, 1e-3), record(0.2, 0.2, 2e-3), record(0.3, 0.3, 2e-3)]
        report = check_sweep_monotonicity(good)
        self.assertTrue(report.passed)
        self.assertFalse(report.eps_strictly_increasing)
        bad = [record(0.1, 0.2, 1e-3), record(0.2, 0.1, 2e-3)]
        self.assertFalse(check_sweep_monotonicity(bad).passed)
        self.assertTrue(check_sweep_monotonicity(bad, d_tolerance=0.15).passed)

    def test_spearman(self):
        self.assertAlmostEqual(spearman_rank_correlation([1, 2, 3], [0.1, 0.5, 0.7]), 1.0)
        with self.assertRaises(ValidationError):
            spearman_rank_correlation([1.0], [2.0])

    def test_summary(self):
        records = [record(0.1, 0.1, 1e-4, 1e-5), record(0.2, 0.2, 1e-3, 1e-4), record(0.4, 0.4, 1e-2, 1e-3)]
        summary = summarize_sweep(records, 0.25, 1.5)
        self.assertTrue(summary.monotonicity.passed)
        self.assertAlmostEqual(summary.spearman, 1.0)
        self.assertIsNotNone(summary.fit)
        self.assertEqual(summary.min_d_h, (0.1, 0.2, 0.25))

    def test_records_csv(self):
        records = [record(0.1, 0.1, 1e-4), record(0.2, 0.2, 1e-3)]
        with tempfile.TemporaryDirectory() as tmp:
            path = write_records_csv(records, Path(tmp) / "records.csv")
            self.assertTrue(path.read_text().startswith("# schema_version=1\n"))
            header, _ = read_csv(path)
            self.assertEqual(tuple(header), RECORD_COLUMNS)
            loaded = read_records_csv(path)
        self.assertEqual([r.as_row() for r in loaded], [r.as_row() for r in records])


class FailingCache(SolutionCache):
    def solve(self, mesh, scenario):
        raise SolverError("EFIE matrix is ill-conditioned", condition=1e13)


class TestExperiments(unittest.TestCase):
    def test_identical_pair(self):
        result = run_pair(scenario())
        self.assertEqual((result.d, result.d_hat, result.d_tilde), (0.0, 0.0, 0.0))
        self.assertEqual((result.eps_near, result.eps_far, result.eta_of_eps), (0.0, 0.0, 0.0))
        self.assertEqual((result.ndof_a, result.ndof_b), (18, 18))
        self.assertEqual(result.kind_a, "obstacle")

    def test_translation_sweep(self):
        cache = SolutionCache()
        with tempfile.TemporaryDirectory() as tmp:
            output = Path(tmp) / "stability_translate.csv"
            records = run_sweep(scenario(workers="2"), "translate", [0.1, 0.2], cache, output=output)
            self.assertEqual(len(read_records_csv(output)), 2)
        self.assertEqual([r.t for r in records], [0.1, 0.2])
        self.assertEqual([r.case_id for r in records], ["translate-t0.1", "translate-t0.2"])
        for r in records:
            self.assertAlmostEqual(r.d, r.t, delta=0.05)
        self.assertLess(records[0].eps_near, records[1].eps_near)
        self.assertLess(records[0].eps_far, records[1].eps_far)
        self.assertEqual(len(cache), 3)

    def test_empty_sweep_writes_header(self):
        with tempfile.TemporaryDirectory() as tmp:
            output = Path(tmp) / "empty.csv"
            self.assertEqual(run_sweep(scenario(), "translate", [], output=output), [])
            header, rows = read_csv(output)
        self.assertEqual(tuple(header), RECORD_COLUMNS)
        self.assertEqual(rows, [])

    def test_sweep_arguments(self):
        with self.assertRaises(ValidationError):
            run_sweep(scenario(), "twist", [0.1])
        with self.assertRaises(ValidationError):
            run_sweep(scenario(), "translate", [0.2, 0.1])

    def test_solver_failure_names_case(self):
        with self.assertRaises(SolverError) as ctx:
            run_sweep(scenario(), "translate", [0.1], FailingCache())
        self.assertEqual(ctx.exception.case_id, "translate-t0.1")
        self.assertEqual(ctx.exception.condition, 1e13)

    def test_convergence_arguments(self):
        with self.assertRaises(ValidationError):
            run_convergence_study(scenario(), "translate", [0.1, 0.2])


@unittest.skipUnless(SLOW, "set SCATTER_BENCH_SLOW=1 to run the convergence study")
class TestConvergence(unittest.TestCase):
    def test_translation_to_zero(self):
        report = run_convergence_study(scenario(**{"mesh.h": "0.5"}), "translate", [0.2, 0.1, 0.05, 0.0])
        self.assertEqual([r.t for r in report.records], [0.2, 0.1, 0.05, 0.0])
        self.assertEqual(report.records[-1].eps_near, 0.0)
        self.assertTrue(report.decreasing)
        self.assertTrue(report.reached_floor)


if __name__ == "__main__":
    unittest.main()
