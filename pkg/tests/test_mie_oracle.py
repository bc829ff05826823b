"""
tests/test_mie_oracle.py

Unit tests for the sphere series solution and its use as a reference for
the EFIE solver.
"""

import math
import os
import unittest

import numpy as np
from scipy import special

from scatter_bench import config
from scatter_bench.efie_solver import solve_scatterer
from scatter_bench.geometry import make_icosphere
from scatter_bench.helpers import ValidationError
from scatter_bench.incident_fields import PlaneWaveSpec
from scatter_bench.mie_oracle import (mie_amplitudes, mie_coefficients, mie_cross_sections,
                                      mie_far_field, monostatic_rcs, relative_far_field_error,
                                      spherical_jn_yn, truncation_order)
from scatter_bench.quadrature import SphereGrid, sphere_grid
from scatter_bench.transforms_diagnostics import rotation_map

SLOW = os.environ.get("SCATTER_BENCH_SLOW") == "1"
WAVE = PlaneWaveSpec(1.0, (0.0, 0.0, 1.0), (1.0, 0.0, 0.0))


class TestBessel(unittest.TestCase):
    def test_matches_scipy(self):
        for x in (0.3, 1.5, 12.0):
            jn, yn = spherical_jn_yn(20, x)
            n = np.arange(21)
            np.testing.assert_allclose(jn, special.spherical_jn(n, x), rtol=1e-9, atol=1e-300)
            np.testing.assert_allclose(yn, special.spherical_yn(n, x), rtol=1e-9)

    def test_rejects_non_positive(self):
        with self.assertRaises(ValidationError):
            spherical_jn_yn(5, 0.0)


class TestCoefficients(unittest.TestCase):
    def test_truncation_order(self):
        self.assertEqual(truncation_order(1.0), 11)
        self.assertGreaterEqual(truncation_order(100.0), 110)

    def test_range_checks(self):
        with self.assertRaises(ValidationError):
            mie_coefficients(1.0, config.MIE_MAX_KA + 1.0)
        with self.assertRaises(ValidationError):
            mie_coefficients(1.0, 1.0, n_max=5)
        with self.assertRaises(ValidationError):
            mie_coefficients(-1.0, 1.0)

    def test_energy_balance(self):
        for ka in (0.5, 1.0, 5.0, 30.0):
            sigma_sca, sigma_ext = mie_cross_sections(1.0, ka)
            self.assertAlmostEqual(sigma_sca / sigma_ext, 1.0, places=10)

    def test_optical_theorem(self):
        solution = mie_coefficients(1.0, 2.0)
        S1, S2 = mie_amplitudes(solution, [1.0])
        self.assertAlmostEqual(S1[0], S2[0], places=12)
        _, sigma_ext = mie_cross_sections(1.0, 2.0)
        self.assertAlmostEqual(4.0 * math.pi / 4.0 * S1[0].real, sigma_ext, places=10)

    def test_rayleigh_limit(self):
        a, k = 0.02, 1.0
        sigma_sca, _ = mie_cross_sections(a, k)
        self.assertAlmostEqual(sigma_sca / (10.0 * math.pi / 3.0 * k ** 4 * a ** 6), 1.0, delta=0.01)
        rcs = monostatic_rcs(a, k)
        self.assertAlmostEqual(rcs / (9.0 * math.pi * k ** 4 * a ** 6), 1.0, delta=0.01)

    def test_large_sphere_backscatter(self):
        # geometric optics: pi a^2
        self.assertAlmostEqual(monostatic_rcs(1.0, 60.0) / math.pi, 1.0, delta=0.1)


class TestFarField(unittest.TestCase):
    def setUp(self):
        self.grid = sphere_grid(16, 32)

    def test_identities(self):
        pattern = mie_far_field(1.0, 1.0, WAVE, self.grid)
        radial, relation = pattern.identity_errors()
        self.assertLess(radial, 1e-12)
        self.assertLess(relation, 1e-12)

    def test_power_matches_cross_section(self):
        # |E_inf|^2 integrates to sigma_sca |E_inc|^2
        pattern = mie_far_field(1.0, 1.0, WAVE, self.grid)
        sigma_sca, _ = mie_cross_sections(1.0, 1.0)
        self.assertAlmostEqual(pattern.scattered_power() / sigma_sca, 1.0, places=6)

    def test_magnetic_wall_has_same_power(self):
        pec = mie_far_field(1.0, 1.0, WAVE, self.grid)
        pmc = mie_far_field(1.0, 1.0, WAVE, self.grid, boundary="pmc")
        self.assertAlmostEqual(pmc.l2_norm() / pec.l2_norm(), 1.0, places=10)
        self.assertGreater(relative_far_field_error(pec, pmc), 0.1)

    def test_rotation_covariance(self):
        # rotating the wave by R rotates the pattern: E_inf(R x) = R E_inf(x)
        rotate = rotation_map([0.3, -0.7, 1.1])
        R = rotate.jacobian(np.zeros((1, 3)))[0]
        turned = PlaneWaveSpec(1.0, R @ WAVE.d, R @ WAVE.p)
        grid = self.grid
        rotated_grid = SphereGrid(rotate(grid.directions), grid.weights, grid.theta, grid.phi)
        original = mie_far_field(1.0, 1.0, WAVE, grid)
        rotated = mie_far_field(1.0, 1.0, turned, rotated_grid)
        scale = np.abs(original.E_inf).max()
        np.testing.assert_allclose(rotated.E_inf, original.E_inf @ R.T, rtol=0.0, atol=1e-10 * scale)
        np.testing.assert_allclose(rotated.H_inf, original.H_inf @ R.T, rtol=0.0, atol=1e-10 * scale)

    def test_unknown_boundary(self):
        with self.assertRaises(ValidationError):
            mie_far_field(1.0, 1.0, WAVE, self.grid, boundary="wall")

    def test_wavenumber_mismatch(self):
        with self.assertRaises(ValidationError):
            mie_far_field(1.0, 2.0, WAVE, self.grid)

    def test_error_needs_same_grid(self):
        pattern = mie_far_field(1.0, 1.0, WAVE, self.grid)
        self.assertEqual(relative_far_field_error(pattern, pattern), 0.0)
        other = mie_far_field(1.0, 1.0, WAVE, sphere_grid(8, 16))
        with self.assertRaises(ValidationError):
            relative_far_field_error(pattern, other)


@unittest.skipUnless(SLOW, "set SCATTER_BENCH_SLOW=1 to run the EFIE sphere check")
class TestSphereAgainstEFIE(unittest.TestCase):
    def test_level_three_icosphere(self):
        grid = sphere_grid(16, 32)
        _, solutions = solve_scatterer(make_icosphere(1.0, 3), [WAVE], 1.0, grid=grid)
        reference = mie_far_field(1.0, 1.0, WAVE, grid)
        error = relative_far_field_error(reference, solutions[0].far_field)
        self.assertLess(error, config.MIE_THRESHOLD)


if __name__ == "__main__":
    unittest.main()
