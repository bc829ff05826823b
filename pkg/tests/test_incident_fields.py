"""
tests/test_incident_fields.py

Unit tests for plane waves, the duality swap and the polarization
independence constant.
"""

import math
import unittest

import numpy as np

from scatter_bench.helpers import ValidationError
from scatter_bench.incident_fields import (PlaneWaveSpec, duality_swap, eval_plane_wave,
                                           independence_constant_b0, plane_wave_fields,
                                           polarization_constant, tangential_lower_bound)
from scatter_bench.transforms_diagnostics import fd_curl, fd_divergence


class TestPlaneWaveSpec(unittest.TestCase):
    def test_rejects_bad_parameters(self):
        with self.assertRaises(ValidationError):
            PlaneWaveSpec(0.0, (0, 0, 1), (1, 0, 0))
        with self.assertRaises(ValidationError):
            PlaneWaveSpec(1.0, (0, 0, 2), (1, 0, 0))
        with self.assertRaises(ValidationError):
            PlaneWaveSpec(1.0, (0, 0, 1), (2, 0, 0))
        with self.assertRaises(ValidationError):
            PlaneWaveSpec(1.0, (0, 0, 1), (0, 0, 0))

    def test_polarization_constant(self):
        w = PlaneWaveSpec(1.0, (0, 0, 1), (0.6, 0.0, 0.8))
        self.assertAlmostEqual(polarization_constant(w), 0.6, places=14)
        self.assertEqual(polarization_constant(PlaneWaveSpec(1.0, (0, 0, 1), (0, 0, 1))), 0.0)

    def test_mapping(self):
        w = PlaneWaveSpec.from_mapping({"k": "2", "dx": "1", "dy": "0", "dz": "0",
                                        "px": "0", "py": "1", "pz": "0"})
        self.assertEqual(w.k, 2.0)
        np.testing.assert_array_equal(w.d, [1.0, 0.0, 0.0])
        self.assertEqual(w.to_mapping("w1.")["w1.py"], 1.0)
        with self.assertRaises(ValidationError):
            PlaneWaveSpec.from_mapping({"k": "2", "dx": "1"})
        with self.assertRaises(ValidationError):
            PlaneWaveSpec.from_mapping({"k": "2", "dx": "one", "dy": "0", "dz": "0",
                                        "px": "0", "py": "1", "pz": "0"})


class TestPlaneWaveFields(unittest.TestCase):
    def setUp(self):
        d = np.array([1.0, 2.0, 2.0]) / 3.0
        self.w = PlaneWaveSpec(1.5, d, (0.0, 0.6, -0.6))
        self.points = np.random.default_rng(3).uniform(-2.0, 2.0, size=(12, 3))

    def test_single_point_shape(self):
        sample = eval_plane_wave(self.w, (0.0, 0.0, 0.0))
        self.assertEqual(sample.E.shape, (3,))
        np.testing.assert_allclose(sample.E, 1j * self.w.k * self.w.amplitude_vector)

    def test_transverse_and_constant_modulus(self):
        E, H = plane_wave_fields(self.w, self.points)
        np.testing.assert_allclose(E @ self.w.d, 0.0, atol=1e-13)
        np.testing.assert_allclose(np.linalg.norm(E, axis=1), self.w.k * self.w.b, rtol=1e-13)
        np.testing.assert_allclose(H @ self.w.d, 0.0, atol=1e-13)

    def test_maxwell_equations(self):
        k, h = self.w.k, 1e-4

        def E(x):
            return plane_wave_fields(self.w, x)[0]

        def H(x):
            return plane_wave_fields(self.w, x)[1]

        scale = k * k * self.w.b
        np.testing.assert_allclose(fd_curl(E, self.points, h), 1j * k * H(self.points), atol=1e-6 * scale)
        np.testing.assert_allclose(fd_curl(H, self.points, h), -1j * k * E(self.points), atol=1e-6 * scale)
        np.testing.assert_allclose(fd_divergence(E, self.points, h), 0.0, atol=1e-6 * scale)

    def test_duality_swap(self):
        sample = eval_plane_wave(self.w, self.points)
        swapped = duality_swap(sample)
        np.testing.assert_array_equal(swapped.E, sample.H)
        np.testing.assert_array_equal(swapped.H, -sample.E)
        twice = duality_swap(swapped)
        np.testing.assert_array_equal(twice.E, -sample.E)


class TestIndependenceConstant(unittest.TestCase):
    def test_orthogonal_polarizations(self):
        w1 = PlaneWaveSpec(1.0, (0, 0, 1), (1, 0, 0))
        w2 = PlaneWaveSpec(1.0, (0, 0, 1), (0, 1, 0))
        estimate = independence_constant_b0(w1, w2)
        self.assertAlmostEqual(estimate.b0, math.sqrt(0.5), delta=0.01)
        self.assertGreaterEqual(estimate.b0, math.sqrt(0.5) - 1e-12)
        self.assertLess(estimate.resolution, 0.01)

    def test_identical_waves_give_zero(self):
        w = PlaneWaveSpec(1.0, (0, 0, 1), (1, 0, 0))
        estimate = independence_constant_b0(w, w)
        self.assertLess(estimate.b0, 0.01)

    def test_lower_bound(self):
        w1 = PlaneWaveSpec(1.0, (0, 0, 1), (1, 0, 0))
        w2 = PlaneWaveSpec(1.0, (0, 0, 1), (0, 1, 0))
        values = tangential_lower_bound(w1, w2, [[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_allclose(values, [1.0, 1.0])

    def test_grid_too_small(self):
        w = PlaneWaveSpec(1.0, (0, 0, 1), (1, 0, 0))
        with self.assertRaises(ValidationError):
            independence_constant_b0(w, w, grid=500)

    def test_degenerate_polarizations(self):
        w = PlaneWaveSpec(1.0, (0, 0, 1), (0, 0, 1))
        with self.assertRaises(ValidationError):
            independence_constant_b0(w, w)


if __name__ == "__main__":
    unittest.main()
