import math
import unittest

import numpy as np

from ris_feedback.utils import complex_gaussian, dbm_to_watts, from_db, to_db, watts_to_dbm, wrap_phase


class TestUnits(unittest.TestCase):
    def test_to_db(self):
        """Linear ratios map to 10 log10; zero maps to -inf."""
        self.assertAlmostEqual(to_db(100.0), 20.0)
        self.assertEqual(to_db(0.0), -math.inf)

    def test_to_db_rejects_negative(self):
        with self.assertRaises(ValueError):
            to_db(-1.0)

    def test_from_db(self):
        self.assertAlmostEqual(from_db(-80.0), 1e-8, delta=1e-20)
        self.assertEqual(from_db(-math.inf), 0.0)

    def test_dbm_round_trip_of_table_values(self):
        """20 dBm is 100 mW; -100.9 dBm is about 8.13e-14 W."""
        self.assertAlmostEqual(dbm_to_watts(20.0), 0.1)
        self.assertAlmostEqual(dbm_to_watts(-100.9) / 8.128305e-14, 1.0, places=5)
        self.assertAlmostEqual(watts_to_dbm(0.1), 20.0)


class TestPhases(unittest.TestCase):
    def test_wrap_phase_maps_pi_to_minus_pi(self):
        self.assertEqual(wrap_phase(math.pi), -math.pi)
        self.assertEqual(wrap_phase(-math.pi), -math.pi)
        self.assertAlmostEqual(wrap_phase(0.5), 0.5)
        self.assertAlmostEqual(wrap_phase(0.5 + 4 * math.pi), 0.5)

    def test_wrap_phase_array(self):
        """Arrays stay arrays and every value lands in [-pi, pi)."""
        phases = np.linspace(-20.0, 20.0, 1001)
        wrapped = wrap_phase(phases)
        self.assertEqual(wrapped.shape, phases.shape)
        self.assertTrue(np.all(wrapped >= -math.pi))
        self.assertTrue(np.all(wrapped < math.pi))
        np.testing.assert_allclose(np.exp(1j * wrapped), np.exp(1j * phases), atol=1e-9)

    def test_wrap_phase_scalar_is_float(self):
        self.assertIsInstance(wrap_phase(1.0), float)


class TestComplexGaussian(unittest.TestCase):
    def test_variance_split_between_real_and_imaginary(self):
        gen = np.random.default_rng(7)
        draws = complex_gaussian(gen, 200_000, variance=4.0)
        self.assertAlmostEqual(np.mean(np.abs(draws) ** 2) / 4.0, 1.0, delta=0.02)
        self.assertAlmostEqual(np.var(draws.real) / 2.0, 1.0, delta=0.02)
        self.assertAlmostEqual(np.var(draws.imag) / 2.0, 1.0, delta=0.02)
        self.assertLess(abs(np.mean(draws)), 0.02)


if __name__ == "__main__":
    unittest.main()
