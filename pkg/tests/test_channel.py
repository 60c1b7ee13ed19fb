import math
import unittest
from unittest.mock import patch

import numpy as np

from ris_feedback.channel import (
    PURE_LOS,
    Geometry,
    LinkGains,
    RngStream,
    Substream,
    array_factor,
    array_response,
    channel_gain,
    draw_geometry,
    end_to_end_channel,
    is_pure_los,
    sample_rician_ht,
    sample_static_path,
)
from ris_feedback.codebook import PhaseConfig, optimal_common_phase, optimal_phases


class TestTypes(unittest.TestCase):
    def test_geometry_rejects_closed_interval_ends(self):
        for angle in (math.pi / 2, -math.pi / 2, 2.0):
            with self.assertRaises(ValueError):
                Geometry(angle, 0.0, 0.0)
            with self.assertRaises(ValueError):
                Geometry(0.0, 0.0, angle)

    def test_geometry_sin_sum(self):
        geometry = Geometry(math.pi / 6, math.pi / 6, 0.0)
        self.assertAlmostEqual(geometry.sin_sum, 1.0)

    def test_link_gains_validation(self):
        with self.assertRaises(ValueError):
            LinkGains(beta_r=0.0, beta_t=1.0)
        with self.assertRaises(ValueError):
            LinkGains(beta_r=1.0, beta_t=1.0, rho=-1.0)
        with self.assertRaises(ValueError):
            LinkGains(beta_r=1.0, beta_t=1.0, kappa=-0.5)
        self.assertTrue(is_pure_los(LinkGains(beta_r=1.0, beta_t=1.0).kappa))
        self.assertFalse(is_pure_los(10.0))


class TestRngStream(unittest.TestCase):
    def test_same_stream_reproduces_draws(self):
        a = RngStream(42, 3).generator().standard_normal(8)
        b = RngStream(42, 3).generator().standard_normal(8)
        np.testing.assert_array_equal(a, b)

    def test_streams_and_substreams_are_distinct(self):
        base = RngStream(42, 3)
        draws = [
            base.generator().standard_normal(4),
            RngStream(42, 4).generator().standard_normal(4),
            RngStream(43, 3).generator().standard_normal(4),
            base.substream(Substream.UE_RIS).generator().standard_normal(4),
            base.substream(Substream.STATIC_PATH).generator().standard_normal(4),
        ]
        for i in range(len(draws)):
            for j in range(i + 1, len(draws)):
                self.assertFalse(np.array_equal(draws[i], draws[j]))

    def test_rejects_values_beyond_64_bits(self):
        with self.assertRaises(ValueError):
            RngStream(2**64, 0)
        with self.assertRaises(ValueError):
            RngStream(0, -1)
        RngStream(2**64 - 1, 2**64 - 1).generator().random()

    def test_draw_geometry_in_open_interval(self):
        for trial in range(200):
            geometry = draw_geometry(RngStream(1, trial))
            for angle in (geometry.theta1, geometry.theta2, geometry.varphi):
                self.assertLess(abs(angle), math.pi / 2)

    @patch.object(RngStream, "generator")
    def test_draw_geometry_lowest_draw_stays_valid(self, mock_generator):
        """A generator returning the lower end of its range still yields a valid geometry."""
        mock_generator.return_value.uniform.side_effect = lambda low, high, size: np.full(size, low)
        geometry = draw_geometry(RngStream(1, 0))
        self.assertGreater(geometry.theta1, -math.pi / 2)
        self.assertAlmostEqual(geometry.varphi, -math.pi / 2)


class TestArrayResponse(unittest.TestCase):
    def test_broadside_is_all_ones(self):
        np.testing.assert_allclose(array_response(4, 0.0), np.ones(4))

    def test_half_wavelength_phase_progression(self):
        """sin(pi/6) = 1/2 gives a -pi/2 phase step per element."""
        np.testing.assert_allclose(array_response(3, math.pi / 6), [1.0, -1j, -1.0], atol=1e-12)

    def test_unit_modulus(self):
        response = array_response(64, 0.7)
        np.testing.assert_allclose(np.abs(response), np.ones(64))

    def test_rejects_empty_array(self):
        with self.assertRaises(ValueError):
            array_response(0, 0.1)


class TestRandomChannels(unittest.TestCase):
    def test_pure_los_is_deterministic(self):
        h_t = sample_rician_ht(16, 0.3, 4.0, PURE_LOS, RngStream(0, 0))
        np.testing.assert_allclose(h_t, 2.0 * array_response(16, 0.3))

    def test_rician_entries_carry_beta_t(self):
        """E|h_t,n|^2 = beta_t for every kappa."""
        for kappa in (0.0, 1.0, 10.0):
            h_t = sample_rician_ht(20_000, 0.2, 2.0, kappa, RngStream(5, 1, Substream.UE_RIS))
            self.assertAlmostEqual(np.mean(np.abs(h_t) ** 2) / 2.0, 1.0, delta=0.05)

    def test_rician_los_component_scales_with_kappa(self):
        los = array_response(20_000, 0.2)
        h_t = sample_rician_ht(20_000, 0.2, 1.0, 3.0, RngStream(9, 0))
        projection = np.vdot(los, h_t) / los.shape[0]
        self.assertAlmostEqual(abs(projection), math.sqrt(3.0 / 4.0), delta=0.02)

    def test_static_path(self):
        np.testing.assert_array_equal(sample_static_path(4, 0.0, RngStream(0, 0)), np.zeros(4))
        h_s = sample_static_path(50_000, 1e-12, RngStream(0, 0, Substream.STATIC_PATH))
        self.assertAlmostEqual(np.mean(np.abs(h_s) ** 2) / 1e-12, 1.0, delta=0.03)
        with self.assertRaises(ValueError):
            sample_static_path(0, 1.0, RngStream(0, 0))


class TestEndToEnd(unittest.TestCase):
    def setUp(self):
        self.geometry = Geometry(0.4, -0.9, 0.25)
        self.gains = LinkGains(beta_r=1e-4, beta_t=1e-2)
        self.N = 32
        self.K = 4

    def test_array_factor_of_optimal_phases_is_N(self):
        config = optimal_phases(self.geometry.theta1, self.geometry.theta2, self.N)
        af = array_factor(self.geometry.theta1, self.geometry.theta2, config)
        self.assertAlmostEqual(af.real, self.N, places=9)
        self.assertAlmostEqual(af.imag, 0.0, places=9)

    def test_optimal_phases_reach_full_gain(self):
        """Pure LoS with no static path: ||h||^2 = N^2 K beta_r beta_t."""
        config = optimal_phases(self.geometry.theta1, self.geometry.theta2, self.N)
        h_t = sample_rician_ht(self.N, self.geometry.theta2, self.gains.beta_t, PURE_LOS, RngStream(0, 0))
        h = end_to_end_channel(self.geometry, self.gains, h_t, np.zeros(self.K), config)
        expected = self.N**2 * self.K * self.gains.beta_r * self.gains.beta_t
        self.assertAlmostEqual(channel_gain(h) / expected, 1.0, places=9)

    def test_common_phase_irrelevant_without_static_path(self):
        config = optimal_phases(self.geometry.theta1, self.geometry.theta2, self.N)
        h_t = sample_rician_ht(self.N, self.geometry.theta2, self.gains.beta_t, 2.0, RngStream(3, 0))
        zero = np.zeros(self.K)
        g0 = channel_gain(end_to_end_channel(self.geometry, self.gains, h_t, zero, config))
        g1 = channel_gain(end_to_end_channel(self.geometry, self.gains, h_t, zero, config.with_phi(1.3)))
        self.assertAlmostEqual(g0 / g1, 1.0, places=12)

    def test_aligned_common_phase_adds_coherently(self):
        """With the optimal common phase the cross term is 2 c |a_K^H h_s|."""
        config = optimal_phases(self.geometry.theta1, self.geometry.theta2, self.N)
        h_t = sample_rician_ht(self.N, self.geometry.theta2, self.gains.beta_t, PURE_LOS, RngStream(0, 0))
        h_s = sample_static_path(self.K, 1e-5, RngStream(11, 0, Substream.STATIC_PATH))
        a_k = array_response(self.K, self.geometry.varphi)
        aligned = config.with_phi(optimal_common_phase(a_k, h_s))
        h = end_to_end_channel(self.geometry, self.gains, h_t, h_s, aligned)

        c = math.sqrt(self.gains.beta_r * self.gains.beta_t) * self.N
        expected = channel_gain(h_s) + self.K * c**2 + 2.0 * c * abs(np.vdot(a_k, h_s))
        self.assertAlmostEqual(channel_gain(h) / expected, 1.0, places=9)

    def test_length_mismatch(self):
        config = PhaseConfig(np.zeros(self.N - 1))
        with self.assertRaises(ValueError):
            end_to_end_channel(self.geometry, self.gains, np.ones(self.N), np.zeros(self.K), config)


if __name__ == "__main__":
    unittest.main()
