"""Tests for noise channels, seeded streams and priors."""
import math
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from noise import (NoiseModel, RngStream, XZZX_BIAS, empirical_frequencies, prior_matrix,
                   priors_from_channel, sample_error)


class TestNoiseModel(unittest.TestCase):
    def test_depolarizing(self):
        """Depolarizing noise splits p evenly."""
        np.testing.assert_allclose(NoiseModel.depolarizing(0.03).probabilities, [0.01, 0.01, 0.01])

    def test_per_pauli(self):
        """per_pauli takes the single-Pauli probability."""
        self.assertAlmostEqual(NoiseModel.per_pauli(0.01).p_total, 0.03)

    def test_biased(self):
        """The default biased channel is (1/6, 1/6, 2/3)."""
        model = NoiseModel.biased(0.06)
        np.testing.assert_allclose(model.bias, XZZX_BIAS)
        np.testing.assert_allclose(model.probabilities, [0.01, 0.01, 0.04])

    def test_invalid(self):
        """p outside [0, 1) and malformed biases are rejected."""
        for p in (-0.1, 1.0, 1.5):
            with self.assertRaises(ValueError):
                NoiseModel.depolarizing(p)
        with self.assertRaises(ValueError):
            NoiseModel(0.1, (0.5, 0.5, 0.5))
        with self.assertRaises(ValueError):
            NoiseModel(0.1, (1.2, -0.1, -0.1))
        with self.assertRaises(ValueError):
            NoiseModel.biased(0.1, 1.5)


class TestPriors(unittest.TestCase):
    def test_values(self):
        """Each component is ln((1 - p_W) / p_W)."""
        priors = priors_from_channel(NoiseModel.depolarizing(0.01))
        np.testing.assert_allclose(priors, [math.log(299)] * 3)

    def test_zero_probability_is_floored(self):
        """A zero-weight Pauli gets a large finite prior."""
        priors = priors_from_channel(NoiseModel(0.1, (0.5, 0.0, 0.5)))
        self.assertTrue(np.all(np.isfinite(priors)))
        self.assertGreater(priors[1], 25)

    def test_decreasing_in_p(self):
        """Noisier channels give strictly smaller priors, biased or not."""
        grid = [0.001, 0.01, 0.05, 0.1, 0.2, 0.3, 0.5]
        for build in (NoiseModel.depolarizing, NoiseModel.biased):
            priors = np.array([priors_from_channel(build(p)) for p in grid])
            self.assertTrue(np.all(np.diff(priors, axis=0) < 0), build.__name__)

    def test_matrix(self):
        """prior_matrix repeats the triple per qubit."""
        m = prior_matrix(NoiseModel.depolarizing(0.3), 5)
        self.assertEqual(m.shape, (5, 3))
        np.testing.assert_allclose(m[3], [math.log(9)] * 3)


class TestSampling(unittest.TestCase):
    def test_reproducible(self):
        """The same (seed, index) always gives the same error."""
        model = NoiseModel.depolarizing(0.3)
        a = sample_error(model, 50, RngStream(7, 3))
        b = sample_error(model, 50, RngStream(7, 3))
        c = sample_error(model, 50, RngStream(7, 4))
        self.assertEqual(a, b)
        self.assertNotEqual(a, c)

    def test_noiseless(self):
        """p = 0 never produces an error."""
        self.assertEqual(sample_error(NoiseModel.depolarizing(0.0), 20, RngStream(1, 0)).weight(), 0)

    def test_frequencies(self):
        """Empirical rates of X, Y and Z approach p * bias."""
        model = NoiseModel(0.3, (0.2, 0.3, 0.5))
        errors = [sample_error(model, 100, RngStream(11, k)) for k in range(400)]
        freqs = empirical_frequencies(errors)
        np.testing.assert_allclose(freqs, model.probabilities, atol=0.01)

    def test_frequencies_within_four_sigma(self):
        """A million draws land within four binomial standard deviations of each rate."""
        n = 1_000_000
        for model, expected in ((NoiseModel.depolarizing(0.12), [0.04, 0.04, 0.04]),
                                (NoiseModel.biased(0.1), [0.1 / 6, 0.1 / 6, 0.2 / 3])):
            with self.subTest(model=str(model)):
                np.testing.assert_allclose(model.probabilities, expected)
                freqs = empirical_frequencies([sample_error(model, n, RngStream(99, 0))])
                sigma = np.sqrt(np.asarray(expected) * (1 - np.asarray(expected)) / n)
                self.assertTrue(np.all(np.abs(freqs - expected) <= 4 * sigma), (freqs, expected))

    def test_empty_frequencies(self):
        np.testing.assert_array_equal(empirical_frequencies([]), np.zeros(3))

    @given(st.integers(0, 2 ** 63), st.integers(0, 10 ** 6))
    @settings(max_examples=50, deadline=None)
    def test_any_seed(self, seed, index):
        """Every seed and index pair yields a valid error of the right length."""
        error = sample_error(NoiseModel.depolarizing(0.5), 16, RngStream(seed, index))
        self.assertEqual(len(error), 16)


if __name__ == '__main__':
    unittest.main()
