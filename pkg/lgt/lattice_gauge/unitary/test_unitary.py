# Copyright (c) 2026, LGT Contributors
# See license.txt

import math
import unittest

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lgt.exceptions import DimensionMismatchError, ValidationError
from lgt.lattice_gauge.unitary.unitary import (
	exp_hermitian,
	exp_hermitian_batch,
	exp_map_bounds_check,
	gue_sample,
	gue_sample_batch,
	haar_sample,
	haar_sample_batch,
	hermitian_coordinates,
	hermitian_from_coordinates,
	hs_distance,
	hs_norm,
	lie_ball_volume,
	phi,
	small_ball_constant,
	small_ball_estimate,
	small_ball_probability,
	unitarity_defect,
	weyl_integral,
)


def random_hermitian(N, radius, rng):
	"""Hermitian matrix with Hilbert-Schmidt norm uniform in (0, radius]"""
	H = gue_sample(N, rng)
	return H * (radius * (1 - rng.random()) / hs_norm(H))


class TestHaar(unittest.TestCase):
	def setUp(self):
		self.rng = np.random.default_rng(11)

	def test_samples_are_unitary(self):
		for N in range(1, 6):
			self.assertLess(unitarity_defect(haar_sample(N, self.rng)), 1e-12)
			self.assertLess(unitarity_defect(haar_sample_batch(N, 200, self.rng)), 1e-12)

	def test_u1_phases_are_centred(self):
		U = haar_sample_batch(1, 100_000, self.rng)
		self.assertLess(abs(U.mean()), 0.02)

	def test_u2_trace_second_moment(self):
		U = haar_sample_batch(2, 100_000, self.rng)
		moment = np.mean(np.abs(np.trace(U, axis1=1, axis2=2)) ** 2)
		self.assertLess(abs(moment - 1.0), 0.05)

	def test_weyl_quadrature_moments(self):
		for N in (1, 2, 3):
			self.assertAlmostEqual(weyl_integral(lambda z: np.ones(len(z)), N, nodes=16), 1.0, places=12)
			second = weyl_integral(lambda z: np.abs(z.sum(axis=1)) ** 2, N, nodes=16)
			self.assertAlmostEqual(second, 1.0, places=12)


class TestHilbertSchmidt(unittest.TestCase):
	def setUp(self):
		self.rng = np.random.default_rng(12)

	def test_phi_examples(self):
		self.assertEqual(phi(np.eye(3)), 0.0)
		self.assertEqual(phi(np.array([[-1.0 + 0j]])), 2.0)
		self.assertAlmostEqual(phi(np.diag([1j, -1j])), 2.0, places=14)

	def test_phi_is_half_squared_distance_to_identity(self):
		for N in (1, 2, 3):
			for U in haar_sample_batch(N, 1000, self.rng):
				self.assertAlmostEqual(phi(U), 0.5 * hs_distance(np.eye(N), U) ** 2, delta=1e-10)

	def test_distance_to_self_and_shape_mismatch(self):
		U = haar_sample(3, self.rng)
		self.assertEqual(hs_distance(U, U), 0.0)
		with self.assertRaises(DimensionMismatchError):
			hs_distance(np.eye(2), np.eye(3))

	def test_product_and_inverse_identities(self):
		I = np.eye(3)
		for _ in range(200):
			U1, U2, V = (haar_sample(3, self.rng) for _ in range(3))
			self.assertLessEqual(
				hs_distance(I, U1 @ U2), hs_distance(I, U1) + hs_distance(I, U2) + 1e-12
			)
			self.assertAlmostEqual(hs_distance(I, U1.conj().T), hs_distance(I, U1), delta=1e-12)
			self.assertAlmostEqual(hs_distance(V, U1), hs_distance(I, V.conj().T @ U1), delta=1e-12)


class TestHermitian(unittest.TestCase):
	def setUp(self):
		self.rng = np.random.default_rng(13)

	def test_coordinates_are_an_isometry(self):
		for N in (1, 2, 4):
			H = gue_sample(N, self.rng)
			x = hermitian_coordinates(H)
			self.assertEqual(x.shape, (N * N,))
			self.assertAlmostEqual(np.linalg.norm(x), hs_norm(H), places=12)
			np.testing.assert_allclose(hermitian_from_coordinates(x), H, atol=1e-14)

	def test_exp_examples(self):
		np.testing.assert_allclose(exp_hermitian(np.zeros((3, 3))), np.eye(3), atol=1e-15)
		self.assertAlmostEqual(exp_hermitian(np.array([[math.pi]]))[0, 0], -1.0, delta=1e-12)

	def test_exp_rejects_non_hermitian(self):
		with self.assertRaises(ValidationError):
			exp_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

	def test_exp_is_unitary_with_unit_eigenvalues(self):
		for N in (1, 2, 3, 5):
			U = exp_hermitian(3 * gue_sample(N, self.rng))
			self.assertLess(unitarity_defect(U), 1e-12)
			np.testing.assert_allclose(np.abs(np.linalg.eigvals(U)), 1.0, atol=1e-12)

	def test_batch_exp_matches_single(self):
		H = gue_sample_batch(3, 10, self.rng)
		batch = exp_hermitian_batch(H)
		for h, u in zip(H, batch, strict=True):
			np.testing.assert_allclose(u, exp_hermitian(h), atol=1e-13)

	def test_cubic_remainder(self):
		for N in (1, 2, 3):
			for _ in range(50):
				H = gue_sample(N, self.rng)
				H *= 0.1 / hs_norm(H)
				remainder = exp_hermitian(H) - np.eye(N) - 1j * H + H @ H / 2
				self.assertLessEqual(hs_norm(remainder), 0.1**3 / 6 + 1e-15)

	def test_exp_map_bounds(self):
		H = gue_sample(2, self.rng)
		H *= 0.05 / hs_norm(H)
		report = exp_map_bounds_check(H, H, 0.1)
		self.assertEqual((report.lower_ratio, report.upper_ratio), (1.0, 1.0))

		for r in (0.1, 0.5):
			for N in (1, 2, 3):
				for _ in range(100):
					H1, H2 = random_hermitian(N, r, self.rng), random_hermitian(N, r, self.rng)
					self.assertTrue(exp_map_bounds_check(H1, H2, r).holds)

	def test_exp_map_precondition(self):
		with self.assertRaises(ValidationError):
			exp_map_bounds_check(np.eye(2), np.zeros((2, 2)), 0.1)

	def test_gue_moments(self):
		samples = 100_000
		for N in (1, 2, 3):
			X = gue_sample_batch(N, samples, self.rng)
			tr_sq = np.einsum("sij,sji->s", X, X).real
			self.assertLess(abs(tr_sq.mean() - N * N), 3 * tr_sq.std(ddof=1) / math.sqrt(samples))
			tr = np.trace(X, axis1=1, axis2=2).real
			self.assertLess(abs(tr.mean()), 3 * tr.std(ddof=1) / math.sqrt(samples))

	def test_gue_norm_follows_chi_squared(self):
		samples = 100_000
		X = gue_sample_batch(2, samples, self.rng)
		inside = np.mean(np.linalg.norm(X, axis=(1, 2)) ** 2 <= 1.0)
		p = stats.chi2.cdf(1.0, df=4)
		self.assertLess(abs(inside - p), 3 * math.sqrt(p * (1 - p) / samples))


class TestSmallBall(unittest.TestCase):
	def test_constants(self):
		self.assertAlmostEqual(small_ball_constant(1).value, 1 / math.pi, places=14)
		self.assertAlmostEqual(small_ball_constant(2).value, 1 / (16 * math.pi), places=14)
		self.assertAlmostEqual(small_ball_constant(1).lie_constant, 1 / (2 * math.pi), places=14)
		for N in range(1, 12):
			c = small_ball_constant(N)
			self.assertGreater(c.value, 0.0)
			self.assertGreater(c.lie_constant, 0.0)

	def test_lie_volume_matches_small_ball_constant(self):
		for N in range(1, 6):
			delta = 0.3
			ratio = lie_ball_volume(N, delta) / delta ** (N * N)
			self.assertAlmostEqual(ratio / small_ball_constant(N).value, 1.0, places=10)

	def test_quadrature_probability(self):
		self.assertAlmostEqual(small_ball_probability(1, 0.1), 2 / math.pi * math.asin(0.05), places=15)
		# leading order delta^4 / (16 pi)
		p = small_ball_probability(2, 0.01)
		self.assertAlmostEqual(p / 0.01**4 * 16 * math.pi, 1.0, delta=1e-3)

	def test_delta_scaling_exponent(self):
		deltas = np.array([0.05, 0.1, 0.2])
		logp = np.log([small_ball_probability(2, d) for d in deltas])
		slope = np.polyfit(np.log(deltas), logp, 1)[0]
		self.assertLess(abs(slope - 4), 0.2)

	def test_estimate_preconditions(self):
		rng = np.random.default_rng(0)
		with self.assertRaises(ValidationError):
			small_ball_estimate(1, 2.0, 10, rng)
		with self.assertRaises(ValidationError):
			small_ball_estimate(2, 0.3, 0, rng)

	def test_u1_estimate_matches_arc_length(self):
		p, se = small_ball_estimate(1, 0.1, 1_000_000, np.random.default_rng(14))
		self.assertLess(abs(p - 2 / math.pi * math.asin(0.05)), 3 * se)

	def test_u2_estimate_matches_quadrature(self):
		p, se = small_ball_estimate(2, 0.6, 400_000, np.random.default_rng(15))
		self.assertLess(abs(p - small_ball_probability(2, 0.6)), 3 * se)

	@pytest.mark.slow
	def test_u2_constant_from_ten_million_draws(self):
		p, _ = small_ball_estimate(2, 0.3, 10_000_000, np.random.default_rng(16))
		self.assertLess(abs(p / 0.3**4 - 1 / (16 * math.pi)), 0.1 / (16 * math.pi))

	def test_estimate_is_reproducible(self):
		a = small_ball_estimate(2, 0.5, 50_000, np.random.default_rng(3))
		b = small_ball_estimate(2, 0.5, 50_000, np.random.default_rng(3))
		self.assertEqual(a, b)

	@settings(max_examples=20, deadline=None)
	@given(seed=st.integers(0, 2**32 - 1), N=st.integers(1, 4))
	def test_left_invariance(self, seed, N):
		rng = np.random.default_rng(seed)
		U, V = haar_sample(N, rng), haar_sample(N, rng)
		self.assertAlmostEqual(hs_distance(V, U), hs_distance(np.eye(N), V.conj().T @ U), delta=1e-12)
