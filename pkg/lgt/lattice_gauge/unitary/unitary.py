# Copyright (c) 2026, LGT Contributors
# License: MIT. See license.txt

"""U(N) and Hermitian-matrix primitives.

Matrices are plain complex numpy arrays; stacked (..., N, N) arrays are used
wherever a loop over edges would otherwise be needed.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as la
from scipy import integrate

from lgt import throw
from lgt.config import tolerances
from lgt.exceptions import DimensionMismatchError, QuadratureGridError

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2 * math.pi)
# largest Weyl quadrature grid, in points
WEYL_MAX_POINTS = 20_000_000


def _require_order(N):
	if int(N) != N or N < 1:
		throw(f"Matrix order must be a positive integer, got N={N}")


def _dagger(A):
	return np.conj(np.swapaxes(A, -1, -2))


# Haar measure
# ------------


def _phase_fix(q, r):
	diag = np.diagonal(r, axis1=-2, axis2=-1)
	return q * (diag / np.abs(diag))[..., None, :], np.abs(diag)


def haar_sample(N, rng):
	"""Haar-distributed U(N) matrix: QR of a complex Ginibre matrix, R with positive diagonal"""
	_require_order(N)
	while True:
		z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
		q, r = la.qr(z)
		u, pivots = _phase_fix(q, r)
		if pivots.min() > 1e-12:
			return u
		logger.debug("Re-drawing rank-deficient Ginibre sample (N=%s)", N)


def haar_sample_batch(N, size, rng):
	"""`size` independent Haar matrices stacked as (size, N, N)"""
	_require_order(N)
	z = (rng.standard_normal((size, N, N)) + 1j * rng.standard_normal((size, N, N))) / math.sqrt(2)
	q, r = np.linalg.qr(z)
	u, pivots = _phase_fix(q, r)
	bad = np.flatnonzero(pivots.min(axis=-1) <= 1e-12)
	for i in bad:
		u[i] = haar_sample(N, rng)
	return u


# Hilbert-Schmidt geometry
# ------------------------


def phi(U):
	"""Re Tr(I - U)"""
	return float(U.shape[-1] - np.trace(U).real)


def phi_batch(U):
	return U.shape[-1] - np.trace(U, axis1=-2, axis2=-1).real


def hs_norm(A):
	return float(np.linalg.norm(A))


def hs_distance(A, B):
	"""Hilbert-Schmidt distance sqrt(Tr((A-B)*(A-B)))"""
	A, B = np.asarray(A), np.asarray(B)
	if A.shape != B.shape:
		throw(f"Cannot compare matrices of shapes {A.shape} and {B.shape}", DimensionMismatchError)
	return hs_norm(A - B)


def unitarity_defect(U):
	"""||U*U - I||, the largest over a stack"""
	N = U.shape[-1]
	defect = np.linalg.norm(_dagger(U) @ U - np.eye(N), axis=(-2, -1))
	return float(np.max(defect))


# Hermitian matrices
# ------------------


def is_hermitian(H, tol=None):
	return bool(np.max(np.abs(H - _dagger(H)), initial=0.0) <= (tolerances.construction if tol is None else tol))


def hermitian_coordinates(H):
	"""Real coordinates (y_jj, z_jk, w_jk) with H_jk = (z_jk + i w_jk)/sqrt(2) for j < k"""
	N = H.shape[-1]
	upper = np.triu_indices(N, 1)
	off = H[..., upper[0], upper[1]]
	y = np.diagonal(H, axis1=-2, axis2=-1).real
	return np.concatenate([y, math.sqrt(2) * off.real, math.sqrt(2) * off.imag], axis=-1)


def hermitian_from_coordinates(x):
	"""Inverse of `hermitian_coordinates`; x has N^2 entries in its last axis"""
	x = np.asarray(x, dtype=float)
	N = math.isqrt(x.shape[-1])
	if N * N != x.shape[-1]:
		throw(f"Expected N^2 coordinates, got {x.shape[-1]}", DimensionMismatchError)
	m = N * (N - 1) // 2
	upper = np.triu_indices(N, 1)
	H = np.zeros(x.shape[:-1] + (N, N), dtype=complex)
	H[..., np.arange(N), np.arange(N)] = x[..., :N]
	off = (x[..., N : N + m] + 1j * x[..., N + m :]) / math.sqrt(2)
	H[..., upper[0], upper[1]] = off
	H[..., upper[1], upper[0]] = np.conj(off)
	return H


def gue_sample(N, rng):
	"""GUE matrix: standard real Gaussian diagonal, (z + iw)/sqrt(2) off the diagonal"""
	_require_order(N)
	return hermitian_from_coordinates(rng.standard_normal(N * N))


def gue_sample_batch(N, size, rng):
	_require_order(N)
	return hermitian_from_coordinates(rng.standard_normal((size, N * N)))


def exp_hermitian(H):
	"""e^{iH} through the eigendecomposition H = V diag(w) V*"""
	H = np.asarray(H, dtype=complex)
	if not is_hermitian(H, tolerances.algebraic * max(1.0, hs_norm(H))):
		throw("exp_hermitian needs a Hermitian matrix")
	w, V = la.eigh(H)
	return (V * np.exp(1j * w)) @ _dagger(V)


def exp_hermitian_batch(H):
	w, V = np.linalg.eigh(H)
	return (V * np.exp(1j * w)[..., None, :]) @ _dagger(V)


@dataclass(frozen=True)
class ExpMapReport:
	"""Ratios against the bounds (2 - e^r)||dH|| <= ||d e^{iH}|| <= e^r ||dH||"""

	lower_ratio: float  # ||d e^{iH}|| / ((2 - e^r)||dH||), must be >= 1
	upper_ratio: float  # ||d e^{iH}|| / (e^r ||dH||), must be <= 1
	lower_holds: bool
	upper_holds: bool

	@property
	def holds(self):
		return self.lower_holds and self.upper_holds


def exp_map_bounds_check(H1, H2, r):
	"""Check the two-sided Lipschitz bounds of H -> e^{iH} on the ball of radius r"""
	if r <= 0:
		throw(f"Radius must be positive, got r={r}")
	for H in (H1, H2):
		if hs_norm(H) > r * (1 + tolerances.construction):
			throw(f"||H|| = {hs_norm(H):.6g} exceeds r = {r}")

	tol = tolerances.algebraic
	dH = hs_distance(H1, H2)
	if dH == 0.0:
		return ExpMapReport(1.0, 1.0, True, True)

	dU = hs_distance(exp_hermitian(H1), exp_hermitian(H2))
	upper_ratio = dU / (math.exp(r) * dH)
	lower_factor = 2 - math.exp(r)
	if lower_factor <= 0:
		# the lower bound is vacuous for r >= log 2
		lower_ratio = math.inf
	else:
		lower_ratio = dU / (lower_factor * dH)
	return ExpMapReport(lower_ratio, upper_ratio, lower_ratio >= 1 - tol, upper_ratio <= 1 + tol)


# Small balls
# -----------


@dataclass(frozen=True)
class SmallBallConstant:
	N: int
	log_value: float
	log_lie_constant: float

	@property
	def value(self):
		"""lim sigma(B(I, delta)) / delta^{N^2}"""
		return math.exp(self.log_value)

	@property
	def lie_constant(self):
		"""C_N = prod j! / (2 pi)^{N(N+1)/2}"""
		return math.exp(self.log_lie_constant)


def log_superfactorial(N):
	"""log prod_{j=1}^{N-1} j!"""
	return math.fsum(math.lgamma(j + 1) for j in range(1, N))


def small_ball_constant(N):
	_require_order(N)
	log_prod = log_superfactorial(N)
	log_value = log_prod - 0.5 * N * LOG_2PI - 0.5 * N * N * math.log(2) - math.lgamma(N * N / 2 + 1)
	log_lie = log_prod - 0.5 * N * (N + 1) * LOG_2PI
	return SmallBallConstant(N=N, log_value=log_value, log_lie_constant=log_lie)


def lie_ball_volume(N, delta):
	"""C_N times the Lebesgue volume of the Hilbert-Schmidt ball of radius delta in H(N)"""
	k = N * N
	log_ball = 0.5 * k * math.log(math.pi) + k * math.log(delta) - math.lgamma(k / 2 + 1)
	return math.exp(small_ball_constant(N).log_lie_constant + log_ball)


class SmallBallEstimate(NamedTuple):
	probability: float
	stderr: float


def small_ball_estimate(N, delta, samples, rng, chunk=100_000):
	"""Monte Carlo estimate of sigma({U: ||I - U|| <= delta}) with its binomial standard error"""
	_require_order(N)
	if not 0 < delta < math.sqrt(N):
		throw(f"delta must lie in (0, sqrt(N)) = (0, {math.sqrt(N):.6g}), got {delta}")
	if samples < 1:
		throw(f"samples must be positive, got {samples}")

	# ||I - U||^2 = 2N - 2 Re Tr U
	hits = 0
	remaining = samples
	while remaining:
		size = min(chunk, remaining)
		U = haar_sample_batch(N, size, rng)
		hits += int(np.count_nonzero(2 * phi_batch(U) <= delta * delta))
		remaining -= size

	p = hits / samples
	return SmallBallEstimate(p, math.sqrt(p * (1 - p) / samples))


def weyl_integral(f, N, nodes=64):
	"""Integral of a class function over U(N) by the Weyl integration formula.

	`f` receives eigenvalues e^{i theta} shaped (points, N). The periodic
	trapezoid rule with `nodes` points per angle is exact for trigonometric
	polynomials of degree below `nodes`.
	"""
	_require_order(N)
	if nodes**N > WEYL_MAX_POINTS:
		throw(f"Weyl grid of {nodes}^{N} points is too large", QuadratureGridError)
	theta = 2 * math.pi * np.arange(nodes) / nodes - math.pi
	grid = np.stack(np.meshgrid(*([theta] * N), indexing="ij"), axis=-1).reshape(-1, N)
	z = np.exp(1j * grid)
	vandermonde = np.ones(len(z))
	for j, k in itertools.combinations(range(N), 2):
		vandermonde *= np.abs(z[:, j] - z[:, k]) ** 2
	return float(np.mean(vandermonde * f(z)) / math.factorial(N))


def small_ball_probability(N, delta):
	"""sigma(B(I, delta)) by quadrature; N = 1 or 2"""
	if not 0 < delta < math.sqrt(N):
		throw(f"delta must lie in (0, sqrt(N)) = (0, {math.sqrt(N):.6g}), got {delta}")
	if N == 1:
		return 2 / math.pi * math.asin(delta / 2)
	if N != 2:
		throw(f"small_ball_probability supports N in (1, 2), got N={N}")

	# eigenangles with 4 sin^2(a/2) + 4 sin^2(b/2) <= delta^2, density (2 - 2 cos(a - b)) / (8 pi^2)
	a_max = 2 * math.asin(delta / 2)

	def inner(a):
		s = delta * delta / 4 - math.sin(a / 2) ** 2
		b = 2 * math.asin(math.sqrt(max(s, 0.0)))
		return 4 * b - 4 * math.cos(a) * math.sin(b)

	value, _ = integrate.quad(inner, -a_max, a_max, epsabs=0.0, epsrel=1e-11, limit=200)
	return value / (8 * math.pi**2)
