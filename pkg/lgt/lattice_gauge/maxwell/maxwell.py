# Copyright (c) 2026, LGT Contributors
# License: MIT. See license.txt

"""Lattice Maxwell theory on B_n.

M_n(s) = sum over plaquettes of the squared signed edge sum, i.e. ||B s||^2 with
B the incidence matrix. Freezing a set of edges E (always containing the axial
edges) to values theta leaves a quadratic model t^T Q t + v^T t + c in the
remaining edges; its Gaussian measure has covariance Q^{-1}/2 and mean -Q^{-1} v / 2.
"""

import functools
import logging
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import NamedTuple

import numpy as np
import scipy.linalg as la
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as splinalg

from lgt import hooks, throw
from lgt.config import tolerances
from lgt.exceptions import DimensionMismatchError, IndefiniteFormError, SizeCapExceededError
from lgt.lattice_gauge.lattice.lattice import Lattice, edge_counts, geometry, incidence_matrix
from lgt.lattice_gauge.unitary.unitary import LOG_2PI, SmallBallEstimate

try:
	from sksparse.cholmod import CholmodNotPositiveDefiniteError, cholesky
except ImportError:
	cholesky = None

logger = logging.getLogger(__name__)

DENSE_EIGEN_LIMIT = 500


@dataclass(frozen=True, eq=False)
class EdgeField:
	"""Real values on the edges `edges` of a lattice; reversed edges carry the negation implicitly"""

	lattice: Lattice
	edges: np.ndarray
	values: np.ndarray

	def full(self, frozen=None):
		"""Vector over all edges, `frozen` values first, then this field's values"""
		s = np.zeros(geometry(self.lattice).num_edges)
		for edge, value in (frozen or {}).items():
			s[edge] = value
		s[self.edges] = self.values
		return s


@dataclass(frozen=True, eq=False)
class QuadraticModel:
	lattice: Lattice
	Q: object  # scipy.sparse csc, symmetric
	v: np.ndarray
	c: float
	variables: np.ndarray  # edge ids of the unfrozen edges
	frozen: MappingProxyType = field(repr=False)

	@property
	def dim(self):
		return len(self.variables)

	@functools.cached_property
	def factor(self):
		return factorize(self.Q)

	@functools.cached_property
	def mean(self):
		"""mu = -Sigma v with Sigma = Q^{-1}/2"""
		if not np.any(self.v):
			return np.zeros(self.dim)
		return -0.5 * self.factor.solve(self.v)

	def to_field(self, values):
		values = np.asarray(values, dtype=float)
		if values.shape != (self.dim,):
			throw(f"Expected {self.dim} free values, got shape {values.shape}", DimensionMismatchError)
		return EdgeField(self.lattice, self.variables, values)

	def extend(self, t):
		"""Full edge vector s: t on the variables, theta on the frozen edges"""
		if isinstance(t, EdgeField):
			t = t.values
		return self.to_field(t).full(self.frozen)

	def __call__(self, t):
		return evaluate(self, t)


# Assembly
# --------


def axial_frozen(lat, overrides=None):
	"""Frozen map E_n^0 -> 0, updated with `overrides` (edge id -> value) on any edges"""
	frozen = dict.fromkeys(np.flatnonzero(geometry(lat).axial).tolist(), 0.0)
	for edge, value in (overrides or {}).items():
		frozen[int(edge)] = float(value)
	return frozen


def assemble_form(lat, frozen=None):
	"""Quadratic model of M_n in the unfrozen edges, frozen edges substituted"""
	geo = geometry(lat)
	frozen = axial_frozen(lat) if frozen is None else {int(e): float(v) for e, v in frozen.items()}

	bad = [e for e in frozen if not 0 <= e < geo.num_edges]
	if bad:
		throw(f"Frozen keys {bad[:5]} are not edges of B_{lat.n} (d={lat.d})")
	missing = np.flatnonzero(geo.axial & ~np.isin(np.arange(geo.num_edges), list(frozen)))
	if len(missing):
		throw(
			f"Frozen set misses {len(missing)} axial edge(s), e.g. edge {missing[0]}; the form would be degenerate"
		)

	frozen_ids = np.array(sorted(frozen), dtype=np.int64)
	theta = np.array([frozen[e] for e in frozen_ids])
	is_free = np.ones(geo.num_edges, dtype=bool)
	is_free[frozen_ids] = False
	variables = np.flatnonzero(is_free)

	B = incidence_matrix(lat)
	B_free, B_frozen = B[:, variables], B[:, frozen_ids]
	r = B_frozen @ theta

	model = QuadraticModel(
		lattice=lat,
		Q=(B_free.T @ B_free).tocsc(),
		v=2 * (B_free.T @ r),
		c=float(r @ r),
		variables=variables,
		frozen=MappingProxyType(dict(zip(frozen_ids.tolist(), theta.tolist(), strict=True))),
	)
	logger.debug("Assembled Maxwell form d=%s n=%s: dim=%s nnz=%s", lat.d, lat.n, model.dim, model.Q.nnz)
	return model


def evaluate(model, t):
	"""t^T Q t + v^T t + c"""
	t = t.values if isinstance(t, EdgeField) else np.asarray(t, dtype=float)
	if t.shape != (model.dim,):
		throw(f"Model has {model.dim} variables, got shape {t.shape}", DimensionMismatchError)
	return float(t @ (model.Q @ t) + model.v @ t + model.c)


def plaquette_sum_form(lat, s):
	"""M_n(s) by summing the squared signed edge sums plaquette by plaquette"""
	geo = geometry(lat)
	s = np.asarray(s, dtype=float)
	if s.shape != (geo.num_edges,):
		throw(f"Expected a field on {geo.num_edges} edges, got shape {s.shape}", DimensionMismatchError)
	e = geo.plaq_edges
	sums = s[e[:, 0]] + s[e[:, 1]] - s[e[:, 2]] - s[e[:, 3]]
	return math.fsum(sums * sums)


# Factorization
# -------------


class SparseFactor:
	"""Cholesky-type factorization of a sparse symmetric positive definite matrix"""

	backend = None

	def logdet(self):
		raise NotImplementedError

	def solve(self, b):
		raise NotImplementedError

	def sample(self, rng, size=None):
		"""Centred Gaussian draws with covariance A^{-1}, shaped (dim,) or (size, dim)"""
		raise NotImplementedError


class _CholmodFactor(SparseFactor):
	backend = "cholmod"

	def __init__(self, A):
		try:
			self._factor = cholesky(A)
		except CholmodNotPositiveDefiniteError as e:
			throw(f"CHOLMOD met a non-positive pivot: {e}", IndefiniteFormError)
		self.dim = A.shape[0]

	def logdet(self):
		# P A P^T = L L^T
		diag = self._factor.L().diagonal()
		return 2 * math.fsum(np.log(diag))

	def solve(self, b):
		return self._factor(b)

	def sample(self, rng, size=None):
		z = rng.standard_normal(self.dim if size is None else (self.dim, size))
		x = self._factor.apply_Pt(self._factor.solve_Lt(z, use_LDLt_decomposition=False))
		return x if size is None else x.T


class _SuperLUFactor(SparseFactor):
	"""A[p][:, p] = L D L^T from an unpivoted SuperLU run on the RCM-permuted matrix"""

	backend = "superlu"

	def __init__(self, A):
		A = A.tocsr()
		self.dim = A.shape[0]
		self.perm = csgraph.reverse_cuthill_mckee(A, symmetric_mode=True)
		A_p = A[self.perm][:, self.perm].tocsc()
		try:
			self._lu = splinalg.splu(
				A_p, permc_spec="NATURAL", diag_pivot_thresh=0.0, options={"SymmetricMode": True}
			)
		except RuntimeError as e:
			throw(f"SuperLU failed on the Maxwell form: {e}", IndefiniteFormError)

		identity = np.arange(self.dim)
		if not (np.array_equal(self._lu.perm_r, identity) and np.array_equal(self._lu.perm_c, identity)):
			throw("SuperLU pivoted; the matrix is not positive definite", IndefiniteFormError)

		self.D = self._lu.U.diagonal()
		if np.any(self.D <= 0):
			throw(f"Non-positive pivot {self.D.min():.3g} in LDL^T", IndefiniteFormError)
		self._Lt = self._lu.L.T.tocsr()

	def logdet(self):
		return math.fsum(np.log(self.D))

	def solve(self, b):
		x = np.empty(self.dim)
		x[self.perm] = self._lu.solve(np.asarray(b, dtype=float)[self.perm])
		return x

	def sample(self, rng, size=None):
		z = rng.standard_normal(self.dim if size is None else (self.dim, size))
		scaled = (z.T / np.sqrt(self.D)).T
		y = splinalg.spsolve_triangular(self._Lt, scaled, lower=False, unit_diagonal=True)
		x = np.empty_like(y)
		x[self.perm] = y
		return x if size is None else x.T


def factorize(A, backend=None):
	"""Factor A with CHOLMOD when scikit-sparse is installed, else with SuperLU"""
	if backend in (None, "auto"):
		backend = "cholmod" if cholesky is not None else "superlu"
	if backend == "cholmod":
		if cholesky is None:
			throw("backend='cholmod' needs scikit-sparse (pip install lgt[cholmod])")
		factor = _CholmodFactor(A)
	elif backend == "superlu":
		factor = _SuperLUFactor(A)
	else:
		throw(f"Unknown factorization backend {backend!r}")
	logger.debug("Factorized %sx%s form with %s", A.shape[0], A.shape[1], factor.backend)
	return factor


# Determinants and free energies
# ------------------------------


def log_det(model):
	"""log det Q"""
	return model.factor.logdet()


def knd(lat):
	"""K_{n,d} = -log det M_n^0 / (2 n^d)"""
	return -log_det(assemble_form(lat)) / (2 * lat.num_vertices)


def maxwell_free_energy(lat):
	"""F_M(B_n) = K_{n,d} + |E_n^1| log(2 pi) / (2 n^d)"""
	_, _, free = edge_counts(lat)
	return knd(lat) + free / (2 * lat.num_vertices) * LOG_2PI


@dataclass(frozen=True)
class KdExtrapolation:
	value: float
	uncertainty: float
	slope: float  # a in K_{n,d} = K_d + a/n
	residuals: tuple


def extrapolate_kd(d, n_list, K_values):
	"""Least-squares fit K_{n,d} = K_d + a/n"""
	n = np.asarray(n_list, dtype=float)
	K = np.asarray(K_values, dtype=float)
	if len(n) < 3 or len(n) != len(K):
		throw(f"Need at least 3 matching (n, K_nd) points, got {len(n)} and {len(K)}")
	if np.any(np.diff(n) <= 0):
		throw("n_list must be strictly increasing")

	X = np.column_stack([np.ones_like(n), 1 / n])
	(value, slope), *_ = la.lstsq(X, K)
	residuals = K - X @ np.array([value, slope])
	uncertainty = float(np.max(np.abs(residuals)) + abs(K[-1] - value))
	logger.debug("K_%s = %.6g +- %.2g from n=%s", d, value, uncertainty, n.astype(int).tolist())
	return KdExtrapolation(float(value), uncertainty, float(slope), tuple(residuals.tolist()))


# Gaussian measure
# ----------------


def gaussian_sample(model, rng, size=None):
	"""Draws from the density proportional to exp(-model(t)).

	Returns an EdgeField, or an array shaped (size, dim) when `size` is given.
	"""
	x = model.factor.sample(rng, size)
	t = model.mean + math.sqrt(0.5) * x
	return model.to_field(t) if size is None else t


def maxwell_small_ball(lat, A, eta, samples, rng, chunk=20_000):
	"""Monte Carlo estimate of tau_n(|t(e)| <= eta for every e in A), A a set of free edge ids"""
	A = np.unique(np.asarray(list(A), dtype=np.int64))
	if not len(A):
		return SmallBallEstimate(1.0, 0.0)
	if not 0 < eta <= 0.5:
		throw(f"eta must lie in (0, 1/2], got {eta}")
	if samples < 1:
		throw(f"samples must be positive, got {samples}")

	geo = geometry(lat)
	if A.min() < 0 or A.max() >= geo.num_edges or np.any(geo.axial[A]):
		throw("A must be a subset of the free edges E_n^1")

	model = assemble_form(lat)
	columns = geo.free_index[A]
	hits = 0
	remaining = samples
	while remaining:
		size = min(chunk, remaining)
		t = gaussian_sample(model, rng, size=size)
		hits += int(np.count_nonzero(np.all(np.abs(t[:, columns]) <= eta, axis=1)))
		remaining -= size

	p = hits / samples
	return SmallBallEstimate(p, math.sqrt(p * (1 - p) / samples))


# Spectral and Poincare checks
# ----------------------------


class Spectrum(NamedTuple):
	lambda_min: float
	lambda_max: float


def extremal_eigenvalues(model):
	Q = model.Q
	if model.dim <= DENSE_EIGEN_LIMIT:
		w = la.eigvalsh(Q.toarray())
		return Spectrum(float(w[0]), float(w[-1]))

	lambda_max = splinalg.eigsh(Q, k=1, which="LA", return_eigenvectors=False)[0]
	lambda_min = splinalg.eigsh(Q, k=1, sigma=0, which="LM", return_eigenvectors=False)[0]
	return Spectrum(float(lambda_min), float(lambda_max))


@dataclass(frozen=True)
class PoincareReport:
	"""Largest ratio of an edge's deviation to its Poincare bound; the bound holds iff max_ratio <= 1"""

	max_ratio: float
	worst_edge: int | None
	holds: bool


def linear_poincare_check(lat, s):
	"""|s(x,y)| <= |x|_1 sqrt(M_n(s)) for a field s vanishing on E_n^0"""
	geo = geometry(lat)
	s = np.asarray(s, dtype=float)
	if s.shape != (geo.num_edges,):
		throw(f"Expected a field on {geo.num_edges} edges, got shape {s.shape}", DimensionMismatchError)
	if np.any(s[geo.axial] != 0):
		throw("Field must vanish on the axial edges E_n^0")

	root = math.sqrt(plaquette_sum_form(lat, s))
	bound = geo.tail_l1 * root
	deviation = np.abs(s)
	with np.errstate(divide="ignore", invalid="ignore"):
		ratio = np.where(deviation == 0, 0.0, deviation / bound)

	worst = int(np.argmax(ratio))
	max_ratio = float(ratio[worst])
	return PoincareReport(
		max_ratio=max_ratio,
		worst_edge=worst if max_ratio > 0 else None,
		holds=max_ratio <= 1 + tolerances.algebraic,
	)


def maxwell_table(d, n_values):
	"""Rows (n, d, free_edges, logdet, K_nd, F_M) in `hooks.csv_columns["maxwell-kd"]` order"""
	rows = []
	for n in n_values:
		lat = Lattice(d=d, n=n)
		_, _, free = edge_counts(lat)
		if free > hooks.max_free_edges:
			throw(
				f"B_{n} in d={d} has {free} free edges, above the cap of {hooks.max_free_edges}",
				SizeCapExceededError,
			)
		logdet = log_det(assemble_form(lat))
		K = -logdet / (2 * lat.num_vertices)
		rows.append(
			{
				"n": n,
				"d": d,
				"free_edges": free,
				"logdet": logdet,
				"K_nd": K,
				"F_M": K + free / (2 * lat.num_vertices) * LOG_2PI,
			}
		)
		logger.debug("d=%s n=%s: log det=%.12g K=%.12g", d, n, logdet, K)
	return rows
