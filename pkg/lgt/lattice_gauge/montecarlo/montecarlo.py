# Copyright (c) 2026, LGT Contributors
# License: MIT. See license.txt

"""Free energy of U(N) lattice gauge theory on B_n.

F(B_n, beta) = log Z / n^d with Z = integral of exp(-beta S(U)) against product
Haar measure. Monte Carlo estimates come from thermodynamic integration of the
mean action, d F / d beta = -<S> / n^d, starting at F(0) = 0.
"""

import dataclasses
import functools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special

from lgt import config, throw
from lgt.config import tolerances
from lgt.exceptions import QuadratureGridError, UnsupportedOracleError
from lgt.lattice_gauge.gauge.gauge import GaugeConfig, _plaquettes
from lgt.lattice_gauge.lattice.lattice import Lattice, edge_colouring, edge_counts, geometry
from lgt.lattice_gauge.unitary.unitary import (
	LOG_2PI,
	WEYL_MAX_POINTS,
	exp_hermitian_batch,
	gue_sample_batch,
	log_superfactorial,
	phi_batch,
	small_ball_constant,
	weyl_integral,
)

logger = logging.getLogger(__name__)

MAX_STEP = 2 * math.pi
MIN_STEP = 1e-4
# sweeps between re-projections of the links onto U(N)
REUNITARIZE_EVERY = 100
BATCHES = 20
EQUILIBRATION_SIGMAS = 5.0


def beta_from_g0(g0):
	if g0 <= 0:
		throw(f"g0 must be positive, got {g0}")
	return 1 / (g0 * g0)


@dataclass(frozen=True)
class SimulationParams:
	beta: float
	n: int
	d: int
	N: int
	sweeps: int
	burn_in: int
	chains: int
	seed: int
	step: float = 0.5
	tune: bool = True
	threads: int = 1

	def __post_init__(self):
		if self.beta < 0 or not math.isfinite(self.beta):
			throw(f"beta must be finite and >= 0, got {self.beta}")
		if self.N < 1:
			throw(f"N must be >= 1, got {self.N}")
		if not 0 <= self.burn_in < self.sweeps:
			throw(f"Need 0 <= burn_in < sweeps, got burn_in={self.burn_in} sweeps={self.sweeps}")
		if self.chains < 2:
			throw(f"Need at least 2 chains for error bars, got {self.chains}")
		if self.step <= 0:
			throw(f"Proposal step must be positive, got {self.step}")
		if self.seed is None:
			throw("Monte Carlo runs need a seed")

	@property
	def lattice(self):
		return Lattice(d=self.d, n=self.n)

	def replace(self, **changes):
		return dataclasses.replace(self, **changes)


# Metropolis sampler
# ------------------


class _ColourTables(NamedTuple):
	edges: np.ndarray  # edges of the class
	plaquettes: np.ndarray  # plaquettes touching the class, one row per (plaquette, edge) incidence
	slot: np.ndarray  # position of the edge in the plaquette traversal
	owner: np.ndarray  # index into `edges`


@functools.lru_cache(maxsize=16)
def _update_tables(lat):
	geo = geometry(lat)
	tables = []
	for edges in edge_colouring(lat):
		position = np.full(geo.num_edges, -1, dtype=np.int64)
		position[edges] = np.arange(len(edges))
		plaquettes, slot = np.nonzero(position[geo.plaq_edges] >= 0)
		owner = position[geo.plaq_edges[plaquettes, slot]]
		tables.append(_ColourTables(edges, plaquettes, slot, owner))
	return tuple(tables)


def _reunitarize(links):
	W, _, Vh = np.linalg.svd(links)
	return W @ Vh


class MetropolisChain:
	"""Single-edge Metropolis updates U(e) -> e^{i step H} U(e), H drawn from GUE.

	A sweep visits every edge once, one colour class at a time; edges of a class
	share no plaquette, so their updates are independent and run vectorised.
	`action` is kept up to date from the accepted changes only.
	"""

	def __init__(self, lat, N, beta, step, rng, links=None):
		self.lattice = lat
		self.N = N
		self.beta = float(beta)
		self.step = float(step)
		self.rng = rng

		geo = geometry(lat)
		self._plaq_edges = geo.plaq_edges
		self._tables = _update_tables(lat)
		if links is None:
			links = np.broadcast_to(np.eye(N, dtype=complex), (geo.num_edges, N, N))
		self.links = np.array(links, dtype=complex)
		self.sweeps = 0
		self.refresh()

	def refresh(self):
		"""Recompute the plaquette cache and the action from the links"""
		self.phis = phi_batch(_plaquettes(self.links, self._plaq_edges))
		self.action = math.fsum(self.phis)

	def sweep(self):
		"""One proposal per edge; returns the acceptance rate"""
		accepted = 0
		for table in self._tables:
			accepted += self._update_class(table)
		self.sweeps += 1
		if self.sweeps % REUNITARIZE_EVERY == 0:
			self.links = _reunitarize(self.links)
			self.refresh()
		return accepted / len(self.links)

	def _update_class(self, table):
		k = len(table.edges)
		H = gue_sample_batch(self.N, k, self.rng)
		proposal = exp_hermitian_batch(self.step * H) @ self.links[table.edges]

		U = self.links[self._plaq_edges[table.plaquettes]]
		U[np.arange(len(table.plaquettes)), table.slot] = proposal[table.owner]
		new_phis = phi_batch(U[:, 0] @ U[:, 1] @ _dagger(U[:, 2]) @ _dagger(U[:, 3]))
		delta = np.bincount(table.owner, weights=new_phis - self.phis[table.plaquettes], minlength=k)

		accept = np.log(self.rng.random(k)) < -self.beta * delta
		self.links[table.edges[accept]] = proposal[accept]
		touched = accept[table.owner]
		self.phis[table.plaquettes[touched]] = new_phis[touched]
		self.action += float(delta[accept].sum())
		return int(accept.sum())

	def config(self):
		return GaugeConfig(self.lattice, self.N, self.links)


def _dagger(A):
	return np.conj(np.swapaxes(A, -1, -2))


def metropolis_sweep(cfg, beta, step, rng):
	"""One Metropolis sweep of `cfg` at inverse coupling `beta`; returns (new config, acceptance rate)"""
	if beta < 0:
		throw(f"beta must be >= 0, got {beta}")
	chain = MetropolisChain(cfg.lattice, cfg.N, beta, step, rng, links=cfg.links)
	rate = chain.sweep()
	return chain.config(), rate


# Chains and mean action
# ----------------------


@dataclass
class ChainResult:
	series: np.ndarray  # S / n^d after every measurement sweep
	acceptance: float
	step: float

	@property
	def mean(self):
		return float(np.mean(self.series))

	@property
	def batch_stderr(self):
		"""Standard error of the mean from batch means"""
		if len(self.series) < 2:
			return 0.0
		batches = np.array([b.mean() for b in np.array_split(self.series, min(BATCHES, len(self.series)))])
		return float(batches.std(ddof=1) / math.sqrt(len(batches)))


def _tune(step, rate):
	low, high = config.target_acceptance
	if rate < low:
		step *= 0.8
	elif rate > high:
		step *= 1.25
	return min(max(step, MIN_STEP), MAX_STEP)


def run_chain(params, beta, seed_seq):
	lat = params.lattice
	rng = np.random.default_rng(seed_seq)
	chain = MetropolisChain(lat, params.N, beta, params.step, rng)

	window = []
	for sweep in range(params.burn_in):
		window.append(chain.sweep())
		if params.tune and (sweep + 1) % config.tune_interval == 0:
			rate = float(np.mean(window))
			chain.step = _tune(chain.step, rate)
			window = []
			logger.debug("beta=%s burn-in sweep %s: acceptance %.2f, step -> %.4g", beta, sweep + 1, rate, chain.step)

	volume = lat.num_vertices
	series = np.empty(params.sweeps - params.burn_in)
	rates = np.empty_like(series)
	for i in range(len(series)):
		rates[i] = chain.sweep()
		series[i] = math.fsum(chain.phis) / volume
	return ChainResult(series=series, acceptance=float(rates.mean()), step=chain.step)


def run_chains(params, beta, seed_seq=None):
	"""`params.chains` independent chains, each with its own spawned RNG stream"""
	if seed_seq is None:
		seed_seq = np.random.SeedSequence(params.seed)
	streams = seed_seq.spawn(params.chains)
	workers = min(config.get_threads(params.threads), params.chains)
	if workers == 1:
		return [run_chain(params, beta, s) for s in streams]
	with ThreadPoolExecutor(max_workers=workers) as pool:
		return list(pool.map(lambda s: run_chain(params, beta, s), streams))


@dataclass(frozen=True)
class MeanAction:
	value: float  # <S> / n^d
	stderr: float
	acceptance: float
	chain_means: tuple
	equilibrated: bool


def combine_chains(results):
	"""Between-chain mean and standard error; flags chains that disagree by more than 5 combined sigmas"""
	means = np.array([r.mean for r in results])
	errors = np.array([r.batch_stderr for r in results])
	value = float(means.mean())
	stderr = float(means.std(ddof=1) / math.sqrt(len(means)))

	spread = np.abs(means[:, None] - means[None, :])
	combined = np.sqrt(errors[:, None] ** 2 + errors[None, :] ** 2)
	equilibrated = not np.any(spread > EQUILIBRATION_SIGMAS * combined + tolerances.construction)
	return MeanAction(
		value=value,
		stderr=stderr,
		acceptance=float(np.mean([r.acceptance for r in results])),
		chain_means=tuple(means.tolist()),
		equilibrated=bool(equilibrated),
	)


def mean_action(params, beta=None, seed_seq=None):
	"""<S>/n^d at `beta` (default params.beta) from params.chains chains"""
	beta = params.beta if beta is None else beta
	result = combine_chains(run_chains(params, beta, seed_seq))
	if not result.equilibrated:
		logger.warning(
			"Chains disagree at beta=%s (d=%s n=%s N=%s seed=%s): means %s",
			beta, params.d, params.n, params.N, params.seed, result.chain_means,
		)
	return result


# Thermodynamic integration
# -------------------------


class GridPoint(NamedTuple):
	beta: float
	mean_action: float
	stderr: float
	acceptance: float | None
	source: str  # "exact", "mc" or "asymptote"


@dataclass(frozen=True)
class FreeEnergyEstimate:
	value: float
	stderr: float
	quadrature_error: float
	beta_grid: tuple = ()
	splice_beta: float | None = None
	unequilibrated: tuple = field(default=())  # betas whose chains disagreed

	@property
	def equilibrated(self):
		return not self.unequilibrated


def default_grid(beta, nodes=None):
	"""beta_i = (1 + beta)^{i/(K-1)} - 1, uniform in log(1 + beta)"""
	nodes = nodes or config.default_grid_nodes
	u = np.linspace(0.0, math.log1p(beta), nodes)
	grid = np.expm1(u)
	grid[-1] = beta
	return grid


def gaussian_asymptote(lat, N, beta):
	"""<S>/n^d ~ N^2 |E_n^1| / (2 beta n^d) at large beta"""
	_, _, free = edge_counts(lat)
	return N * N * free / (2 * beta * lat.num_vertices)


def _trapezoid_weights(u):
	h = np.diff(u)
	return 0.5 * (np.append(h, 0) + np.append(0, h))


def _quadrature(u, y, se):
	"""Trapezoid in u with a Richardson correction from the every-other-node rule.

	Returns (integral, stderr, error estimate).
	"""
	w_fine = _trapezoid_weights(u)
	if len(u) < 3:
		return float(w_fine @ y), float(math.sqrt(w_fine**2 @ se**2)), 0.0

	coarse = np.arange(0, len(u), 2)
	if coarse[-1] != len(u) - 1:
		coarse = np.append(coarse, len(u) - 1)
	w_coarse = np.zeros_like(w_fine)
	w_coarse[coarse] = _trapezoid_weights(u[coarse])

	fine, rough = float(w_fine @ y), float(w_coarse @ y)
	if len(u) % 2:
		weights = (4 * w_fine - w_coarse) / 3
		error = abs(fine - rough) / 3
	else:
		weights = w_fine
		error = abs(fine - rough)
	return float(weights @ y), float(math.sqrt(weights**2 @ se**2)), error


def _check_grid(grid, beta):
	grid = np.asarray(grid, dtype=float)
	if len(grid) < 8:
		throw(f"Quadrature grid needs at least 8 nodes, got {len(grid)}", QuadratureGridError)
	if grid[0] != 0 or abs(grid[-1] - beta) > tolerances.construction * max(1.0, beta):
		throw(f"Quadrature grid must span [0, {beta}], got [{grid[0]}, {grid[-1]}]", QuadratureGridError)
	if np.any(np.diff(grid) <= 0):
		throw("Quadrature grid must be strictly increasing", QuadratureGridError)
	return grid


def free_energy_ti(params, grid=None):
	"""F = -integral_0^beta <S>/n^d dbeta' on `grid`, Gaussian tail spliced in at large beta"""
	if params.beta == 0:
		return FreeEnergyEstimate(0.0, 0.0, 0.0, (GridPoint(0.0, _haar_mean_action(params), 0.0, None, "exact"),))

	grid = _check_grid(default_grid(params.beta) if grid is None else grid, params.beta)
	lat = params.lattice
	streams = np.random.SeedSequence(params.seed).spawn(len(grid))

	points, unequilibrated = [], []
	splice_at = None
	for i, b in enumerate(grid):
		if b == 0:
			points.append(GridPoint(0.0, _haar_mean_action(params), 0.0, None, "exact"))
			continue
		result = mean_action(params, beta=b, seed_seq=streams[i])
		points.append(GridPoint(float(b), result.value, result.stderr, result.acceptance, "mc"))
		if not result.equilibrated:
			unequilibrated.append(float(b))
		if _agrees_with_asymptote(lat, params.N, points[-1]) and i and _agrees_with_asymptote(lat, params.N, points[-2]):
			splice_at = i
			break

	u = np.log1p(grid[: len(points)])
	y = np.array([p.mean_action for p in points]) * (1 + grid[: len(points)])
	se = np.array([p.stderr for p in points]) * (1 + grid[: len(points)])
	integral, stderr, error = _quadrature(u, y, se)

	splice_beta = None
	if splice_at is not None and splice_at < len(grid) - 1:
		splice_beta = float(grid[splice_at])
		c = gaussian_asymptote(lat, params.N, 1.0)
		integral += c * math.log(params.beta / splice_beta)
		points.extend(
			GridPoint(float(b), gaussian_asymptote(lat, params.N, b), 0.0, None, "asymptote")
			for b in grid[splice_at + 1 :]
		)
		logger.debug("Spliced the Gaussian tail at beta=%s (target beta=%s)", splice_beta, params.beta)

	return FreeEnergyEstimate(
		value=-integral,
		stderr=stderr,
		quadrature_error=error,
		beta_grid=tuple(points),
		splice_beta=splice_beta,
		unequilibrated=tuple(unequilibrated),
	)


def _agrees_with_asymptote(lat, N, point):
	if point.beta < config.splice_min_beta:
		return False
	return abs(point.mean_action - gaussian_asymptote(lat, N, point.beta)) <= 2 * point.stderr


def _haar_mean_action(params):
	"""<S>/n^d at beta = 0: every plaquette has Haar mean phi = N"""
	geo = geometry(params.lattice)
	return params.N * geo.num_plaquettes / params.lattice.num_vertices


# Leading-term formulas
# ---------------------


def _log_prefactor(N):
	"""log(prod_{j<N} j! / (2 pi)^{N/2})"""
	return log_superfactorial(N) - 0.5 * N * LOG_2PI


def theorem1_prediction(d, N, K_d):
	"""(d-1) log(prod j! / (2 pi)^{N/2}) + N^2 K_d"""
	return (d - 1) * _log_prefactor(N) + N * N * K_d


def theorem1_residual(d, N, n, beta, F, K_d):
	"""F + (|E_n^1| / 2n^d) N^2 log beta minus the limit constant"""
	lat = Lattice(d=d, n=n)
	_, _, free = edge_counts(lat)
	return F + free / (2 * lat.num_vertices) * N * N * math.log(beta) - theorem1_prediction(d, N, K_d)


def finite_volume_prediction(d, N, n, beta, K_nd):
	"""(|E_n^1|/n^d) log C_N - (|E_n^1|/2n^d) N^2 log beta + N^2 F_M(B_n)"""
	lat = Lattice(d=d, n=n)
	_, _, free = edge_counts(lat)
	ratio = free / lat.num_vertices
	F_M = K_nd + 0.5 * ratio * LOG_2PI
	return ratio * small_ball_constant(N).log_lie_constant - 0.5 * ratio * N * N * math.log(beta) + N * N * F_M


def finite_volume_residual(d, N, n, beta, F, K_nd):
	return F - finite_volume_prediction(d, N, n, beta, K_nd)


def theorem_formula(d, N, n, K_d, eps, g):
	"""Leading term of log Z(n, eps, g) on the scaled box eps B_n with coupling g^2 eps^{4-d}"""
	if eps <= 0 or g <= 0:
		throw(f"eps and g must be positive, got eps={eps} g={g}")
	if d in (2, 3):
		coupling = 0.5 * (d - 1) * N * N * math.log(g * g * eps ** (4 - d))
		return n**d * (coupling + (d - 1) * _log_prefactor(N) + N * N * K_d)
	if d == 4:
		coefficient = 1.5 - 2 / n + 1 / (2 * n**4)
		return n**4 * (coefficient * N * N * math.log(g * g) + 3 * _log_prefactor(N) + N * N * K_d)
	throw(f"The leading-term formula covers d in (2, 3, 4), got d={d}", UnsupportedOracleError)


# Exact oracles
# -------------


def single_plaquette_log_z(beta, N=1):
	"""log of the integral of exp(-beta phi(U)) over Haar U(N); N <= 3.

	N = 1 is closed form for every beta. N = 2 and 3 use a Weyl grid of
	max(64, 16 ceil(sqrt(beta))) angles per eigenvalue, capped at WEYL_MAX_POINTS
	points in total, which limits N = 3 to beta <= 256 and N = 2 to
	beta <= 77841. Larger beta raises QuadratureGridError.
	"""
	if beta < 0:
		throw(f"beta must be >= 0, got {beta}")
	if beta == 0:
		return 0.0
	if N == 1:
		# e^{-beta} I_0(beta)
		return float(np.log(special.i0e(beta)))
	if N not in (2, 3):
		throw(f"Single-plaquette oracle supports N <= 3, got N={N}", UnsupportedOracleError)

	nodes = max(64, 16 * math.ceil(math.sqrt(beta)))
	if nodes**N > WEYL_MAX_POINTS:
		throw(
			f"Single-plaquette oracle for N={N} needs a {nodes}^{N} Weyl grid at beta={beta}, above {WEYL_MAX_POINTS} points",
			QuadratureGridError,
		)
	z = weyl_integral(lambda w: np.exp(-beta * (N - w.real.sum(axis=1))), N, nodes=nodes)
	return math.log(z)


def exact_2d_free_energy(n, beta, N=1):
	"""Per-site free energy on the 2D box B_n.

	After axial gauge fixing the (n-1)^2 plaquette variables are independent
	Haar matrices, so F = ((n-1)^2/n^2) log z(beta). For N > 1 only the single
	plaquette box n = 2 is supported.
	"""
	lat = Lattice(d=2, n=n)
	if N != 1 and n != 2:
		throw(f"2D oracle for N={N} needs n=2, got n={n}", UnsupportedOracleError)
	return (n - 1) ** 2 / lat.num_vertices * single_plaquette_log_z(beta, N)


def single_plaquette_mean_phi(beta):
	"""E[1 - cos theta] under exp(beta cos theta): 1 - I_1(beta)/I_0(beta)"""
	return 1 - float(special.i1e(beta) / special.i0e(beta))


def heat_bath_mean_action(n, beta, samples, rng):
	"""U(1) 2D <S>/n^2 from independent von Mises plaquette angles; returns (value, stderr)"""
	if samples < 2:
		throw(f"samples must be at least 2, got {samples}")
	plaquettes = (n - 1) ** 2
	theta = rng.vonmises(0.0, beta, size=(samples, plaquettes))
	action = (1 - np.cos(theta)).sum(axis=1) / (n * n)
	return float(action.mean()), float(action.std(ddof=1) / math.sqrt(samples))


# Checks
# ------


@dataclass(frozen=True)
class ConcentrationRow:
	beta: float
	percentile: float | None  # 99th percentile of beta S / (n^d log beta)
	samples: int
	skipped: bool


@dataclass(frozen=True)
class ConcentrationReport:
	rows: tuple
	constant: float | None
	bound: float = 10.0

	@property
	def passes(self):
		return self.constant is None or self.constant <= self.bound


def action_concentration_check(params, betas=None, quantile=99.0):
	"""Empirical upper percentile of beta S / (n^d log beta) across equilibrium samples"""
	betas = (8.0, 16.0, 32.0) if betas is None else tuple(betas)
	streams = np.random.SeedSequence(params.seed).spawn(len(betas))
	rows = []
	for b, stream in zip(betas, streams, strict=True):
		if b < 2:
			rows.append(ConcentrationRow(float(b), None, 0, True))
			continue
		series = np.concatenate([r.series for r in run_chains(params, b, stream)])
		value = float(np.percentile(b * series / math.log(b), quantile))
		rows.append(ConcentrationRow(float(b), value, len(series), False))

	values = [r.percentile for r in rows if not r.skipped]
	return ConcentrationReport(rows=tuple(rows), constant=max(values) if values else None)


class BoundConstant(NamedTuple):
	constant: float
	beta: float
	n: int


def partition_lower_bound_constant(n_values, betas):
	"""max over (n, beta) of -F/log beta with the exact U(1) 2D free energy"""
	best = None
	for n in n_values:
		for b in betas:
			if b < 2:
				throw(f"The lower bound needs beta >= 2, got {b}")
			value = -exact_2d_free_energy(n, b) / math.log(b)
			if best is None or value > best.constant:
				best = BoundConstant(value, float(b), int(n))
	return best


def subadditivity_check(m, k, beta, N=1):
	"""log Z(B_{km}) <= k^2 log Z(B_m) in 2D; returns (lhs, rhs)"""
	n = k * m
	lhs = n * n * exact_2d_free_energy(n, beta, N)
	rhs = k * k * m * m * exact_2d_free_energy(m, beta, N)
	return lhs, rhs


def sandwich_check(n, m, beta):
	"""|F(B_{mn}) - F(B_n)| against 2 beta times the fraction of plaquettes straddling the sub-boxes"""
	l = m * n
	straddling = (l - 1) ** 2 - m * m * (n - 1) ** 2
	gap = abs(exact_2d_free_energy(l, beta) - exact_2d_free_energy(n, beta))
	return gap, 2 * beta * straddling / (l * l)
