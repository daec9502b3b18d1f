# Copyright (c) 2026, LGT Contributors
# License: MIT. See license.txt

"""Gauge configurations on B_n and the Wilson action.

Only positively oriented edges are stored; U(y,x) = U(x,y)^{-1} is the conjugate
transpose, taken where a plaquette traverses an edge backwards.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from lgt import throw
from lgt.config import tolerances
from lgt.exceptions import DimensionMismatchError, NotAxialGaugeError
from lgt.lattice_gauge.lattice.lattice import Lattice, geometry
from lgt.lattice_gauge.maxwell.maxwell import PoincareReport
from lgt.lattice_gauge.unitary.unitary import (
	exp_hermitian_batch,
	gue_sample_batch,
	haar_sample_batch,
	is_hermitian,
	phi_batch,
	unitarity_defect,
)

logger = logging.getLogger(__name__)


def _dagger(A):
	return np.conj(np.swapaxes(A, -1, -2))


def _frozen_stack(values, count, N, what):
	values = np.array(values, dtype=complex)
	if values.shape != (count, N, N):
		throw(f"{what} needs shape {(count, N, N)}, got {values.shape}", DimensionMismatchError)
	values.flags.writeable = False
	return values


@dataclass(frozen=True, eq=False)
class GaugeConfig:
	"""One U(N) matrix per positively oriented edge, in edge enumeration order"""

	lattice: Lattice
	N: int
	links: np.ndarray

	def __post_init__(self):
		links = _frozen_stack(self.links, geometry(self.lattice).num_edges, self.N, "GaugeConfig")
		if len(links) and unitarity_defect(links) > tolerances.construction * max(1, self.N):
			throw(f"GaugeConfig links are not unitary (defect {unitarity_defect(links):.3g})")
		object.__setattr__(self, "links", links)

	def __getitem__(self, edge):
		return self.links[edge]

	def inverse(self, edge):
		return self.links[edge].conj().T


@dataclass(frozen=True, eq=False)
class GaugeTransform:
	"""One U(N) matrix per vertex, in lexicographic vertex order"""

	lattice: Lattice
	N: int
	values: np.ndarray

	def __post_init__(self):
		values = _frozen_stack(self.values, self.lattice.num_vertices, self.N, "GaugeTransform")
		if unitarity_defect(values) > tolerances.construction * max(1, self.N):
			throw(f"GaugeTransform values are not unitary (defect {unitarity_defect(values):.3g})")
		object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class HermitianField:
	"""One Hermitian matrix per free edge, in free-index order; axial edges carry 0"""

	lattice: Lattice
	N: int
	values: np.ndarray

	def __post_init__(self):
		values = np.array(self.values, dtype=complex)
		count = len(geometry(self.lattice).free_edges)
		if values.shape != (count, self.N, self.N):
			throw(f"HermitianField needs shape {(count, self.N, self.N)}, got {values.shape}", DimensionMismatchError)
		scale = max(1.0, float(np.abs(values).max(initial=0.0)))
		if not is_hermitian(values, tolerances.construction * scale):
			throw("HermitianField values are not Hermitian")
		values = (values + _dagger(values)) / 2
		values.flags.writeable = False
		object.__setattr__(self, "values", values)

	def on_edges(self):
		"""(E, N, N) stack with zeros on the axial edges"""
		geo = geometry(self.lattice)
		H = np.zeros((geo.num_edges, self.N, self.N), dtype=complex)
		H[geo.free_edges] = self.values
		return H

	def norms(self):
		return np.linalg.norm(self.values, axis=(1, 2))


def _require_same(cfg, other):
	if cfg.lattice != other.lattice or cfg.N != other.N:
		throw(
			f"Mismatched operands: lattice {cfg.lattice} N={cfg.N} vs lattice {other.lattice} N={other.N}",
			DimensionMismatchError,
		)


# Constructors
# ------------


def identity_config(lat, N):
	links = np.broadcast_to(np.eye(N, dtype=complex), (geometry(lat).num_edges, N, N))
	return GaugeConfig(lat, N, links)


def haar_config(lat, N, rng):
	"""Independent Haar matrices on every edge"""
	return GaugeConfig(lat, N, haar_sample_batch(N, geometry(lat).num_edges, rng))


def random_u0_config(lat, N, rng):
	"""Haar matrices on the free edges, I on the axial edges"""
	geo = geometry(lat)
	links = np.broadcast_to(np.eye(N, dtype=complex), (geo.num_edges, N, N)).copy()
	links[geo.free_edges] = haar_sample_batch(N, len(geo.free_edges), rng)
	return GaugeConfig(lat, N, links)


def haar_transform(lat, N, rng):
	return GaugeTransform(lat, N, haar_sample_batch(N, lat.num_vertices, rng))


def constant_transform(lat, W):
	W = np.asarray(W, dtype=complex)
	return GaugeTransform(lat, W.shape[0], np.broadcast_to(W, (lat.num_vertices, *W.shape)))


def compose(G1, G2):
	"""Pointwise product, so that (G1 G2) U = G1 (G2 U)"""
	_require_same(G1, G2)
	return GaugeTransform(G1.lattice, G1.N, G1.values @ G2.values)


# Plaquettes and the Wilson action
# --------------------------------


def plaquette_matrix(cfg, p):
	"""U(x,j,k) = U(x,x+e_j) U(x+e_j,x+e_j+e_k) U(x+e_k,x+e_j+e_k)^{-1} U(x,x+e_k)^{-1}"""
	e1, e2, e3, e4 = (edge for edge, _ in p.edges)
	return cfg[e1] @ cfg[e2] @ cfg.inverse(e3) @ cfg.inverse(e4)


def plaquette_matrices(cfg):
	"""All plaquette products, (P, N, N) in plaquette enumeration order"""
	return _plaquettes(cfg.links, geometry(cfg.lattice).plaq_edges)


def _plaquettes(links, plaq_edges):
	U = links[plaq_edges]
	return U[:, 0] @ U[:, 1] @ _dagger(U[:, 2]) @ _dagger(U[:, 3])


def wilson_action(cfg):
	"""S(U) = sum over plaquettes of Re Tr(I - U(x,j,k))"""
	return math.fsum(phi_batch(plaquette_matrices(cfg)))


# Gauge transforms
# ----------------


def gauge_transform(cfg, G):
	"""V(x,y) = G(x) U(x,y) G(y)^{-1}"""
	_require_same(cfg, G)
	geo = geometry(cfg.lattice)
	links = G.values[geo.edge_tail] @ cfg.links @ _dagger(G.values[geo.edge_head])
	return GaugeConfig(cfg.lattice, cfg.N, links)


def axial_gauge(cfg):
	"""G_U with G_U(0) = I and G_U(x) = G_U(y) U(y,x), y = x - e_j, j the last nonzero coordinate of x"""
	geo = geometry(cfg.lattice)
	nonzero = geo.coords != 0
	# last nonzero coordinate per vertex; the origin gets -1
	last = np.where(nonzero.any(axis=1), cfg.lattice.d - 1 - np.argmax(nonzero[:, ::-1], axis=1), -1)

	G = np.empty((cfg.lattice.num_vertices, cfg.N, cfg.N), dtype=complex)
	G[0] = np.eye(cfg.N)
	# lexicographic order visits y = x - e_j before x
	for x in range(1, len(G)):
		j = last[x]
		y = x - geo.strides[j]
		G[x] = G[y] @ cfg.links[geo.edge_id[y, j]]
	return GaugeTransform(cfg.lattice, cfg.N, G)


def axial_gauge_fix(cfg):
	"""G_U U, which is I on every axial edge"""
	fixed = gauge_transform(cfg, axial_gauge(cfg))
	geo = geometry(cfg.lattice)
	defect = np.abs(fixed.links[geo.axial] - np.eye(cfg.N)).max(initial=0.0)
	if defect > tolerances.algebraic:
		logger.warning("Axial gauge fixing left a defect of %.3g on E_n^0 (d=%s n=%s N=%s)",
			defect, cfg.lattice.d, cfg.lattice.n, cfg.N)

	links = fixed.links.copy()
	links[geo.axial] = np.eye(cfg.N)
	return GaugeConfig(cfg.lattice, cfg.N, links)


def in_axial_gauge(cfg, tol=None):
	geo = geometry(cfg.lattice)
	defect = np.abs(cfg.links[geo.axial] - np.eye(cfg.N)).max(initial=0.0)
	return bool(defect <= (tolerances.algebraic if tol is None else tol))


# Lie-algebra side
# ----------------


def random_hermitian_field(lat, N, r, rng):
	"""GUE directions rescaled to norms drawn uniformly from (0, r]"""
	count = len(geometry(lat).free_edges)
	H = gue_sample_batch(N, count, rng)
	radius = r * (1 - rng.random(count))
	H *= (radius / np.linalg.norm(H, axis=(1, 2)))[:, None, None]
	return HermitianField(lat, N, H)


def lift_hermitian(h):
	"""Edgewise e^{iH}; axial edges map to I"""
	geo = geometry(h.lattice)
	links = np.broadcast_to(np.eye(h.N, dtype=complex), (geo.num_edges, h.N, h.N)).copy()
	links[geo.free_edges] = exp_hermitian_batch(h.values)
	return GaugeConfig(h.lattice, h.N, links)


def maxwell_action_h(h):
	"""M_n(H) = sum over plaquettes of ||H1 + H2 - H3 - H4||^2"""
	H = h.on_edges()[geometry(h.lattice).plaq_edges]
	sums = H[:, 0] + H[:, 1] - H[:, 2] - H[:, 3]
	return math.fsum(np.linalg.norm(sums, axis=(1, 2)) ** 2)


def action_gap(h, r):
	"""|S(e^{iH}) - M_n(H)/2| for a field with every ||H(x,y)|| <= r <= 1"""
	if not 0 < r <= 1:
		throw(f"r must lie in (0, 1], got {r}")
	largest = float(h.norms().max(initial=0.0))
	if largest > r * (1 + tolerances.construction):
		throw(f"Field has an edge of norm {largest:.6g} > r = {r}")
	return abs(wilson_action(lift_hermitian(h)) - 0.5 * maxwell_action_h(h))


# Checks
# ------


def poincare_check(cfg):
	"""Ratios ||I - U(x,y)||^2 / (2 |x|_1 S) for cfg in U_0(B_n); the bound holds iff every ratio <= 1"""
	if not in_axial_gauge(cfg):
		throw("poincare_check needs a configuration with I on every axial edge", NotAxialGaugeError)

	geo = geometry(cfg.lattice)
	S = wilson_action(cfg)
	deviation = np.linalg.norm(np.eye(cfg.N) - cfg.links, axis=(1, 2)) ** 2
	# axial links are I only up to roundoff
	deviation[geo.axial] = 0.0
	with np.errstate(divide="ignore", invalid="ignore"):
		ratio = np.where(deviation == 0, 0.0, deviation / (2 * geo.tail_l1 * S))

	worst = int(np.argmax(ratio))
	max_ratio = float(ratio[worst])
	return PoincareReport(
		max_ratio=max_ratio,
		worst_edge=worst if max_ratio > 0 else None,
		holds=max_ratio <= 1 + tolerances.accumulated,
	)


@dataclass(frozen=True)
class BoxGap:
	gap: float  # S over B_n minus the sum of S over the sub-boxes
	straddling: int  # plaquettes in no single sub-box
	N: int

	@property
	def holds(self):
		return -tolerances.accumulated <= self.gap <= 2 * self.N * self.straddling + tolerances.accumulated


def box_decomposition_gap(cfg, side):
	"""Split B_n into the disjoint translates of B_side and compare actions"""
	lat = cfg.lattice
	if side < 2 or lat.n % side:
		throw(f"Sub-box side must be >= 2 and divide n={lat.n}, got {side}")

	geo = geometry(lat)
	phis = phi_batch(plaquette_matrices(cfg))
	base = geo.coords[geo.plaq_base]
	rows = np.arange(geo.num_plaquettes)
	j, k = geo.plaq_dirs[:, 0], geo.plaq_dirs[:, 1]
	inside = (base[rows, j] % side < side - 1) & (base[rows, k] % side < side - 1)

	# sub-box id of every plaquette base
	block = (base // side) @ ((lat.n // side) ** np.arange(lat.d - 1, -1, -1))
	per_box = [math.fsum(phis[inside & (block == b)]) for b in np.unique(block[inside])]
	gap = math.fsum(phis) - math.fsum(per_box)
	logger.debug("Box decomposition n=%s side=%s: gap=%.6g over %s straddling plaquettes",
		lat.n, side, gap, int((~inside).sum()))
	return BoxGap(gap=gap, straddling=int((~inside).sum()), N=cfg.N)
