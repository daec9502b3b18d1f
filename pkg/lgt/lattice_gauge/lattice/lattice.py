# Copyright (c) 2026, LGT Contributors
# License: MIT. See license.txt

"""Combinatorics of the box B_n = {0,...,n-1}^d.

Vertices are enumerated in lexicographic order (first coordinate most
significant), edges lexicographically on (tail, direction) and plaquettes on
(base, j, k). Directions are 1-based on the public `Edge`/`Plaquette` records
and 0-based in the `Geometry` arrays.
"""

import enum
import functools
import itertools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from lgt import throw

logger = logging.getLogger(__name__)

MAX_SIDE = 2**20

# boundary traversal x -> x+e_j -> x+e_j+e_k -> x+e_k -> x
PLAQUETTE_SIGNS = (1, 1, -1, -1)


class EdgeClass(enum.Enum):
	AXIAL = "axial"  # E_n^0
	FREE = "free"  # E_n^1


@dataclass(frozen=True)
class Lattice:
	d: int
	n: int

	def __post_init__(self):
		if int(self.d) != self.d or self.d < 2:
			throw(f"Lattice dimension must be an integer >= 2, got d={self.d}")
		if int(self.n) != self.n or self.n < 2:
			throw(f"Lattice side must be an integer >= 2, got n={self.n}")
		if self.n > MAX_SIDE:
			throw(f"Lattice side n={self.n} exceeds the supported maximum {MAX_SIDE}")

	@property
	def num_vertices(self):
		return self.n**self.d


@dataclass(frozen=True)
class Edge:
	tail: tuple
	head: tuple
	direction: int
	edge_class: EdgeClass
	index: int
	free_index: int | None

	@property
	def is_axial(self):
		return self.edge_class is EdgeClass.AXIAL


@dataclass(frozen=True)
class Plaquette:
	base: tuple
	dirs: tuple
	# (edge index, sign) in traversal order
	edges: tuple
	index: int


@dataclass(frozen=True)
class Geometry:
	"""Array form of the enumerations, shared read-only between modules."""

	lattice: Lattice
	coords: np.ndarray  # (V, d)
	strides: np.ndarray  # (d,)
	edge_tail: np.ndarray  # (E,) vertex ids
	edge_head: np.ndarray
	edge_dir: np.ndarray  # 0-based
	edge_id: np.ndarray  # (V, d), -1 where the edge leaves the box
	axial: np.ndarray  # (E,) bool
	free_index: np.ndarray  # (E,), -1 on axial edges
	free_edges: np.ndarray  # (|E_n^1|,) edge ids in enumeration order
	plaq_base: np.ndarray  # (P,)
	plaq_dirs: np.ndarray  # (P, 2), 0-based j < k
	plaq_edges: np.ndarray  # (P, 4)

	@property
	def num_edges(self):
		return len(self.edge_tail)

	@property
	def num_plaquettes(self):
		return len(self.plaq_base)

	@property
	def tail_l1(self):
		return self.coords[self.edge_tail].sum(axis=1)


def _readonly(*arrays):
	for array in arrays:
		array.flags.writeable = False


@functools.lru_cache(maxsize=64)
def geometry(lat: Lattice) -> Geometry:
	"""Build (and cache) the index arrays of `lat`"""
	d, n = lat.d, lat.n
	coords = np.indices((n,) * d).reshape(d, -1).T.astype(np.int64)
	strides = n ** np.arange(d - 1, -1, -1, dtype=np.int64)

	# edges: row-major nonzero gives (tail, direction) lexicographic order
	tails, dirs = np.nonzero(coords < n - 1)
	edge_id = np.full((len(coords), d), -1, dtype=np.int64)
	edge_id[tails, dirs] = np.arange(len(tails))
	heads = tails + strides[dirs]

	# axial iff every coordinate after the edge direction is zero
	nonzero = coords != 0
	nonzero_from = np.logical_or.accumulate(nonzero[:, ::-1], axis=1)[:, ::-1]
	nonzero_after = np.zeros_like(nonzero)
	nonzero_after[:, :-1] = nonzero_from[:, 1:]
	axial = ~nonzero_after[tails, dirs]

	free_index = np.full(len(tails), -1, dtype=np.int64)
	free_edges = np.flatnonzero(~axial)
	free_index[free_edges] = np.arange(len(free_edges))

	pairs = np.array(list(itertools.combinations(range(d), 2)), dtype=np.int64)
	inside = (coords[:, pairs[:, 0]] < n - 1) & (coords[:, pairs[:, 1]] < n - 1)
	base, pair = np.nonzero(inside)
	j, k = pairs[pair, 0], pairs[pair, 1]
	plaq_edges = np.stack(
		[
			edge_id[base, j],
			edge_id[base + strides[j], k],
			edge_id[base + strides[k], j],
			edge_id[base, k],
		],
		axis=1,
	)

	geo = Geometry(
		lattice=lat,
		coords=coords,
		strides=strides,
		edge_tail=tails.astype(np.int64),
		edge_head=heads.astype(np.int64),
		edge_dir=dirs.astype(np.int64),
		edge_id=edge_id,
		axial=axial,
		free_index=free_index,
		free_edges=free_edges,
		plaq_base=base.astype(np.int64),
		plaq_dirs=np.stack([j, k], axis=1),
		plaq_edges=plaq_edges,
	)
	_readonly(
		geo.coords, geo.strides, geo.edge_tail, geo.edge_head, geo.edge_dir, geo.edge_id,
		geo.axial, geo.free_index, geo.free_edges, geo.plaq_base, geo.plaq_dirs, geo.plaq_edges,
	)
	logger.debug(
		"Built geometry d=%s n=%s: %s edges (%s free), %s plaquettes",
		d, n, geo.num_edges, len(free_edges), geo.num_plaquettes,
	)
	return geo


def vertices(lat):
	"""Vertex coordinates in lexicographic order, shaped (n^d, d)"""
	return geometry(lat).coords


def l1_norm(lat):
	"""|x|_1 of every edge tail, in edge enumeration order"""
	return geometry(lat).tail_l1


def vertex_index(lat, x):
	"""Dense id of vertex `x` in lexicographic order"""
	x = tuple(int(c) for c in x)
	if len(x) != lat.d or any(c < 0 or c >= lat.n for c in x):
		throw(f"Vertex {x} is not in B_{lat.n} (d={lat.d})")
	return int(np.dot(x, geometry(lat).strides))


def edge_index(lat, tail, direction):
	"""Enumeration index of the edge (tail, tail + e_direction), direction 1-based"""
	if not 1 <= direction <= lat.d:
		throw(f"Direction must be in 1..{lat.d}, got {direction}")
	index = geometry(lat).edge_id[vertex_index(lat, tail), direction - 1]
	if index < 0:
		throw(f"Edge from {tuple(tail)} in direction {direction} leaves B_{lat.n}")
	return int(index)


@functools.lru_cache(maxsize=16)
def enumerate_edges(lat: Lattice) -> tuple:
	"""All positively oriented edges, lexicographic on (tail, direction)"""
	geo = geometry(lat)
	edges = []
	for index in range(geo.num_edges):
		tail = tuple(int(c) for c in geo.coords[geo.edge_tail[index]])
		head = tuple(int(c) for c in geo.coords[geo.edge_head[index]])
		is_axial = bool(geo.axial[index])
		edges.append(
			Edge(
				tail=tail,
				head=head,
				direction=int(geo.edge_dir[index]) + 1,
				edge_class=EdgeClass.AXIAL if is_axial else EdgeClass.FREE,
				index=index,
				free_index=None if is_axial else int(geo.free_index[index]),
			)
		)
	return tuple(edges)


@functools.lru_cache(maxsize=16)
def enumerate_plaquettes(lat: Lattice) -> tuple:
	"""All plaquettes (x, j, k), lexicographic on (x, j, k)"""
	geo = geometry(lat)
	plaquettes = []
	for index in range(geo.num_plaquettes):
		plaquettes.append(
			Plaquette(
				base=tuple(int(c) for c in geo.coords[geo.plaq_base[index]]),
				dirs=(int(geo.plaq_dirs[index, 0]) + 1, int(geo.plaq_dirs[index, 1]) + 1),
				edges=tuple(
					(int(e), sign) for e, sign in zip(geo.plaq_edges[index], PLAQUETTE_SIGNS, strict=True)
				),
				index=index,
			)
		)
	return tuple(plaquettes)


def edge_counts(lat):
	"""(|E_n|, |E_n^0|, |E_n^1|) from the closed forms"""
	d, n = lat.d, lat.n
	total = d * n ** (d - 1) * (n - 1)
	axial = n**d - 1
	free = (d - 1) * n**d - d * n ** (d - 1) + 1
	return total, axial, free


def plaquette_count(lat):
	d, n = lat.d, lat.n
	return d * (d - 1) // 2 * (n - 1) ** 2 * n ** (d - 2)


@functools.lru_cache(maxsize=16)
def incidence_matrix(lat: Lattice):
	"""Signed plaquette x edge matrix B, so that M_n(s) = ||B s||^2"""
	geo = geometry(lat)
	rows = np.repeat(np.arange(geo.num_plaquettes), 4)
	data = np.tile(np.array(PLAQUETTE_SIGNS, dtype=float), geo.num_plaquettes)
	B = sparse.coo_matrix(
		(data, (rows, geo.plaq_edges.ravel())), shape=(geo.num_plaquettes, geo.num_edges)
	).tocsr()
	return B


def edge_plaquettes(lat):
	"""For every edge, the indices of the plaquettes containing it"""
	B = incidence_matrix(lat).T.tocsr()
	return tuple(tuple(int(p) for p in B.indices[B.indptr[e] : B.indptr[e + 1]]) for e in range(B.shape[0]))


def edge_colouring(lat):
	"""Edge classes with no two members on a common plaquette.

	Class = (direction a, parity of the coordinates other than a). Two edges of
	direction a on one plaquette (x, a, b) sit at x and x+e_b, whose parities differ.
	"""
	geo = geometry(lat)
	tail_coords = geo.coords[geo.edge_tail]
	parity = (tail_coords.sum(axis=1) - tail_coords[np.arange(geo.num_edges), geo.edge_dir]) % 2
	label = 2 * geo.edge_dir + parity
	classes = [np.flatnonzero(label == c) for c in range(2 * lat.d)]
	return [c for c in classes if len(c)]
