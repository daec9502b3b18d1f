# Copyright (c) 2026, LGT Contributors
# License: MIT. See license.txt

"""Invariant suites behind `lgt verify`.

Each `run_<suite>(seed)` returns a list of CheckResult. Suites are registered
by dotted path in `lgt.hooks.verify_suites`.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from lgt import config, get_attr, hooks, throw
from lgt.config import tolerances
from lgt.exceptions import UnknownSuiteError
from lgt.lattice_gauge.gauge.gauge import (
	action_gap,
	axial_gauge_fix,
	gauge_transform,
	haar_config,
	haar_transform,
	in_axial_gauge,
	poincare_check,
	random_hermitian_field,
	random_u0_config,
	wilson_action,
)
from lgt.lattice_gauge.lattice.lattice import Lattice, edge_counts, geometry, plaquette_count
from lgt.lattice_gauge.maxwell.maxwell import (
	assemble_form,
	extrapolate_kd,
	gaussian_sample,
	knd,
	linear_poincare_check,
	log_det,
	maxwell_free_energy,
)
from lgt.lattice_gauge.montecarlo.montecarlo import (
	exact_2d_free_energy,
	finite_volume_residual,
	theorem1_prediction,
	theorem1_residual,
)
from lgt.lattice_gauge.unitary.unitary import (
	LOG_2PI,
	exp_map_bounds_check,
	gue_sample_batch,
	small_ball_constant,
	small_ball_estimate,
	small_ball_probability,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
	name: str
	passed: bool
	detail: dict = field(default_factory=dict)

	def __post_init__(self):
		object.__setattr__(self, "passed", bool(self.passed))

	def as_dict(self):
		return {"name": self.name, "passed": self.passed, "detail": self.detail}


def suite_names():
	return tuple(hooks.verify_suites)


def run_suite(name, seed):
	"""Resolve `name` through the hooks registry and run it"""
	if name not in hooks.verify_suites:
		throw(f"Unknown suite {name!r}; expected one of {', '.join(suite_names())} or 'all'", UnknownSuiteError)
	results = get_attr(hooks.verify_suites[name])(seed)
	for result in results:
		if not result.passed:
			logger.warning("Check %s/%s failed (seed=%s): %s", name, result.name, seed, result.detail)
	return results


def _rng(seed, suite):
	# one independent stream per suite for a given seed
	return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(sorted(hooks.verify_suites).index(suite),)))


def run_combinatorics(seed):
	results = []
	for d in range(2, 5):
		for n in range(2, 11):
			lat = Lattice(d=d, n=n)
			geo = geometry(lat)
			total, axial, free = edge_counts(lat)
			counted = (geo.num_edges, int(geo.axial.sum()), len(geo.free_edges), geo.num_plaquettes)
			expected = (total, axial, free, plaquette_count(lat))
			results.append(
				CheckResult(
					f"counts d={d} n={n}",
					counted == expected,
					{"counted": counted, "closed_form": expected},
				)
			)
	return results


def run_smallball(seed):
	rng = _rng(seed, "smallball")
	results = []

	for N, expected in ((1, 1 / math.pi), (2, 1 / (16 * math.pi))):
		value = small_ball_constant(N).value
		results.append(
			CheckResult(
				f"constant N={N}",
				math.isclose(value, expected, rel_tol=tolerances.construction),
				{"value": value, "expected": expected},
			)
		)

	delta = 0.1
	estimate = small_ball_estimate(1, delta, 1_000_000, rng)
	oracle = small_ball_probability(1, delta)
	results.append(
		CheckResult(
			"monte carlo N=1 delta=0.1",
			abs(estimate.probability - oracle) <= config.stderr_multiplier * estimate.stderr,
			{"ratio": estimate.probability / delta, "oracle_ratio": oracle / delta, "stderr": estimate.stderr / delta},
		)
	)

	delta = 0.3
	limit = 1 / (16 * math.pi)
	estimate = small_ball_estimate(2, delta, 10_000_000, rng)
	oracle = small_ball_probability(2, delta)
	ratio = estimate.probability / delta**4
	results.append(
		CheckResult(
			"monte carlo N=2 delta=0.3",
			abs(ratio - limit) <= 0.1 * limit,
			{"ratio": ratio, "limit": limit, "oracle_ratio": oracle / delta**4, "stderr": estimate.stderr / delta**4},
		)
	)

	deltas = np.array([0.05, 0.1, 0.2])
	probabilities = np.array([small_ball_probability(2, d) for d in deltas])
	slope = float(np.polyfit(np.log(deltas), np.log(probabilities), 1)[0])
	leading = probabilities[0] / deltas[0] ** 4 * 16 * math.pi
	results.append(
		CheckResult(
			"delta scaling N=2",
			abs(slope - 4) < 0.05 and abs(leading - 1) < 0.01,
			{"slope": slope, "leading_ratio": float(leading)},
		)
	)
	return results


def run_gauge(seed):
	rng = _rng(seed, "gauge")
	results = []

	for d, n, N in itertools.product((2, 3), (2, 3), (1, 2)):
		lat = Lattice(d=d, n=n)
		action_change, fixing_change, off_axial = 0.0, 0.0, 0
		for _ in range(100):
			cfg = haar_config(lat, N, rng)
			S = wilson_action(cfg)
			action_change = max(action_change, abs(wilson_action(gauge_transform(cfg, haar_transform(lat, N, rng))) - S))
			fixed = axial_gauge_fix(cfg)
			fixing_change = max(fixing_change, abs(wilson_action(fixed) - S))
			off_axial += not in_axial_gauge(fixed, tolerances.algebraic)
		results.append(
			CheckResult(
				f"action invariance d={d} n={n} N={N}",
				action_change < tolerances.accumulated,
				{"pairs": 100, "max_change": action_change},
			)
		)
		results.append(
			CheckResult(
				f"axial fixing d={d} n={n} N={N}",
				off_axial == 0 and fixing_change < tolerances.accumulated,
				{"configs": 100, "off_axial": off_axial, "action_change": fixing_change},
			)
		)

	# free edges of axial-fixed Haar configs are independent Haar matrices
	samples = 10_000
	lat = Lattice(d=2, n=3)
	free = geometry(lat).free_edges
	traces = np.empty((samples, len(free)), dtype=complex)
	angles = np.empty((samples, len(free)))
	for i in range(samples):
		V = axial_gauge_fix(haar_config(lat, 2, rng)).links[free]
		traces[i] = np.trace(V, axis1=1, axis2=2)
		eigen = np.angle(np.linalg.eigvals(V))
		angles[i] = eigen[np.arange(len(V)), rng.integers(2, size=len(V))]

	bound = 4 / math.sqrt(samples)
	worst = float(np.abs(traces.mean(axis=0)).max())
	results.append(CheckResult("haar preservation trace mean", worst <= bound, {"max_abs_mean": worst, "bound": bound}))

	pvalue = float(stats.kstest(angles.ravel(), stats.uniform(loc=-math.pi, scale=2 * math.pi).cdf).pvalue)
	results.append(CheckResult("haar preservation KS", pvalue > 0.01, {"samples": samples, "pvalue": pvalue}))
	return results


def run_poincare(seed):
	rng = _rng(seed, "poincare")
	results = []
	for d, n, N in ((2, 4, 2), (3, 3, 1)):
		lat = Lattice(d=d, n=n)
		reports = [poincare_check(random_u0_config(lat, N, rng)) for _ in range(1000)]
		violations = sum(not r.holds for r in reports)
		results.append(
			CheckResult(
				f"nonabelian d={d} n={n} N={N}",
				violations == 0,
				{"violations": violations, "max_ratio": max(r.max_ratio for r in reports)},
			)
		)

		model = assemble_form(lat)
		linear = [linear_poincare_check(lat, gaussian_sample(model, rng).full()) for _ in range(200)]
		violations = sum(not r.holds for r in linear)
		results.append(
			CheckResult(
				f"linear d={d} n={n}",
				violations == 0,
				{"violations": violations, "max_ratio": max(r.max_ratio for r in linear)},
			)
		)
	return results


def run_liealgebra(seed):
	rng = _rng(seed, "liealgebra")
	results = []
	radii = np.array([0.1, 0.05, 0.025])
	for d, n, N in ((2, 4, 2), (3, 3, 1)):
		lat = Lattice(d=d, n=n)
		gaps = [np.mean([action_gap(random_hermitian_field(lat, N, r, rng), r) for _ in range(100)]) for r in radii]
		slope = float(np.polyfit(np.log(radii), np.log(gaps), 1)[0])
		results.append(CheckResult(f"cubic gap d={d} n={n} N={N}", slope >= 2.7, {"slope": slope}))

	for N in (1, 2, 3):
		r = 0.5
		H = gue_sample_batch(N, 200, rng)
		H *= (r * rng.random(200) / np.linalg.norm(H, axis=(1, 2)))[:, None, None]
		reports = [exp_map_bounds_check(H[i], H[i + 1], r) for i in range(0, 200, 2)]
		results.append(CheckResult(f"exp map bounds N={N}", all(rep.holds for rep in reports), {"pairs": len(reports)}))
	return results


def run_maxwell(seed):
	results = []

	worst = max(abs(log_det(assemble_form(Lattice(d=2, n=n)))) for n in range(2, 17))
	results.append(CheckResult("2d determinant one", worst < 1e-9, {"max_abs_logdet": worst}))

	for d, n in ((2, 4), (3, 3), (3, 4), (4, 2)):
		model = assemble_form(Lattice(d=d, n=n))
		sign, dense = np.linalg.slogdet(model.Q.toarray())
		diff = abs(log_det(model) - dense)
		results.append(CheckResult(f"dense cross-check d={d} n={n}", sign > 0 and diff < 1e-8, {"difference": diff}))

	F = maxwell_free_energy(Lattice(d=2, n=2))
	results.append(CheckResult("F_M(B_2) in 2d", abs(F - LOG_2PI / 8) < tolerances.algebraic, {"value": F}))

	n_values = list(range(4, 17, 2))
	K = [knd(Lattice(d=3, n=n)) for n in n_values]
	steps = np.abs(np.diff(K))
	fit = extrapolate_kd(3, n_values, K)
	results.append(
		CheckResult(
			"K_3 convergence",
			bool(np.all(np.diff(steps) < 0)) and math.isfinite(fit.value),
			{"K_nd": K, "K_3": fit.value, "uncertainty": fit.uncertainty},
		)
	)
	return results


def run_theorem1(seed):
	results = []
	betas = (64.0, 256.0)

	finite = [finite_volume_residual(2, 1, 8, b, exact_2d_free_energy(8, b), 0.0) for b in betas]
	results.append(
		CheckResult(
			"2d finite-volume residual n=8",
			abs(finite[0]) < 0.05 and abs(finite[1]) < abs(finite[0]),
			{"beta": betas, "residual": finite},
		)
	)

	limit = [theorem1_residual(2, 1, 8, b, exact_2d_free_energy(8, b), 0.0) for b in betas]
	large = theorem1_residual(2, 1, 64, 256.0, exact_2d_free_energy(64, 256.0), 0.0)
	results.append(
		CheckResult(
			"2d limit residual",
			limit[1] < limit[0] and abs(large) < 0.05,
			{"n=8": limit, "n=64 beta=256": large},
		)
	)

	prediction = theorem1_prediction(2, 1, 0.0)
	results.append(
		CheckResult("2d limit constant", abs(prediction + 0.5 * LOG_2PI) < tolerances.construction, {"value": prediction})
	)
	return results
