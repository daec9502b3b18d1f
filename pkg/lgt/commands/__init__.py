# Copyright (c) 2026, LGT Contributors
# License: MIT. See license.txt

"""`lgt` command line: maxwell-kd, free-energy and verify."""

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

from lgt import __version__, config, hooks, throw
from lgt.exceptions import LGTError, UnknownSuiteError, UnsupportedOracleError
from lgt.lattice_gauge.lattice.lattice import Lattice
from lgt.lattice_gauge.maxwell.maxwell import extrapolate_kd, maxwell_table
from lgt.lattice_gauge.montecarlo.montecarlo import (
	SimulationParams,
	beta_from_g0,
	exact_2d_free_energy,
	free_energy_ti,
	theorem1_residual,
	theorem_formula,
)
from lgt.lattice_gauge.verify.suites import run_suite, suite_names

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2

# parameter keys accepted per command
COMMAND_PARAMS = {
	"maxwell-kd": ("dim", "n_min", "n_max"),
	"free-energy/mc": ("dim", "n", "nmatrix", "beta", "g0", "sweeps", "burn_in", "chains", "step", "kd", "threads"),
	"free-energy/exact2d": ("dim", "n", "nmatrix", "beta", "g0"),
	"free-energy/formula": ("dim", "n", "nmatrix", "eps", "g", "kd"),
	"verify": ("suite",),
}
STOCHASTIC = {"free-energy/mc", "verify"}
DEFAULT_FORMAT = {"maxwell-kd": "csv"}


@dataclass(frozen=True)
class RunConfig:
	command: str
	params: dict
	out: str | None = None
	format: str = "json"
	seed: int | None = None

	def __post_init__(self):
		if self.command not in COMMAND_PARAMS:
			throw(f"Unknown command {self.command!r}")
		unknown = sorted(set(self.params) - set(COMMAND_PARAMS[self.command]))
		if unknown:
			throw(f"Unknown parameters for {self.command}: {', '.join(unknown)}")
		if self.format not in ("csv", "json"):
			throw(f"Format must be csv or json, got {self.format!r}")
		if self.command in STOCHASTIC and self.seed is None:
			throw(f"{self.command} is stochastic and needs --seed")

	def as_dict(self):
		return {"command": self.command, "params": self.params, "format": self.format, "seed": self.seed}


@dataclass
class RunReport:
	config: RunConfig
	results: dict
	runtime_ms: float = 0.0
	timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
	csv_rows: list = field(default_factory=list, repr=False)
	csv_schema: str = "result"
	csv_footer: list = field(default_factory=list, repr=False)

	def as_dict(self):
		return {
			"schema": hooks.report_schema,
			"version": __version__,
			"config": self.config.as_dict(),
			"results": self.results,
			"runtime_ms": self.runtime_ms,
			"timestamp": self.timestamp,
		}

	def canonical(self):
		"""The report without the fields that change between identical runs"""
		return {k: v for k, v in self.as_dict().items() if k not in hooks.volatile_report_fields}

	def to_json(self):
		return json.dumps(self.as_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

	def to_csv(self):
		columns = hooks.csv_columns[self.csv_schema]
		buffer = io.StringIO()
		writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
		writer.writeheader()
		for row in self.csv_rows:
			writer.writerow({k: "" if row.get(k) is None else row[k] for k in columns})
		for line in self.csv_footer:
			buffer.write(f"# {line}\n")
		return buffer.getvalue()

	def render(self):
		return self.to_csv() if self.config.format == "csv" else self.to_json()


# Commands
# --------


def cmd_maxwell_kd(run):
	p = run.params
	dim, n_min, n_max = p["dim"], p["n_min"], p["n_max"]
	if not 2 <= dim <= hooks.max_dimension:
		throw(f"--dim must lie in 2..{hooks.max_dimension}, got {dim}")
	if not 2 <= n_min < n_max:
		throw(f"Need 2 <= n-min < n-max, got {n_min} and {n_max}")

	rows = maxwell_table(dim, range(n_min, n_max + 1))
	results = {"rows": rows}
	footer = []
	if len(rows) >= 3:
		fit = extrapolate_kd(dim, [r["n"] for r in rows], [r["K_nd"] for r in rows])
		results.update(K_d=fit.value, uncertainty=fit.uncertainty, slope=fit.slope)
		footer.append(f"K_{dim} = {fit.value!r} +- {fit.uncertainty!r}")
	else:
		logger.warning("Fewer than 3 sizes; K_%s is not extrapolated", dim)
	return RunReport(run, results, csv_rows=rows, csv_schema="maxwell-kd", csv_footer=footer)


def _beta(p):
	beta, g0 = p.get("beta"), p.get("g0")
	if (beta is None) == (g0 is None):
		throw("Give exactly one of --beta and --g0")
	if beta is None:
		beta = beta_from_g0(g0)
	elif beta < 0:
		throw(f"beta must be >= 0, got {beta}")
	return beta, (g0 if g0 is not None else (beta**-0.5 if beta > 0 else None))


def cmd_free_energy_mc(run):
	p = run.params
	beta, g0 = _beta(p)
	params = SimulationParams(
		beta=beta,
		n=p["n"],
		d=p["dim"],
		N=p["nmatrix"],
		sweeps=p["sweeps"],
		burn_in=p["burn_in"],
		chains=p["chains"],
		seed=run.seed,
		step=p.get("step") or 0.5,
		threads=config.get_threads(p.get("threads")),
	)
	estimate = free_energy_ti(params)
	grid = [point._asdict() for point in estimate.beta_grid]

	kd = 0.0 if params.d == 2 else p.get("kd")
	residual = None
	if kd is not None and beta > 0:
		residual = theorem1_residual(params.d, params.N, params.n, beta, estimate.value, kd)

	results = {
		"beta": beta,
		"g0": g0,
		"F": estimate.value,
		"stderr": estimate.stderr,
		"quadrature_error": estimate.quadrature_error,
		"splice_beta": estimate.splice_beta,
		"unequilibrated": list(estimate.unequilibrated),
		"residual": residual,
		"beta_grid": grid,
	}
	return RunReport(run, results, csv_rows=grid, csv_schema="beta-grid")


def cmd_free_energy_exact2d(run):
	p = run.params
	if p.get("dim", 2) != 2:
		throw(f"exact2d needs --dim 2, got {p['dim']}", UnsupportedOracleError)
	beta, g0 = _beta(p)
	N = p.get("nmatrix") or 1
	F = exact_2d_free_energy(p["n"], beta, N)
	residual = theorem1_residual(2, N, p["n"], beta, F, 0.0) if beta > 0 else None
	results = {"beta": beta, "g0": g0, "F": F, "residual": residual}
	return RunReport(run, results, csv_rows=_key_values(results))


def cmd_free_energy_formula(run):
	p = run.params
	missing = [k for k in ("dim", "n", "nmatrix", "eps", "g", "kd") if p.get(k) is None]
	if missing:
		throw(f"formula mode needs {', '.join('--' + k for k in missing)}")
	log_z = theorem_formula(p["dim"], p["nmatrix"], p["n"], p["kd"], p["eps"], p["g"])
	results = {"log_Z": log_z, "per_site": log_z / Lattice(d=p["dim"], n=p["n"]).num_vertices}
	return RunReport(run, results, csv_rows=_key_values(results))


def cmd_verify(run):
	suite = run.params["suite"]
	names = suite_names() if suite == "all" else (suite,)
	checks = []
	for name in names:
		checks.extend({"suite": name, **result.as_dict()} for result in run_suite(name, run.seed))
	results = {"passed": all(c["passed"] for c in checks), "checks": checks}
	rows = [{"suite": c["suite"], "check": c["name"], "passed": c["passed"]} for c in checks]
	return RunReport(run, results, csv_rows=rows, csv_schema="verify")


def cmd_free_energy(run):
	"""Dispatch on the mode part of `free-energy/<mode>`"""
	return FREE_ENERGY_MODES[run.command.partition("/")[2]](run)


FREE_ENERGY_MODES = {
	"mc": cmd_free_energy_mc,
	"exact2d": cmd_free_energy_exact2d,
	"formula": cmd_free_energy_formula,
}


def _key_values(results):
	return [{"quantity": k, "value": v} for k, v in results.items()]


HANDLERS = {
	"maxwell-kd": cmd_maxwell_kd,
	"free-energy/mc": cmd_free_energy,
	"free-energy/exact2d": cmd_free_energy,
	"free-energy/formula": cmd_free_energy,
	"verify": cmd_verify,
}


def execute(run):
	"""Run a RunConfig and return its RunReport"""
	started = time.perf_counter()
	report = HANDLERS[run.command](run)
	report.runtime_ms = round(1000 * (time.perf_counter() - started), 3)
	return report


# Argument parsing
# ----------------


def build_parser():
	common = argparse.ArgumentParser(add_help=False)
	common.add_argument("--format", choices=("csv", "json"), default=None)
	common.add_argument("--threads", type=int, default=None, help="worker cap (default: $LGT_THREADS or 1)")
	common.add_argument("--verbose", "-v", action="store_true")
	common.add_argument("--out", default=None, help="output file (default: stdout)")

	parser = argparse.ArgumentParser(prog="lgt", description=hooks.app_description)
	parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
	commands = parser.add_subparsers(dest="command", required=True)

	kd = commands.add_parser("maxwell-kd", parents=[common], help="K_{n,d} table and extrapolated K_d")
	kd.add_argument("--dim", type=int, required=True)
	kd.add_argument("--n-min", type=int, required=True)
	kd.add_argument("--n-max", type=int, required=True)

	fe = commands.add_parser("free-energy", parents=[common], help="free energy per site")
	fe.add_argument("mode", choices=("mc", "exact2d", "formula"))
	fe.add_argument("--dim", type=int, default=2)
	fe.add_argument("--n", type=int, required=True)
	fe.add_argument("--nmatrix", type=int, default=1, help="N of U(N)")
	coupling = fe.add_mutually_exclusive_group()
	coupling.add_argument("--beta", type=float)
	coupling.add_argument("--g0", type=float)
	fe.add_argument("--eps", type=float)
	fe.add_argument("--g", type=float)
	fe.add_argument("--kd", type=float, help="K_d for residuals and the formula")
	fe.add_argument("--sweeps", type=int, default=20_000)
	fe.add_argument("--burn-in", type=int, default=2_000)
	fe.add_argument("--chains", type=int, default=4)
	fe.add_argument("--step", type=float)
	fe.add_argument("--seed", type=int)

	verify = commands.add_parser("verify", parents=[common], help="run invariant suites")
	verify.add_argument("suite", help=f"one of {', '.join(hooks.verify_suites)} or all")
	verify.add_argument("--seed", type=int, default=config.default_verify_seed)
	return parser


def run_config_from_args(args):
	command = args.command
	if command == "free-energy":
		command = f"free-energy/{args.mode}"
	if command == "verify" and args.suite != "all" and args.suite not in hooks.verify_suites:
		throw(f"Unknown suite {args.suite!r}; expected one of {', '.join(hooks.verify_suites)} or all", UnknownSuiteError)

	values = {k: v for k, v in vars(args).items() if k in COMMAND_PARAMS[command] and v is not None}
	return RunConfig(
		command=command,
		params=values,
		out=args.out,
		format=args.format or DEFAULT_FORMAT.get(args.command, "json"),
		seed=getattr(args, "seed", None),
	)


def write_output(report, out):
	text = report.render()
	if out is None:
		sys.stdout.write(text)
		return
	with open(out, "w", encoding="utf-8", newline="") as f:
		f.write(text)


def main(argv=None):
	args = build_parser().parse_args(argv)
	logging.basicConfig(
		level=logging.DEBUG if args.verbose else logging.WARNING,
		format="%(levelname)s %(name)s: %(message)s",
		stream=sys.stderr,
	)

	try:
		run = run_config_from_args(args)
		report = execute(run)
		write_output(report, run.out)
	except LGTError as e:
		logger.debug("lgt %s failed", args.command, exc_info=True)
		print(f"lgt: error: {e}", file=sys.stderr)
		return EXIT_ERROR

	if run.command == "verify" and not report.results["passed"]:
		return EXIT_CHECK_FAILED
	return EXIT_OK

