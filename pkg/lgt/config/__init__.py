# Copyright (c) 2026, LGT Contributors
# License: MIT. See license.txt

"""Runtime settings shared by the numerical modules and the CLI."""

import logging
import os
from dataclasses import dataclass

logger = logging.getLogger(__name__)

THREADS_ENV = "LGT_THREADS"


@dataclass(frozen=True)
class Tolerances:
	construction: float = 1e-12
	algebraic: float = 1e-10
	accumulated: float = 1e-8


tolerances = Tolerances()

# Monte Carlo conventions
stderr_multiplier = 3.0
default_grid_nodes = 13
splice_min_beta = 16.0
tune_interval = 50
target_acceptance = (0.4, 0.6)

# seeds used by `lgt verify` when none is given
default_verify_seed = 2024


def get_threads(flag=None):
	"""Worker count from the --threads flag, then LGT_THREADS, then 1"""
	if flag:
		return max(1, int(flag))

	value = os.environ.get(THREADS_ENV)
	if not value:
		return 1
	try:
		return max(1, int(value))
	except ValueError:
		logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, value)
		return 1
