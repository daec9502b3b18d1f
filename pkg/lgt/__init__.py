"""Leading-term free energy of U(N) lattice gauge theory."""

import importlib

__version__ = "0.1.0"


def throw(msg, exc=None):
	"""Raise `exc` (default ValidationError) with `msg`"""
	from lgt.exceptions import ValidationError

	raise (exc or ValidationError)(msg)


def get_attr(method_string):
	"""Resolve a dotted path such as `lgt.lattice_gauge.verify.suites.run_gauge`"""
	module_name, _, attr = method_string.rpartition(".")
	if not module_name:
		throw(f"Not a dotted path: {method_string}")
	return getattr(importlib.import_module(module_name), attr)
