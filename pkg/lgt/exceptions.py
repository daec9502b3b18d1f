# Copyright (c) 2026, LGT Contributors
# License: MIT. See license.txt


class LGTError(Exception):
	"""Base class for every error raised by lgt"""


class ValidationError(LGTError):
	"""A precondition on the inputs does not hold"""


class DimensionMismatchError(ValidationError):
	pass


class NotAxialGaugeError(ValidationError):
	"""Configuration is not in U_0(B_n): some axial edge differs from I"""


class QuadratureGridError(ValidationError):
	pass


class SizeCapExceededError(ValidationError):
	pass


class UnknownSuiteError(ValidationError):
	pass


class IndefiniteFormError(LGTError):
	"""Factorization met a non-positive pivot; the assembled form is not positive definite"""


class UnsupportedOracleError(LGTError):
	pass
