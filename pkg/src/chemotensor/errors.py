"""Exception hierarchy of chemotensor.

Every failure the package raises on purpose derives from :class:`ChemotensorError`, so the
CLI maps exceptions to exit codes with one ``except`` per family. Type misuse at public
call boundaries is not part of this hierarchy: it surfaces as ``TypeError``.
"""

from __future__ import annotations

from typing import Any


class ChemotensorError(Exception):
	"""Root of all deliberate chemotensor failures."""


class DomainError(ChemotensorError, ValueError):
	"""A value lies outside the mathematical domain (negative density, bad extent, ...)."""


class CFLViolationError(ChemotensorError):
	"""A fixed time step exceeds the admissible explicit bound.

	Parameters
	----------
	float_dt : float
		The rejected step.
	float_bound : float
		The admissible step at the current state.
	"""

	def __init__(self, float_dt: float, float_bound: float) -> None:
		self.float_dt = float_dt
		self.float_bound = float_bound
		super().__init__(
			f"time step {float_dt:.6g} exceeds the admissible bound {float_bound:.6g}"
		)


class NonFiniteStateError(ChemotensorError):
	"""A step produced NaN or Inf values.

	Parameters
	----------
	str_message : str
		Diagnostic.
	float_t : float
		Time the offending values belong to.
	array_u : Any
		Offending density values.
	array_v : Any
		Offending concentration values.
	state_last : Any
		Last finite state before the failure.
	"""

	def __init__(
		self,
		str_message: str,
		float_t: float,
		array_u: Any,  # noqa: ANN401
		array_v: Any,  # noqa: ANN401
		state_last: Any = None,  # noqa: ANN401
	) -> None:
		self.float_t = float_t
		self.array_u = array_u
		self.array_v = array_v
		self.state_last = state_last
		super().__init__(str_message)


class HorizonError(ChemotensorError):
	"""A requested time (test-function support, check time) lies beyond the record."""


class GridMismatchError(ChemotensorError):
	"""Objects that must share one grid (family members, fields of a state) do not."""


class SnapshotWindowError(ChemotensorError):
	"""A Steklov averaging window is smaller than the snapshot spacing."""


class RecordFormatError(ChemotensorError):
	"""A record file is missing, malformed, or carries an unsupported format version."""


class ExpressionError(ChemotensorError):
	"""A coefficient expression violates the accepted grammar."""


class ConfigError(ChemotensorError):
	"""A configuration file or value violates its schema; the message names the field path."""


class FamilyAbortedError(ChemotensorError):
	"""A member run of an epsilon family failed; completed members are preserved.

	Parameters
	----------
	str_message : str
		Diagnostic naming the failing member.
	family : Any
		Family record holding the members that completed.
	"""

	def __init__(self, str_message: str, family: Any) -> None:  # noqa: ANN401
		self.family = family
		super().__init__(str_message)


__all__ = [
	"CFLViolationError",
	"ChemotensorError",
	"ConfigError",
	"DomainError",
	"ExpressionError",
	"FamilyAbortedError",
	"GridMismatchError",
	"HorizonError",
	"NonFiniteStateError",
	"RecordFormatError",
	"SnapshotWindowError",
]
