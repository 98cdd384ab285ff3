"""Estimate ledger: running a priori functionals and their certified bounds.

Monitored along a trajectory (cumulative series use the left-endpoint rectangle rule, the
time discretisation of the explicit scheme):

========  ===================================  =========================
column    quantity                             bound certified at tmax
========  ===================================  =========================
mass      ∫u                                   = ∫u₀
vmax      max v                                nonincreasing
D_v       ∫∫|∇v|²                              ≤ ½∫v₀²
C         ∫∫u f(v)                             ≤ ∫v₀
D_lnu     ∫∫|∇u|²/(u+1)²                       ≤ K₁
E         ∫∫u ln(u+1) f(v)                     ≤ K₃
vlnu      ∫v ln(u+1)                           diagnostic
W         ∫∫w ln(w+1), w = u f(v)              ≤ K₄
lnmass    ∫ln(u+1)                             ½D_lnu - S₁²/2 D_v ≤ Δlnmass
========  ===================================  =========================

Face terms sum ``(face gradient)² * hx * hy`` over interior faces; the weight ``(u+1)`` of
``D_lnu`` is the arithmetic face mean. The bounds hold for ``t → ∞``; every cumulative
series is nondecreasing, so the value at tmax is the strongest finite-horizon statement.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Any

import numpy as np
import pandas as pd

from chemotensor._internal.config.contracts import LEDGER_COLUMNS, LEDGER_EXTRA_COLUMNS
from chemotensor._internal.utils.typing import TypeChecker, type_checker
from chemotensor.errors import DomainError
from chemotensor.grid import (
	FaceField,
	Field,
	face_gradient,
	face_mean,
	integrate_faces,
	require_same_grid,
)
from chemotensor.model import Envelope, Kinetics, ModelSpec
from chemotensor.solver import State


CUMULATIVE_COLUMNS: tuple[str, ...] = ("D_v", "C", "D_lnu", "E", "W")


@dataclass(frozen=True)
class EstimateConstants(metaclass=TypeChecker):
	"""Constants computed once from the initial data.

	Parameters
	----------
	float_s1 : float
		``S₁ = S₀(‖v₀‖∞)``.
	float_k1 : float
		``K₁ = 2∫u₀ + S₁²/2 ∫v₀²``.
	float_k3 : float
		``K₃ = ∫v₀ ln(u₀+1) + (‖v₀‖∞ + 2) K₁ + (1/2 + S₁/2 + ‖v₀‖∞² S₁²/8) ∫v₀²``.
	float_k4 : float | None
		``K₄ = ln(c₂) ∫v₀ + K₃`` with ``c₂ = max(1, c₁)``; ``None`` without kinetics.
	float_c1 : float | None
		Sampled ``sup f`` on ``[0, ‖v₀‖∞]``; ``None`` without kinetics.
	float_mass0 : float
		``∫u₀``.
	float_int_v0 : float
		``∫v₀``.
	float_int_v0_sq : float
		``∫v₀²``.
	float_vmax0 : float
		``‖v₀‖∞``.
	"""

	float_s1: float
	float_k1: float
	float_k3: float
	float_k4: float | None
	float_c1: float | None
	float_mass0: float
	float_int_v0: float
	float_int_v0_sq: float
	float_vmax0: float

	def to_dict(self) -> dict[str, float | None]:
		"""Return the constants keyed by their short names."""
		return {
			"S1": self.float_s1,
			"K1": self.float_k1,
			"K3": self.float_k3,
			"K4": self.float_k4,
			"c1": self.float_c1,
			"mass0": self.float_mass0,
			"int_v0": self.float_int_v0,
			"int_v0_sq": self.float_int_v0_sq,
			"vmax0": self.float_vmax0,
		}


@type_checker
def compute_constants(
	field_u0: Field,
	field_v0: Field,
	envelope: Envelope,
	kinetics: Kinetics | None = None,
) -> EstimateConstants:
	"""Evaluate ``S₁``, ``K₁``, ``K₃`` (and ``K₄`` when ``kinetics`` is given).

	Parameters
	----------
	field_u0 : Field
		Initial density.
	field_v0 : Field
		Initial concentration.
	envelope : Envelope
		Growth envelope ``S₀``.
	kinetics : Kinetics | None
		Consumption rate, needed only for ``K₄``.

	Returns
	-------
	EstimateConstants
		The constants.

	Raises
	------
	DomainError
		If the initial data take negative values.
	"""
	grid = require_same_grid(field_u0, field_v0)
	u0 = field_u0.values
	v0 = field_v0.values
	if float(u0.min()) < 0.0 or float(v0.min()) < 0.0:
		raise DomainError("initial data must be nonnegative")
	float_vol = grid.float_cell_volume
	float_vmax0 = float(v0.max())
	float_mass0 = float(u0.sum() * float_vol)
	float_int_v0 = float(v0.sum() * float_vol)
	float_int_v0_sq = float((v0 * v0).sum() * float_vol)
	float_s1 = float(envelope.evaluate(float_vmax0))
	float_k1 = 2.0 * float_mass0 + 0.5 * float_s1**2 * float_int_v0_sq
	float_k3 = (
		float((v0 * np.log1p(u0)).sum() * float_vol)
		+ (float_vmax0 + 2.0) * float_k1
		+ (0.5 + 0.5 * float_s1 + float_vmax0**2 * float_s1**2 / 8.0) * float_int_v0_sq
	)
	float_c1: float | None = None
	float_k4: float | None = None
	if kinetics is not None:
		float_c1 = kinetics.supremum(float_vmax0)
		float_k4 = math.log(max(1.0, float_c1)) * float_int_v0 + float_k3
	return EstimateConstants(
		float_s1,
		float_k1,
		float_k3,
		float_k4,
		float_c1,
		float_mass0,
		float_int_v0,
		float_int_v0_sq,
		float_vmax0,
	)


class EstimateLedger(metaclass=TypeChecker):
	"""Observer accumulating the monitored functionals, one row per invocation.

	Parameters
	----------
	spec : ModelSpec
		Simulated model (its kinetics enters ``C``, ``E`` and ``W``).
	"""

	def __init__(self, spec: ModelSpec) -> None:
		self._spec = spec
		self._list_rows: list[dict[str, float]] = []
		self._dict_cumulative: dict[str, float] = dict.fromkeys(CUMULATIVE_COLUMNS, 0.0)
		self._constants: EstimateConstants | None = None

	@property
	def constants(self) -> EstimateConstants:
		"""Constants of the initial data.

		Raises
		------
		DomainError
			Before :meth:`start` was called.
		"""
		if self._constants is None:
			raise DomainError("the ledger has not seen an initial state")
		return self._constants

	@property
	def int_rows(self) -> int:
		"""Number of recorded rows."""
		return len(self._list_rows)

	def start(self, state: State) -> None:
		"""Record the initial state and compute the constants.

		Parameters
		----------
		state : State
			Initial state.
		"""
		self._constants = compute_constants(
			state.field_u, state.field_v, self._spec.envelope, self._spec.kinetics
		)
		self._dict_cumulative = dict.fromkeys(CUMULATIVE_COLUMNS, 0.0)
		self._list_rows = [self._row(state)]

	def step(self, state_before: State, state_after: State, float_dt: float) -> None:
		"""Increment every cumulative series by ``dt`` times its integrand at ``state_before``.

		Parameters
		----------
		state_before : State
			State at the left end of the step.
		state_after : State
			State at the right end.
		float_dt : float
			Step size.
		"""
		if self._constants is None:
			self.start(state_before)
		for str_key, float_rate in integrand_rates(state_before, self._spec).items():
			self._dict_cumulative[str_key] += float_dt * float_rate
		self._list_rows.append(self._row(state_after))

	def _row(self, state: State) -> dict[str, float]:
		u = state.field_u.values
		v = state.field_v.values
		float_vol = state.grid.float_cell_volume
		return {
			"t": state.float_t,
			"mass": float(u.sum() * float_vol),
			"vmax": float(v.max()),
			**self._dict_cumulative,
			"vlnu": float((v * np.log1p(np.maximum(u, 0.0))).sum() * float_vol),
			"lnmass": float(np.log1p(np.maximum(u, 0.0)).sum() * float_vol),
		}

	def to_frame(self) -> pd.DataFrame:
		"""Return the rows with the documented columns first, then the diagnostics.

		Returns
		-------
		pd.DataFrame
			One row per observer invocation.
		"""
		return pd.DataFrame(self._list_rows, columns=[*LEDGER_COLUMNS, *LEDGER_EXTRA_COLUMNS])


@type_checker
def integrand_rates(state: State, spec: ModelSpec) -> dict[str, float]:
	"""Spatial integrals of the cumulative integrands at one state.

	Parameters
	----------
	state : State
		State the integrands are evaluated at.
	spec : ModelSpec
		Model providing ``f``.

	Returns
	-------
	dict[str, float]
		Values keyed by ``D_v``, ``C``, ``D_lnu``, ``E``, ``W``.
	"""
	grid = state.grid
	float_vol = grid.float_cell_volume
	u = np.maximum(state.field_u.values, 0.0)
	v = np.maximum(state.field_v.values, 0.0)
	grad_v = face_gradient(state.field_v)
	grad_u = face_gradient(state.field_u)
	mean_u = face_mean(state.field_u)
	array_w = u * spec.kinetics.evaluate(v)
	faces_lnu = FaceField(
		grid,
		grad_u.x**2 / (np.maximum(mean_u.x, 0.0) + 1.0) ** 2,
		grad_u.y**2 / (np.maximum(mean_u.y, 0.0) + 1.0) ** 2,
	)
	return {
		"D_v": integrate_faces(FaceField(grid, grad_v.x**2, grad_v.y**2)),
		"C": float(array_w.sum() * float_vol),
		"D_lnu": integrate_faces(faces_lnu),
		"E": float((array_w * np.log1p(u)).sum() * float_vol),
		"W": float((array_w * np.log1p(np.maximum(array_w, 0.0))).sum() * float_vol),
	}


@type_checker
def accumulate(
	ledger: EstimateLedger, state_before: State, state_after: State, float_dt: float
) -> EstimateLedger:
	"""Advance ``ledger`` by one step and return it.

	Parameters
	----------
	ledger : EstimateLedger
		The ledger.
	state_before, state_after : State
		Step endpoints.
	float_dt : float
		Step size, positive.

	Returns
	-------
	EstimateLedger
		The same ledger.

	Raises
	------
	DomainError
		If ``float_dt`` is not positive.
	"""
	if not float_dt > 0.0:
		raise DomainError(f"dt must be positive, got {float_dt}")
	ledger.step(state_before, state_after, float_dt)
	return ledger


@dataclass(frozen=True)
class Tolerances(metaclass=TypeChecker):
	"""Slack allowed by :func:`certify`.

	Parameters
	----------
	float_atol : float
		Absolute slack on each bound.
	float_mass_rtol : float
		Relative drift allowed on the mass identity.
	float_vmax_atol : float
		Absolute slack on a step-to-step increase of ``max v``.
	"""

	float_atol: float = 1e-9
	float_mass_rtol: float = 1e-12
	float_vmax_atol: float = 1e-14


@dataclass(frozen=True)
class CertificateLine(metaclass=TypeChecker):
	"""One certified inequality.

	Parameters
	----------
	str_name : str
		Inequality label.
	float_value : float
		Achieved value.
	float_bound : float
		Bound it is compared with.
	float_margin : float
		``(bound - value) / |bound|``; 1 when both are 0, -1 for a positive value over a
		zero bound.
	bool_passed : bool
		Whether the value is within the bound up to tolerance.
	bool_soft : bool
		Soft lines are findings that never fail a certificate.
	str_kind : str
		``"identity"`` for conservation checks, ``"bound"`` for estimates.
	"""

	str_name: str
	float_value: float
	float_bound: float
	float_margin: float
	bool_passed: bool
	bool_soft: bool = False
	str_kind: str = "bound"

	def to_dict(self) -> dict[str, Any]:
		"""Return the line as JSON-ready values."""
		return {
			"name": self.str_name,
			"value": self.float_value,
			"bound": self.float_bound,
			"margin": self.float_margin,
			"passed": self.bool_passed,
			"soft": self.bool_soft,
			"kind": self.str_kind,
		}


@dataclass(frozen=True)
class Certificate(metaclass=TypeChecker):
	"""Certificate of a finished ledger.

	Parameters
	----------
	tuple_lines : tuple of CertificateLine
		The checked inequalities.
	constants : EstimateConstants
		Constants the bounds were built from.
	float_t : float
		Time the cumulative values were read at.
	"""

	tuple_lines: tuple[CertificateLine, ...]
	constants: EstimateConstants
	float_t: float

	@property
	def bool_passed(self) -> bool:
		"""Whether every hard line passed."""
		return all(line.bool_passed for line in self.tuple_lines if not line.bool_soft)

	def line(self, str_name: str) -> CertificateLine:
		"""Return the line named ``str_name``.

		Parameters
		----------
		str_name : str
			Line label.

		Returns
		-------
		CertificateLine
			The line.

		Raises
		------
		KeyError
			If no line has that name.
		"""
		for line in self.tuple_lines:
			if line.str_name == str_name:
				return line
		raise KeyError(str_name)

	def to_dict(self) -> dict[str, Any]:
		"""Return the certificate as JSON-ready values."""
		return {
			"t": self.float_t,
			"passed": self.bool_passed,
			"constants": self.constants.to_dict(),
			"lines": [line.to_dict() for line in self.tuple_lines],
		}


@type_checker
def margin(float_value: float, float_bound: float) -> float:
	"""Relative margin ``(bound - value) / |bound|``.

	Parameters
	----------
	float_value : float
		Achieved value.
	float_bound : float
		Bound.

	Returns
	-------
	float
		Margin; ``0 <= 0`` counts as margin 1.
	"""
	if float_bound == 0.0:
		return 1.0 if float_value <= 0.0 else -1.0
	return (float_bound - float_value) / abs(float_bound)


@type_checker
def _bound_line(
	str_name: str,
	float_value: float,
	float_bound: float,
	float_atol: float,
	bool_soft: bool = False,
) -> CertificateLine:
	"""Line for ``value <= bound`` with absolute slack ``float_atol``."""
	return CertificateLine(
		str_name,
		float_value,
		float_bound,
		margin(float_value, float_bound),
		float_value <= float_bound + float_atol,
		bool_soft,
	)


@type_checker
def certify(ledger: EstimateLedger, tolerances: Tolerances | None = None) -> Certificate:
	"""Check every estimate on a finished ledger.

	Hard lines: mass identity, nonincreasing ``max v``, nondecreasing cumulative series,
	``D_v ≤ ½∫v₀²``, ``C ≤ ∫v₀``, ``D_lnu ≤ K₁``, ``E ≤ K₃`` and ``W ≤ K₄``. Soft line: the
	ln-mass chain ``½ D_lnu - S₁²/2 D_v ≤ lnmass(t) - lnmass(0)``.

	Parameters
	----------
	ledger : EstimateLedger
		Ledger with at least its initial row.
	tolerances : Tolerances | None
		Slack; defaults to :class:`Tolerances`.

	Returns
	-------
	Certificate
		Report; violations are findings, never exceptions.
	"""
	tolerances = tolerances or Tolerances()
	constants = ledger.constants
	df_ledger = ledger.to_frame()
	dict_last = df_ledger.iloc[-1]
	float_atol = tolerances.float_atol

	array_mass = df_ledger["mass"].to_numpy()
	float_drift = float(np.abs(array_mass - array_mass[0]).max())
	float_mass_bound = tolerances.float_mass_rtol * abs(float(array_mass[0]))
	line_mass = CertificateLine(
		"mass",
		float_drift,
		float_mass_bound,
		margin(float_drift, float_mass_bound),
		float_drift <= float_mass_bound,
		str_kind="identity",
	)

	array_vmax = df_ledger["vmax"].to_numpy()
	float_vmax_rise = float(np.diff(array_vmax).max(initial=0.0))
	line_vmax = CertificateLine(
		"vmax",
		float(array_vmax.max()),
		float(array_vmax[0]),
		margin(float(array_vmax.max()), float(array_vmax[0])),
		float_vmax_rise <= tolerances.float_vmax_atol,
		str_kind="identity",
	)

	float_decrease = float(
		max(
			(-np.diff(df_ledger[str_col].to_numpy())).max(initial=0.0)
			for str_col in CUMULATIVE_COLUMNS
		)
	)
	line_monotone = CertificateLine(
		"cumulative_monotone",
		float_decrease,
		0.0,
		margin(float_decrease, 0.0),
		float_decrease <= 0.0,
		str_kind="identity",
	)

	list_lines = [
		line_mass,
		line_vmax,
		line_monotone,
		_bound_line("D_v", float(dict_last["D_v"]), 0.5 * constants.float_int_v0_sq, float_atol),
		_bound_line("C", float(dict_last["C"]), constants.float_int_v0, float_atol),
		_bound_line("D_lnu", float(dict_last["D_lnu"]), constants.float_k1, float_atol),
		_bound_line("E", float(dict_last["E"]), constants.float_k3, float_atol),
	]
	if constants.float_k4 is not None:
		list_lines.append(
			_bound_line("W", float(dict_last["W"]), constants.float_k4, float_atol)
		)
	float_chain = 0.5 * float(dict_last["D_lnu"]) - 0.5 * constants.float_s1**2 * float(
		dict_last["D_v"]
	)
	float_lnmass_gain = float(dict_last["lnmass"]) - float(df_ledger["lnmass"].iloc[0])
	list_lines.append(
		_bound_line("lnmass_chain", float_chain, float_lnmass_gain, float_atol, bool_soft=True)
	)
	return Certificate(tuple(list_lines), constants, float(dict_last["t"]))


__all__ = [
	"CUMULATIVE_COLUMNS",
	"Certificate",
	"CertificateLine",
	"EstimateConstants",
	"EstimateLedger",
	"Tolerances",
	"accumulate",
	"certify",
	"compute_constants",
	"integrand_rates",
	"margin",
]
