"""Positivity-preserving time stepping of the regularized chemotaxis system.

Spatial discretisation: cell-centered finite volumes (:mod:`chemotensor.grid`). The
chemotactic flux on a face is ``u_up * w`` with the face velocity ``w = (S_ε ∇v) · n``;
``S_ε`` is evaluated at the face midpoint with face-averaged ``u`` and ``v``. The normal
derivative is the two-point difference, the tangential one the mean of the four adjacent
normal differences of the other direction (boundary faces count as zero). ``u_up`` is the
upwind cell value, or the mean of both cells when ``w = 0``.

Schemes:

explicit
	``u' = u + dt (Δu - div F)``, ``v' = v + dt (Δv - u f(v))``. Admissible step
	``dt <= σ / (D + max(A, R))`` with ``D = Σ 2/h²``, ``A = Σ 2 max|w| / h`` and
	``R = max u f(v) / v``; this keeps ``u, v >= 0`` and ``max v`` nonincreasing.
imex
	``(I - dt Δ) u' = u - dt div F`` and ``(I - dt Δ + dt diag(u f(v)/v)) v' = v``. Both
	matrices are M-matrices, so only the explicit transport limits the step:
	``dt <= σ / A``.

In adaptive mode every step is also capped by ``dt_max``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Protocol, runtime_checkable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import SuperLU, splu, spsolve

from chemotensor._internal.utils.logs import LogEmitter
from chemotensor._internal.utils.typing import TypeChecker, type_checker
from chemotensor.errors import (
	CFLViolationError,
	DomainError,
	GridMismatchError,
	NonFiniteStateError,
)
from chemotensor.grid import (
	FaceField,
	Field,
	GridSpec,
	divergence,
	face_gradient,
	laplacian,
	neumann_laplacian_matrix,
	require_same_grid,
)
from chemotensor.model import ModelSpec, regularized_tensor


SCHEMES: frozenset[str] = frozenset({"explicit", "imex"})
POLICIES: frozenset[str] = frozenset({"adaptive", "fixed"})

# Negative values this small are accepted as round-off of a nonnegative state.
_FLOAT_NEG_ROUNDOFF = 1e-13
_FLOAT_DT_RTOL = 1e-12


@dataclass(frozen=True)
class State(metaclass=TypeChecker):
	"""Density and concentration at one time.

	Parameters
	----------
	float_t : float
		Time, nonnegative.
	field_u : Field
		Density.
	field_v : Field
		Concentration, on the same grid.

	Raises
	------
	DomainError
		On negative time or negative values beyond round-off.
	GridMismatchError
		If the two fields live on different grids.
	NonFiniteStateError
		If a value is NaN or infinite.
	"""

	float_t: float
	field_u: Field
	field_v: Field

	def __post_init__(self) -> None:
		if self.float_t < 0.0:
			raise DomainError(f"time must be nonnegative, got {self.float_t}")
		require_same_grid(self.field_u, self.field_v)
		if not (self.field_u.is_finite() and self.field_v.is_finite()):
			raise NonFiniteStateError(
				f"non-finite values at t = {self.float_t}",
				self.float_t,
				self.field_u.values,
				self.field_v.values,
			)
		for str_name, field in (("density", self.field_u), ("concentration", self.field_v)):
			float_min = float(field.values.min())
			float_scale = max(1.0, float(np.abs(field.values).max()))
			if float_min < -_FLOAT_NEG_ROUNDOFF * float_scale:
				raise DomainError(f"{str_name} must be nonnegative, got min {float_min:.6g}")

	@property
	def grid(self) -> GridSpec:
		"""Grid shared by both fields."""
		return self.field_u.grid


@runtime_checkable
class Observer(Protocol):
	"""Hook invoked by :func:`run`: once with the initial state, then after every step."""

	def start(self, state: State) -> None:
		"""Receive the initial state."""

	def step(self, state_before: State, state_after: State, float_dt: float) -> None:
		"""Receive one completed step."""


@dataclass(frozen=True)
class StepControl(metaclass=TypeChecker):
	"""Time-step policy.

	Parameters
	----------
	str_scheme : str
		``"explicit"`` or ``"imex"``.
	str_policy : str
		``"adaptive"`` (largest admissible step, capped by ``float_dt_max``) or ``"fixed"``.
	float_sigma : float
		CFL safety factor in ``(0, 1]``.
	float_dt_max : float
		Largest adaptive step.
	float_dt : float | None
		The step of the fixed policy.

	Raises
	------
	DomainError
		On an unknown scheme or policy, ``σ`` outside ``(0, 1]``, or a missing fixed step.
	"""

	str_scheme: str = "explicit"
	str_policy: str = "adaptive"
	float_sigma: float = 0.4
	float_dt_max: float = 0.01
	float_dt: float | None = None

	def __post_init__(self) -> None:
		if self.str_scheme not in SCHEMES:
			raise DomainError(f"scheme {self.str_scheme!r} not in {sorted(SCHEMES)}")
		if self.str_policy not in POLICIES:
			raise DomainError(f"policy {self.str_policy!r} not in {sorted(POLICIES)}")
		if not 0.0 < self.float_sigma <= 1.0:
			raise DomainError(f"sigma must lie in (0, 1], got {self.float_sigma}")
		if not self.float_dt_max > 0.0:
			raise DomainError(f"dt_max must be positive, got {self.float_dt_max}")
		if self.str_policy == "fixed" and (self.float_dt is None or not self.float_dt > 0.0):
			raise DomainError("the fixed policy needs a positive float_dt")


@dataclass(frozen=True)
class RunRecord(metaclass=TypeChecker):
	"""Trajectory of one run: the snapshot schedule plus step statistics.

	Parameters
	----------
	spec : ModelSpec
		Simulated model.
	ctrl : StepControl
		Step policy used.
	tuple_snapshots : tuple of State
		Stored states, initial first, final last.
	int_steps : int
		Number of steps taken.
	float_dt_min : float
		Smallest step taken (``inf`` without steps).
	float_dt_max : float
		Largest step taken (0 without steps).
	"""

	spec: ModelSpec
	ctrl: StepControl
	tuple_snapshots: tuple[State, ...]
	int_steps: int = 0
	float_dt_min: float = float("inf")
	float_dt_max: float = 0.0

	@property
	def grid(self) -> GridSpec:
		"""Grid of the trajectory."""
		return self.tuple_snapshots[0].grid

	@property
	def initial(self) -> State:
		"""First snapshot."""
		return self.tuple_snapshots[0]

	@property
	def final(self) -> State:
		"""Last snapshot."""
		return self.tuple_snapshots[-1]

	@property
	def float_horizon(self) -> float:
		"""Time of the last snapshot."""
		return self.tuple_snapshots[-1].float_t

	@property
	def array_times(self) -> np.ndarray:
		"""Snapshot times."""
		return np.array([state.float_t for state in self.tuple_snapshots])

	@property
	def float_snapshot_spacing(self) -> float:
		"""Largest gap between consecutive snapshots (0 for a single snapshot)."""
		array_times = self.array_times
		return float(np.diff(array_times).max()) if array_times.size > 1 else 0.0


@type_checker
def check_spec_fits_grid(spec: ModelSpec, grid: GridSpec) -> None:
	"""Raise unless the model's domain is the grid's domain.

	Parameters
	----------
	spec : ModelSpec
		The model.
	grid : GridSpec
		The mesh.

	Raises
	------
	GridMismatchError
		If dimension or extents differ.
	"""
	if spec.int_dim != grid.int_dim or not np.allclose(
		spec.tuple_extents, grid.tuple_extents, rtol=1e-12, atol=0.0
	):
		raise GridMismatchError(
			f"model domain {spec.int_dim}D {spec.tuple_extents} does not match grid "
			f"{grid.int_dim}D {grid.tuple_extents}"
		)


@type_checker
def face_velocity(state: State, spec: ModelSpec) -> FaceField:
	"""Normal component of ``S_ε ∇v`` on every interior face.

	Parameters
	----------
	state : State
		Current state.
	spec : ModelSpec
		The model.

	Returns
	-------
	FaceField
		Face velocities ``w``.
	"""
	grid = state.grid
	u = np.maximum(state.field_u.values, 0.0)
	v = np.maximum(state.field_v.values, 0.0)
	grad = face_gradient(state.field_v)

	array_xf, array_yf = grid.x_face_midpoints()
	tuple_pos_x = (array_xf,) if grid.int_dim == 1 else (array_xf, array_yf)
	s_x = regularized_tensor(
		spec, tuple_pos_x, 0.5 * (u[:, :-1] + u[:, 1:]), 0.5 * (v[:, :-1] + v[:, 1:])
	)
	array_wx = s_x[0, 0] * grad.x
	if grid.int_dim == 1:
		return FaceField(grid, array_wx, grad.y)

	# Tangential derivatives: mean of the four adjacent normal differences, zero-padded.
	gy_pad = np.pad(grad.y, ((1, 1), (0, 0)))
	gy_cell = 0.5 * (gy_pad[:-1, :] + gy_pad[1:, :])
	array_wx = array_wx + s_x[0, 1] * 0.5 * (gy_cell[:, :-1] + gy_cell[:, 1:])
	gx_pad = np.pad(grad.x, ((0, 0), (1, 1)))
	gx_cell = 0.5 * (gx_pad[:, :-1] + gx_pad[:, 1:])

	array_xf, array_yf = grid.y_face_midpoints()
	s_y = regularized_tensor(
		spec, (array_xf, array_yf), 0.5 * (u[:-1, :] + u[1:, :]), 0.5 * (v[:-1, :] + v[1:, :])
	)
	array_wy = s_y[1, 0] * 0.5 * (gx_cell[:-1, :] + gx_cell[1:, :]) + s_y[1, 1] * grad.y
	return FaceField(grid, array_wx, array_wy)


@type_checker
def _upwind(array_w: np.ndarray, array_low: np.ndarray, array_high: np.ndarray) -> np.ndarray:
	"""Donor-cell value: low side for ``w > 0``, high side for ``w < 0``, mean for ``w = 0``."""
	return np.where(
		array_w > 0.0,
		array_low,
		np.where(array_w < 0.0, array_high, 0.5 * (array_low + array_high)),
	)


@type_checker
def _upwind_flux(velocity: FaceField, field_u: Field) -> FaceField:
	"""Donor-cell flux ``u_up * w`` for given face velocities."""
	u = field_u.values
	return FaceField(
		velocity.grid,
		velocity.x * _upwind(velocity.x, u[:, :-1], u[:, 1:]),
		velocity.y * _upwind(velocity.y, u[:-1, :], u[1:, :]),
	)


@type_checker
def chemotactic_flux(state: State, spec: ModelSpec) -> FaceField:
	"""Upwinded chemotactic flux ``(u S_ε ∇v) · n`` on every interior face.

	Parameters
	----------
	state : State
		Current state.
	spec : ModelSpec
		The model.

	Returns
	-------
	FaceField
		Face fluxes.
	"""
	return _upwind_flux(face_velocity(state, spec), state.field_u)


@type_checker
def _stability_rates(
	state: State, spec: ModelSpec, velocity: FaceField
) -> tuple[float, float, float]:
	"""Return the diffusion, transport and absorption rates ``(D, A, R)`` of the step bound."""
	grid = state.grid
	float_d = 2.0 / grid.float_hx**2
	float_a = 2.0 * float(np.abs(velocity.x).max(initial=0.0)) / grid.float_hx
	if grid.int_dim == 2:
		float_d += 2.0 / grid.float_hy**2
		float_a += 2.0 * float(np.abs(velocity.y).max(initial=0.0)) / grid.float_hy
	array_rate = np.maximum(state.field_u.values, 0.0) * spec.kinetics.absorption_rate(
		np.maximum(state.field_v.values, 0.0)
	)
	return float_d, float_a, float(array_rate.max(initial=0.0))


@type_checker
def _bound_from_rates(
	float_d: float, float_a: float, float_r: float, ctrl: StepControl
) -> float:
	"""Admissible step of ``ctrl``'s scheme for the given rates (``inf`` when unbounded)."""
	if ctrl.str_scheme == "imex":
		return ctrl.float_sigma / float_a if float_a > 0.0 else float("inf")
	return ctrl.float_sigma / (float_d + max(float_a, float_r))


@type_checker
def admissible_dt(
	state: State, spec: ModelSpec, ctrl: StepControl, velocity: FaceField | None = None
) -> float:
	"""Largest step the scheme admits at ``state`` (before the ``dt_max`` cap).

	Parameters
	----------
	state : State
		Current state.
	spec : ModelSpec
		The model.
	ctrl : StepControl
		Scheme and safety factor.
	velocity : FaceField | None
		Face velocity at ``state`` when already computed.

	Returns
	-------
	float
		The CFL bound; ``inf`` for an IMEX step without transport.
	"""
	if velocity is None:
		velocity = face_velocity(state, spec)
	return _bound_from_rates(*_stability_rates(state, spec, velocity), ctrl)


@lru_cache(maxsize=8)
@type_checker
def _implicit_diffusion_factor(grid: GridSpec, float_dt: float) -> SuperLU:
	"""LU factorisation of ``I - dt Δ`` (reused while the step size repeats)."""
	matrix = sp.identity(grid.int_nx * grid.int_ny, format="csc") - float_dt * (
		neumann_laplacian_matrix(grid)
	)
	return splu(sp.csc_matrix(matrix))


@type_checker
def _advance(
	state: State,
	spec: ModelSpec,
	ctrl: StepControl,
	float_dt: float | None,
	float_dt_cap: float,
) -> tuple[State, float]:
	"""Take one step; return the new state and the step size used."""
	grid = state.grid
	velocity = face_velocity(state, spec)
	float_bound = admissible_dt(state, spec, ctrl, velocity)

	if float_dt is None:
		if ctrl.str_policy == "fixed":
			float_dt = float(ctrl.float_dt or 0.0)
		else:
			float_dt = min(float_bound, ctrl.float_dt_max)
	float_dt = min(float_dt, float_dt_cap)
	if not float_dt > 0.0:
		raise DomainError(f"time step must be positive, got {float_dt}")
	if float_dt > float_bound * (1.0 + _FLOAT_DT_RTOL):
		raise CFLViolationError(float_dt, float_bound)

	u = state.field_u.values
	v = state.field_v.values
	array_div_flux = divergence(_upwind_flux(velocity, state.field_u)).values
	with np.errstate(all="ignore"):
		if ctrl.str_scheme == "explicit":
			u_new = u + float_dt * (laplacian(state.field_u).values - array_div_flux)
			v_new = v + float_dt * (
				laplacian(state.field_v).values - u * spec.kinetics.evaluate(v)
			)
		else:
			factor = _implicit_diffusion_factor(grid, float_dt)
			array_rhs = (u - float_dt * array_div_flux).ravel()
			u_new = factor.solve(array_rhs).reshape(grid.tuple_shape)
			array_rate = np.maximum(u, 0.0) * spec.kinetics.absorption_rate(np.maximum(v, 0.0))
			matrix_v = (
				sp.identity(u.size, format="csc")
				- float_dt * neumann_laplacian_matrix(grid)
				+ sp.diags(float_dt * array_rate.ravel())
			)
			v_new = np.asarray(spsolve(sp.csc_matrix(matrix_v), v.ravel())).reshape(
				grid.tuple_shape
			)

	float_t_new = state.float_t + float_dt
	if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
		raise NonFiniteStateError(
			f"non-finite values after the step from t = {state.float_t:.6g} "
			f"(dt = {float_dt:.3g})",
			float_t_new,
			u_new,
			v_new,
			state,
		)
	return State(float_t_new, Field(grid, u_new), Field(grid, v_new)), float_dt


@type_checker
def step(
	state: State, spec: ModelSpec, ctrl: StepControl, float_dt: float | None = None
) -> State:
	"""Advance one time step.

	Parameters
	----------
	state : State
		Current state.
	spec : ModelSpec
		The model.
	ctrl : StepControl
		Scheme and step policy.
	float_dt : float | None
		Explicit step size; by default the policy decides.

	Returns
	-------
	State
		The state at ``t + dt``.

	Raises
	------
	CFLViolationError
		If the step exceeds the admissible bound.
	NonFiniteStateError
		If the update produced NaN or Inf values; the error carries them.
	"""
	check_spec_fits_grid(spec, state.grid)
	return _advance(state, spec, ctrl, float_dt, float("inf"))[0]


@type_checker
def run(
	initial: State,
	spec: ModelSpec,
	ctrl: StepControl,
	float_tmax: float,
	observers: Sequence[Observer] = (),
	int_snapshot_stride: int = 1,
	cls_logger: LogEmitter | None = None,
) -> RunRecord:
	"""Integrate from ``initial`` up to ``float_tmax``, landing on it exactly.

	Observers receive ``start`` once and ``step`` after every step. Snapshots are kept for
	the initial state, every ``int_snapshot_stride``-th step, and the final state.

	Parameters
	----------
	initial : State
		Initial state.
	spec : ModelSpec
		The model.
	ctrl : StepControl
		Scheme and step policy.
	float_tmax : float
		Final time; 0 stores the initial state only.
	observers : sequence of Observer
		Step hooks such as the estimate ledger.
	int_snapshot_stride : int
		Steps between stored snapshots.
	cls_logger : LogEmitter | None
		Progress sink; defaults to the package logger.

	Returns
	-------
	RunRecord
		The stored trajectory.

	Raises
	------
	DomainError
		If ``float_tmax`` is before the initial time or the stride is not positive.
	"""
	if float_tmax < initial.float_t:
		raise DomainError(f"tmax {float_tmax} lies before the initial time {initial.float_t}")
	if int_snapshot_stride < 1:
		raise DomainError(f"snapshot stride must be >= 1, got {int_snapshot_stride}")
	check_spec_fits_grid(spec, initial.grid)
	emitter = cls_logger or LogEmitter()
	emitter.log_message(
		f"run started: scheme={ctrl.str_scheme} policy={ctrl.str_policy} "
		f"grid={initial.grid.tuple_shape} eps={spec.cutoffs.float_eps} tmax={float_tmax}",
		"info",
	)
	for observer in observers:
		observer.start(initial)

	list_snapshots = [initial]
	state = initial
	int_steps = 0
	float_dt_min = float("inf")
	float_dt_max = 0.0
	float_t_slack = _FLOAT_DT_RTOL * max(1.0, float_tmax)
	while state.float_t < float_tmax:
		float_remaining = float_tmax - state.float_t
		state_next, float_dt = _advance(state, spec, ctrl, None, float_remaining)
		if float_remaining - float_dt <= float_t_slack:
			state_next = replace(state_next, float_t=float_tmax)
		for observer in observers:
			observer.step(state, state_next, float_dt)
		int_steps += 1
		float_dt_min = min(float_dt_min, float_dt)
		float_dt_max = max(float_dt_max, float_dt)
		state = state_next
		if int_steps % int_snapshot_stride == 0 or state.float_t >= float_tmax:
			list_snapshots.append(state)
			emitter.log_message(
				f"snapshot {len(list_snapshots) - 1} at t={state.float_t:.6g} "
				f"(step {int_steps}, dt={float_dt:.3g})",
				"info",
			)
	emitter.log_message(f"run finished: {int_steps} steps, t={state.float_t:.6g}", "info")
	return RunRecord(
		spec, ctrl, tuple(list_snapshots), int_steps, float_dt_min, float_dt_max
	)


__all__ = [
	"POLICIES",
	"SCHEMES",
	"Observer",
	"RunRecord",
	"State",
	"StepControl",
	"admissible_dt",
	"chemotactic_flux",
	"check_spec_fits_grid",
	"face_velocity",
	"run",
	"step",
]
