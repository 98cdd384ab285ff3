"""ε-family runs and the empirical convergence studies built on them.

The limit of the regularized family is not observable, so convergence is measured through
consecutive-pair Cauchy differences: for ``ε_j > ε_j+1`` the space-time L² norms of the
differences of ``ln(u+1)``, ``v`` and ``∇v``. Trajectories are compared as piecewise
constant in time (left values), integrated exactly over the union of both snapshot grids.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
import math
from typing import Any

import numpy as np
import pandas as pd

from chemotensor._internal.config.contracts import CONVERGENCE_COLUMNS
from chemotensor._internal.utils.logs import LogEmitter
from chemotensor._internal.utils.typing import TypeChecker, type_checker
from chemotensor.errors import DomainError, FamilyAbortedError, GridMismatchError
from chemotensor.functionals import Certificate, EstimateLedger, Tolerances, certify
from chemotensor.grid import Field, GridSpec, face_gradient
from chemotensor.model import ModelSpec
from chemotensor.solver import RunRecord, State, StepControl, check_spec_fits_grid, run
from chemotensor.verifier import refinement_slopes


DEFAULT_EPS: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)


@dataclass(frozen=True)
class EpsFamilyPlan(metaclass=TypeChecker):
	"""Runs sharing grid, model, step policy and initial data, differing only in ``ε``.

	Parameters
	----------
	spec : ModelSpec
		Base model; its own ``ε`` is replaced by each member's.
	ctrl : StepControl
		Step policy of every member.
	initial : State
		Shared initial state.
	float_tmax : float
		Final time.
	tuple_eps : tuple of float
		Strictly decreasing regularization parameters; the last is the limit proxy.
	int_snapshot_stride : int
		Steps between stored snapshots.
	int_jobs : int | None
		Concurrent members; defaults to the family size.

	Raises
	------
	DomainError
		If ``tuple_eps`` is empty or not strictly decreasing, or ``float_tmax < 0``.
	GridMismatchError
		If the model domain is not the grid of the initial state.
	"""

	spec: ModelSpec
	ctrl: StepControl
	initial: State
	float_tmax: float
	tuple_eps: tuple[float, ...] = DEFAULT_EPS
	int_snapshot_stride: int = 1
	int_jobs: int | None = None

	def __post_init__(self) -> None:
		if not self.tuple_eps:
			raise DomainError("a family needs at least one eps")
		if any(a <= b for a, b in zip(self.tuple_eps[:-1], self.tuple_eps[1:], strict=True)):
			raise DomainError(f"eps must be strictly decreasing, got {self.tuple_eps}")
		if self.float_tmax < 0.0:
			raise DomainError(f"tmax must be nonnegative, got {self.float_tmax}")
		if self.int_jobs is not None and self.int_jobs < 1:
			raise DomainError(f"jobs must be >= 1, got {self.int_jobs}")
		check_spec_fits_grid(self.spec, self.initial.grid)


@dataclass(frozen=True)
class FamilyMember(metaclass=TypeChecker):
	"""One finished member run.

	Parameters
	----------
	float_eps : float
		Its regularization parameter.
	record : RunRecord
		Trajectory.
	ledger : EstimateLedger
		Estimate ledger filled during the run.
	certificate : Certificate
		Certified bounds of the ledger.
	"""

	float_eps: float
	record: RunRecord
	ledger: EstimateLedger
	certificate: Certificate


@dataclass(frozen=True)
class FamilyRecord(metaclass=TypeChecker):
	"""Members of a family run, in plan order (possibly partial after an abort).

	Parameters
	----------
	plan : EpsFamilyPlan
		The plan.
	tuple_members : tuple of FamilyMember
		Finished members, largest ``ε`` first.
	"""

	plan: EpsFamilyPlan
	tuple_members: tuple[FamilyMember, ...]

	@property
	def bool_complete(self) -> bool:
		"""Whether every planned member finished."""
		return len(self.tuple_members) == len(self.plan.tuple_eps)

	@property
	def bool_bounds_uniform(self) -> bool:
		"""Whether ``K₁``, ``K₃`` and ``K₄`` are bitwise equal across members."""
		set_bounds = {
			(
				member.certificate.constants.float_k1,
				member.certificate.constants.float_k3,
				member.certificate.constants.float_k4,
			)
			for member in self.tuple_members
		}
		return len(set_bounds) <= 1

	@property
	def bool_certificates_passed(self) -> bool:
		"""Whether every member's certificate passed."""
		return all(member.certificate.bool_passed for member in self.tuple_members)


@type_checker
def run_member(
	plan: EpsFamilyPlan,
	float_eps: float,
	tolerances: Tolerances | None = None,
	cls_logger: LogEmitter | None = None,
) -> FamilyMember:
	"""Run the plan at one ``ε`` with a fresh estimate ledger attached.

	Parameters
	----------
	plan : EpsFamilyPlan
		The plan.
	float_eps : float
		Regularization parameter of this member.
	tolerances : Tolerances | None
		Certificate slack.
	cls_logger : LogEmitter | None
		Progress sink.

	Returns
	-------
	FamilyMember
		The finished member.
	"""
	spec = plan.spec.with_eps(float_eps)
	ledger = EstimateLedger(spec)
	record = run(
		plan.initial,
		spec,
		plan.ctrl,
		plan.float_tmax,
		observers=(ledger,),
		int_snapshot_stride=plan.int_snapshot_stride,
		cls_logger=cls_logger,
	)
	return FamilyMember(float_eps, record, ledger, certify(ledger, tolerances))


@type_checker
def run_family(
	plan: EpsFamilyPlan,
	tolerances: Tolerances | None = None,
	cls_logger: LogEmitter | None = None,
) -> FamilyRecord:
	"""Run every member of ``plan`` concurrently.

	Members share no mutable state; each runs single-threaded in its own worker.

	Parameters
	----------
	plan : EpsFamilyPlan
		The plan.
	tolerances : Tolerances | None
		Certificate slack.
	cls_logger : LogEmitter | None
		Progress sink.

	Returns
	-------
	FamilyRecord
		All members, largest ``ε`` first.

	Raises
	------
	FamilyAbortedError
		If a member failed; the error carries a record of the members that finished and
		chains the first member error.
	"""
	emitter = cls_logger or LogEmitter()
	int_workers = plan.int_jobs or len(plan.tuple_eps)
	emitter.log_message(
		f"family started: eps={list(plan.tuple_eps)} workers={int_workers}", "info"
	)
	with ThreadPoolExecutor(max_workers=int_workers, thread_name_prefix="eps") as executor:
		list_futures: list[Future[FamilyMember]] = [
			executor.submit(run_member, plan, float_eps, tolerances, emitter)
			for float_eps in plan.tuple_eps
		]
	list_members: list[FamilyMember] = []
	list_errors: list[tuple[float, BaseException]] = []
	for float_eps, future in zip(plan.tuple_eps, list_futures, strict=True):
		err = future.exception()
		if err is None:
			list_members.append(future.result())
		else:
			list_errors.append((float_eps, err))
	family = FamilyRecord(plan, tuple(list_members))
	if list_errors:
		float_eps, err = list_errors[0]
		emitter.log_message(
			f"family aborted: {len(list_errors)} member(s) failed, first at eps={float_eps}: "
			f"{err}",
			"error",
		)
		raise FamilyAbortedError(
			f"{len(list_errors)} of {len(plan.tuple_eps)} members failed (first at "
			f"eps={float_eps}: {err})",
			family,
		) from err
	emitter.log_message(
		f"family finished: bounds uniform={family.bool_bounds_uniform}, "
		f"certificates passed={family.bool_certificates_passed}",
		"info",
	)
	return family


@type_checker
def piecewise_l2_distance(
	record_a: RunRecord,
	record_b: RunRecord,
	fn_extract: Callable[[State], tuple[np.ndarray, ...]],
) -> float:
	"""Space-time L² distance of two trajectories held piecewise constant in time.

	Parameters
	----------
	record_a, record_b : RunRecord
		Trajectories on the same grid and starting at the same time.
	fn_extract : callable
		Maps a state to the arrays compared (cell or face values); entries are weighted by
		``hx * hy``.

	Returns
	-------
	float
		``(∫₀ᵀ Σ |a - b|² hx hy dt)^½`` up to the shorter horizon ``T``.

	Raises
	------
	GridMismatchError
		If the trajectories live on different grids.
	"""
	if record_a.grid != record_b.grid:
		raise GridMismatchError(f"grids differ: {record_a.grid} vs {record_b.grid}")
	array_ta = record_a.array_times
	array_tb = record_b.array_times
	float_end = min(float(array_ta[-1]), float(array_tb[-1]))
	array_times = np.union1d(array_ta, array_tb)
	array_times = array_times[array_times <= float_end]
	float_vol = record_a.grid.float_cell_volume
	float_sum = 0.0
	for float_t0, float_t1 in zip(array_times[:-1], array_times[1:], strict=True):
		state_a = record_a.tuple_snapshots[int(np.searchsorted(array_ta, float_t0, "right")) - 1]
		state_b = record_b.tuple_snapshots[int(np.searchsorted(array_tb, float_t0, "right")) - 1]
		float_sq = sum(
			float(np.sum((array_a - array_b) ** 2))
			for array_a, array_b in zip(fn_extract(state_a), fn_extract(state_b), strict=True)
		)
		float_sum += (float(float_t1) - float(float_t0)) * float_sq * float_vol
	return math.sqrt(float_sum)


@type_checker
def _ln_density(state: State) -> tuple[np.ndarray, ...]:
	return (np.log1p(np.maximum(state.field_u.values, 0.0)),)


@type_checker
def _signal(state: State) -> tuple[np.ndarray, ...]:
	return (state.field_v.values,)


@type_checker
def _signal_gradient(state: State) -> tuple[np.ndarray, ...]:
	grad = face_gradient(state.field_v)
	return (grad.x, grad.y)


@dataclass(frozen=True, eq=False)
class ConvergenceTable(metaclass=TypeChecker):
	"""Consecutive-pair Cauchy differences of a family.

	Parameters
	----------
	frame : pd.DataFrame
		One row per consecutive ``ε`` pair, columns as in ``CONVERGENCE_COLUMNS``.
	dict_decreasing : dict of str to bool
		Per difference column, whether it decreases along the family.
	tuple_warnings : tuple of str
		Soft findings (a column that does not decrease).
	tuple_failures : tuple of str
		Hard findings (a column growing by more than the allowed increase).
	"""

	frame: pd.DataFrame
	dict_decreasing: dict[str, bool] = field(default_factory=dict)
	tuple_warnings: tuple[str, ...] = ()
	tuple_failures: tuple[str, ...] = ()

	@property
	def bool_hard_failed(self) -> bool:
		"""Whether some column grew beyond the allowed increase."""
		return bool(self.tuple_failures)

	def to_text(self) -> str:
		"""Render the table and its findings as plain text."""
		list_lines = [self.frame.to_string(index=False, float_format=lambda x: f"{x:.6e}")]
		list_lines.extend(
			f"{str_col}: {'decreasing' if bool_dec else 'NOT decreasing'}"
			for str_col, bool_dec in self.dict_decreasing.items()
		)
		list_lines.extend(f"warning: {str_msg}" for str_msg in self.tuple_warnings)
		list_lines.extend(f"FAIL: {str_msg}" for str_msg in self.tuple_failures)
		return "\n".join(list_lines)


@type_checker
def convergence_table(
	family: FamilyRecord,
	float_hard_increase: float = 0.10,
	cls_logger: LogEmitter | None = None,
) -> ConvergenceTable:
	"""Cauchy differences of ``ln(u+1)``, ``v`` and ``∇v`` for consecutive ``ε``.

	A column that fails to decrease is a warning; one that grows by more than
	``float_hard_increase`` (relative) between consecutive rows is a hard finding.

	Parameters
	----------
	family : FamilyRecord
		At least three finished members.
	float_hard_increase : float
		Relative growth that turns a warning into a hard finding.
	cls_logger : LogEmitter | None
		Sink for the warnings.

	Returns
	-------
	ConvergenceTable
		The table with its findings.

	Raises
	------
	DomainError
		With fewer than three members.
	GridMismatchError
		If members live on different grids.
	"""
	tuple_members = family.tuple_members
	if len(tuple_members) < 3:
		raise DomainError(f"a convergence table needs >= 3 members, got {len(tuple_members)}")
	grid = tuple_members[0].record.grid
	for member in tuple_members[1:]:
		if member.record.grid != grid:
			raise GridMismatchError(
				f"member eps={member.float_eps} lives on {member.record.grid}, expected {grid}"
			)
	list_rows: list[dict[str, float]] = []
	for member, member_next in zip(tuple_members[:-1], tuple_members[1:], strict=True):
		list_rows.append(
			{
				"eps_coarse": member.float_eps,
				"eps_fine": member_next.float_eps,
				"diff_ln_u": piecewise_l2_distance(member.record, member_next.record, _ln_density),
				"diff_v": piecewise_l2_distance(member.record, member_next.record, _signal),
				"diff_grad_v": piecewise_l2_distance(
					member.record, member_next.record, _signal_gradient
				),
			}
		)
	frame = pd.DataFrame(list_rows, columns=list(CONVERGENCE_COLUMNS))

	emitter = cls_logger or LogEmitter()
	dict_decreasing: dict[str, bool] = {}
	list_warnings: list[str] = []
	list_failures: list[str] = []
	for str_col in CONVERGENCE_COLUMNS[2:]:
		array_col = frame[str_col].to_numpy()
		bool_dec = True
		for int_i in range(array_col.size - 1):
			float_a, float_b = float(array_col[int_i]), float(array_col[int_i + 1])
			if float_a == 0.0 and float_b == 0.0:
				continue
			if not float_b < float_a:
				bool_dec = False
			if float_b > float_a * (1.0 + float_hard_increase):
				list_failures.append(
					f"{str_col} grows from {float_a:.3e} to {float_b:.3e} at row {int_i + 1}"
				)
		dict_decreasing[str_col] = bool_dec
		if not bool_dec:
			str_msg = f"{str_col} is not decreasing along the family"
			list_warnings.append(str_msg)
			emitter.log_message(str_msg, "warning")
	return ConvergenceTable(frame, dict_decreasing, tuple(list_warnings), tuple(list_failures))


@type_checker
def restrict(field_fine: Field, grid_coarse: GridSpec) -> Field:
	"""Block-average a field onto a grid twice as coarse along every simulated axis.

	Parameters
	----------
	field_fine : Field
		Field on the fine grid.
	grid_coarse : GridSpec
		Target grid with half the cells per simulated axis and the same extents.

	Returns
	-------
	Field
		Restricted field.

	Raises
	------
	GridMismatchError
		If the grids are not a factor-two pair.
	"""
	grid_fine = field_fine.grid
	int_fy = 2 if grid_fine.int_dim == 2 else 1
	if (
		grid_fine.int_dim != grid_coarse.int_dim
		or grid_fine.tuple_extents != grid_coarse.tuple_extents
		or grid_fine.int_nx != 2 * grid_coarse.int_nx
		or grid_fine.int_ny != int_fy * grid_coarse.int_ny
	):
		raise GridMismatchError(f"{grid_fine} is not a factor-two refinement of {grid_coarse}")
	array_fine = field_fine.values.reshape(
		grid_coarse.int_ny, int_fy, grid_coarse.int_nx, 2
	)
	return Field(grid_coarse, array_fine.mean(axis=(1, 3)))


@dataclass(frozen=True)
class RefinementReport(metaclass=TypeChecker):
	"""Self-convergence of final states over successive factor-two refinements.

	Parameters
	----------
	tuple_h : tuple of float
		Mesh sizes of the coarser grid of each compared pair.
	tuple_u_diffs : tuple of float
		``‖R u_fine - u_coarse‖_L²`` per pair.
	tuple_v_diffs : tuple of float
		Same for ``v``.
	"""

	tuple_h: tuple[float, ...]
	tuple_u_diffs: tuple[float, ...]
	tuple_v_diffs: tuple[float, ...]

	@property
	def tuple_u_orders(self) -> tuple[float, ...]:
		"""Observed orders of the ``u`` differences."""
		return refinement_slopes(self.tuple_h, self.tuple_u_diffs)

	@property
	def tuple_v_orders(self) -> tuple[float, ...]:
		"""Observed orders of the ``v`` differences."""
		return refinement_slopes(self.tuple_h, self.tuple_v_diffs)

	def to_dict(self) -> dict[str, Any]:
		"""Return the report as JSON-ready values."""
		return {
			"h": list(self.tuple_h),
			"u_diffs": list(self.tuple_u_diffs),
			"v_diffs": list(self.tuple_v_diffs),
			"u_orders": list(self.tuple_u_orders),
			"v_orders": list(self.tuple_v_orders),
		}


@type_checker
def refinement_study(
	fn_initial: Callable[[GridSpec], State],
	spec: ModelSpec,
	ctrl: StepControl,
	float_tmax: float,
	tuple_grids: Sequence[GridSpec],
	cls_logger: LogEmitter | None = None,
) -> RefinementReport:
	"""Run the model on successive factor-two refinements and compare final states.

	Parameters
	----------
	fn_initial : callable
		Builds the initial state on a grid.
	spec : ModelSpec
		The model, fixed ``ε``.
	ctrl : StepControl
		Step policy of every run.
	float_tmax : float
		Final time.
	tuple_grids : sequence of GridSpec
		At least three grids, each a factor-two refinement of the previous one.
	cls_logger : LogEmitter | None
		Progress sink.

	Returns
	-------
	RefinementReport
		Pairwise differences of the final states.

	Raises
	------
	DomainError
		With fewer than three grids.
	GridMismatchError
		If consecutive grids are not factor-two refinements.
	"""
	if len(tuple_grids) < 3:
		raise DomainError(f"a refinement study needs >= 3 grids, got {len(tuple_grids)}")
	list_finals = [
		run(fn_initial(grid), spec, ctrl, float_tmax, cls_logger=cls_logger).final
		for grid in tuple_grids
	]
	list_h: list[float] = []
	list_u: list[float] = []
	list_v: list[float] = []
	for state_coarse, state_fine in zip(list_finals[:-1], list_finals[1:], strict=True):
		grid = state_coarse.grid
		float_vol = grid.float_cell_volume
		array_du = restrict(state_fine.field_u, grid).values - state_coarse.field_u.values
		array_dv = restrict(state_fine.field_v, grid).values - state_coarse.field_v.values
		list_h.append(grid.float_h)
		list_u.append(math.sqrt(float(np.sum(array_du**2)) * float_vol))
		list_v.append(math.sqrt(float(np.sum(array_dv**2)) * float_vol))
	return RefinementReport(tuple(list_h), tuple(list_u), tuple(list_v))


__all__ = [
	"DEFAULT_EPS",
	"ConvergenceTable",
	"EpsFamilyPlan",
	"FamilyMember",
	"FamilyRecord",
	"RefinementReport",
	"convergence_table",
	"piecewise_l2_distance",
	"refinement_study",
	"restrict",
	"run_family",
	"run_member",
]
