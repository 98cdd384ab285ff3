"""Unit tests for states, step control and the time steppers."""

from collections.abc import Callable

import numpy as np
import pytest

from chemotensor.errors import (
	CFLViolationError,
	DomainError,
	GridMismatchError,
	NonFiniteStateError,
)
from chemotensor.grid import Field, GridSpec, integrate
from chemotensor.model import CutoffPair, Kinetics, ModelSpec, SensitivityTensor
from chemotensor.solver import (
	Observer,
	State,
	StepControl,
	admissible_dt,
	chemotactic_flux,
	check_spec_fits_grid,
	face_velocity,
	run,
	step,
)


# --------------------------
# Module Utilities
# --------------------------


def _three_cell_state(array_u: list[float], array_v: list[float]) -> State:
	"""State on three unit cells.

	Parameters
	----------
	array_u : list of float
		Density values.
	array_v : list of float
		Concentration values.

	Returns
	-------
	State
		The state at ``t = 0``.
	"""
	grid = GridSpec.line(3.0, 3)
	return State(0.0, Field(grid, np.array(array_u)), Field(grid, np.array(array_v)))


class _CountingObserver:
	"""Observer counting its invocations."""

	def __init__(self) -> None:
		self.int_starts = 0
		self.list_dts: list[float] = []

	def start(self, state: State) -> None:
		"""Count the start."""
		self.int_starts += 1

	def step(self, state_before: State, state_after: State, float_dt: float) -> None:
		"""Record the step size."""
		self.list_dts.append(float_dt)


# --------------------------
# Tests
# --------------------------


def test_state_rejects_negative_and_nonfinite_values(grid_1d: GridSpec) -> None:
	"""Negative densities, negative time and NaN are refused.

	Parameters
	----------
	grid_1d : GridSpec
		1D mesh.
	"""
	field_one = Field.constant(grid_1d, 1.0)
	field_neg = Field.constant(grid_1d, -0.5)
	with pytest.raises(DomainError):
		State(0.0, field_neg, field_one)
	with pytest.raises(DomainError):
		State(-1.0, field_one, field_one)
	array_nan = np.ones(grid_1d.tuple_shape)
	array_nan[0, 3] = np.nan
	with pytest.raises(NonFiniteStateError):
		State(0.0, Field(grid_1d, array_nan), field_one)


def test_state_accepts_roundoff_negatives(grid_1d: GridSpec) -> None:
	"""Negatives at round-off scale are accepted.

	Parameters
	----------
	grid_1d : GridSpec
		1D mesh.
	"""
	array_u = np.ones(grid_1d.tuple_shape)
	array_u[0, 0] = -1e-16
	State(0.0, Field(grid_1d, array_u), Field.constant(grid_1d, 1.0))


def test_state_requires_one_grid(grid_1d: GridSpec) -> None:
	"""Fields on different grids raise ``GridMismatchError``.

	Parameters
	----------
	grid_1d : GridSpec
		1D mesh.
	"""
	with pytest.raises(GridMismatchError):
		State(0.0, Field.constant(grid_1d, 1.0), Field.constant(GridSpec.line(1.0, 5), 1.0))


@pytest.mark.parametrize(
	"dict_kwargs",
	[
		{"str_scheme": "rk4"},
		{"str_policy": "sometimes"},
		{"float_sigma": 0.0},
		{"float_sigma": 1.5},
		{"float_dt_max": 0.0},
		{"str_policy": "fixed"},
	],
)
def test_step_control_rejects_bad_values(dict_kwargs: dict[str, object]) -> None:
	"""Unknown schemes, bad safety factors and a fixed policy without a step are refused.

	Parameters
	----------
	dict_kwargs : dict[str, object]
		Constructor overrides.
	"""
	with pytest.raises(DomainError):
		StepControl(**dict_kwargs)  # type: ignore[arg-type]


def test_check_spec_fits_grid(spec_factory: Callable[..., ModelSpec]) -> None:
	"""A model on ``[0, 1]`` does not fit a grid on ``[0, 3]``.

	Parameters
	----------
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	with pytest.raises(GridMismatchError):
		check_spec_fits_grid(spec_factory(1), GridSpec.line(3.0, 3))
	check_spec_fits_grid(spec_factory(1, tuple_extents=(3.0,)), GridSpec.line(3.0, 3))


def test_chemotactic_flux_three_cells(spec_factory: Callable[..., ModelSpec]) -> None:
	"""Identity sensitivity pushes mass up both signal gradients toward the center.

	Parameters
	----------
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	spec = spec_factory(1, "scalar", bool_spatial=False, tuple_extents=(3.0,))
	state = _three_cell_state([1.0, 2.0, 1.0], [0.0, 1.0, 0.0])
	np.testing.assert_allclose(face_velocity(state, spec).x, [[1.0, -1.0]])
	np.testing.assert_allclose(chemotactic_flux(state, spec).x, [[1.0, -1.0]])


def test_flux_upwinds_from_the_donor_cell(spec_factory: Callable[..., ModelSpec]) -> None:
	"""The flux carries the density of the cell the velocity leaves.

	Parameters
	----------
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	spec = spec_factory(1, "scalar", bool_spatial=False, tuple_extents=(3.0,))
	state = _three_cell_state([3.0, 1.0, 0.5], [0.0, 1.0, 2.0])
	np.testing.assert_allclose(chemotactic_flux(state, spec).x, [[3.0, 1.0]])


def test_explicit_step_three_cells(spec_factory: Callable[..., ModelSpec]) -> None:
	"""One explicit step of diffusion plus linear consumption.

	Parameters
	----------
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	spec = spec_factory(1, "scalar", "linear", tuple_extents=(3.0,))
	ctrl = StepControl("explicit", "adaptive", 1.0, 1.0)
	state = step(_three_cell_state([1.0, 2.0, 1.0], [1.0, 1.0, 1.0]), spec, ctrl, 0.1)
	assert state.float_t == pytest.approx(0.1)
	np.testing.assert_allclose(state.field_u.values, [[1.1, 1.8, 1.1]])
	np.testing.assert_allclose(state.field_v.values, [[0.9, 0.8, 0.9]])


def test_admissible_dt_explicit_and_imex(spec_factory: Callable[..., ModelSpec]) -> None:
	"""Explicit bound ``σ/(D + max(A, R))``; IMEX without transport is unbounded.

	Parameters
	----------
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	spec = spec_factory(1, "scalar", "linear", tuple_extents=(3.0,))
	state = _three_cell_state([1.0, 2.0, 1.0], [1.0, 1.0, 1.0])
	assert admissible_dt(state, spec, StepControl(float_sigma=0.4)) == pytest.approx(0.1)
	assert admissible_dt(state, spec, StepControl("imex")) == float("inf")
	velocity = face_velocity(state, spec)
	assert admissible_dt(state, spec, StepControl(), velocity) == admissible_dt(
		state, spec, StepControl()
	)


def test_step_rejects_cfl_violation(spec_factory: Callable[..., ModelSpec]) -> None:
	"""A requested step above the bound raises ``CFLViolationError`` carrying both numbers.

	Parameters
	----------
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	spec = spec_factory(1, "scalar", "linear", tuple_extents=(3.0,))
	state = _three_cell_state([1.0, 2.0, 1.0], [1.0, 1.0, 1.0])
	with pytest.raises(CFLViolationError) as exc_info:
		step(state, spec, StepControl(float_sigma=0.4), 0.5)
	assert exc_info.value.float_dt == 0.5
	assert exc_info.value.float_bound == pytest.approx(0.1)
	assert exc_info.value.float_bound == admissible_dt(state, spec, StepControl(float_sigma=0.4))


def test_imex_step_accepts_large_steps(
	heat_spec_1d: ModelSpec, bump_state_1d: State
) -> None:
	"""The implicit diffusion keeps a large step nonnegative and mass-conserving.

	Parameters
	----------
	heat_spec_1d : ModelSpec
		Pure diffusion model.
	bump_state_1d : State
		Initial state.
	"""
	state = step(bump_state_1d, heat_spec_1d, StepControl("imex", "fixed", float_dt=0.05))
	assert state.float_t == pytest.approx(0.05)
	assert float(state.field_u.values.min()) >= 0.0
	assert integrate(state.field_u) == pytest.approx(integrate(bump_state_1d.field_u), rel=1e-12)
	assert float(state.field_v.values.max()) <= float(bump_state_1d.field_v.values.max())


@pytest.mark.parametrize("str_scheme", ["explicit", "imex"])
def test_run_preserves_positivity_mass_and_vmax(
	str_scheme: str, bump_state_2d: State, rotational_spec_2d: ModelSpec
) -> None:
	"""Rotational chemotaxis keeps ``u, v >= 0``, conserves mass and lowers ``max v``.

	Parameters
	----------
	str_scheme : str
		Scheme under test.
	bump_state_2d : State
		Initial state.
	rotational_spec_2d : ModelSpec
		Rotational model.
	"""
	record = run(bump_state_2d, rotational_spec_2d, StepControl(str_scheme), 0.02)
	float_mass0 = integrate(bump_state_2d.field_u)
	array_vmax = [float(state.field_v.values.max()) for state in record.tuple_snapshots]
	for state in record.tuple_snapshots:
		assert float(state.field_u.values.min()) >= -1e-13
		assert float(state.field_v.values.min()) >= -1e-13
		assert integrate(state.field_u) == pytest.approx(float_mass0, rel=1e-12)
	assert all(b <= a + 1e-14 for a, b in zip(array_vmax[:-1], array_vmax[1:], strict=True))


def test_run_lands_on_tmax_and_strides_snapshots(
	bump_state_1d: State, spec_factory: Callable[..., ModelSpec]
) -> None:
	"""The last snapshot is at ``tmax`` exactly and strided snapshots are kept.

	Parameters
	----------
	bump_state_1d : State
		Initial state.
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	observer = _CountingObserver()
	assert isinstance(observer, Observer)
	record = run(
		bump_state_1d,
		spec_factory(1),
		StepControl(float_dt_max=0.001),
		0.0105,
		observers=(observer,),
		int_snapshot_stride=3,
	)
	assert record.float_horizon == 0.0105
	assert record.int_steps == len(observer.list_dts)
	assert observer.int_starts == 1
	assert len(record.tuple_snapshots) == 1 + record.int_steps // 3 + (record.int_steps % 3 > 0)
	assert sum(observer.list_dts) == pytest.approx(0.0105)
	assert record.float_dt_max <= 0.001 + 1e-15
	assert np.all(np.diff(record.array_times) > 0.0)


def test_run_fixed_policy_uses_the_fixed_step(
	bump_state_1d: State, heat_spec_1d: ModelSpec
) -> None:
	"""A fixed step is taken as given, shortened only for the last step.

	Parameters
	----------
	bump_state_1d : State
		Initial state.
	heat_spec_1d : ModelSpec
		Pure diffusion model.
	"""
	record = run(
		bump_state_1d, heat_spec_1d, StepControl("explicit", "fixed", float_dt=1e-4), 0.00105
	)
	assert record.int_steps == 11
	assert record.float_dt_max == pytest.approx(1e-4)
	assert record.float_dt_min == pytest.approx(5e-5)


def test_run_with_zero_horizon(bump_state_1d: State, heat_spec_1d: ModelSpec) -> None:
	"""``tmax = 0`` stores the initial state only.

	Parameters
	----------
	bump_state_1d : State
		Initial state.
	heat_spec_1d : ModelSpec
		Pure diffusion model.
	"""
	record = run(bump_state_1d, heat_spec_1d, StepControl(), 0.0)
	assert len(record.tuple_snapshots) == 1
	assert record.initial is bump_state_1d
	assert record.int_steps == 0
	assert record.float_snapshot_spacing == 0.0


def test_run_rejects_bad_arguments(bump_state_1d: State, heat_spec_1d: ModelSpec) -> None:
	"""A negative horizon or stride raises ``DomainError``.

	Parameters
	----------
	bump_state_1d : State
		Initial state.
	heat_spec_1d : ModelSpec
		Pure diffusion model.
	"""
	with pytest.raises(DomainError):
		run(bump_state_1d, heat_spec_1d, StepControl(), -1.0)
	with pytest.raises(DomainError):
		run(bump_state_1d, heat_spec_1d, StepControl(), 0.1, int_snapshot_stride=0)


def test_explicit_blowup_raises_nonfinite(bump_state_1d: State) -> None:
	"""A NaN produced by the kinetics surfaces as ``NonFiniteStateError`` with the last state.

	Parameters
	----------
	bump_state_1d : State
		Initial state.
	"""
	spec = ModelSpec(
		Kinetics("expression", str_expression="v/(v-v)"),
		SensitivityTensor("zero"),
		CutoffPair(0.1),
		int_dim=1,
	)
	with pytest.raises(NonFiniteStateError) as exc_info:
		step(bump_state_1d, spec, StepControl("explicit", "fixed", float_dt=1e-5))
	assert exc_info.value.state_last is bump_state_1d
	assert not np.all(np.isfinite(exc_info.value.array_v))
