"""Unit tests for test functions, residuals and the inequality checks."""

from collections.abc import Callable
import math

import numpy as np
import pytest

from chemotensor.errors import DomainError, HorizonError, SnapshotWindowError
from chemotensor.grid import Field, GridSpec, face_gradient
from chemotensor.initial_data import gaussian_field
from chemotensor.model import ModelSpec
from chemotensor.solver import RunRecord, State, StepControl, run
from chemotensor.verifier import (
	TRANSFORMS,
	CosineBumpTestFunction,
	LinearCombination,
	MassReport,
	TemporalBump,
	default_catalog,
	entropy_inequality_check,
	mass_inequality_check,
	refinement_slopes,
	residual_tolerance,
	steklov_average,
	steklov_bound_check,
	u_supersolution_residual,
	v_weak_residual,
	weak_residual_refinement,
	weak_residual_report,
)


# --------------------------
# Fixtures
# --------------------------


@pytest.fixture
def constant_record(grid_1d: GridSpec, heat_spec_1d: ModelSpec) -> RunRecord:
	"""Stationary constant solution of the decoupled heat system up to ``t = 0.01``.

	Parameters
	----------
	grid_1d : GridSpec
		1D mesh.
	heat_spec_1d : ModelSpec
		Pure diffusion model.

	Returns
	-------
	RunRecord
		The trajectory.
	"""
	state = State(0.0, Field.constant(grid_1d, 1.0), Field.constant(grid_1d, 0.5))
	return run(state, heat_spec_1d, StepControl(), 0.01)


@pytest.fixture
def absorption_records(spec_factory: Callable[..., ModelSpec]) -> tuple[RunRecord, ...]:
	"""Diffusion with linear consumption from Gaussian bumps on 16, 32 and 64 cells.

	Parameters
	----------
	spec_factory : Callable[..., ModelSpec]
		Model builder.

	Returns
	-------
	tuple of RunRecord
		Trajectories up to ``t = 0.01``, coarsest first.
	"""
	spec = spec_factory(1, "zero", "linear")
	list_records: list[RunRecord] = []
	for int_cells in (16, 32, 64):
		grid = GridSpec.line(1.0, int_cells)
		state = State(
			0.0,
			gaussian_field(grid, (0.5,), 0.15, 2.0, 0.5),
			gaussian_field(grid, (0.3,), 0.2, 1.0, 0.2),
		)
		list_records.append(run(state, spec, StepControl(), 0.01))
	return tuple(list_records)


# --------------------------
# Test functions
# --------------------------


def test_quadratic_bump() -> None:
	"""``(1 - t/T)²`` with its derivative, zero from ``T`` on."""
	bump = TemporalBump("quadratic", 2.0)
	assert bump.value(0.0) == pytest.approx(1.0)
	assert bump.value(1.0) == pytest.approx(0.25)
	assert bump.value(2.0) == 0.0
	assert bump.derivative(0.0) == pytest.approx(-1.0)
	assert bump.derivative(3.0) == 0.0


def test_smoothstep_bump() -> None:
	"""``1 - η(t/T)`` is flat at both ends and halves at the midpoint."""
	bump = TemporalBump("smoothstep", 1.0)
	assert bump.value(0.0) == pytest.approx(1.0)
	assert bump.value(0.5) == pytest.approx(0.5)
	assert bump.derivative(0.0) == 0.0
	assert bump.derivative(0.5) == pytest.approx(-1.875)
	assert TemporalBump("zero", 1.0).value(0.2) == 0.0


@pytest.mark.parametrize(("str_kind", "float_support"), [("cubic", 1.0), ("quadratic", 0.0)])
def test_bump_rejects_bad_input(str_kind: str, float_support: float) -> None:
	"""Unknown kinds and empty supports raise ``DomainError``.

	Parameters
	----------
	str_kind : str
		Bump kind.
	float_support : float
		Support end.
	"""
	with pytest.raises(DomainError):
		TemporalBump(str_kind, float_support)


def test_cosine_test_function_values() -> None:
	"""Name, values, Neumann gradient and Laplacian of one cosine mode."""
	phi = CosineBumpTestFunction((1.0,), 1, 0, -1.0, TemporalBump("quadratic", 1.0))
	assert phi.str_name == "cos1x0-/quadratic"
	array_x = np.array([0.0, 0.5, 1.0])
	array_y = np.zeros(3)
	np.testing.assert_allclose(phi.evaluate(0.0, array_x, array_y), [0.5, 1.0, 1.5])
	np.testing.assert_allclose(phi.evaluate(0.5, array_x, array_y), [0.125, 0.25, 0.375])
	np.testing.assert_allclose(phi.gradient(0.0, array_x, array_y)[0][[0, 2]], 0.0, atol=1e-12)
	np.testing.assert_allclose(
		phi.laplacian(0.0, array_x, array_y),
		[0.5 * math.pi**2, 0.0, -0.5 * math.pi**2],
		atol=1e-12,
	)
	np.testing.assert_allclose(
		phi.time_derivative(0.0, array_x, array_y), -2.0 * (1.0 - 0.5 * np.cos(math.pi * array_x))
	)


@pytest.mark.parametrize(
	("tuple_extents", "int_k", "int_m", "float_sign"),
	[((1.0,), 1, 1, 1.0), ((1.0,), -1, 0, 1.0), ((1.0, 1.0), 1, 0, 0.5), ((0.0,), 1, 0, 1.0)],
)
def test_cosine_test_function_rejects_bad_input(
	tuple_extents: tuple[float, ...], int_k: int, int_m: int, float_sign: float
) -> None:
	"""A y-mode in 1D, negative modes, bad signs and empty extents are refused.

	Parameters
	----------
	tuple_extents : tuple of float
		Domain extents.
	int_k, int_m : int
		Modes.
	float_sign : float
		Perturbation sign.
	"""
	with pytest.raises(DomainError):
		CosineBumpTestFunction(tuple_extents, int_k, int_m, float_sign, TemporalBump("zero", 1.0))


def test_linear_combination() -> None:
	"""A nonnegative combination adds values and takes the longest support."""
	phi_a = CosineBumpTestFunction((1.0,), 0, 0, 1.0, TemporalBump("quadratic", 1.0))
	phi_b = CosineBumpTestFunction((1.0,), 1, 0, 1.0, TemporalBump("quadratic", 2.0))
	combination = LinearCombination(((2.0, phi_a), (1.0, phi_b)))
	array_x = np.array([0.0])
	array_y = np.array([0.0])
	assert combination.float_t_support == 2.0
	np.testing.assert_allclose(combination.evaluate(0.0, array_x, array_y), [3.5])
	assert combination.str_name == "2*cos0x0+/quadratic + 1*cos1x0+/quadratic"
	with pytest.raises(DomainError):
		LinearCombination(((-1.0, phi_a),))
	with pytest.raises(DomainError):
		LinearCombination(())


def test_default_catalog_order_and_size(grid_1d: GridSpec, grid_2d: GridSpec) -> None:
	"""Lowest modes come first; the 1D catalog holds 14 members and the 2D one 62.

	Parameters
	----------
	grid_1d : GridSpec
		1D mesh.
	grid_2d : GridSpec
		2D mesh.
	"""
	tuple_catalog = default_catalog(grid_1d, 0.5, int_size=14)
	assert [phi.str_name for phi in tuple_catalog[:4]] == [
		"cos0x0+/quadratic",
		"cos0x0+/smoothstep",
		"cos1x0+/quadratic",
		"cos1x0+/smoothstep",
	]
	assert tuple_catalog[4].str_name == "cos1x0-/quadratic"
	assert all(phi.float_t_support == 0.5 for phi in tuple_catalog)
	assert len(default_catalog(grid_2d, 0.5, int_size=62)) == 62
	with pytest.raises(DomainError):
		default_catalog(grid_1d, 0.5, int_size=15)
	with pytest.raises(DomainError):
		default_catalog(grid_1d, 0.5, int_size=0)


# --------------------------
# Residuals
# --------------------------


def test_residuals_vanish_on_constant_solution(constant_record: RunRecord) -> None:
	"""Constants solve both equations, so every residual is round-off.

	Parameters
	----------
	constant_record : RunRecord
		Stationary trajectory.
	"""
	tuple_catalog = default_catalog(constant_record.grid, constant_record.float_horizon, 14)
	for phi in tuple_catalog:
		assert v_weak_residual(constant_record, phi) == pytest.approx(0.0, abs=1e-12)
		for str_transform in ("ln", "identity", "reciprocal"):
			float_residual = u_supersolution_residual(constant_record, phi, str_transform)
			assert float_residual == pytest.approx(0.0, abs=1e-12)


def test_residual_splits_time_integral_at_inner_supports(constant_record: RunRecord) -> None:
	"""A combination whose terms end at different times still leaves only round-off.

	Parameters
	----------
	constant_record : RunRecord
		Stationary trajectory.
	"""
	float_horizon = constant_record.float_horizon
	phi_short = CosineBumpTestFunction((1.0,), 0, 0, 1.0, TemporalBump("quadratic", 0.004))
	phi_long = CosineBumpTestFunction((1.0,), 1, 0, 1.0, TemporalBump("smoothstep", float_horizon))
	phi = LinearCombination(((1.0, phi_short), (3.0, phi_long)))
	assert phi.tuple_time_breaks == (0.004, float_horizon)
	assert v_weak_residual(constant_record, phi) == pytest.approx(0.0, abs=1e-12)
	assert u_supersolution_residual(constant_record, phi) == pytest.approx(0.0, abs=1e-12)


def test_residual_beyond_horizon_raises(constant_record: RunRecord) -> None:
	"""A test function living past the last snapshot raises ``HorizonError``.

	Parameters
	----------
	constant_record : RunRecord
		Stationary trajectory.
	"""
	phi = CosineBumpTestFunction((1.0,), 1, 0, 1.0, TemporalBump("quadratic", 1.0))
	with pytest.raises(HorizonError):
		v_weak_residual(constant_record, phi)
	with pytest.raises(HorizonError):
		u_supersolution_residual(constant_record, phi)


def test_unknown_transform_rejected(constant_record: RunRecord) -> None:
	"""Only the three supported transforms are accepted.

	Parameters
	----------
	constant_record : RunRecord
		Stationary trajectory.
	"""
	phi = default_catalog(constant_record.grid, constant_record.float_horizon, 1)[0]
	with pytest.raises(DomainError):
		u_supersolution_residual(constant_record, phi, "sqrt")


def test_weak_residual_report(constant_record: RunRecord) -> None:
	"""The report lists every member in catalog order, identically for any worker count.

	Parameters
	----------
	constant_record : RunRecord
		Stationary trajectory.
	"""
	tuple_catalog = default_catalog(constant_record.grid, constant_record.float_horizon, 6)
	report = weak_residual_report(constant_record, tuple_catalog, int_jobs=1)
	report_threaded = weak_residual_report(constant_record, tuple_catalog, int_jobs=3)
	assert report.tuple_lines == report_threaded.tuple_lines
	assert report.bool_passed
	assert report.float_tolerance == pytest.approx(
		residual_tolerance(1.0 / 32, constant_record.float_snapshot_spacing)
	)
	dict_report = report.to_dict()
	assert dict_report["catalog_size"] == 6
	assert [line["phi"] for line in dict_report["residuals"]] == [
		phi.str_name for phi in tuple_catalog
	]
	assert set(dict_report) == {
		"transform",
		"catalog_size",
		"tolerance",
		"max_abs_v_residual",
		"min_u_residual",
		"slopes",
		"levels",
		"passed",
		"residuals",
	}


def test_residual_tolerance() -> None:
	"""``C_tol (h² + dt)``."""
	assert residual_tolerance(0.1, 0.01) == pytest.approx(0.1)
	assert residual_tolerance(0.1, 0.01, 1.0) == pytest.approx(0.02)


# --------------------------
# Inequality checks
# --------------------------


@pytest.mark.parametrize(
	("tuple_masses", "bool_expected"),
	[((1.0, 1.01), False), ((1.0, 0.9), True), ((2.0, 2.0 + 1e-13), True)],
)
def test_mass_report(tuple_masses: tuple[float, ...], bool_expected: bool) -> None:
	"""Mass may drop but never rise beyond the relative slack.

	Parameters
	----------
	tuple_masses : tuple of float
		Snapshot masses.
	bool_expected : bool
		Expected verdict.
	"""
	report = MassReport(tuple_masses)
	assert report.bool_passed is bool_expected
	assert report.to_dict()["passed"] is bool_expected


def test_mass_check_on_run(bump_state_1d: State, spec_factory: Callable[..., ModelSpec]) -> None:
	"""The conservative scheme passes the mass inequality.

	Parameters
	----------
	bump_state_1d : State
		Initial state.
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	record = run(bump_state_1d, spec_factory(1), StepControl(), 0.005)
	report = mass_inequality_check(record)
	assert report.bool_passed
	assert len(report.tuple_masses) == len(record.tuple_snapshots)


def test_steklov_average_of_linear_series() -> None:
	"""With ``h = 2 dt`` the average of ``w = t`` lags by ``1.5 dt`` once the window is full."""
	array_times = np.arange(11) * 0.1
	array_avg = steklov_average(array_times, array_times.copy(), 0.2)
	np.testing.assert_allclose(array_avg[2:], array_times[2:] - 0.15, atol=1e-12)
	np.testing.assert_allclose(array_avg[:2], 0.0, atol=1e-12)


def test_steklov_average_keeps_constants() -> None:
	"""A constant series averages to itself."""
	array_times = np.linspace(0.0, 1.0, 11)
	array_values = np.full((11, 3), 2.0)
	np.testing.assert_allclose(steklov_average(array_times, array_values, 0.3), 2.0)


def test_steklov_window_too_small() -> None:
	"""A window below the snapshot spacing raises ``SnapshotWindowError``."""
	array_times = np.linspace(0.0, 1.0, 11)
	with pytest.raises(SnapshotWindowError):
		steklov_average(array_times, array_times, 0.05)
	with pytest.raises(DomainError):
		steklov_average(np.array([0.0, 0.0]), np.zeros(2), 1.0)


@pytest.mark.parametrize("float_p", [2.0, math.inf])
def test_steklov_bound_holds_on_random_series(float_p: float) -> None:
	"""The averaged norm never exceeds the data norm times the sampling slack.

	Parameters
	----------
	float_p : float
		Exponent.
	"""
	rng = np.random.default_rng(7)
	array_times = np.cumsum(rng.uniform(0.01, 0.05, size=40))
	array_values = rng.normal(size=(40, 5))
	report = steklov_bound_check(
		array_times, array_values, 0.12, float_p, float_cell_volume=0.2
	)
	assert report.bool_passed
	assert report.float_average_norm > 0.0


def test_steklov_bound_rejects_other_exponents() -> None:
	"""Only ``p = 2`` and ``p = inf`` are supported."""
	with pytest.raises(DomainError):
		steklov_bound_check(np.array([0.0, 1.0]), np.zeros(2), 1.0, 1.0)


def test_entropy_gap_nonnegative_on_explicit_run(
	bump_state_1d: State, spec_factory: Callable[..., ModelSpec]
) -> None:
	"""Every snapshot stored, the explicit scheme satisfies the energy inequality exactly.

	Parameters
	----------
	bump_state_1d : State
		Initial state.
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	record = run(bump_state_1d, spec_factory(1), StepControl(), 0.01)
	report = entropy_inequality_check(record)
	assert report.float_gap >= -1e-12
	assert report.bool_passed
	assert report.float_t == record.float_horizon
	report_mid = entropy_inequality_check(record, 0.005)
	assert report_mid.float_t <= 0.005 + 1e-12
	with pytest.raises(HorizonError):
		entropy_inequality_check(record, 0.02)


def test_refinement_slopes() -> None:
	"""Second order halving, plus the exact-zero conventions."""
	tuple_slopes = refinement_slopes((0.1, 0.05, 0.025), (0.04, 0.01, 0.0))
	assert tuple_slopes[0] == pytest.approx(2.0)
	assert tuple_slopes[1] == math.inf
	assert refinement_slopes((0.1, 0.05), (0.0, 0.01)) == (-math.inf,)
	with pytest.raises(DomainError):
		refinement_slopes((0.1,), (0.01,))
	with pytest.raises(DomainError):
		refinement_slopes((0.1, -0.05), (0.01, 0.01))


# --------------------------
# Bump trajectories under refinement
# --------------------------


def test_weak_residual_decreases_under_refinement(
	absorption_records: tuple[RunRecord, ...],
) -> None:
	"""The largest signal residual drops at every level, at order one or better.

	Parameters
	----------
	absorption_records : tuple of RunRecord
		Runs on 16, 32 and 64 cells.
	"""
	record_fine = absorption_records[-1]
	tuple_catalog = default_catalog(record_fine.grid, record_fine.float_horizon, 6)
	tuple_shuffled = (absorption_records[1], absorption_records[2], absorption_records[0])
	report = weak_residual_refinement(tuple_shuffled, tuple_catalog, float_c_tol=50.0)
	tuple_h = tuple(float_h for float_h, _ in report.tuple_levels)
	tuple_errors = tuple(float_error for _, float_error in report.tuple_levels)
	assert tuple_h == pytest.approx((1.0 / 16, 1.0 / 32, 1.0 / 64))
	assert tuple_errors[0] > tuple_errors[1] > tuple_errors[2] > 0.0
	assert len(report.tuple_slopes) == 2
	assert min(report.tuple_slopes) >= 1.0
	assert report.float_max_abs_v == tuple_errors[-1]
	assert report.float_tolerance == pytest.approx(
		residual_tolerance(1.0 / 64, record_fine.float_snapshot_spacing, 50.0)
	)
	assert report.to_dict()["levels"][0]["h"] == pytest.approx(1.0 / 16)


def test_weak_residual_refinement_rejects_bad_series(
	absorption_records: tuple[RunRecord, ...], spec_factory: Callable[..., ModelSpec]
) -> None:
	"""One record, a repeated mesh or another domain is not a refinement series.

	Parameters
	----------
	absorption_records : tuple of RunRecord
		Runs on 16, 32 and 64 cells.
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	record = absorption_records[0]
	tuple_catalog = default_catalog(record.grid, record.float_horizon, 2)
	with pytest.raises(DomainError):
		weak_residual_refinement((record,), tuple_catalog)
	with pytest.raises(DomainError):
		weak_residual_refinement((record, record), tuple_catalog)
	grid_long = GridSpec.line(2.0, 64)
	record_long = run(
		State(0.0, Field.constant(grid_long, 1.0), Field.constant(grid_long, 0.5)),
		spec_factory(1, "zero", "zero", tuple_extents=(2.0,)),
		StepControl(),
		0.01,
	)
	with pytest.raises(DomainError):
		weak_residual_refinement((record, record_long), tuple_catalog)


def test_residuals_are_linear_in_the_test_function(
	bump_state_1d: State, spec_factory: Callable[..., ModelSpec]
) -> None:
	"""Both residuals of a nonnegative combination equal the combination of the residuals.

	Parameters
	----------
	bump_state_1d : State
		Initial state.
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	record = run(bump_state_1d, spec_factory(1), StepControl(), 0.01)
	tuple_catalog = default_catalog(record.grid, record.float_horizon, 5)
	phi_a = tuple_catalog[1]
	phi_b = CosineBumpTestFunction(
		(1.0,), 2, 0, -1.0, TemporalBump("smoothstep", 0.5 * record.float_horizon)
	)
	phi = LinearCombination(((2.0, phi_a), (0.5, phi_b)))
	for str_transform in TRANSFORMS:
		float_expected = 2.0 * u_supersolution_residual(
			record, phi_a, str_transform
		) + 0.5 * u_supersolution_residual(record, phi_b, str_transform)
		assert u_supersolution_residual(record, phi, str_transform) == pytest.approx(
			float_expected, rel=1e-9, abs=1e-12
		)
	float_expected_v = 2.0 * v_weak_residual(record, phi_a) + 0.5 * v_weak_residual(record, phi_b)
	assert v_weak_residual(record, phi) == pytest.approx(float_expected_v, rel=1e-9, abs=1e-12)


def test_entropy_gap_shrinks_under_refinement(
	absorption_records: tuple[RunRecord, ...],
) -> None:
	"""Halving the mesh at least halves ``|LHS - RHS|`` of the energy inequality.

	Parameters
	----------
	absorption_records : tuple of RunRecord
		Runs on 16, 32 and 64 cells.
	"""
	list_gaps = [abs(entropy_inequality_check(record).float_gap) for record in absorption_records]
	assert list_gaps[0] > 0.0
	assert list_gaps[0] >= 2.0 * list_gaps[1]
	assert list_gaps[1] >= 2.0 * list_gaps[2]


def test_steklov_average_commutes_with_face_gradient(
	bump_state_2d: State, rotational_spec_2d: ModelSpec
) -> None:
	"""Averaging in time and differencing in space commute on a stored 2D trajectory.

	Parameters
	----------
	bump_state_2d : State
		Initial state.
	rotational_spec_2d : ModelSpec
		Rotational model.
	"""
	record = run(bump_state_2d, rotational_spec_2d, StepControl(), 0.005)
	grid = record.grid
	array_times = record.array_times
	float_h = 3.0 * record.float_snapshot_spacing
	array_v = np.stack([state.field_v.values for state in record.tuple_snapshots])
	array_avg = steklov_average(array_times, array_v, float_h)
	list_grads = [face_gradient(state.field_v) for state in record.tuple_snapshots]
	list_grads_of_avg = [face_gradient(Field(grid, array_slice)) for array_slice in array_avg]
	for str_axis in ("x", "y"):
		array_avg_of_grad = steklov_average(
			array_times, np.stack([getattr(grad, str_axis) for grad in list_grads]), float_h
		)
		np.testing.assert_allclose(
			np.stack([getattr(grad, str_axis) for grad in list_grads_of_avg]),
			array_avg_of_grad,
			rtol=1e-9,
			atol=1e-10,
		)


def test_steklov_average_converges_as_window_shrinks(
	bump_state_1d: State, spec_factory: Callable[..., ModelSpec]
) -> None:
	"""``‖A_h u - u‖`` over a stored run decreases through ``h``, ``h/2`` and ``h/4``.

	Parameters
	----------
	bump_state_1d : State
		Initial state.
	spec_factory : Callable[..., ModelSpec]
		Model builder.
	"""
	record = run(bump_state_1d, spec_factory(1), StepControl(), 0.01)
	array_times = record.array_times
	array_dt = np.diff(array_times)
	array_u = np.stack([state.field_u.values for state in record.tuple_snapshots])
	float_vol = record.grid.float_cell_volume
	list_norms: list[float] = []
	for int_windows in (16, 8, 4):
		float_h = int_windows * record.float_snapshot_spacing
		array_gap = steklov_average(array_times, array_u, float_h)[:-1] - array_u[:-1]
		float_sq = float(np.sum(array_dt * (array_gap**2).reshape(array_dt.size, -1).sum(axis=1)))
		list_norms.append(math.sqrt(float_sq * float_vol))
	assert list_norms[0] > list_norms[1] > list_norms[2] > 0.0
	assert list_norms[2] < 0.6 * list_norms[0]
