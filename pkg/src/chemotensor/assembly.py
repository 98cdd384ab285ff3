"""Turn validated config models into domain objects, and record directories back into runs.

Model-level rejections raised while assembling (negative initial data, a bad expression, a
``.csnap`` file of the wrong shape, a model whose sampled hypotheses fail) are reported as
:class:`ConfigError`, the same family as schema violations. Missing input files propagate as
``FileNotFoundError``.
"""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path

from pydantic import ValidationError

from chemotensor._internal.config.schemas.run_config import (
	ConstantInit,
	EpsFamilyPlanConfig,
	FieldInit,
	GaussianInit,
	GridConfig,
	InitialConfig,
	ModelConfig,
	RandomInit,
	RunConfig,
	SteppingConfig,
	ToleranceConfig,
	format_validation_error,
)
from chemotensor._internal.config.settings import Settings, get_settings
from chemotensor._internal.utils.typing import TypeChecker, type_checker
from chemotensor.errors import (
	ConfigError,
	DomainError,
	ExpressionError,
	GridMismatchError,
	RecordFormatError,
)
from chemotensor.experiments import EpsFamilyPlan
from chemotensor.functionals import Tolerances
from chemotensor.grid import Field, GridSpec
from chemotensor.initial_data import constant_field, gaussian_field, smooth_random_field
from chemotensor.model import (
	CutoffPair,
	Envelope,
	HypothesisReport,
	Kinetics,
	ModelSpec,
	SensitivityTensor,
	validate_hypotheses,
)
from chemotensor.persistence import read_csnap, read_manifest
from chemotensor.solver import RunRecord, State, StepControl


@contextmanager
@type_checker
def _as_config_error(str_where: str) -> Iterator[None]:
	"""Re-raise model-level rejections as :class:`ConfigError` prefixed with ``str_where``."""
	try:
		yield
	except (DomainError, ExpressionError, GridMismatchError) as err:
		raise ConfigError(f"{str_where}: {err}") from err


@type_checker
def build_grid(config: GridConfig) -> GridSpec:
	"""Mesh of a grid section.

	Parameters
	----------
	config : GridConfig
		The section.

	Returns
	-------
	GridSpec
		The mesh.
	"""
	with _as_config_error("grid"):
		if config.dimension == 1:
			return GridSpec.line(config.extents[0], config.cells[0])
		return GridSpec.rectangle(
			config.extents[0], config.extents[1], config.cells[0], config.cells[1]
		)


@type_checker
def build_refinement_grids(config: GridConfig, int_levels: int) -> tuple[GridSpec, ...]:
	"""Meshes of a grid section, each level doubling the cells per simulated axis.

	Parameters
	----------
	config : GridConfig
		The section; its cell counts form the coarsest level.
	int_levels : int
		Number of meshes, at least 3.

	Returns
	-------
	tuple of GridSpec
		The meshes, coarsest first.

	Raises
	------
	ConfigError
		With fewer than three levels.
	"""
	if int_levels < 3:
		raise ConfigError(f"a refinement study needs >= 3 levels, got {int_levels}")
	return tuple(
		build_grid(
			config.model_copy(
				update={"cells": [int_cells * 2**int_level for int_cells in config.cells]}
			)
		)
		for int_level in range(int_levels)
	)


@type_checker
def build_checked_model(
	config: ModelConfig, grid: GridSpec
) -> tuple[ModelSpec, HypothesisReport]:
	"""Model of a model section together with its sampled hypothesis report.

	Parameters
	----------
	config : ModelConfig
		The section.
	grid : GridSpec
		Mesh whose extents become the model domain.

	Returns
	-------
	tuple of (ModelSpec, HypothesisReport)
		The model and its report; only heuristic findings can remain in it.

	Raises
	------
	ConfigError
		If the model is rejected or a non-heuristic hypothesis fails on the sample lattice
		(for instance an envelope below ``|S|_F``).
	"""
	spec = _model_of(config, grid)
	with _as_config_error("model"):
		report = validate_hypotheses(spec)
	if not report.bool_passed:
		str_findings = "; ".join(
			f"{finding.str_check}: {finding.str_message}"
			for finding in report.tuple_findings
			if not finding.bool_heuristic
		)
		raise ConfigError(f"model: hypotheses fail ({str_findings})")
	return spec, report


@type_checker
def build_model(config: ModelConfig, grid: GridSpec) -> ModelSpec:
	"""Model of a model section on the rectangle of ``grid``, hypotheses checked.

	Parameters
	----------
	config : ModelConfig
		The section.
	grid : GridSpec
		Mesh whose extents become the model domain.

	Returns
	-------
	ModelSpec
		The model.
	"""
	return build_checked_model(config, grid)[0]


@type_checker
def _model_of(config: ModelConfig, grid: GridSpec) -> ModelSpec:
	with _as_config_error("model"):
		envelope_cfg = config.tensor.envelope
		envelope = (
			None
			if envelope_cfg is None
			else Envelope(envelope_cfg.value, envelope_cfg.expression)
		)
		return ModelSpec(
			kinetics=Kinetics(
				config.kinetics.tag, config.kinetics.kappa, config.kinetics.expression
			),
			tensor=SensitivityTensor(
				config.tensor.tag,
				config.tensor.chi,
				config.tensor.beta,
				tuple(config.tensor.entries),
				envelope,
			),
			cutoffs=CutoffPair(config.eps, config.smoothstep_order, config.spatial_cutoff),
			int_dim=grid.int_dim,
			tuple_extents=grid.tuple_extents,
		)


@type_checker
def build_field(config: FieldInit, grid: GridSpec, path_base: Path) -> Field:
	"""Initial field of one catalog entry.

	Parameters
	----------
	config : FieldInit
		Catalog entry.
	grid : GridSpec
		The mesh.
	path_base : Path
		Directory relative ``file`` paths are resolved against.

	Returns
	-------
	Field
		The field.

	Raises
	------
	ConfigError
		On negative values or a file of the wrong shape.
	FileNotFoundError
		If a ``file`` entry points nowhere.
	"""
	with _as_config_error(f"initial {config.kind}"):
		if isinstance(config, ConstantInit):
			return constant_field(grid, config.value)
		if isinstance(config, GaussianInit):
			return gaussian_field(
				grid, tuple(config.center), config.width, config.amplitude, config.offset
			)
		if isinstance(config, RandomInit):
			return smooth_random_field(
				grid, config.seed, config.modes, config.amplitude, config.offset
			)
		path_file = Path(config.path)
		if not path_file.is_absolute():
			path_file = path_base / path_file
		try:
			_, array_values = read_csnap(path_file)
		except RecordFormatError as err:
			raise ConfigError(f"initial file: {err}") from err
		if (array_values < 0.0).any():
			raise DomainError(f"{path_file} holds negative values")
		return Field(grid, array_values)


@type_checker
def build_initial_state(config: InitialConfig, grid: GridSpec, path_base: Path) -> State:
	"""Initial state at ``t = 0``.

	Parameters
	----------
	config : InitialConfig
		Both catalog entries.
	grid : GridSpec
		The mesh.
	path_base : Path
		Directory relative file paths are resolved against.

	Returns
	-------
	State
		The state.
	"""
	field_u = build_field(config.u, grid, path_base)
	field_v = build_field(config.v, grid, path_base)
	with _as_config_error("initial"):
		return State(0.0, field_u, field_v)


@type_checker
def build_step_control(config: SteppingConfig, settings: Settings) -> StepControl:
	"""Step policy, with omitted numbers taken from ``settings``.

	Parameters
	----------
	config : SteppingConfig
		The section.
	settings : Settings
		Defaults.

	Returns
	-------
	StepControl
		The policy.
	"""
	with _as_config_error("stepping"):
		return StepControl(
			str_scheme=config.scheme,
			str_policy=config.policy,
			float_sigma=config.sigma if config.sigma is not None else settings.float_sigma,
			float_dt_max=config.dt_max if config.dt_max is not None else settings.float_dt_max,
			float_dt=config.dt,
		)


@type_checker
def apply_tolerance_overrides(settings: Settings, config: ToleranceConfig) -> Settings:
	"""Settings with the per-run tolerance overrides applied.

	Parameters
	----------
	settings : Settings
		Process settings (already scaled by ``--tol-scale``).
	config : ToleranceConfig
		Overrides; ``None`` entries keep the setting.

	Returns
	-------
	Settings
		The resolved settings.
	"""
	dict_override = {
		"float_c_tol": config.c_tol,
		"float_certificate_atol": config.certificate_atol,
		"float_mass_rtol": config.mass_rtol,
		"float_vmax_atol": config.vmax_atol,
	}
	return replace(
		settings, **{str_key: x for str_key, x in dict_override.items() if x is not None}
	)


@type_checker
def build_tolerances(settings: Settings) -> Tolerances:
	"""Certificate slack of resolved settings."""
	return Tolerances(
		settings.float_certificate_atol, settings.float_mass_rtol, settings.float_vmax_atol
	)


@dataclass(frozen=True)
class AssembledRun(metaclass=TypeChecker):
	"""Everything ``simulate`` needs, built from one run config.

	Parameters
	----------
	spec : ModelSpec
		The model.
	ctrl : StepControl
		Step policy.
	initial : State
		Initial state.
	float_tmax : float
		Final time.
	int_snapshot_stride : int
		Steps between stored snapshots.
	settings : Settings
		Settings with the run's tolerance overrides applied.
	hypotheses : HypothesisReport
		Sampled hypothesis report of the model; holds heuristic findings only.
	"""

	spec: ModelSpec
	ctrl: StepControl
	initial: State
	float_tmax: float
	int_snapshot_stride: int
	settings: Settings
	hypotheses: HypothesisReport


@type_checker
def build_run(config: RunConfig, path_base: Path, settings: Settings) -> AssembledRun:
	"""Assemble a run config.

	Parameters
	----------
	config : RunConfig
		Validated config.
	path_base : Path
		Directory of the config file.
	settings : Settings
		Process settings.

	Returns
	-------
	AssembledRun
		The assembled run.
	"""
	grid = build_grid(config.grid)
	spec, hypotheses = build_checked_model(config.model, grid)
	return AssembledRun(
		spec=spec,
		ctrl=build_step_control(config.stepping, settings),
		initial=build_initial_state(config.initial, grid, path_base),
		float_tmax=config.tmax,
		int_snapshot_stride=config.snapshot_stride,
		settings=apply_tolerance_overrides(settings, config.tolerances),
		hypotheses=hypotheses,
	)


@type_checker
def build_family_plan(
	config: EpsFamilyPlanConfig,
	path_base: Path,
	settings: Settings,
	int_jobs: int | None = None,
) -> tuple[EpsFamilyPlan, Settings]:
	"""Assemble a family plan; ``int_jobs`` overrides the plan's own worker count.

	Parameters
	----------
	config : EpsFamilyPlanConfig
		Validated plan.
	path_base : Path
		Directory of the plan file.
	settings : Settings
		Process settings.
	int_jobs : int | None
		Worker count from the command line.

	Returns
	-------
	tuple of (EpsFamilyPlan, Settings)
		The plan and the resolved settings of its base run.
	"""
	assembled = build_run(config.base, path_base, settings)
	with _as_config_error("family"):
		plan = EpsFamilyPlan(
			spec=assembled.spec,
			ctrl=assembled.ctrl,
			initial=assembled.initial,
			float_tmax=assembled.float_tmax,
			tuple_eps=tuple(config.eps),
			int_snapshot_stride=assembled.int_snapshot_stride,
			int_jobs=int_jobs if int_jobs is not None else config.jobs,
		)
	return plan, assembled.settings


@type_checker
def load_record(path_dir: Path) -> tuple[RunRecord, RunConfig]:
	"""Rebuild a trajectory from a record directory.

	Parameters
	----------
	path_dir : Path
		Directory written by ``simulate``.

	Returns
	-------
	tuple of (RunRecord, RunConfig)
		The trajectory and the config copy stored in its manifest.

	Raises
	------
	FileNotFoundError
		If the manifest or a referenced file is missing.
	RecordFormatError
		If the manifest, its config copy or a snapshot is malformed or does not fit the grid.
	"""
	dict_manifest = read_manifest(path_dir)
	try:
		config = RunConfig.model_validate(dict_manifest.get("config"))
	except ValidationError as err:
		raise RecordFormatError(format_validation_error(err, str(path_dir))) from err
	try:
		grid = build_grid(config.grid)
		spec = build_model(config.model, grid)
		ctrl = build_step_control(config.stepping, get_settings())
	except ConfigError as err:
		raise RecordFormatError(f"{path_dir}: stored config does not assemble ({err})") from err

	list_states: list[State] = []
	for dict_snapshot in dict_manifest["files"]["snapshots"]:
		float_t, array_u = read_csnap(path_dir / dict_snapshot["u"])
		float_tv, array_v = read_csnap(path_dir / dict_snapshot["v"])
		if float_t != float_tv:
			raise RecordFormatError(
				f"{path_dir}: snapshot times differ ({float_t} vs {float_tv})"
			)
		try:
			list_states.append(State(float_t, Field(grid, array_u), Field(grid, array_v)))
		except (DomainError, GridMismatchError) as err:
			raise RecordFormatError(f"{path_dir / dict_snapshot['u']}: {err}") from err
	if any(
		b.float_t <= a.float_t for a, b in zip(list_states[:-1], list_states[1:], strict=True)
	):
		raise RecordFormatError(f"{path_dir}: snapshot times are not increasing")
	dict_steps = dict_manifest.get("steps", {})
	float_dt_min = dict_steps.get("dt_min")
	return (
		RunRecord(
			spec,
			ctrl,
			tuple(list_states),
			int(dict_steps.get("count", len(list_states) - 1)),
			float("inf") if float_dt_min is None else float(float_dt_min),
			float(dict_steps.get("dt_max", 0.0)),
		),
		config,
	)


__all__ = [
	"AssembledRun",
	"apply_tolerance_overrides",
	"build_checked_model",
	"build_family_plan",
	"build_field",
	"build_grid",
	"build_initial_state",
	"build_model",
	"build_refinement_grids",
	"build_run",
	"build_step_control",
	"build_tolerances",
	"load_record",
]
