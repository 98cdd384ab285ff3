"""Run-config and family-plan file schemas.

Both files are JSON. Unknown keys are rejected at every level, and validation failures
surface as :class:`~chemotensor.errors.ConfigError` naming the offending field path
(``model.tensor.chi: Input should be a valid number``).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal

from pydantic import (
	BaseModel,
	ConfigDict,
	Field,
	NonNegativeFloat,
	PositiveFloat,
	PositiveInt,
	ValidationError,
	model_validator,
)

from chemotensor._internal.utils.typing import type_checker
from chemotensor.errors import ConfigError


SCHEMA_VERSION = 1
PATH_JSON_SCHEMA = Path(__file__).parent / "run_config.schema.json"


class _StrictModel(BaseModel):
	model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_StrictModel):
	"""Rectangle and cell counts."""

	dimension: Literal[1, 2]
	extents: list[PositiveFloat]
	cells: list[Annotated[int, Field(ge=3)]]

	@model_validator(mode="after")
	def _lengths_match_dimension(self) -> GridConfig:
		if len(self.extents) != self.dimension or len(self.cells) != self.dimension:
			raise ValueError(
				f"extents and cells need {self.dimension} entries, "
				f"got {len(self.extents)} and {len(self.cells)}"
			)
		return self


class KineticsConfig(_StrictModel):
	"""Signal consumption ``f``."""

	tag: Literal["zero", "linear", "monod", "expression"] = "linear"
	kappa: PositiveFloat = 1.0
	expression: str | None = None


class EnvelopeConfig(_StrictModel):
	"""Growth envelope ``S₀``."""

	value: NonNegativeFloat = 0.0
	expression: str | None = None


class TensorConfig(_StrictModel):
	"""Sensitivity tensor."""

	tag: Literal["zero", "scalar", "rotational", "saturating", "expression"] = "scalar"
	chi: float = 1.0
	beta: float = 0.0
	entries: list[str] = Field(default_factory=list)
	envelope: EnvelopeConfig | None = None


class ModelConfig(_StrictModel):
	"""Kinetics, tensor and regularization."""

	kinetics: KineticsConfig = Field(default_factory=KineticsConfig)
	tensor: TensorConfig = Field(default_factory=TensorConfig)
	eps: Annotated[float, Field(gt=0.0, lt=1.0)]
	smoothstep_order: Literal[1, 2, 3] = 2
	spatial_cutoff: bool = True


class ConstantInit(_StrictModel):
	"""Constant initial field."""

	kind: Literal["constant"]
	value: NonNegativeFloat


class GaussianInit(_StrictModel):
	"""Gaussian bump over a background."""

	kind: Literal["gaussian"]
	center: list[float]
	width: PositiveFloat
	amplitude: NonNegativeFloat
	offset: NonNegativeFloat = 0.0


class RandomInit(_StrictModel):
	"""Seeded smooth-random field; the seed is mandatory."""

	kind: Literal["random"]
	seed: int
	modes: PositiveInt = 4
	amplitude: NonNegativeFloat = 1.0
	offset: NonNegativeFloat = 0.0


class FileInit(_StrictModel):
	"""Field read from a ``.csnap`` file, relative to the config file."""

	kind: Literal["file"]
	path: str


FieldInit = Annotated[
	ConstantInit | GaussianInit | RandomInit | FileInit, Field(discriminator="kind")
]


class InitialConfig(_StrictModel):
	"""Initial density and concentration."""

	u: FieldInit
	v: FieldInit


class SteppingConfig(_StrictModel):
	"""Scheme and step policy; omitted numbers fall back to ``defaults.yaml``."""

	scheme: Literal["explicit", "imex"] = "explicit"
	policy: Literal["adaptive", "fixed"] = "adaptive"
	sigma: Annotated[float, Field(gt=0.0, le=1.0)] | None = None
	dt_max: PositiveFloat | None = None
	dt: PositiveFloat | None = None

	@model_validator(mode="after")
	def _fixed_needs_dt(self) -> SteppingConfig:
		if self.policy == "fixed" and self.dt is None:
			raise ValueError("the fixed policy needs dt")
		return self


class ToleranceConfig(_StrictModel):
	"""Per-run tolerance overrides."""

	c_tol: PositiveFloat | None = None
	certificate_atol: PositiveFloat | None = None
	mass_rtol: PositiveFloat | None = None
	vmax_atol: PositiveFloat | None = None


class RunConfig(_StrictModel):
	"""One simulation."""

	schema_version: Literal[1]
	grid: GridConfig
	model: ModelConfig
	initial: InitialConfig
	stepping: SteppingConfig = Field(default_factory=SteppingConfig)
	tmax: NonNegativeFloat
	snapshot_stride: PositiveInt = 1
	output_dir: str | None = None
	tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)

	@model_validator(mode="after")
	def _centers_match_dimension(self) -> RunConfig:
		for str_name, init in (("u", self.initial.u), ("v", self.initial.v)):
			if isinstance(init, GaussianInit) and len(init.center) != self.grid.dimension:
				raise ValueError(
					f"initial.{str_name}.center needs {self.grid.dimension} entries, "
					f"got {len(init.center)}"
				)
		return self


class EpsFamilyPlanConfig(_StrictModel):
	"""A base run repeated over a strictly decreasing ``ε`` sequence."""

	schema_version: Literal[1]
	base: RunConfig
	eps: list[Annotated[float, Field(gt=0.0, lt=1.0)]] = Field(
		default_factory=lambda: [0.2, 0.1, 0.05, 0.025]
	)
	jobs: PositiveInt | None = None

	@model_validator(mode="after")
	def _eps_strictly_decreasing(self) -> EpsFamilyPlanConfig:
		if not self.eps:
			raise ValueError("eps must not be empty")
		if any(a <= b for a, b in zip(self.eps[:-1], self.eps[1:], strict=True)):
			raise ValueError(f"eps must be strictly decreasing, got {self.eps}")
		return self


@type_checker
def format_validation_error(err: ValidationError, str_source: str) -> str:
	"""One line per problem, each prefixed with its dotted field path.

	Parameters
	----------
	err : ValidationError
		The pydantic error.
	str_source : str
		File the data came from.

	Returns
	-------
	str
		The message.
	"""
	list_lines = [f"{str_source}: {err.error_count()} problem(s)"]
	for dict_error in err.errors():
		str_path = ".".join(str(part) for part in dict_error["loc"]) or "<root>"
		list_lines.append(f"  {str_path}: {dict_error['msg']}")
	return "\n".join(list_lines)


@type_checker
def _load_json(path_config: Path) -> object:
	"""Parse a JSON file; a missing file propagates as ``FileNotFoundError``."""
	str_text = path_config.read_text(encoding="utf-8")
	try:
		return json.loads(str_text)
	except json.JSONDecodeError as err:
		raise ConfigError(f"{path_config}: not valid JSON ({err})") from err


@type_checker
def load_run_config(path_config: Path) -> RunConfig:
	"""Read and validate a run config.

	Parameters
	----------
	path_config : Path
		JSON file.

	Returns
	-------
	RunConfig
		The validated config.

	Raises
	------
	ConfigError
		On invalid JSON or a schema violation.
	FileNotFoundError
		If the file does not exist.
	"""
	try:
		return RunConfig.model_validate(_load_json(path_config))
	except ValidationError as err:
		raise ConfigError(format_validation_error(err, str(path_config))) from err


@type_checker
def load_family_plan(path_plan: Path) -> EpsFamilyPlanConfig:
	"""Read and validate a family plan.

	Parameters
	----------
	path_plan : Path
		JSON file.

	Returns
	-------
	EpsFamilyPlanConfig
		The validated plan.

	Raises
	------
	ConfigError
		On invalid JSON or a schema violation.
	FileNotFoundError
		If the file does not exist.
	"""
	try:
		return EpsFamilyPlanConfig.model_validate(_load_json(path_plan))
	except ValidationError as err:
		raise ConfigError(format_validation_error(err, str(path_plan))) from err


@type_checker
def override_seed(config: RunConfig, int_seed: int) -> RunConfig:
	"""Replace the seed of every random initial field.

	Parameters
	----------
	config : RunConfig
		The config.
	int_seed : int
		New seed.

	Returns
	-------
	RunConfig
		A copy with the seeds replaced (unchanged when no field is random).
	"""
	dict_initial: dict[str, FieldInit] = {}
	for str_name in ("u", "v"):
		init = getattr(config.initial, str_name)
		dict_initial[str_name] = (
			init.model_copy(update={"seed": int_seed}) if isinstance(init, RandomInit) else init
		)
	return config.model_copy(update={"initial": InitialConfig(**dict_initial)})


__all__ = [
	"PATH_JSON_SCHEMA",
	"SCHEMA_VERSION",
	"ConstantInit",
	"EnvelopeConfig",
	"EpsFamilyPlanConfig",
	"FieldInit",
	"FileInit",
	"GaussianInit",
	"GridConfig",
	"InitialConfig",
	"KineticsConfig",
	"ModelConfig",
	"RandomInit",
	"RunConfig",
	"SteppingConfig",
	"TensorConfig",
	"ToleranceConfig",
	"format_validation_error",
	"load_family_plan",
	"load_run_config",
	"override_seed",
]
