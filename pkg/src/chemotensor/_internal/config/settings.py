"""Runtime settings: frozen numerical defaults plus per-checkout environment overrides.

``defaults.yaml`` ships next to this module and holds every tolerance and stepping default.
A checkout-local ``.env`` (python-dotenv) may set ``CHEMO_OUT_DIR`` and ``CHEMO_LOG_LEVEL``;
real environment variables win over ``.env`` entries.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
import os
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
import yaml

from chemotensor._internal.utils.typing import TypeChecker, type_checker
from chemotensor.errors import ConfigError


_PATH_DEFAULTS = Path(__file__).parent / "defaults.yaml"

_SET_LOG_LEVELS = frozenset({"debug", "info", "warning", "error", "critical"})


@dataclass(frozen=True)
class Settings(metaclass=TypeChecker):
	"""Resolved defaults for one process.

	Parameters
	----------
	float_c_tol : float
		Consistency-budget constant of ``tol(h, dt) = c_tol * (h^2 + dt)``.
	float_certificate_atol : float
		Absolute slack on each a priori bound.
	float_mass_rtol : float
		Relative drift allowed on the mass identity.
	float_vmax_atol : float
		Absolute slack on a step-to-step increase of ``max v``.
	float_margin_warning : float
		Margin below which a passing certificate line is logged as a warning.
	float_sigma : float
		Default CFL safety factor.
	float_dt_max : float
		Default largest time step.
	int_catalog_size : int
		Default number of test functions in the verifier catalog.
	float_cauchy_hard_increase : float
		Relative growth of a Cauchy column that fails a family study.
	path_out_dir : Path
		Output directory used when ``--out`` is absent.
	str_log_level : str
		Minimum level of the run log.
	"""

	float_c_tol: float
	float_certificate_atol: float
	float_mass_rtol: float
	float_vmax_atol: float
	float_margin_warning: float
	float_sigma: float
	float_dt_max: float
	int_catalog_size: int
	float_cauchy_hard_increase: float
	path_out_dir: Path
	str_log_level: str

	def scaled(self, float_tol_scale: float) -> Settings:
		"""Return a copy with every tolerance multiplied by ``float_tol_scale``.

		Parameters
		----------
		float_tol_scale : float
			Positive multiplier.

		Returns
		-------
		Settings
			The scaled settings.

		Raises
		------
		ConfigError
			If the multiplier is not positive.
		"""
		if not float_tol_scale > 0.0:
			raise ConfigError(f"tol-scale must be positive, got {float_tol_scale}")
		return replace(
			self,
			float_c_tol=self.float_c_tol * float_tol_scale,
			float_certificate_atol=self.float_certificate_atol * float_tol_scale,
			float_mass_rtol=self.float_mass_rtol * float_tol_scale,
			float_vmax_atol=self.float_vmax_atol * float_tol_scale,
		)


@type_checker
def _section(dict_yaml: dict[str, Any], str_key: str) -> dict[str, Any]:
	"""Return one mapping section of the defaults file.

	Parameters
	----------
	dict_yaml : dict[str, Any]
		Parsed defaults.
	str_key : str
		Section name.

	Returns
	-------
	dict[str, Any]
		The section.

	Raises
	------
	ConfigError
		If the section is missing or not a mapping.
	"""
	dict_section = dict_yaml.get(str_key)
	if not isinstance(dict_section, dict):
		raise ConfigError(f"defaults.yaml: section '{str_key}' missing or not a mapping")
	return dict_section


@type_checker
def load_settings(path_defaults: Path = _PATH_DEFAULTS) -> Settings:
	"""Read the defaults file and apply environment overrides.

	Parameters
	----------
	path_defaults : Path
		YAML file with the frozen defaults.

	Returns
	-------
	Settings
		The resolved settings.

	Raises
	------
	ConfigError
		If the file is malformed or ``CHEMO_LOG_LEVEL`` is not a level name.
	"""
	load_dotenv(override=False)
	try:
		dict_yaml = yaml.safe_load(path_defaults.read_text(encoding="utf-8"))
	except yaml.YAMLError as err:
		raise ConfigError(f"defaults.yaml is not valid YAML: {err}") from err
	if not isinstance(dict_yaml, dict):
		raise ConfigError("defaults.yaml must hold a mapping")
	dict_tol = _section(dict_yaml, "tolerances")
	dict_step = _section(dict_yaml, "stepping")
	dict_env = _section(dict_yaml, "environment")

	str_log_level = os.getenv("CHEMO_LOG_LEVEL", str(dict_env["log_level"])).strip().lower()
	if str_log_level not in _SET_LOG_LEVELS:
		raise ConfigError(
			f"CHEMO_LOG_LEVEL={str_log_level!r}; expected one of {sorted(_SET_LOG_LEVELS)}"
		)
	try:
		return Settings(
			float_c_tol=float(dict_tol["c_tol"]),
			float_certificate_atol=float(dict_tol["certificate_atol"]),
			float_mass_rtol=float(dict_tol["mass_rtol"]),
			float_vmax_atol=float(dict_tol["vmax_atol"]),
			float_margin_warning=float(dict_tol["margin_warning"]),
			float_sigma=float(dict_step["sigma"]),
			float_dt_max=float(dict_step["dt_max"]),
			int_catalog_size=int(_section(dict_yaml, "catalog")["size"]),
			float_cauchy_hard_increase=float(
				_section(dict_yaml, "experiments")["cauchy_hard_increase"]
			),
			path_out_dir=Path(os.getenv("CHEMO_OUT_DIR", str(dict_env["out_dir"]))),
			str_log_level=str_log_level,
		)
	except KeyError as err:
		raise ConfigError(f"defaults.yaml: missing key {err}") from err


@lru_cache(maxsize=1)
@type_checker
def get_settings() -> Settings:
	"""Return the process-wide settings, loaded once.

	Returns
	-------
	Settings
		The cached settings.
	"""
	return load_settings()


__all__ = ["Settings", "get_settings", "load_settings"]
