"""On-disk formats of run records.

A record directory written by ``simulate`` holds::

	manifest.json        format version, config copy, file list, wall clock, step stats
	ledger.csv           estimate ledger, documented columns first
	certificate.json     certified bounds
	snapshots/u_00000.csnap, snapshots/v_00000.csnap, ...

``.csnap`` v1 is ASCII: the header ``CSNAP 1 <nx> <ny> <t>`` followed by ``nx * ny`` values
in row-major order, one per line, with 17 significant digits, so that a write followed by a
read reproduces every value bit for bit.
"""

from __future__ import annotations

from collections.abc import Sequence
import json
import math
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from chemotensor._internal.config.contracts import (
	CONVERGENCE_CONTRACT,
	LEDGER_CONTRACT,
	ContractError,
	read_table,
)
from chemotensor._internal.utils.typing import type_checker
from chemotensor.errors import RecordFormatError
from chemotensor.functionals import Certificate, EstimateLedger
from chemotensor.solver import RunRecord


FORMAT_VERSION = 1
CSNAP_MAGIC = "CSNAP"
CSNAP_VERSION = 1

MANIFEST_NAME = "manifest.json"
LEDGER_NAME = "ledger.csv"
CERTIFICATE_NAME = "certificate.json"
SNAPSHOT_DIR = "snapshots"
DUMP_DIR = "dump"
WEAK_RESIDUALS_NAME = "weak_residuals.json"
ENTROPY_NAME = "entropy.json"
MASS_NAME = "mass.json"
CONVERGENCE_NAME = "convergence.csv"
FAMILY_NAME = "family.json"
REFINEMENT_NAME = "refinement.json"


@type_checker
def _format_float(float_value: float) -> str:
	return f"{float_value:.17g}"


@type_checker
def write_csnap(path_file: Path, array_values: np.ndarray, float_t: float) -> Path:
	"""Write one field as a ``.csnap`` file.

	Parameters
	----------
	path_file : Path
		Destination; parent directories are created.
	array_values : np.ndarray
		Values of shape ``(ny, nx)``; a 1D array is read as ``ny = 1``. Non-finite values are
		written as ``nan``/``inf`` (state dumps).
	float_t : float
		Time stamp.

	Returns
	-------
	Path
		``path_file``.

	Raises
	------
	RecordFormatError
		If the array is not one- or two-dimensional.
	"""
	array_values = np.asarray(array_values, dtype=np.float64)
	if array_values.ndim == 1:
		array_values = array_values.reshape(1, -1)
	if array_values.ndim != 2:
		raise RecordFormatError(f"a snapshot holds a 2D array, got shape {array_values.shape}")
	int_ny, int_nx = array_values.shape
	list_lines = [f"{CSNAP_MAGIC} {CSNAP_VERSION} {int_nx} {int_ny} {_format_float(float_t)}"]
	list_lines.extend(_format_float(float(x)) for x in array_values.ravel(order="C"))
	path_file.parent.mkdir(parents=True, exist_ok=True)
	path_file.write_text("\n".join(list_lines) + "\n", encoding="ascii")
	return path_file


@type_checker
def read_csnap(path_file: Path) -> tuple[float, np.ndarray]:
	"""Read a ``.csnap`` file.

	Parameters
	----------
	path_file : Path
		The snapshot.

	Returns
	-------
	tuple of (float, np.ndarray)
		Time stamp and values of shape ``(ny, nx)``.

	Raises
	------
	FileNotFoundError
		If the file does not exist.
	RecordFormatError
		On a bad header, an unsupported version, a wrong value count or an unparsable value.
	"""
	list_lines = path_file.read_text(encoding="ascii").split()
	if not list_lines:
		raise RecordFormatError(f"{path_file}: empty snapshot")
	# the header occupies the first five whitespace-separated tokens
	list_header = list_lines[:5]
	if len(list_header) != 5 or list_header[0] != CSNAP_MAGIC:
		raise RecordFormatError(f"{path_file}: missing '{CSNAP_MAGIC}' header")
	try:
		int_version = int(list_header[1])
		int_nx = int(list_header[2])
		int_ny = int(list_header[3])
		float_t = float(list_header[4])
		array_values = np.array([float(str_x) for str_x in list_lines[5:]], dtype=np.float64)
	except ValueError as err:
		raise RecordFormatError(f"{path_file}: unparsable content ({err})") from err
	if int_version != CSNAP_VERSION:
		raise RecordFormatError(
			f"{path_file}: snapshot version {int_version}, reader supports {CSNAP_VERSION}"
		)
	if int_nx < 1 or int_ny < 1 or array_values.size != int_nx * int_ny:
		raise RecordFormatError(
			f"{path_file}: header announces {int_nx}x{int_ny} values, found {array_values.size}"
		)
	return float_t, array_values.reshape(int_ny, int_nx)


@type_checker
def write_json(path_file: Path, dict_payload: dict[str, Any]) -> Path:
	"""Write a JSON document with sorted keys and a trailing newline.

	Parameters
	----------
	path_file : Path
		Destination; parent directories are created.
	dict_payload : dict[str, Any]
		Content.

	Returns
	-------
	Path
		``path_file``.
	"""
	path_file.parent.mkdir(parents=True, exist_ok=True)
	path_file.write_text(
		json.dumps(dict_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
	)
	return path_file


@type_checker
def read_json(path_file: Path) -> dict[str, Any]:
	"""Read a JSON object.

	Parameters
	----------
	path_file : Path
		The file.

	Returns
	-------
	dict[str, Any]
		Content.

	Raises
	------
	FileNotFoundError
		If the file does not exist.
	RecordFormatError
		If the file is not a JSON object.
	"""
	try:
		payload = json.loads(path_file.read_text(encoding="utf-8"))
	except json.JSONDecodeError as err:
		raise RecordFormatError(f"{path_file}: not valid JSON ({err})") from err
	if not isinstance(payload, dict):
		raise RecordFormatError(f"{path_file}: expected a JSON object")
	return payload


@type_checker
def write_ledger(path_file: Path, ledger: EstimateLedger) -> Path:
	"""Write the ledger rows as CSV with round-trip precision.

	Parameters
	----------
	path_file : Path
		Destination.
	ledger : EstimateLedger
		Filled ledger.

	Returns
	-------
	Path
		``path_file``.
	"""
	path_file.parent.mkdir(parents=True, exist_ok=True)
	ledger.to_frame().to_csv(path_file, index=False, float_format="%.17g", lineterminator="\n")
	return path_file


@type_checker
def read_ledger(path_file: Path) -> pd.DataFrame:
	"""Read a ledger CSV through its contract.

	Parameters
	----------
	path_file : Path
		The CSV.

	Returns
	-------
	pd.DataFrame
		Ledger rows.

	Raises
	------
	FileNotFoundError
		If the file does not exist.
	RecordFormatError
		If the documented columns are missing or out of order.
	"""
	try:
		return read_table(path_file, LEDGER_CONTRACT)
	except ContractError as err:
		raise RecordFormatError(f"{path_file}: {err}") from err


@type_checker
def write_convergence(path_file: Path, frame: pd.DataFrame) -> Path:
	"""Write a convergence table as CSV.

	Parameters
	----------
	path_file : Path
		Destination.
	frame : pd.DataFrame
		Table rows.

	Returns
	-------
	Path
		``path_file``.
	"""
	path_file.parent.mkdir(parents=True, exist_ok=True)
	frame.to_csv(path_file, index=False, float_format="%.17g", lineterminator="\n")
	return path_file


@type_checker
def read_convergence(path_file: Path) -> pd.DataFrame:
	"""Read a convergence table through its contract.

	Parameters
	----------
	path_file : Path
		The CSV.

	Returns
	-------
	pd.DataFrame
		Table rows.

	Raises
	------
	FileNotFoundError
		If the file does not exist.
	RecordFormatError
		If the columns do not match the contract.
	"""
	try:
		return read_table(path_file, CONVERGENCE_CONTRACT)
	except ContractError as err:
		raise RecordFormatError(f"{path_file}: {err}") from err


@type_checker
def snapshot_names(int_index: int) -> tuple[str, str]:
	"""Relative paths of the ``u`` and ``v`` files of snapshot ``int_index``.

	Parameters
	----------
	int_index : int
		Snapshot position.

	Returns
	-------
	tuple of (str, str)
		``snapshots/u_00000.csnap``-style names.
	"""
	return (
		f"{SNAPSHOT_DIR}/u_{int_index:05d}.csnap",
		f"{SNAPSHOT_DIR}/v_{int_index:05d}.csnap",
	)


@type_checker
def write_record(
	path_dir: Path,
	dict_config: dict[str, Any],
	record: RunRecord,
	ledger: EstimateLedger,
	certificate: Certificate,
	float_wall_seconds: float,
	tuple_model_notes: tuple[str, ...] = (),
) -> Path:
	"""Write a complete record directory; the manifest is written last.

	Parameters
	----------
	path_dir : Path
		Output directory.
	dict_config : dict[str, Any]
		JSON-ready copy of the run config.
	record : RunRecord
		Trajectory.
	ledger : EstimateLedger
		Filled ledger.
	certificate : Certificate
		Certificate of the ledger.
	float_wall_seconds : float
		Wall-clock duration of the run.
	tuple_model_notes : tuple of str
		Heuristic hypothesis findings of the model, kept in the manifest.

	Returns
	-------
	Path
		The manifest path.
	"""
	path_dir.mkdir(parents=True, exist_ok=True)
	write_ledger(path_dir / LEDGER_NAME, ledger)
	write_json(path_dir / CERTIFICATE_NAME, certificate.to_dict())
	list_snapshots: list[dict[str, Any]] = []
	for int_index, state in enumerate(record.tuple_snapshots):
		str_u, str_v = snapshot_names(int_index)
		write_csnap(path_dir / str_u, state.field_u.values, state.float_t)
		write_csnap(path_dir / str_v, state.field_v.values, state.float_t)
		list_snapshots.append({"t": state.float_t, "u": str_u, "v": str_v})
	dict_manifest = {
		"format_version": FORMAT_VERSION,
		"config": dict_config,
		"files": {
			"ledger": LEDGER_NAME,
			"certificate": CERTIFICATE_NAME,
			"snapshots": list_snapshots,
		},
		"model_notes": list(tuple_model_notes),
		"wall_clock_seconds": float_wall_seconds,
		"steps": {
			"count": record.int_steps,
			"dt_min": record.float_dt_min if math.isfinite(record.float_dt_min) else None,
			"dt_max": record.float_dt_max,
		},
	}
	return write_json(path_dir / MANIFEST_NAME, dict_manifest)


@type_checker
def read_manifest(path_dir: Path) -> dict[str, Any]:
	"""Read a manifest and check that every file it references exists.

	Parameters
	----------
	path_dir : Path
		Record directory.

	Returns
	-------
	dict[str, Any]
		The manifest.

	Raises
	------
	FileNotFoundError
		If the manifest or a referenced file is missing.
	RecordFormatError
		On an unsupported format version or a malformed file list.
	"""
	dict_manifest = read_json(path_dir / MANIFEST_NAME)
	if dict_manifest.get("format_version") != FORMAT_VERSION:
		raise RecordFormatError(
			f"{path_dir}: record format {dict_manifest.get('format_version')!r}, "
			f"reader supports {FORMAT_VERSION}"
		)
	try:
		dict_files = dict_manifest["files"]
		list_paths = [dict_files["ledger"], dict_files["certificate"]]
		for dict_snapshot in dict_files["snapshots"]:
			list_paths.extend((dict_snapshot["u"], dict_snapshot["v"]))
	except (KeyError, TypeError) as err:
		raise RecordFormatError(f"{path_dir}: malformed manifest file list ({err})") from err
	if not dict_files["snapshots"]:
		raise RecordFormatError(f"{path_dir}: the manifest lists no snapshots")
	for str_rel in list_paths:
		if not (path_dir / str_rel).is_file():
			raise FileNotFoundError(f"{path_dir / str_rel} is listed in the manifest but missing")
	return dict_manifest


@type_checker
def write_state_dump(
	path_dir: Path, float_t: float, array_u: np.ndarray, array_v: np.ndarray
) -> tuple[Path, Path]:
	"""Write an offending state as ``dump/u.csnap`` and ``dump/v.csnap``.

	Parameters
	----------
	path_dir : Path
		Output directory.
	float_t : float
		Time of the state.
	array_u, array_v : np.ndarray
		Density and concentration values, possibly non-finite.

	Returns
	-------
	tuple of (Path, Path)
		The two files.
	"""
	return (
		write_csnap(path_dir / DUMP_DIR / "u.csnap", array_u, float_t),
		write_csnap(path_dir / DUMP_DIR / "v.csnap", array_v, float_t),
	)


@type_checker
def _render_certificate(dict_certificate: dict[str, Any]) -> list[str]:
	list_lines = [
		f"certificate at t = {dict_certificate['t']:.6g}: "
		f"{'PASS' if dict_certificate['passed'] else 'FAIL'}"
	]
	for dict_line in dict_certificate["lines"]:
		str_status = "ok" if dict_line["passed"] else ("soft" if dict_line["soft"] else "FAIL")
		list_lines.append(
			f"  {dict_line['name']:<20} value={dict_line['value']:.6e} "
			f"bound={dict_line['bound']:.6e} margin={dict_line['margin']:+.3e} [{str_status}]"
		)
	return list_lines


@type_checker
def _render_residuals(dict_residuals: dict[str, Any]) -> list[str]:
	list_lines = [
		f"weak residuals (transform {dict_residuals['transform']}, "
		f"tol {dict_residuals['tolerance']:.3e}): "
		f"{'PASS' if dict_residuals['passed'] else 'FAIL'}"
	]
	list_lines.extend(
		f"  {dict_line['phi']:<24} v={dict_line['v_residual']:+.3e} "
		f"u={dict_line['u_residual']:+.3e}"
		for dict_line in dict_residuals["residuals"]
	)
	return list_lines


@type_checker
def _render_ledger(path_dir: Path) -> list[str]:
	df_ledger = read_ledger(path_dir / LEDGER_NAME)
	if df_ledger.empty:
		return ["ledger: no rows"]
	return [
		f"ledger: {len(df_ledger)} rows up to t = {df_ledger['t'].iloc[-1]:.6g}, "
		f"mass {df_ledger['mass'].iloc[0]:.6e} -> {df_ledger['mass'].iloc[-1]:.6e}"
	]


@type_checker
def _render_members(path_dir: Path, tuple_eps: Sequence[float]) -> list[str]:
	list_lines: list[str] = []
	for path_member in list_member_dirs(path_dir, tuple_eps):
		path_certificate = path_member / CERTIFICATE_NAME
		if not path_certificate.is_file():
			list_lines.append(f"  {path_member.name}: no certificate")
			continue
		str_verdict = "PASS" if read_json(path_certificate)["passed"] else "FAIL"
		list_lines.append(f"  {path_member.name}: certificate {str_verdict}")
	return list_lines


@type_checker
def _render_refinement(dict_refinement: dict[str, Any]) -> list[str]:
	return [
		f"grid refinement (min order {dict_refinement['min_order']:g}): "
		f"{'PASS' if dict_refinement['passed'] else 'FAIL'}",
		"  h        " + " ".join(f"{float_h:.4g}" for float_h in dict_refinement["h"]),
		"  u orders " + " ".join(f"{x:.3g}" for x in dict_refinement["u_orders"]),
		"  v orders " + " ".join(f"{x:.3g}" for x in dict_refinement["v_orders"]),
	]


@type_checker
def render_report(path_dir: Path) -> str:
	"""Render every report file found in a record or family directory as text.

	Parameters
	----------
	path_dir : Path
		Directory written by ``simulate``, ``verify`` or ``family``.

	Returns
	-------
	str
		The report.

	Raises
	------
	FileNotFoundError
		If the directory holds none of the known report files.
	RecordFormatError
		If a report file is malformed.
	"""
	list_lines: list[str] = []
	try:
		if (path_dir / CERTIFICATE_NAME).is_file():
			list_lines.extend(_render_certificate(read_json(path_dir / CERTIFICATE_NAME)))
		if (path_dir / LEDGER_NAME).is_file():
			list_lines.extend(_render_ledger(path_dir))
		if (path_dir / MANIFEST_NAME).is_file():
			list_lines.extend(
				f"model note: {str_note}"
				for str_note in read_json(path_dir / MANIFEST_NAME).get("model_notes", [])
			)
		if (path_dir / MASS_NAME).is_file():
			dict_mass = read_json(path_dir / MASS_NAME)
			list_lines.append(
				f"mass inequality: max excess {dict_mass['max_excess']:.3e} "
				f"({'PASS' if dict_mass['passed'] else 'FAIL'})"
			)
		if (path_dir / WEAK_RESIDUALS_NAME).is_file():
			list_lines.extend(_render_residuals(read_json(path_dir / WEAK_RESIDUALS_NAME)))
		if (path_dir / ENTROPY_NAME).is_file():
			dict_entropy = read_json(path_dir / ENTROPY_NAME)
			list_lines.append(
				f"entropy inequality at T = {dict_entropy['T']:.6g}: "
				f"gap {dict_entropy['gap']:+.3e}, tol {dict_entropy['tolerance']:.3e} "
				f"({'PASS' if dict_entropy['passed'] else 'FAIL'})"
			)
		if (path_dir / FAMILY_NAME).is_file():
			dict_family = read_json(path_dir / FAMILY_NAME)
			list_lines.append(
				f"family eps={dict_family['eps']}: bounds uniform={dict_family['bounds_uniform']}"
				f", certificates passed={dict_family['certificates_passed']}"
			)
			list_lines.extend(_render_members(path_dir, dict_family["eps"]))
		if (path_dir / REFINEMENT_NAME).is_file():
			list_lines.extend(_render_refinement(read_json(path_dir / REFINEMENT_NAME)))
	except (KeyError, TypeError, ValueError) as err:
		raise RecordFormatError(f"{path_dir}: malformed report file ({err})") from err
	if (path_dir / CONVERGENCE_NAME).is_file():
		frame = read_convergence(path_dir / CONVERGENCE_NAME)
		list_lines.append("convergence table:")
		list_lines.append(frame.to_string(index=False, float_format=lambda x: f"{x:.6e}"))
	if not list_lines:
		raise FileNotFoundError(f"{path_dir} holds no report files")
	return "\n".join(list_lines) + "\n"


@type_checker
def member_dir_name(float_eps: float) -> str:
	"""Directory name of a family member, e.g. ``eps_0.05``."""
	return f"eps_{float_eps:g}"


@type_checker
def list_member_dirs(path_dir: Path, tuple_eps: Sequence[float]) -> list[Path]:
	"""Member directories of a family output, in plan order.

	Parameters
	----------
	path_dir : Path
		Family output directory.
	tuple_eps : sequence of float
		Planned ``ε`` values.

	Returns
	-------
	list of Path
		One directory per member.
	"""
	return [path_dir / member_dir_name(float_eps) for float_eps in tuple_eps]


__all__ = [
	"CERTIFICATE_NAME",
	"CONVERGENCE_NAME",
	"CSNAP_MAGIC",
	"CSNAP_VERSION",
	"DUMP_DIR",
	"ENTROPY_NAME",
	"FAMILY_NAME",
	"FORMAT_VERSION",
	"LEDGER_NAME",
	"MANIFEST_NAME",
	"MASS_NAME",
	"REFINEMENT_NAME",
	"SNAPSHOT_DIR",
	"WEAK_RESIDUALS_NAME",
	"list_member_dirs",
	"member_dir_name",
	"read_convergence",
	"read_csnap",
	"read_json",
	"read_ledger",
	"read_manifest",
	"render_report",
	"snapshot_names",
	"write_convergence",
	"write_csnap",
	"write_json",
	"write_ledger",
	"write_record",
	"write_state_dump",
]
