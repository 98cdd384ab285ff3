"""Unit tests for snapshot files, record directories and report rendering."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from chemotensor.errors import RecordFormatError
from chemotensor.functionals import EstimateLedger, certify
from chemotensor.model import ModelSpec
from chemotensor.persistence import (
	CERTIFICATE_NAME,
	FAMILY_NAME,
	MANIFEST_NAME,
	list_member_dirs,
	member_dir_name,
	read_convergence,
	read_csnap,
	read_json,
	read_ledger,
	read_manifest,
	render_report,
	snapshot_names,
	write_convergence,
	write_csnap,
	write_json,
	write_ledger,
	write_record,
	write_state_dump,
)
from chemotensor.solver import State, StepControl, run


# --------------------------
# Fixtures
# --------------------------


@pytest.fixture
def record_dir(tmp_path: Path, bump_state_1d: State, heat_spec_1d: ModelSpec) -> Path:
	"""Record directory of a short diffusion run.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the record.
	bump_state_1d : State
		Initial state.
	heat_spec_1d : ModelSpec
		Pure diffusion model.

	Returns
	-------
	pathlib.Path
		The record directory.
	"""
	ledger = EstimateLedger(heat_spec_1d)
	record = run(
		bump_state_1d,
		heat_spec_1d,
		StepControl(),
		0.002,
		observers=(ledger,),
		int_snapshot_stride=4,
	)
	path_dir = tmp_path / "record"
	write_record(
		path_dir,
		{"seed": 1},
		record,
		ledger,
		certify(ledger),
		0.25,
		("S smooth: scaled second difference above the bound",),
	)
	return path_dir


# --------------------------
# Snapshot files
# --------------------------


def test_csnap_preserves_values_bit_for_bit(tmp_path: Path) -> None:
	"""Header, shape and every value survive a write and a read.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the snapshot.
	"""
	array_values = np.arange(6.0).reshape(2, 3) / 7.0
	path_file = write_csnap(tmp_path / "s" / "u.csnap", array_values, 0.125)
	assert path_file.read_text(encoding="ascii").splitlines()[0] == "CSNAP 1 3 2 0.125"
	float_t, array_read = read_csnap(path_file)
	assert float_t == 0.125
	np.testing.assert_array_equal(array_read, array_values)


def test_csnap_reads_one_dimensional_arrays_as_one_row(tmp_path: Path) -> None:
	"""A flat array is stored with ``ny = 1``; a 3D array is refused.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the snapshot.
	"""
	_, array_read = read_csnap(write_csnap(tmp_path / "v.csnap", np.array([1.0, 2.0]), 0.0))
	assert array_read.shape == (1, 2)
	with pytest.raises(RecordFormatError):
		write_csnap(tmp_path / "w.csnap", np.zeros((2, 2, 2)), 0.0)


@pytest.mark.parametrize(
	"str_content",
	[
		"",
		"XSNAP 1 2 1 0\n1\n2\n",
		"CSNAP 2 2 1 0\n1\n2\n",
		"CSNAP 1 2 1 0\n1\n",
		"CSNAP 1 2 1 0\n1\nabc\n",
		"CSNAP 1 2\n",
	],
)
def test_csnap_rejects_malformed_files(tmp_path: Path, str_content: str) -> None:
	"""Empty files, wrong magic, other versions, wrong counts and junk raise.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the snapshot.
	str_content : str
		File content.
	"""
	path_file = tmp_path / "bad.csnap"
	path_file.write_text(str_content, encoding="ascii")
	with pytest.raises(RecordFormatError):
		read_csnap(path_file)


def test_csnap_missing_file(tmp_path: Path) -> None:
	"""A missing snapshot raises ``FileNotFoundError``.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory.
	"""
	with pytest.raises(FileNotFoundError):
		read_csnap(tmp_path / "absent.csnap")


def test_state_dump_keeps_nonfinite_values(tmp_path: Path) -> None:
	"""NaN and Inf are written and read back as such.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the dump.
	"""
	path_u, path_v = write_state_dump(
		tmp_path, 0.5, np.array([[1.0, np.nan]]), np.array([[np.inf, 0.0]])
	)
	assert path_u.parent.name == "dump"
	_, array_u = read_csnap(path_u)
	_, array_v = read_csnap(path_v)
	assert np.isnan(array_u[0, 1])
	assert np.isinf(array_v[0, 0])


def test_snapshot_names() -> None:
	"""Zero-padded relative names under ``snapshots/``."""
	assert snapshot_names(3) == ("snapshots/u_00003.csnap", "snapshots/v_00003.csnap")


# --------------------------
# JSON and CSV artifacts
# --------------------------


def test_json_object_required(tmp_path: Path) -> None:
	"""Objects are written sorted; arrays and invalid text are refused on read.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory.
	"""
	path_file = write_json(tmp_path / "a.json", {"b": 1, "a": [1.5]})
	assert read_json(path_file) == {"a": [1.5], "b": 1}
	str_text = path_file.read_text(encoding="utf-8")
	assert str_text.index('"a"') < str_text.index('"b"')
	(tmp_path / "list.json").write_text("[1]", encoding="utf-8")
	(tmp_path / "junk.json").write_text("{", encoding="utf-8")
	with pytest.raises(RecordFormatError):
		read_json(tmp_path / "list.json")
	with pytest.raises(RecordFormatError):
		read_json(tmp_path / "junk.json")


def test_ledger_csv_is_exact(
	tmp_path: Path, bump_state_1d: State, heat_spec_1d: ModelSpec
) -> None:
	"""The ledger CSV reproduces every float of the in-memory ledger.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the CSV.
	bump_state_1d : State
		Initial state.
	heat_spec_1d : ModelSpec
		Pure diffusion model.
	"""
	ledger = EstimateLedger(heat_spec_1d)
	run(bump_state_1d, heat_spec_1d, StepControl(), 0.001, observers=(ledger,))
	df_read = read_ledger(write_ledger(tmp_path / "ledger.csv", ledger))
	df_memory = ledger.to_frame()
	assert list(df_read.columns) == list(df_memory.columns)
	np.testing.assert_array_equal(df_read.to_numpy(), df_memory.to_numpy())


def test_ledger_with_swapped_columns_rejected(tmp_path: Path) -> None:
	"""Documented columns out of order raise ``RecordFormatError``.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the CSV.
	"""
	path_file = tmp_path / "ledger.csv"
	path_file.write_text("mass,t,vmax,D_v,C,D_lnu,E\n1,0,1,0,0,0,0\n", encoding="utf-8")
	with pytest.raises(RecordFormatError):
		read_ledger(path_file)


def test_convergence_csv(tmp_path: Path) -> None:
	"""A convergence table is read back through its contract.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the CSV.
	"""
	frame = pd.DataFrame(
		{
			"eps_coarse": [0.2],
			"eps_fine": [0.1],
			"diff_ln_u": [1e-3],
			"diff_v": [2e-3],
			"diff_grad_v": [3e-3],
		}
	)
	df_read = read_convergence(write_convergence(tmp_path / "convergence.csv", frame))
	pd.testing.assert_frame_equal(df_read, frame)
	with pytest.raises(FileNotFoundError):
		read_convergence(tmp_path / "absent.csv")


# --------------------------
# Record directories
# --------------------------


def test_manifest_lists_existing_files(record_dir: Path) -> None:
	"""The manifest carries config, step statistics and one entry per snapshot.

	Parameters
	----------
	record_dir : pathlib.Path
		Written record.
	"""
	dict_manifest = read_manifest(record_dir)
	assert dict_manifest["format_version"] == 1
	assert dict_manifest["config"] == {"seed": 1}
	assert dict_manifest["wall_clock_seconds"] == 0.25
	assert dict_manifest["model_notes"] == ["S smooth: scaled second difference above the bound"]
	list_snapshots = dict_manifest["files"]["snapshots"]
	assert list_snapshots[0]["u"] == "snapshots/u_00000.csnap"
	assert list_snapshots[-1]["t"] == 0.002
	assert dict_manifest["steps"]["count"] >= len(list_snapshots) - 1


def test_manifest_with_missing_snapshot(record_dir: Path) -> None:
	"""A referenced file that is gone raises ``FileNotFoundError``.

	Parameters
	----------
	record_dir : pathlib.Path
		Written record.
	"""
	(record_dir / "snapshots" / "v_00001.csnap").unlink()
	with pytest.raises(FileNotFoundError, match="v_00001"):
		read_manifest(record_dir)


def test_manifest_with_unknown_version(record_dir: Path) -> None:
	"""Another format version raises ``RecordFormatError``.

	Parameters
	----------
	record_dir : pathlib.Path
		Written record.
	"""
	dict_manifest = read_json(record_dir / MANIFEST_NAME)
	dict_manifest["format_version"] = 99
	write_json(record_dir / MANIFEST_NAME, dict_manifest)
	with pytest.raises(RecordFormatError, match="99"):
		read_manifest(record_dir)


def test_render_report(record_dir: Path, tmp_path: Path) -> None:
	"""The certificate is rendered; an empty directory and a broken report raise.

	Parameters
	----------
	record_dir : pathlib.Path
		Written record.
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory.
	"""
	str_report = render_report(record_dir)
	assert str_report.startswith("certificate at t = 0.002: PASS")
	assert "D_lnu" in str_report
	assert "ledger: " in str_report
	assert "rows up to t = 0.002" in str_report
	assert "model note: S smooth" in str_report

	path_empty = tmp_path / "empty"
	path_empty.mkdir()
	with pytest.raises(FileNotFoundError):
		render_report(path_empty)

	write_json(path_empty / "mass.json", {"passed": True})
	with pytest.raises(RecordFormatError):
		render_report(path_empty)


def test_member_dirs(tmp_path: Path) -> None:
	"""Member directories are named after their eps, in plan order.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory.
	"""
	assert member_dir_name(0.05) == "eps_0.05"
	assert list_member_dirs(tmp_path, (0.2, 0.1)) == [tmp_path / "eps_0.2", tmp_path / "eps_0.1"]


def test_render_family_members(tmp_path: Path, record_dir: Path) -> None:
	"""A family report lists the certificate verdict of every planned member.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the family output.
	record_dir : pathlib.Path
		Written record, copied in as the first member.
	"""
	path_family = tmp_path / "family"
	path_member = path_family / member_dir_name(0.2)
	path_member.mkdir(parents=True)
	write_json(path_member / CERTIFICATE_NAME, read_json(record_dir / CERTIFICATE_NAME))
	write_json(
		path_family / FAMILY_NAME,
		{"eps": [0.2, 0.1], "bounds_uniform": True, "certificates_passed": True},
	)
	list_lines = render_report(path_family).splitlines()
	assert list_lines[0].startswith("family eps=[0.2, 0.1]")
	assert list_lines[1:] == ["  eps_0.2: certificate PASS", "  eps_0.1: no certificate"]
