"""Unit tests for the contract-checked CSV reading seam."""

from pathlib import Path

import pandas as pd
import pytest

from chemotensor._internal.utils.tabular_reader import (
	ContractError,
	FileContract,
	find_contract_problems,
	find_file_problems,
	read_table,
)


def _write_csv(path_dir: Path, str_content: str = "t,mass\n0,1.5\n0.25,1.5\n") -> Path:
	"""Write a small CSV and return its path.

	Parameters
	----------
	path_dir : pathlib.Path
		Directory in which to create the file.
	str_content : str
		File content.

	Returns
	-------
	pathlib.Path
		Path to the created CSV.
	"""
	path_csv = path_dir / "table.csv"
	path_csv.write_text(str_content, encoding="utf-8")
	return path_csv


def test_read_table_casts_to_float(tmp_path: Path) -> None:
	"""A valid file passes its contract and undeclared columns become float64.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the CSV.
	"""
	df_out = read_table(_write_csv(tmp_path), FileContract("table", ("t", "mass"), True))
	assert list(df_out.columns) == ["t", "mass"]
	assert str(df_out["mass"].dtype) == "float64"
	assert df_out["t"].tolist() == [0.0, 0.25]


def test_read_table_keeps_declared_text(tmp_path: Path) -> None:
	"""A column declared ``str`` keeps its exact characters.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the CSV.
	"""
	path_csv = _write_csv(tmp_path, "name,value\neps_0.050,1.0\n")
	df_out = read_table(path_csv, FileContract("table", ("name",)), {"name": "str"})
	assert df_out["name"].tolist() == ["eps_0.050"]


def test_read_table_raises_on_missing_column(tmp_path: Path) -> None:
	"""A missing required column raises ``ContractError`` naming it.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the CSV.
	"""
	with pytest.raises(ContractError, match="vmax"):
		read_table(_write_csv(tmp_path), FileContract("table", ("t", "vmax")))


def test_ordered_contract_rejects_swapped_columns(tmp_path: Path) -> None:
	"""An ordered contract reports leading columns out of order.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the CSV.
	"""
	path_csv = _write_csv(tmp_path, "mass,t\n1.5,0\n")
	with pytest.raises(ContractError, match="order"):
		read_table(path_csv, FileContract("table", ("t", "mass"), True))
	assert read_table(path_csv, FileContract("table", ("t", "mass"))).shape == (1, 2)


def test_find_file_problems_reports_without_raising(tmp_path: Path) -> None:
	"""Problems are returned as messages; a missing file still raises.

	Parameters
	----------
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory for the CSV.
	"""
	list_problems = find_file_problems(FileContract("table", ("absent",)), _write_csv(tmp_path))
	assert any("absent" in str_problem for str_problem in list_problems)
	with pytest.raises(FileNotFoundError):
		find_file_problems(FileContract("table", ()), tmp_path / "nope.csv")


def test_empty_contract_constrains_nothing() -> None:
	"""An empty contract passes any frame."""
	assert find_contract_problems(pd.DataFrame({"a": [1]}), FileContract("table", ())) == []
