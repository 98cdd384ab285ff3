"""Contract-checked CSV reading for ledgers and convergence tables.

- :class:`FileContract` declares the columns a CSV artifact must carry, and whether their order
  is fixed (the ledger column order is part of the on-disk format).
- :func:`read_table` reads a file, **always** enforces its contract (raising
  :class:`ContractError`), and applies explicit column dtypes.
- :func:`find_file_problems` validates a file and returns problems without raising, so a
  command can report every finding before choosing an exit code.

Bare ``pd.read_csv`` is banned project-wide (ruff ``TID251``); this seam is the one exempt
place. Concrete contracts live in ``_internal/config/contracts/``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from chemotensor._internal.utils.typing import TypeChecker, type_checker


@dataclass(frozen=True)
class FileContract(metaclass=TypeChecker):
	"""The required shape of one CSV artifact.

	Parameters
	----------
	str_name : str
		Human-readable label used in problem messages.
	tuple_required : tuple of str
		Columns that must be present.
	bool_ordered : bool, optional
		When ``True`` the required columns must also be the leading columns, in this order
		(default ``False``). Extra trailing columns are always allowed.
	"""

	str_name: str
	tuple_required: tuple[str, ...]
	bool_ordered: bool = False


class ContractError(Exception, metaclass=TypeChecker):
	"""Raised when a strictly-read file violates its contract.

	Parameters
	----------
	list_problems : list of str
		The problem messages.
	"""

	def __init__(self, list_problems: list[str]) -> None:
		self.list_problems = list_problems
		super().__init__("; ".join(list_problems))


@type_checker
def read_table(
	path_file: Path,
	cls_contract: FileContract,
	dict_dtypes: dict[str, str] | None = None,
) -> pd.DataFrame:
	"""Read a CSV into a contract-validated DataFrame.

	Values are read as text and converted with the declared dtypes afterwards; columns with no
	declared dtype are converted with ``float64``, which parses the round-trip decimal
	representation the writers emit without loss.

	Parameters
	----------
	path_file : Path
		The CSV file.
	cls_contract : FileContract
		The contract the file must satisfy.
	dict_dtypes : dict of {str: str}, optional
		Column to dtype mapping; ``"str"`` keeps a column as text.

	Returns
	-------
	pd.DataFrame
		The typed rows.

	Raises
	------
	ContractError
		When the file violates ``cls_contract``.
	"""
	df_raw = _read_raw(path_file)
	list_problems = find_contract_problems(df_raw, cls_contract)
	if list_problems:
		raise ContractError(list_problems)
	dict_dtypes = dict_dtypes or {}
	dict_cast = {
		str_col: dict_dtypes.get(str_col, "float64")
		for str_col in df_raw.columns
		if dict_dtypes.get(str_col, "float64") != "str"
	}
	return df_raw.astype(dict_cast)


@type_checker
def find_file_problems(cls_contract: FileContract, path_file: Path) -> list[str]:
	"""Validate a file against its contract; return problems (never raises on content).

	Parameters
	----------
	cls_contract : FileContract
		The contract to validate against.
	path_file : Path
		The CSV file.

	Returns
	-------
	list of str
		One message per problem; empty when the file is sound.

	Raises
	------
	FileNotFoundError
		If the file does not exist.
	"""
	return find_contract_problems(_read_raw(path_file), cls_contract)


@type_checker
def find_contract_problems(df_input: pd.DataFrame, cls_contract: FileContract) -> list[str]:
	"""Return the contract problems of an already-read frame.

	Parameters
	----------
	df_input : pd.DataFrame
		The frame as read.
	cls_contract : FileContract
		The contract to validate against.

	Returns
	-------
	list of str
		Missing required columns and, for ordered contracts, column-order mismatches.
	"""
	list_problems = [
		f"Required column missing in '{cls_contract.str_name}': '{str_col}'"
		for str_col in cls_contract.tuple_required
		if str_col not in df_input.columns
	]
	if cls_contract.bool_ordered and not list_problems:
		tuple_leading = tuple(df_input.columns[: len(cls_contract.tuple_required)])
		if tuple_leading != cls_contract.tuple_required:
			list_problems.append(
				f"Column order in '{cls_contract.str_name}' is {list(tuple_leading)}, "
				f"expected {list(cls_contract.tuple_required)}"
			)
	return list_problems


@type_checker
def _read_raw(path_file: Path) -> pd.DataFrame:
	"""Read a CSV as text.

	Parameters
	----------
	path_file : Path
		The file to read.

	Returns
	-------
	pd.DataFrame
		The raw rows.

	Raises
	------
	FileNotFoundError
		If ``path_file`` does not exist.
	"""
	if not path_file.exists():
		raise FileNotFoundError(f"File not found: {path_file}")
	return pd.read_csv(path_file, dtype="str", sep=",", keep_default_na=False)


__all__ = [
	"ContractError",
	"FileContract",
	"find_contract_problems",
	"find_file_problems",
	"read_table",
]
