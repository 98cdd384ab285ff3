"""Contract of ``ledger.csv``: the documented estimate columns, in order, lead every row."""

from __future__ import annotations

from chemotensor._internal.utils.tabular_reader import FileContract


LEDGER_COLUMNS: tuple[str, ...] = ("t", "mass", "vmax", "D_v", "C", "D_lnu", "E")

# Diagnostics appended after the documented block.
LEDGER_EXTRA_COLUMNS: tuple[str, ...] = ("vlnu", "W", "lnmass")

LEDGER_CONTRACT = FileContract("Estimate ledger", LEDGER_COLUMNS, bool_ordered=True)
