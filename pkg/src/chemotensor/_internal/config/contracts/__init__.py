"""CSV contracts of the run artifacts (config layer).

One file per artifact, each defining a single ``FileContract`` instance; this aggregator
re-exports them with the reading machinery so callers import from one place:
``from chemotensor._internal.config.contracts import LEDGER_CONTRACT, read_table``.
"""

from __future__ import annotations

from chemotensor._internal.config.contracts.convergence import (
	CONVERGENCE_COLUMNS,
	CONVERGENCE_CONTRACT,
)
from chemotensor._internal.config.contracts.ledger import (
	LEDGER_COLUMNS,
	LEDGER_CONTRACT,
	LEDGER_EXTRA_COLUMNS,
)
from chemotensor._internal.utils.tabular_reader import (
	ContractError,
	find_file_problems,
	read_table,
)


__all__ = [
	"CONVERGENCE_COLUMNS",
	"CONVERGENCE_CONTRACT",
	"LEDGER_COLUMNS",
	"LEDGER_CONTRACT",
	"LEDGER_EXTRA_COLUMNS",
	"ContractError",
	"find_file_problems",
	"read_table",
]
