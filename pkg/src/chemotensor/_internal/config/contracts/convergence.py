"""Contract of ``convergence.csv`` written by the epsilon-family study."""

from __future__ import annotations

from chemotensor._internal.utils.tabular_reader import FileContract


CONVERGENCE_COLUMNS: tuple[str, ...] = (
	"eps_coarse",
	"eps_fine",
	"diff_ln_u",
	"diff_v",
	"diff_grad_v",
)

CONVERGENCE_CONTRACT = FileContract("Convergence table", CONVERGENCE_COLUMNS, bool_ordered=True)
