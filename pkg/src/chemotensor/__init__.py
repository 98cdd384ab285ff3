"""Finite-volume simulator for regularized chemotaxis with tensor-valued sensitivities.

The package simulates the ε-regularized system, keeps a ledger of the a priori functionals
with certified bounds, checks stored trajectories against the weak formulation, and runs
ε-family convergence studies. Entry point: ``chemotensor`` (see :mod:`chemotensor.cli`).
"""

from chemotensor.errors import ChemotensorError
from chemotensor.grid import Field, GridSpec
from chemotensor.model import CutoffPair, Envelope, Kinetics, ModelSpec, SensitivityTensor
from chemotensor.solver import RunRecord, State, StepControl, run


__version__ = "0.1.0"

__all__ = [
	"ChemotensorError",
	"CutoffPair",
	"Envelope",
	"Field",
	"GridSpec",
	"Kinetics",
	"ModelSpec",
	"RunRecord",
	"SensitivityTensor",
	"State",
	"StepControl",
	"__version__",
	"run",
]
