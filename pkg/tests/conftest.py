"""Pytest configuration: network block plus shared grids, models and states.

The simulator never needs the network, so every connection primitive is swapped for one
that raises :class:`NetworkAccessError`; a test that truly needs the wire opts out with
``@pytest.mark.allow_network``. Only connections are blocked, not address resolution.
"""

from __future__ import annotations

from collections.abc import Callable
import socket
from typing import NoReturn

import pytest

from chemotensor.grid import Field, GridSpec
from chemotensor.initial_data import gaussian_field
from chemotensor.model import CutoffPair, Kinetics, ModelSpec, SensitivityTensor
from chemotensor.solver import State, StepControl


class NetworkAccessError(RuntimeError):
	"""Raised when a test attempts to open a real network connection."""


def _blocked(*args: object, **kwargs: object) -> NoReturn:
	"""Reject a network call, naming the target.

	Parameters
	----------
	*args : object
		Positional arguments of the patched primitive; the first is the target.
	**kwargs : object
		Ignored.

	Raises
	------
	NetworkAccessError
		Always.
	"""
	raise NetworkAccessError(
		f"A test tried to reach the network ({args[:1]!r}). "
		"Mark it @pytest.mark.allow_network if it truly must hit the wire."
	)


class _BlockedSocket(socket.socket):
	"""A socket whose outbound-connection methods are disabled."""

	def connect(self, *args: object, **kwargs: object) -> NoReturn:
		"""Reject ``socket.socket.connect``."""
		_blocked(*args, **kwargs)

	def connect_ex(self, *args: object, **kwargs: object) -> NoReturn:
		"""Reject ``socket.socket.connect_ex``."""
		_blocked(*args, **kwargs)


@pytest.fixture(autouse=True)
def block_network(request: pytest.FixtureRequest, monkeypatch: pytest.MonkeyPatch) -> None:
	"""Swap the socket primitives so no test can open a real connection.

	Parameters
	----------
	request : pytest.FixtureRequest
		Inspected for the ``allow_network`` marker.
	monkeypatch : pytest.MonkeyPatch
		Restores the real primitives at teardown.
	"""
	if request.node.get_closest_marker("allow_network") is not None:
		return
	monkeypatch.setattr(socket, "socket", _BlockedSocket)
	monkeypatch.setattr(socket, "create_connection", _blocked)


# --------------------------
# Shared numerics fixtures
# --------------------------


def make_spec(
	int_dim: int,
	str_tensor: str = "scalar",
	str_kinetics: str = "linear",
	float_eps: float = 0.1,
	float_chi: float = 1.0,
	float_beta: float = 0.0,
	bool_spatial: bool = True,
	tuple_extents: tuple[float, ...] = (),
) -> ModelSpec:
	"""Model with scalar strengths on a rectangle.

	Parameters
	----------
	int_dim : int
		Dimension.
	str_tensor : str
		Tensor tag.
	str_kinetics : str
		Kinetics tag.
	float_eps : float
		Regularization parameter.
	float_chi, float_beta : float
		Tensor strengths.
	bool_spatial : bool
		Whether the spatial cutoff is active.
	tuple_extents : tuple of float
		Domain extents; the unit interval or square by default.

	Returns
	-------
	ModelSpec
		The model.
	"""
	return ModelSpec(
		kinetics=Kinetics(str_kinetics),
		tensor=SensitivityTensor(str_tensor, float_chi, float_beta),
		cutoffs=CutoffPair(float_eps, bool_spatial=bool_spatial),
		int_dim=int_dim,
		tuple_extents=tuple_extents,
	)


@pytest.fixture
def spec_factory() -> Callable[..., ModelSpec]:
	"""The :func:`make_spec` builder, for tests that vary the model."""
	return make_spec


@pytest.fixture
def grid_1d() -> GridSpec:
	"""32 cells on the unit interval."""
	return GridSpec.line(1.0, 32)


@pytest.fixture
def grid_2d() -> GridSpec:
	"""12 x 12 cells on the unit square."""
	return GridSpec.rectangle(1.0, 1.0, 12, 12)


@pytest.fixture
def heat_spec_1d() -> ModelSpec:
	"""No chemotaxis, no consumption: two decoupled heat equations."""
	return make_spec(1, "zero", "zero")


@pytest.fixture
def rotational_spec_2d() -> ModelSpec:
	"""Rotational tensor with linear consumption on the unit square."""
	return make_spec(2, "rotational", "linear", float_eps=0.2, float_chi=1.0, float_beta=1.0)


@pytest.fixture
def bump_state_1d(grid_1d: GridSpec) -> State:
	"""Gaussian density and signal bumps on the 1D grid."""
	return State(
		0.0,
		gaussian_field(grid_1d, (0.5,), 0.15, 2.0, 0.5),
		gaussian_field(grid_1d, (0.3,), 0.2, 1.0, 0.2),
	)


@pytest.fixture
def bump_state_2d(grid_2d: GridSpec) -> State:
	"""Gaussian density and signal bumps on the 2D grid."""
	return State(
		0.0,
		gaussian_field(grid_2d, (0.5, 0.5), 0.15, 2.0, 0.5),
		gaussian_field(grid_2d, (0.35, 0.6), 0.2, 1.0, 0.2),
	)


@pytest.fixture
def explicit_ctrl() -> StepControl:
	"""Adaptive explicit stepping."""
	return StepControl("explicit", "adaptive", 0.4, 0.01)


@pytest.fixture
def constant_field_1d(grid_1d: GridSpec) -> Field:
	"""The constant 1 on the 1D grid."""
	return Field.constant(grid_1d, 1.0)
