"""Nonnegative initial fields: constants, Gaussians and seeded smooth-random data."""

from __future__ import annotations

import math

import numpy as np

from chemotensor._internal.utils.typing import type_checker
from chemotensor.errors import DomainError
from chemotensor.grid import Field, GridSpec


@type_checker
def constant_field(grid: GridSpec, float_value: float) -> Field:
	"""Constant field.

	Parameters
	----------
	grid : GridSpec
		The mesh.
	float_value : float
		Value, nonnegative.

	Returns
	-------
	Field
		The field.

	Raises
	------
	DomainError
		If ``float_value`` is negative.
	"""
	if float_value < 0.0:
		raise DomainError(f"initial values must be nonnegative, got {float_value}")
	return Field.constant(grid, float_value)


@type_checker
def gaussian_field(
	grid: GridSpec,
	tuple_center: tuple[float, ...],
	float_width: float,
	float_amplitude: float,
	float_offset: float = 0.0,
) -> Field:
	"""``offset + amplitude * exp(-|x - c|² / (2 w²))`` sampled at cell centers.

	Parameters
	----------
	grid : GridSpec
		The mesh.
	tuple_center : tuple of float
		Center ``c``, one coordinate per simulated axis.
	float_width : float
		Width ``w > 0``.
	float_amplitude : float
		Peak height, nonnegative.
	float_offset : float
		Background level, nonnegative.

	Returns
	-------
	Field
		The field.

	Raises
	------
	DomainError
		On a negative amplitude or offset, a nonpositive width or a wrong center length.
	"""
	if len(tuple_center) != grid.int_dim:
		raise DomainError(f"center {tuple_center} does not match a {grid.int_dim}D grid")
	if not float_width > 0.0:
		raise DomainError(f"width must be positive, got {float_width}")
	if float_amplitude < 0.0 or float_offset < 0.0:
		raise DomainError("amplitude and offset must be nonnegative")
	array_x, array_y = grid.cell_centers()
	array_r2 = (array_x - tuple_center[0]) ** 2
	if grid.int_dim == 2:
		array_r2 = array_r2 + (array_y - tuple_center[1]) ** 2
	return Field(
		grid, float_offset + float_amplitude * np.exp(-array_r2 / (2.0 * float_width**2))
	)


@type_checker
def smooth_random_field(
	grid: GridSpec,
	int_seed: int,
	int_modes: int = 4,
	float_amplitude: float = 1.0,
	float_offset: float = 0.0,
) -> Field:
	"""Random sum of Neumann cosine modes, rescaled to ``[offset, offset + amplitude]``.

	Mode ``(k, m)`` has a standard normal coefficient damped by ``1 / (1 + k + m)²``; the
	same seed and grid reproduce the field bit for bit.

	Parameters
	----------
	grid : GridSpec
		The mesh.
	int_seed : int
		Seed of :func:`numpy.random.default_rng`.
	int_modes : int
		Modes per axis (``k, m < int_modes``).
	float_amplitude : float
		Range of the field, nonnegative.
	float_offset : float
		Minimum of the field, nonnegative.

	Returns
	-------
	Field
		The field.

	Raises
	------
	DomainError
		On fewer than one mode or negative amplitude/offset.
	"""
	if int_modes < 1:
		raise DomainError(f"need at least one mode, got {int_modes}")
	if float_amplitude < 0.0 or float_offset < 0.0:
		raise DomainError("amplitude and offset must be nonnegative")
	rng = np.random.default_rng(int_seed)
	array_x, array_y = grid.cell_centers()
	int_m_modes = int_modes if grid.int_dim == 2 else 1
	array_coef = rng.standard_normal((int_modes, int_m_modes))
	array_sum = np.zeros(grid.tuple_shape)
	for int_k in range(int_modes):
		for int_m in range(int_m_modes):
			array_sum += (
				array_coef[int_k, int_m]
				/ (1.0 + int_k + int_m) ** 2
				* np.cos(int_k * math.pi * array_x / grid.float_lx)
				* np.cos(int_m * math.pi * array_y / grid.float_ly)
			)
	float_range = float(array_sum.max() - array_sum.min())
	array_unit = (
		(array_sum - array_sum.min()) / float_range if float_range > 0.0 else array_sum * 0.0
	)
	return Field(grid, float_offset + float_amplitude * array_unit)


__all__ = ["constant_field", "gaussian_field", "smooth_random_field"]
