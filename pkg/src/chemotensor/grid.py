"""Cell-centered finite-volume mesh on a rectangle with no-flux boundaries.

Fields are stored as arrays of shape ``(ny, nx)`` in row-major order (x varies fastest). A
1D grid is the degenerate case ``ny = 1`` with a unit transverse extent, so it has no
y-faces and its cell volume equals ``hx``.

Interior faces only are stored: ``x``-faces have shape ``(ny, nx - 1)`` and ``y``-faces
shape ``(ny - 1, nx)``. Boundary faces carry zero flux implicitly, which makes the discrete
divergence theorem hold to round-off.

The domain is a rectangle, a piecewise-smooth stand-in for a smooth bounded domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from chemotensor._internal.utils.typing import TypeChecker, type_checker
from chemotensor.errors import DomainError, GridMismatchError


_INT_MIN_CELLS = 3


@dataclass(frozen=True)
class GridSpec(metaclass=TypeChecker):
	"""Rectangular cell-centered mesh.

	Parameters
	----------
	int_dim : int
		Space dimension, 1 or 2.
	float_lx : float
		Extent along x.
	int_nx : int
		Cells along x (at least 3).
	float_ly : float, optional
		Extent along y; must stay 1 in 1D.
	int_ny : int, optional
		Cells along y (at least 3 in 2D, exactly 1 in 1D).

	Raises
	------
	DomainError
		On any violated shape constraint.
	"""

	int_dim: int
	float_lx: float
	int_nx: int
	float_ly: float = 1.0
	int_ny: int = 1

	def __post_init__(self) -> None:
		if self.int_dim not in (1, 2):
			raise DomainError(f"dimension must be 1 or 2, got {self.int_dim}")
		if not (self.float_lx > 0.0 and self.float_ly > 0.0):
			raise DomainError(f"extents must be positive, got ({self.float_lx}, {self.float_ly})")
		if self.int_nx < _INT_MIN_CELLS:
			raise DomainError(f"nx must be >= {_INT_MIN_CELLS}, got {self.int_nx}")
		if self.int_dim == 1 and (self.int_ny != 1 or self.float_ly != 1.0):
			raise DomainError("a 1D grid has ny = 1 and a unit transverse extent")
		if self.int_dim == 2 and self.int_ny < _INT_MIN_CELLS:
			raise DomainError(f"ny must be >= {_INT_MIN_CELLS}, got {self.int_ny}")

	@classmethod
	def line(cls, float_lx: float, int_nx: int) -> GridSpec:
		"""Build a 1D grid on ``[0, float_lx]``.

		Parameters
		----------
		float_lx : float
			Interval length.
		int_nx : int
			Number of cells.

		Returns
		-------
		GridSpec
			The 1D grid.
		"""
		return cls(1, float_lx, int_nx)

	@classmethod
	def rectangle(
		cls, float_lx: float, float_ly: float, int_nx: int, int_ny: int
	) -> GridSpec:
		"""Build a 2D grid on ``[0, float_lx] x [0, float_ly]``.

		Parameters
		----------
		float_lx, float_ly : float
			Extents.
		int_nx, int_ny : int
			Cell counts.

		Returns
		-------
		GridSpec
			The 2D grid.
		"""
		return cls(2, float_lx, int_nx, float_ly, int_ny)

	@property
	def float_hx(self) -> float:
		"""Cell size along x."""
		return self.float_lx / self.int_nx

	@property
	def float_hy(self) -> float:
		"""Cell size along y (1 in 1D)."""
		return self.float_ly / self.int_ny

	@property
	def float_cell_volume(self) -> float:
		"""Measure of one cell, ``hx * hy``."""
		return self.float_hx * self.float_hy

	@property
	def float_volume(self) -> float:
		"""Total measure of the domain (``Lx`` in 1D)."""
		return self.float_lx * self.float_ly

	@property
	def float_h(self) -> float:
		"""Largest cell size along a simulated axis."""
		return self.float_hx if self.int_dim == 1 else max(self.float_hx, self.float_hy)

	@property
	def tuple_shape(self) -> tuple[int, int]:
		"""Array shape ``(ny, nx)`` of a field."""
		return (self.int_ny, self.int_nx)

	@property
	def tuple_extents(self) -> tuple[float, ...]:
		"""Extents of the simulated axes."""
		return (self.float_lx,) if self.int_dim == 1 else (self.float_lx, self.float_ly)

	def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
		"""Return the ``(x, y)`` coordinates of every cell center, each of shape ``(ny, nx)``.

		Returns
		-------
		tuple[np.ndarray, np.ndarray]
			Center coordinates; in 1D the y-coordinate is the transverse midpoint 0.5.
		"""
		array_x = (np.arange(self.int_nx) + 0.5) * self.float_hx
		array_y = (np.arange(self.int_ny) + 0.5) * self.float_hy
		grid_y, grid_x = np.meshgrid(array_y, array_x, indexing="ij")
		return grid_x, grid_y

	def x_face_midpoints(self) -> tuple[np.ndarray, np.ndarray]:
		"""Return the midpoints of the interior x-faces, each of shape ``(ny, nx - 1)``.

		Returns
		-------
		tuple[np.ndarray, np.ndarray]
			Face midpoint coordinates.
		"""
		array_x = np.arange(1, self.int_nx) * self.float_hx
		array_y = (np.arange(self.int_ny) + 0.5) * self.float_hy
		grid_y, grid_x = np.meshgrid(array_y, array_x, indexing="ij")
		return grid_x, grid_y

	def y_face_midpoints(self) -> tuple[np.ndarray, np.ndarray]:
		"""Return the midpoints of the interior y-faces, each of shape ``(ny - 1, nx)``.

		Returns
		-------
		tuple[np.ndarray, np.ndarray]
			Face midpoint coordinates; empty arrays in 1D.
		"""
		array_x = (np.arange(self.int_nx) + 0.5) * self.float_hx
		array_y = np.arange(1, self.int_ny) * self.float_hy
		grid_y, grid_x = np.meshgrid(array_y, array_x, indexing="ij")
		return grid_x, grid_y


class Field(metaclass=TypeChecker):
	"""Scalar cell values on a grid.

	Parameters
	----------
	grid : GridSpec
		The mesh.
	array_values : np.ndarray
		Values of shape ``(ny, nx)``; a 1D grid also accepts shape ``(nx,)``.

	Raises
	------
	GridMismatchError
		If the value count does not match the grid.
	"""

	def __init__(self, grid: GridSpec, array_values: np.ndarray) -> None:
		array_values = np.asarray(array_values, dtype=np.float64)
		if array_values.ndim == 1 and grid.int_dim == 1:
			array_values = array_values.reshape(1, -1)
		if array_values.shape != grid.tuple_shape:
			raise GridMismatchError(
				f"field shape {array_values.shape} does not match grid {grid.tuple_shape}"
			)
		array_values = array_values.copy()
		array_values.flags.writeable = False
		self.grid = grid
		self.values = array_values

	@classmethod
	def constant(cls, grid: GridSpec, float_value: float) -> Field:
		"""Build a constant field.

		Parameters
		----------
		grid : GridSpec
			The mesh.
		float_value : float
			Value in every cell.

		Returns
		-------
		Field
			The constant field.
		"""
		return cls(grid, np.full(grid.tuple_shape, float_value, dtype=np.float64))

	def is_finite(self) -> bool:
		"""Whether every value is finite."""
		return bool(np.all(np.isfinite(self.values)))

	def __repr__(self) -> str:
		return (
			f"Field(grid={self.grid!r}, "
			f"min={self.values.min():.6g}, max={self.values.max():.6g})"
		)


class FaceField(metaclass=TypeChecker):
	"""Values on interior faces; boundary faces are implicitly zero.

	Parameters
	----------
	grid : GridSpec
		The mesh.
	array_x : np.ndarray
		Values on x-faces, shape ``(ny, nx - 1)``.
	array_y : np.ndarray
		Values on y-faces, shape ``(ny - 1, nx)`` (empty in 1D).

	Raises
	------
	GridMismatchError
		If a face array does not match the grid.
	"""

	def __init__(self, grid: GridSpec, array_x: np.ndarray, array_y: np.ndarray) -> None:
		array_x = np.asarray(array_x, dtype=np.float64)
		array_y = np.asarray(array_y, dtype=np.float64)
		tuple_x = (grid.int_ny, grid.int_nx - 1)
		tuple_y = (grid.int_ny - 1, grid.int_nx)
		if array_x.shape != tuple_x or array_y.shape != tuple_y:
			raise GridMismatchError(
				f"face shapes {array_x.shape}/{array_y.shape} do not match {tuple_x}/{tuple_y}"
			)
		self.grid = grid
		self.x = array_x
		self.y = array_y

	@classmethod
	def zeros(cls, grid: GridSpec) -> FaceField:
		"""Build a face field that is zero everywhere.

		Parameters
		----------
		grid : GridSpec
			The mesh.

		Returns
		-------
		FaceField
			Zero faces.
		"""
		return cls(
			grid,
			np.zeros((grid.int_ny, grid.int_nx - 1)),
			np.zeros((grid.int_ny - 1, grid.int_nx)),
		)

	def l1_norm(self) -> float:
		"""Sum of absolute face values."""
		return float(np.abs(self.x).sum() + np.abs(self.y).sum())


@type_checker
def integrate(field: Field) -> float:
	"""Midpoint quadrature of a field over the domain.

	Parameters
	----------
	field : Field
		Integrand.

	Returns
	-------
	float
		``sum(f_i) * cell volume``.
	"""
	return float(field.values.sum() * field.grid.float_cell_volume)


@type_checker
def integrate_faces(faces: FaceField) -> float:
	"""Quadrature of a face quantity, each interior face weighted by ``hx * hy``.

	Parameters
	----------
	faces : FaceField
		Face integrand (e.g. squared face gradients).

	Returns
	-------
	float
		The face sum times the dual cell volume.
	"""
	return float((faces.x.sum() + faces.y.sum()) * faces.grid.float_cell_volume)


@type_checker
def face_gradient(field: Field) -> FaceField:
	"""Two-point normal difference on every interior face.

	Parameters
	----------
	field : Field
		Cell values.

	Returns
	-------
	FaceField
		``(f_right - f_left) / hx`` on x-faces and ``(f_top - f_bottom) / hy`` on y-faces.
	"""
	grid = field.grid
	return FaceField(
		grid,
		np.diff(field.values, axis=1) / grid.float_hx,
		np.diff(field.values, axis=0) / grid.float_hy,
	)


@type_checker
def face_mean(field: Field) -> FaceField:
	"""Arithmetic mean of the two cells sharing each interior face.

	Parameters
	----------
	field : Field
		Cell values.

	Returns
	-------
	FaceField
		Face means.
	"""
	array_values = field.values
	return FaceField(
		field.grid,
		0.5 * (array_values[:, :-1] + array_values[:, 1:]),
		0.5 * (array_values[:-1, :] + array_values[1:, :]),
	)


@type_checker
def divergence(faces: FaceField) -> Field:
	"""Discrete divergence with zero-flux boundary faces.

	A value ``F`` on the face between cells ``i`` and ``i + 1`` leaves cell ``i`` and
	enters cell ``i + 1``: it contributes ``+F / h`` to the former and ``-F / h`` to the
	latter, so the integral of the result telescopes to zero.

	Parameters
	----------
	faces : FaceField
		Normal face values.

	Returns
	-------
	Field
		Outgoing flux per unit cell volume.
	"""
	grid = faces.grid
	array_out = np.zeros(grid.tuple_shape)
	array_out[:, :-1] += faces.x / grid.float_hx
	array_out[:, 1:] -= faces.x / grid.float_hx
	array_out[:-1, :] += faces.y / grid.float_hy
	array_out[1:, :] -= faces.y / grid.float_hy
	return Field(grid, array_out)


@type_checker
def laplacian(field: Field) -> Field:
	"""Neumann Laplacian as the divergence of the face gradient (3- or 5-point stencil).

	Parameters
	----------
	field : Field
		Cell values.

	Returns
	-------
	Field
		Discrete Laplacian.
	"""
	return divergence(face_gradient(field))


@type_checker
def _neumann_1d(int_n: int, float_h: float) -> sp.csr_matrix:
	"""Second-difference matrix with no-flux ends; the zero matrix when ``int_n == 1``."""
	if int_n == 1:
		return sp.csr_matrix((1, 1))
	array_main = np.full(int_n, -2.0)
	array_main[[0, -1]] = -1.0
	array_off = np.ones(int_n - 1)
	return sp.diags(
		[array_off, array_main, array_off], [-1, 0, 1], format="csr"
	) / (float_h * float_h)


@lru_cache(maxsize=16)
@type_checker
def neumann_laplacian_matrix(grid: GridSpec) -> sp.csr_matrix:
	"""Sparse matrix of :func:`laplacian` acting on row-major flattened fields.

	Parameters
	----------
	grid : GridSpec
		The mesh.

	Returns
	-------
	scipy.sparse.csr_matrix
		Symmetric matrix of size ``nx * ny`` with zero row sums.
	"""
	matrix_x = _neumann_1d(grid.int_nx, grid.float_hx)
	matrix_y = _neumann_1d(grid.int_ny, grid.float_hy)
	return sp.csr_matrix(
		sp.kron(sp.identity(grid.int_ny), matrix_x) + sp.kron(matrix_y, sp.identity(grid.int_nx))
	)


@type_checker
def require_same_grid(*tuple_fields: Field) -> GridSpec:
	"""Return the grid shared by all fields.

	Parameters
	----------
	*tuple_fields : Field
		Fields to compare.

	Returns
	-------
	GridSpec
		The common grid.

	Raises
	------
	GridMismatchError
		If two fields live on different grids.
	"""
	grid = tuple_fields[0].grid
	for field in tuple_fields[1:]:
		if field.grid != grid:
			raise GridMismatchError(f"fields live on different grids: {grid} vs {field.grid}")
	return grid


__all__ = [
	"FaceField",
	"Field",
	"GridSpec",
	"divergence",
	"face_gradient",
	"face_mean",
	"integrate",
	"integrate_faces",
	"laplacian",
	"neumann_laplacian_matrix",
	"require_same_grid",
]
