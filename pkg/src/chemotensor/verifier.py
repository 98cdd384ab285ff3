"""Residual checks of stored trajectories against the generalized-solution inequalities.

Time quadrature pairs snapshot values with the test function by the left rectangle rule on
every snapshot interval ``[t_k, t_k+1)``. The ``φ_t`` terms integrate the analytic time
derivative over each interval by three-point Gauss-Legendre, split at the support ends of
the time factors. That rule is exact for the polynomial bumps, so a state constant in time
produces no time-quadrature error.
Spatial integrals use midpoint quadrature at cell centers; gradient pairings are summed over
interior faces with ``hx * hy`` per face and the analytic test-function derivative at the
face midpoint.
"""

from __future__ import annotations

from abc import abstractmethod
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import math
from typing import Any

import numpy as np

from chemotensor._internal.utils.typing import ABCTypeCheckerMeta, TypeChecker, type_checker
from chemotensor.errors import DomainError, HorizonError, SnapshotWindowError
from chemotensor.grid import GridSpec, face_gradient, face_mean, integrate
from chemotensor.model import smoothstep
from chemotensor.solver import RunRecord, face_velocity


BUMPS: tuple[str, ...] = ("quadratic", "smoothstep", "zero")
TRANSFORMS: tuple[str, ...] = ("ln", "identity", "reciprocal")

_FLOAT_TIME_RTOL = 1e-12
_FLOAT_NEG_PHI = -1e-14
_ARRAY_GAUSS_NODES, _ARRAY_GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True)
class TemporalBump(metaclass=TypeChecker):
	"""C¹ time factor ``ζ`` supported in ``[0, T)``.

	``quadratic``: ``(1 - t/T)²``; ``smoothstep``: ``1 - η(t/T)`` with the quintic
	smoothstep; ``zero``: ``ζ ≡ 0``.

	Parameters
	----------
	str_kind : str
		One of :data:`BUMPS`.
	float_t_support : float
		Support end ``T > 0``.
	"""

	str_kind: str
	float_t_support: float

	def __post_init__(self) -> None:
		if self.str_kind not in BUMPS:
			raise DomainError(f"unknown bump {self.str_kind!r}; expected one of {BUMPS}")
		if not self.float_t_support > 0.0:
			raise DomainError(f"bump support must be positive, got {self.float_t_support}")

	def value(self, float_t: float) -> float:
		"""Return ``ζ(t)``."""
		float_s = float_t / self.float_t_support
		if self.str_kind == "zero" or float_s >= 1.0:
			return 0.0
		if self.str_kind == "quadratic":
			return (1.0 - float_s) ** 2
		return 1.0 - float(smoothstep(max(float_s, 0.0), 2))

	def derivative(self, float_t: float) -> float:
		"""Return ``ζ'(t)``."""
		float_s = float_t / self.float_t_support
		if self.str_kind == "zero" or float_s >= 1.0:
			return 0.0
		if self.str_kind == "quadratic":
			return -2.0 * (1.0 - float_s) / self.float_t_support
		if float_s <= 0.0:
			return 0.0
		return -30.0 * float_s**2 * (1.0 - float_s) ** 2 / self.float_t_support


class SpaceTimeTestFunction(metaclass=ABCTypeCheckerMeta):
	"""Nonnegative ``φ(x, y, t)`` with zero normal derivative and support in ``t < T``."""

	@property
	@abstractmethod
	def str_name(self) -> str:
		"""Label used in reports."""

	@property
	@abstractmethod
	def float_t_support(self) -> float:
		"""Time after which ``φ`` vanishes."""

	@property
	def tuple_time_breaks(self) -> tuple[float, ...]:
		"""Times where ``φ_t`` may lose smoothness; the support end by default."""
		return (self.float_t_support,)

	@abstractmethod
	def evaluate(self, float_t: float, array_x: np.ndarray, array_y: np.ndarray) -> np.ndarray:
		"""Return ``φ`` at the given points."""

	@abstractmethod
	def time_derivative(
		self, float_t: float, array_x: np.ndarray, array_y: np.ndarray
	) -> np.ndarray:
		"""Return ``φ_t`` at the given points."""

	@abstractmethod
	def gradient(
		self, float_t: float, array_x: np.ndarray, array_y: np.ndarray
	) -> tuple[np.ndarray, np.ndarray]:
		"""Return ``(∂φ/∂x, ∂φ/∂y)`` at the given points."""

	@abstractmethod
	def laplacian(self, float_t: float, array_x: np.ndarray, array_y: np.ndarray) -> np.ndarray:
		"""Return ``Δφ`` at the given points."""


class CosineBumpTestFunction(SpaceTimeTestFunction):
	"""``φ = ψ ζ`` with ``ψ = 1 + s/2 cos(kπx/Lx) cos(mπy/Ly)`` (``ψ ≡ 1`` for ``k = m = 0``).

	``ψ >= 1/2``, and ``∂ψ/∂ν`` vanishes on every face of the rectangle because the
	derivative of each cosine factor is a sine that is zero at ``0`` and ``L``.

	Parameters
	----------
	tuple_extents : tuple of float
		Domain extents, ``(Lx,)`` or ``(Lx, Ly)``.
	int_k : int
		Mode along x.
	int_m : int
		Mode along y (0 in 1D).
	float_sign : float
		Sign ``s`` of the cosine perturbation, ``1`` or ``-1``.
	bump : TemporalBump
		Time factor ``ζ``.
	"""

	def __init__(
		self,
		tuple_extents: tuple[float, ...],
		int_k: int,
		int_m: int,
		float_sign: float,
		bump: TemporalBump,
	) -> None:
		if len(tuple_extents) not in (1, 2) or min(tuple_extents) <= 0.0:
			raise DomainError(f"invalid extents {tuple_extents}")
		if int_k < 0 or int_m < 0:
			raise DomainError(f"modes must be nonnegative, got ({int_k}, {int_m})")
		if len(tuple_extents) == 1 and int_m != 0:
			raise DomainError("a 1D test function has no y-mode")
		if float_sign not in (1.0, -1.0):
			raise DomainError(f"sign must be 1 or -1, got {float_sign}")
		self._float_lx = tuple_extents[0]
		self._float_ly = tuple_extents[1] if len(tuple_extents) == 2 else 1.0
		self.int_k = int_k
		self.int_m = int_m
		self.float_sign = float_sign
		self.bump = bump

	@property
	def str_name(self) -> str:
		"""Label such as ``cos1x0-/quadratic``."""
		str_sign = "+" if self.float_sign > 0 else "-"
		return f"cos{self.int_k}x{self.int_m}{str_sign}/{self.bump.str_kind}"

	@property
	def float_t_support(self) -> float:
		"""Support end of the time factor."""
		return self.bump.float_t_support

	def _is_constant(self) -> bool:
		return self.int_k == 0 and self.int_m == 0

	def _wavenumbers(self) -> tuple[float, float]:
		return self.int_k * math.pi / self._float_lx, self.int_m * math.pi / self._float_ly

	def _psi(self, array_x: np.ndarray, array_y: np.ndarray) -> np.ndarray:
		if self._is_constant():
			return np.ones(np.broadcast_shapes(array_x.shape, array_y.shape))
		float_kx, float_ky = self._wavenumbers()
		return 1.0 + 0.5 * self.float_sign * np.cos(float_kx * array_x) * np.cos(
			float_ky * array_y
		)

	def evaluate(self, float_t: float, array_x: np.ndarray, array_y: np.ndarray) -> np.ndarray:
		"""Return ``ψ(x, y) ζ(t)``."""
		return np.asarray(self.bump.value(float_t) * self._psi(array_x, array_y))

	def time_derivative(
		self, float_t: float, array_x: np.ndarray, array_y: np.ndarray
	) -> np.ndarray:
		"""Return ``ψ(x, y) ζ'(t)``."""
		return np.asarray(self.bump.derivative(float_t) * self._psi(array_x, array_y))

	def gradient(
		self, float_t: float, array_x: np.ndarray, array_y: np.ndarray
	) -> tuple[np.ndarray, np.ndarray]:
		"""Return ``ζ(t) ∇ψ(x, y)``."""
		tuple_shape = np.broadcast_shapes(array_x.shape, array_y.shape)
		if self._is_constant():
			return np.zeros(tuple_shape), np.zeros(tuple_shape)
		float_kx, float_ky = self._wavenumbers()
		float_scale = 0.5 * self.float_sign * self.bump.value(float_t)
		array_dx = -float_scale * float_kx * np.sin(float_kx * array_x) * np.cos(
			float_ky * array_y
		)
		array_dy = -float_scale * float_ky * np.cos(float_kx * array_x) * np.sin(
			float_ky * array_y
		)
		return (
			np.asarray(np.broadcast_to(array_dx, tuple_shape)),
			np.asarray(np.broadcast_to(array_dy, tuple_shape)),
		)

	def laplacian(self, float_t: float, array_x: np.ndarray, array_y: np.ndarray) -> np.ndarray:
		"""Return ``ζ(t) Δψ(x, y)``."""
		if self._is_constant():
			return np.zeros(np.broadcast_shapes(array_x.shape, array_y.shape))
		float_kx, float_ky = self._wavenumbers()
		array_cos = np.cos(float_kx * array_x) * np.cos(float_ky * array_y)
		return np.asarray(
			-0.5
			* self.float_sign
			* self.bump.value(float_t)
			* (float_kx**2 + float_ky**2)
			* array_cos
		)


class LinearCombination(SpaceTimeTestFunction):
	"""Nonnegative combination ``Σ a_i φ_i`` of test functions.

	Parameters
	----------
	tuple_terms : tuple of (float, SpaceTimeTestFunction)
		Coefficients ``a_i >= 0`` with their test functions.
	"""

	def __init__(self, tuple_terms: tuple[tuple[float, SpaceTimeTestFunction], ...]) -> None:
		if not tuple_terms:
			raise DomainError("a linear combination needs at least one term")
		if any(float_coef < 0.0 for float_coef, _ in tuple_terms):
			raise DomainError("coefficients must be nonnegative")
		self.tuple_terms = tuple_terms

	@property
	def str_name(self) -> str:
		"""Label listing the terms."""
		return " + ".join(f"{float_coef:g}*{phi.str_name}" for float_coef, phi in self.tuple_terms)

	@property
	def float_t_support(self) -> float:
		"""Largest support end among the terms."""
		return max(phi.float_t_support for _, phi in self.tuple_terms)

	@property
	def tuple_time_breaks(self) -> tuple[float, ...]:
		"""Support ends of every term, ascending."""
		return tuple(
			sorted({float_t for _, phi in self.tuple_terms for float_t in phi.tuple_time_breaks})
		)

	def _combine(self, fn_part: Callable[[SpaceTimeTestFunction], np.ndarray]) -> np.ndarray:
		return np.asarray(sum(float_coef * fn_part(phi) for float_coef, phi in self.tuple_terms))

	def evaluate(self, float_t: float, array_x: np.ndarray, array_y: np.ndarray) -> np.ndarray:
		"""Return ``Σ a_i φ_i``."""
		return self._combine(lambda phi: phi.evaluate(float_t, array_x, array_y))

	def time_derivative(
		self, float_t: float, array_x: np.ndarray, array_y: np.ndarray
	) -> np.ndarray:
		"""Return ``Σ a_i ∂_t φ_i``."""
		return self._combine(lambda phi: phi.time_derivative(float_t, array_x, array_y))

	def gradient(
		self, float_t: float, array_x: np.ndarray, array_y: np.ndarray
	) -> tuple[np.ndarray, np.ndarray]:
		"""Return ``Σ a_i ∇φ_i``."""
		return (
			self._combine(lambda phi: phi.gradient(float_t, array_x, array_y)[0]),
			self._combine(lambda phi: phi.gradient(float_t, array_x, array_y)[1]),
		)

	def laplacian(self, float_t: float, array_x: np.ndarray, array_y: np.ndarray) -> np.ndarray:
		"""Return ``Σ a_i Δφ_i``."""
		return self._combine(lambda phi: phi.laplacian(float_t, array_x, array_y))


@type_checker
def default_catalog(
	grid: GridSpec, float_t_support: float, int_size: int = 12, int_max_mode: int = 3
) -> tuple[CosineBumpTestFunction, ...]:
	"""Low-frequency cosine products times both bumps, lowest total mode first.

	Parameters
	----------
	grid : GridSpec
		Mesh whose extents the cosines are scaled to.
	float_t_support : float
		Support end of every bump.
	int_size : int
		Number of members to return.
	int_max_mode : int
		Largest mode per axis.

	Returns
	-------
	tuple of CosineBumpTestFunction
		The catalog, ordered by ``(k + m, k, sign, bump)``.

	Raises
	------
	DomainError
		If ``int_size`` is not in ``[1, available members]``.
	"""
	range_m = range(int_max_mode + 1) if grid.int_dim == 2 else range(1)
	list_keys: list[tuple[int, int, float, str]] = []
	for int_k in range(int_max_mode + 1):
		for int_m in range_m:
			tuple_signs = (1.0,) if int_k == int_m == 0 else (1.0, -1.0)
			for float_sign in tuple_signs:
				for str_bump in ("quadratic", "smoothstep"):
					list_keys.append((int_k, int_m, float_sign, str_bump))
	list_keys.sort(key=lambda key: (key[0] + key[1], key[0], -key[2], key[3]))
	if not 1 <= int_size <= len(list_keys):
		raise DomainError(f"catalog size must lie in [1, {len(list_keys)}], got {int_size}")
	return tuple(
		CosineBumpTestFunction(
			grid.tuple_extents, int_k, int_m, float_sign, TemporalBump(str_bump, float_t_support)
		)
		for int_k, int_m, float_sign, str_bump in list_keys[:int_size]
	)


@type_checker
def _check_support(record: RunRecord, phi: SpaceTimeTestFunction) -> None:
	float_horizon = record.float_horizon
	if phi.float_t_support > float_horizon * (1.0 + _FLOAT_TIME_RTOL):
		raise HorizonError(
			f"test function {phi.str_name} is supported up to t={phi.float_t_support}, "
			f"beyond the record horizon {float_horizon}"
		)


@type_checker
def _face_pairing(
	grid: GridSpec,
	array_face_x: np.ndarray,
	array_face_y: np.ndarray,
	array_weight_x: np.ndarray,
	array_weight_y: np.ndarray,
) -> float:
	"""``Σ_faces a b * hx * hy`` over both face families."""
	return float(
		(np.sum(array_face_x * array_weight_x) + np.sum(array_face_y * array_weight_y))
		* grid.float_cell_volume
	)


@type_checker
def _time_derivative_integral(
	phi: SpaceTimeTestFunction,
	float_t0: float,
	float_t1: float,
	array_x: np.ndarray,
	array_y: np.ndarray,
) -> np.ndarray:
	"""``∫_{t0}^{t1} φ_t dt`` at the given points, Gauss-Legendre between the time breaks."""
	list_cuts = [float_t0]
	list_cuts += [float_t for float_t in phi.tuple_time_breaks if float_t0 < float_t < float_t1]
	list_cuts.append(float_t1)
	array_total = np.zeros(np.broadcast_shapes(array_x.shape, array_y.shape))
	for float_a, float_b in zip(list_cuts[:-1], list_cuts[1:], strict=True):
		float_half = 0.5 * (float_b - float_a)
		float_mid = 0.5 * (float_a + float_b)
		for float_node, float_weight in zip(_ARRAY_GAUSS_NODES, _ARRAY_GAUSS_WEIGHTS, strict=True):
			array_total = array_total + float_half * float(float_weight) * phi.time_derivative(
				float_mid + float_half * float(float_node), array_x, array_y
			)
	return array_total


@type_checker
def v_weak_residual(record: RunRecord, phi: SpaceTimeTestFunction) -> float:
	"""``LHS - RHS`` of the weak form of the signal equation.

	``∫∫ v φ_t + ∫ v₀ φ(·,0) - ∫∫ ∇v·∇φ - ∫∫ u f(v) φ``.

	Parameters
	----------
	record : RunRecord
		Stored trajectory.
	phi : SpaceTimeTestFunction
		Test function supported within the record horizon.

	Returns
	-------
	float
		The residual.

	Raises
	------
	HorizonError
		If ``phi`` is supported beyond the last snapshot.
	"""
	_check_support(record, phi)
	grid = record.grid
	float_vol = grid.float_cell_volume
	array_xc, array_yc = grid.cell_centers()
	array_xfx, array_yfx = grid.x_face_midpoints()
	array_xfy, array_yfy = grid.y_face_midpoints()
	kinetics = record.spec.kinetics
	tuple_states = record.tuple_snapshots
	list_phi = [phi.evaluate(state.float_t, array_xc, array_yc) for state in tuple_states]

	float_lhs = float(np.sum(tuple_states[0].field_v.values * list_phi[0]) * float_vol)
	float_rhs = 0.0
	for int_k in range(len(tuple_states) - 1):
		state = tuple_states[int_k]
		float_t = state.float_t
		float_dt = tuple_states[int_k + 1].float_t - float_t
		array_v = state.field_v.values
		array_phi_t = _time_derivative_integral(
			phi, float_t, tuple_states[int_k + 1].float_t, array_xc, array_yc
		)
		float_lhs += float(np.sum(array_v * array_phi_t) * float_vol)
		grad_v = face_gradient(state.field_v)
		array_gx = phi.gradient(float_t, array_xfx, array_yfx)[0]
		array_gy = phi.gradient(float_t, array_xfy, array_yfy)[1]
		float_diffusion = _face_pairing(grid, grad_v.x, grad_v.y, array_gx, array_gy)
		float_absorption = float(
			np.sum(state.field_u.values * kinetics.evaluate(array_v) * list_phi[int_k])
			* float_vol
		)
		float_rhs += float_dt * (float_diffusion + float_absorption)
	return float_lhs - float_rhs


@type_checker
def _transform(str_transform: str) -> tuple[Callable[[np.ndarray], np.ndarray], ...]:
	"""``(Φ, Φ', Φ'')`` of a supersolution transform."""
	if str_transform == "ln":
		return (np.log1p, lambda s: 1.0 / (s + 1.0), lambda s: -1.0 / (s + 1.0) ** 2)
	if str_transform == "identity":
		return (lambda s: s, np.ones_like, np.zeros_like)
	if str_transform == "reciprocal":
		return (
			lambda s: 1.0 - 1.0 / (s + 1.0),
			lambda s: 1.0 / (s + 1.0) ** 2,
			lambda s: -2.0 / (s + 1.0) ** 3,
		)
	raise DomainError(f"unknown transform {str_transform!r}; expected one of {TRANSFORMS}")


@type_checker
def u_supersolution_residual(
	record: RunRecord, phi: SpaceTimeTestFunction, str_transform: str = "ln"
) -> float:
	"""``LHS - RHS`` of the very weak ``Φ``-supersolution inequality for the density.

	LHS: ``-∫∫ Φ(u) φ_t - ∫ Φ(u₀) φ(·,0)``. RHS: ``∫∫ Φ(u) Δφ - ∫∫ Φ''(u)|∇u|² φ
	+ ∫∫ u Φ''(u) ∇u·(S_ε∇v) φ + ∫∫ u Φ'(u) (S_ε∇v)·∇φ``. A nonnegative value certifies the
	inequality for this ``φ``.

	Parameters
	----------
	record : RunRecord
		Stored trajectory.
	phi : SpaceTimeTestFunction
		Nonnegative test function supported within the record horizon.
	str_transform : str
		``Φ``: ``"ln"`` (``ln(s+1)``), ``"identity"`` (``s``) or ``"reciprocal"``
		(``1 - 1/(s+1)``).

	Returns
	-------
	float
		The residual.

	Raises
	------
	DomainError
		If ``phi`` takes a negative value on the mesh or the transform is unknown.
	HorizonError
		If ``phi`` is supported beyond the last snapshot.
	"""
	fn_phi, fn_dphi, fn_ddphi = _transform(str_transform)
	_check_support(record, phi)
	grid = record.grid
	float_vol = grid.float_cell_volume
	array_xc, array_yc = grid.cell_centers()
	array_xfx, array_yfx = grid.x_face_midpoints()
	array_xfy, array_yfy = grid.y_face_midpoints()
	tuple_states = record.tuple_snapshots
	list_phi = [phi.evaluate(state.float_t, array_xc, array_yc) for state in tuple_states]
	if min(float(array_phi.min()) for array_phi in list_phi) < _FLOAT_NEG_PHI:
		raise DomainError(f"test function {phi.str_name} takes negative values")

	array_u0 = np.maximum(tuple_states[0].field_u.values, 0.0)
	float_lhs = -float(np.sum(fn_phi(array_u0) * list_phi[0]) * float_vol)
	float_rhs = 0.0
	for int_k in range(len(tuple_states) - 1):
		state = tuple_states[int_k]
		float_t = state.float_t
		float_dt = tuple_states[int_k + 1].float_t - float_t
		array_u = np.maximum(state.field_u.values, 0.0)
		array_phi_u = fn_phi(array_u)
		array_phi_t = _time_derivative_integral(
			phi, float_t, tuple_states[int_k + 1].float_t, array_xc, array_yc
		)
		float_lhs -= float(np.sum(array_phi_u * array_phi_t) * float_vol)

		phi_fx = phi.evaluate(float_t, array_xfx, array_yfx)
		phi_fy = phi.evaluate(float_t, array_xfy, array_yfy)
		if min(float(phi_fx.min(initial=0.0)), float(phi_fy.min(initial=0.0))) < _FLOAT_NEG_PHI:
			raise DomainError(f"test function {phi.str_name} takes negative values")
		array_gx = phi.gradient(float_t, array_xfx, array_yfx)[0]
		array_gy = phi.gradient(float_t, array_xfy, array_yfy)[1]
		grad_u = face_gradient(state.field_u)
		mean_u = face_mean(state.field_u)
		array_ux = np.maximum(mean_u.x, 0.0)
		array_uy = np.maximum(mean_u.y, 0.0)
		velocity = face_velocity(state, record.spec)

		float_transport = float(
			np.sum(array_phi_u * phi.laplacian(float_t, array_xc, array_yc)) * float_vol
		)
		float_dissipation = _face_pairing(
			grid,
			fn_ddphi(array_ux) * grad_u.x**2,
			fn_ddphi(array_uy) * grad_u.y**2,
			phi_fx,
			phi_fy,
		)
		float_cross = _face_pairing(
			grid,
			array_ux * fn_ddphi(array_ux) * grad_u.x * velocity.x,
			array_uy * fn_ddphi(array_uy) * grad_u.y * velocity.y,
			phi_fx,
			phi_fy,
		)
		float_drift = _face_pairing(
			grid,
			array_ux * fn_dphi(array_ux) * velocity.x,
			array_uy * fn_dphi(array_uy) * velocity.y,
			array_gx,
			array_gy,
		)
		float_rhs += float_dt * (float_transport - float_dissipation + float_cross + float_drift)
	return float_lhs - float_rhs


@dataclass(frozen=True)
class MassReport(metaclass=TypeChecker):
	"""Mass inequality ``∫u(t) <= ∫u₀`` over all snapshots.

	Parameters
	----------
	tuple_masses : tuple of float
		``∫u`` at every snapshot.
	float_rtol : float
		Relative slack on ``∫u₀``.
	"""

	tuple_masses: tuple[float, ...]
	float_rtol: float = 1e-12

	@property
	def float_mass0(self) -> float:
		"""Initial mass."""
		return self.tuple_masses[0]

	@property
	def float_max_excess(self) -> float:
		"""Largest ``∫u(t) - ∫u₀`` (negative when mass was lost everywhere)."""
		return max(float_mass - self.float_mass0 for float_mass in self.tuple_masses)

	@property
	def bool_passed(self) -> bool:
		"""Whether every snapshot stays within ``∫u₀ (1 + rtol)``."""
		return self.float_max_excess <= self.float_rtol * abs(self.float_mass0)

	def to_dict(self) -> dict[str, Any]:
		"""Return the report as JSON-ready values."""
		return {
			"mass0": self.float_mass0,
			"max_excess": self.float_max_excess,
			"rtol": self.float_rtol,
			"passed": self.bool_passed,
		}


@type_checker
def mass_inequality_check(record: RunRecord, float_rtol: float = 1e-12) -> MassReport:
	"""Compare ``∫u`` at every snapshot with the initial mass.

	Parameters
	----------
	record : RunRecord
		Stored trajectory.
	float_rtol : float
		Relative slack.

	Returns
	-------
	MassReport
		Report; a violation is a finding, not an exception.
	"""
	return MassReport(
		tuple(integrate(state.field_u) for state in record.tuple_snapshots), float_rtol
	)


@type_checker
def _validate_samples(
	array_times: np.ndarray, array_values: np.ndarray, float_h: float
) -> float:
	"""Validate a sample series and return its largest spacing."""
	if array_times.ndim != 1 or array_times.size == 0:
		raise DomainError("sample times must be a nonempty 1D array")
	if array_values.shape[0] != array_times.size:
		raise DomainError(
			f"{array_times.size} sample times but {array_values.shape[0]} sample values"
		)
	array_dt = np.diff(array_times)
	if np.any(array_dt <= 0.0):
		raise DomainError("sample times must be strictly increasing")
	if not float_h > 0.0:
		raise DomainError(f"window must be positive, got {float_h}")
	float_spacing = float(array_dt.max()) if array_dt.size else 0.0
	if float_h < float_spacing * (1.0 - _FLOAT_TIME_RTOL):
		raise SnapshotWindowError(
			f"window {float_h} is smaller than the snapshot spacing {float_spacing}"
		)
	return float_spacing


@type_checker
def steklov_average(
	array_times: np.ndarray,
	array_values: np.ndarray,
	float_h: float,
	array_extension: np.ndarray | None = None,
) -> np.ndarray:
	"""Trailing-window average ``(1/h) ∫_{t-h}^t w(s) ds`` at every sample time.

	``w`` is piecewise constant with value ``w_k`` on ``[t_k, t_k+1)`` and equals
	``array_extension`` before the first sample (the first sample by default).

	Parameters
	----------
	array_times : np.ndarray
		Strictly increasing sample times, shape ``(N,)``.
	array_values : np.ndarray
		Samples, shape ``(N, ...)``.
	float_h : float
		Window length, at least the largest sample spacing.
	array_extension : np.ndarray | None
		Values for ``t`` before the first sample, broadcast to one sample.

	Returns
	-------
	np.ndarray
		Averages, same shape as ``array_values``.

	Raises
	------
	SnapshotWindowError
		If the window is smaller than the sample spacing.
	DomainError
		If the series is malformed or the window not positive.
	"""
	array_times = np.asarray(array_times, dtype=np.float64)
	array_values = np.asarray(array_values, dtype=np.float64)
	_validate_samples(array_times, array_values, float_h)
	array_ext = np.broadcast_to(
		array_values[0] if array_extension is None else np.asarray(array_extension, np.float64),
		array_values.shape[1:],
	)
	array_dt = np.diff(array_times).reshape((-1,) + (1,) * (array_values.ndim - 1))
	array_primitive = np.concatenate(
		[np.zeros((1,) + array_values.shape[1:]), np.cumsum(array_dt * array_values[:-1], axis=0)]
	)
	float_t0 = float(array_times[0])

	def _primitive_at(float_t: float) -> np.ndarray:
		if float_t <= float_t0:
			return (float_t - float_t0) * array_ext
		int_k = int(np.searchsorted(array_times, float_t, side="right")) - 1
		return array_primitive[int_k] + (float_t - array_times[int_k]) * array_values[int_k]

	return np.stack(
		[
			(array_primitive[int_k] - _primitive_at(float(float_t) - float_h)) / float_h
			for int_k, float_t in enumerate(array_times)
		]
	)


@dataclass(frozen=True)
class SteklovReport(metaclass=TypeChecker):
	"""``‖A_h w‖_{L^p(0,T)} <= (1 + Δt/h)^{1/p} ‖w‖_{L^p(-h,T)}`` on a sample series.

	Parameters
	----------
	float_p : float
		Exponent, 2 or ``inf``.
	float_average_norm : float
		Norm of the averages over ``(0, T)``.
	float_data_norm : float
		Norm of the extended samples over ``(-h, T)``.
	float_slack : float
		Piecewise-constant sampling factor ``(1 + Δt/h)^{1/p}``.
	"""

	float_p: float
	float_average_norm: float
	float_data_norm: float
	float_slack: float

	@property
	def bool_passed(self) -> bool:
		"""Whether the bound holds up to round-off."""
		return self.float_average_norm <= self.float_slack * self.float_data_norm * (
			1.0 + 1e-12
		)


@type_checker
def steklov_bound_check(
	array_times: np.ndarray,
	array_values: np.ndarray,
	float_h: float,
	float_p: float = 2.0,
	array_extension: np.ndarray | None = None,
	float_cell_volume: float = 1.0,
) -> SteklovReport:
	"""Check that the Steklov average does not increase the ``L^p`` norm.

	Parameters
	----------
	array_times, array_values, float_h, array_extension
		As for :func:`steklov_average`.
	float_p : float
		2 or ``inf``.
	float_cell_volume : float
		Spatial quadrature weight of one sample entry.

	Returns
	-------
	SteklovReport
		The two norms and the admissible slack.
	"""
	if float_p not in (2.0, math.inf):
		raise DomainError(f"p must be 2 or inf, got {float_p}")
	array_times = np.asarray(array_times, dtype=np.float64)
	array_values = np.asarray(array_values, dtype=np.float64)
	float_spacing = _validate_samples(array_times, array_values, float_h)
	array_avg = steklov_average(array_times, array_values, float_h, array_extension)
	array_ext = np.broadcast_to(
		array_values[0] if array_extension is None else np.asarray(array_extension, np.float64),
		array_values.shape[1:],
	)
	array_dt = np.diff(array_times)
	if float_p == math.inf:
		float_avg = float(np.abs(array_avg[:-1]).max(initial=0.0))
		float_data = max(
			float(np.abs(array_ext).max(initial=0.0)),
			float(np.abs(array_values[:-1]).max(initial=0.0)),
		)
		return SteklovReport(float_p, float_avg, float_data, 1.0)
	if array_dt.size == 0:
		return SteklovReport(float_p, 0.0, 0.0, 1.0)
	array_avg_sq = (array_avg[:-1] ** 2).reshape(array_dt.size, -1).sum(axis=1)
	array_val_sq = (array_values[:-1] ** 2).reshape(array_dt.size, -1).sum(axis=1)
	float_avg = math.sqrt(float(np.sum(array_dt * array_avg_sq)) * float_cell_volume)
	float_data = math.sqrt(
		(float(np.sum(array_dt * array_val_sq)) + float_h * float(np.sum(array_ext**2)))
		* float_cell_volume
	)
	return SteklovReport(float_p, float_avg, float_data, math.sqrt(1.0 + float_spacing / float_h))


@type_checker
def residual_tolerance(float_h: float, float_dt: float, float_c_tol: float = 5.0) -> float:
	"""Consistency budget ``C_tol (h² + dt)`` of a discrete residual.

	Parameters
	----------
	float_h : float
		Mesh size.
	float_dt : float
		Snapshot spacing.
	float_c_tol : float
		Calibration constant.

	Returns
	-------
	float
		The tolerance.
	"""
	return float_c_tol * (float_h**2 + float_dt)


@dataclass(frozen=True)
class EntropyReport(metaclass=TypeChecker):
	"""Energy inequality of the signal equation up to time ``T``.

	``LHS = ½∫v(T)² - ½∫v₀² + ∫∫|∇v|²`` and ``RHS = -∫∫ u v f(v)``.

	Parameters
	----------
	float_t : float
		Snapshot time the check was evaluated at.
	float_lhs : float
		Left-hand side.
	float_rhs : float
		Right-hand side.
	float_tolerance : float
		Admissible negative gap.
	"""

	float_t: float
	float_lhs: float
	float_rhs: float
	float_tolerance: float

	@property
	def float_gap(self) -> float:
		"""``LHS - RHS``; the inequality asks for ``>= 0``."""
		return self.float_lhs - self.float_rhs

	@property
	def bool_passed(self) -> bool:
		"""Whether ``LHS - RHS >= -tol``."""
		return self.float_gap >= -self.float_tolerance

	def to_dict(self) -> dict[str, Any]:
		"""Return the report as JSON-ready values."""
		return {
			"T": self.float_t,
			"lhs": self.float_lhs,
			"rhs": self.float_rhs,
			"gap": self.float_gap,
			"abs_gap": abs(self.float_gap),
			"tolerance": self.float_tolerance,
			"passed": self.bool_passed,
		}


@type_checker
def entropy_inequality_check(
	record: RunRecord, float_t: float | None = None, float_c_tol: float = 5.0
) -> EntropyReport:
	"""Assemble the energy inequality of ``v`` from the snapshots up to ``T``.

	Parameters
	----------
	record : RunRecord
		Stored trajectory.
	float_t : float | None
		Evaluation time; the last snapshot at or before it is used. Defaults to the horizon.
	float_c_tol : float
		Calibration constant of :func:`residual_tolerance`.

	Returns
	-------
	EntropyReport
		Both sides and the tolerance.

	Raises
	------
	HorizonError
		If ``T`` lies outside the recorded time span.
	"""
	float_horizon = record.float_horizon
	float_t = float_horizon if float_t is None else float_t
	float_slack = _FLOAT_TIME_RTOL * max(1.0, abs(float_horizon))
	if float_t > float_horizon + float_slack or float_t < record.initial.float_t - float_slack:
		raise HorizonError(
			f"T={float_t} lies outside the recorded span [{record.initial.float_t}, "
			f"{float_horizon}]"
		)
	tuple_states = tuple(
		state for state in record.tuple_snapshots if state.float_t <= float_t + float_slack
	)
	grid = record.grid
	float_vol = grid.float_cell_volume
	kinetics = record.spec.kinetics
	float_dissipation = 0.0
	float_absorption = 0.0
	for state, state_next in zip(tuple_states[:-1], tuple_states[1:], strict=True):
		float_dt = state_next.float_t - state.float_t
		grad_v = face_gradient(state.field_v)
		float_dissipation += float_dt * _face_pairing(grid, grad_v.x, grad_v.y, grad_v.x, grad_v.y)
		array_v = state.field_v.values
		float_absorption += float_dt * float(
			np.sum(state.field_u.values * array_v * kinetics.evaluate(array_v)) * float_vol
		)
	float_lhs = (
		0.5 * float(np.sum(tuple_states[-1].field_v.values ** 2) * float_vol)
		- 0.5 * float(np.sum(tuple_states[0].field_v.values ** 2) * float_vol)
		+ float_dissipation
	)
	float_tolerance = residual_tolerance(grid.float_h, record.float_snapshot_spacing, float_c_tol)
	return EntropyReport(tuple_states[-1].float_t, float_lhs, -float_absorption, float_tolerance)


@dataclass(frozen=True)
class ResidualLine(metaclass=TypeChecker):
	"""Residuals of one test function.

	Parameters
	----------
	str_name : str
		Test-function label.
	float_v_residual : float
		Weak-form residual of the signal equation (passes when ``|r| <= tol``).
	float_u_residual : float
		Supersolution residual of the density (passes when ``r >= -tol``).
	"""

	str_name: str
	float_v_residual: float
	float_u_residual: float


@dataclass(frozen=True)
class WeakResidualReport(metaclass=TypeChecker):
	"""Residuals over a test-function catalog.

	Parameters
	----------
	tuple_lines : tuple of ResidualLine
		One line per catalog member.
	float_tolerance : float
		``C_tol (h² + Δt)``.
	str_transform : str
		Supersolution transform used.
	tuple_slopes : tuple of float
		Observed orders of a refinement series, when one was supplied.
	tuple_levels : tuple of (float, float)
		``(h, max |v residual|)`` of every refinement level, coarsest first.
	"""

	tuple_lines: tuple[ResidualLine, ...]
	float_tolerance: float
	str_transform: str = "ln"
	tuple_slopes: tuple[float, ...] = ()
	tuple_levels: tuple[tuple[float, float], ...] = ()

	@property
	def float_max_abs_v(self) -> float:
		"""Largest ``|v residual|``."""
		return max((abs(line.float_v_residual) for line in self.tuple_lines), default=0.0)

	@property
	def float_min_u(self) -> float:
		"""Smallest density residual."""
		return min((line.float_u_residual for line in self.tuple_lines), default=0.0)

	@property
	def bool_passed(self) -> bool:
		"""Whether every residual lies within tolerance."""
		return (
			self.float_max_abs_v <= self.float_tolerance
			and self.float_min_u >= -self.float_tolerance
		)

	def to_dict(self) -> dict[str, Any]:
		"""Return the report as JSON-ready values, including catalog coverage."""
		return {
			"transform": self.str_transform,
			"catalog_size": len(self.tuple_lines),
			"tolerance": self.float_tolerance,
			"max_abs_v_residual": self.float_max_abs_v,
			"min_u_residual": self.float_min_u,
			"slopes": list(self.tuple_slopes),
			"levels": [
				{"h": float_h, "max_abs_v_residual": float_error}
				for float_h, float_error in self.tuple_levels
			],
			"passed": self.bool_passed,
			"residuals": [
				{
					"phi": line.str_name,
					"v_residual": line.float_v_residual,
					"u_residual": line.float_u_residual,
					"v_passed": abs(line.float_v_residual) <= self.float_tolerance,
					"u_passed": line.float_u_residual >= -self.float_tolerance,
				}
				for line in self.tuple_lines
			],
		}


@type_checker
def weak_residual_report(
	record: RunRecord,
	catalog: Sequence[SpaceTimeTestFunction],
	float_c_tol: float = 5.0,
	str_transform: str = "ln",
	int_jobs: int = 1,
) -> WeakResidualReport:
	"""Evaluate both residuals for every catalog member.

	Parameters
	----------
	record : RunRecord
		Stored trajectory.
	catalog : sequence of SpaceTimeTestFunction
		Test functions.
	float_c_tol : float
		Calibration constant of :func:`residual_tolerance`.
	str_transform : str
		Supersolution transform.
	int_jobs : int
		Worker threads; members are independent.

	Returns
	-------
	WeakResidualReport
		Lines in catalog order.
	"""
	_transform(str_transform)

	def _line(phi: SpaceTimeTestFunction) -> ResidualLine:
		return ResidualLine(
			phi.str_name,
			v_weak_residual(record, phi),
			u_supersolution_residual(record, phi, str_transform),
		)

	with ThreadPoolExecutor(max_workers=max(1, int_jobs)) as executor:
		tuple_lines = tuple(executor.map(_line, catalog))
	return WeakResidualReport(
		tuple_lines,
		residual_tolerance(record.grid.float_h, record.float_snapshot_spacing, float_c_tol),
		str_transform,
	)


@type_checker
def refinement_slopes(
	tuple_h: Sequence[float], tuple_errors: Sequence[float]
) -> tuple[float, ...]:
	"""Observed orders ``log(e_i / e_i+1) / log(h_i / h_i+1)`` of a refinement series.

	Parameters
	----------
	tuple_h : sequence of float
		Mesh sizes, coarsest first.
	tuple_errors : sequence of float
		Error magnitudes at those sizes.

	Returns
	-------
	tuple of float
		One slope per consecutive pair; ``inf`` when the finer error is 0.

	Raises
	------
	DomainError
		On length mismatch, a nonpositive size or a negative error.
	"""
	if len(tuple_h) != len(tuple_errors) or len(tuple_h) < 2:
		raise DomainError("need at least two sizes with one error each")
	if min(tuple_h) <= 0.0 or min(tuple_errors) < 0.0:
		raise DomainError("sizes must be positive and errors nonnegative")
	list_slopes: list[float] = []
	for int_i in range(len(tuple_h) - 1):
		float_coarse, float_fine = abs(tuple_errors[int_i]), abs(tuple_errors[int_i + 1])
		if float_fine == 0.0:
			list_slopes.append(math.inf)
		elif float_coarse == 0.0:
			list_slopes.append(-math.inf)
		else:
			list_slopes.append(
				math.log(float_coarse / float_fine) / math.log(tuple_h[int_i] / tuple_h[int_i + 1])
			)
	return tuple(list_slopes)


@type_checker
def weak_residual_refinement(
	tuple_records: Sequence[RunRecord],
	catalog: Sequence[SpaceTimeTestFunction],
	float_c_tol: float = 5.0,
	str_transform: str = "ln",
	int_jobs: int = 1,
) -> WeakResidualReport:
	"""Residual report of the finest record with observed orders over a mesh series.

	The error of a level is its largest ``|v residual|`` over the catalog. Levels are ordered
	coarsest first and the slopes compare consecutive levels.

	Parameters
	----------
	tuple_records : sequence of RunRecord
		Runs of one model on successively refined meshes, in any order.
	catalog : sequence of SpaceTimeTestFunction
		Test functions, shared by every level.
	float_c_tol : float
		Calibration constant of :func:`residual_tolerance`.
	str_transform : str
		Supersolution transform.
	int_jobs : int
		Worker threads per level.

	Returns
	-------
	WeakResidualReport
		Lines and tolerance of the finest level, with ``tuple_slopes`` and ``tuple_levels``.

	Raises
	------
	DomainError
		With fewer than two records, differing domains or a repeated mesh size.
	"""
	if len(tuple_records) < 2:
		raise DomainError(f"a refinement series needs two records, got {len(tuple_records)}")
	list_records = sorted(tuple_records, key=lambda record: -record.grid.float_h)
	if len({record.grid.tuple_extents for record in list_records}) != 1:
		raise DomainError("refinement records must share the domain extents")
	tuple_h = tuple(record.grid.float_h for record in list_records)
	if len(set(tuple_h)) != len(tuple_h):
		raise DomainError(f"refinement records repeat a mesh size: {tuple_h}")
	tuple_reports = tuple(
		weak_residual_report(record, catalog, float_c_tol, str_transform, int_jobs)
		for record in list_records
	)
	tuple_errors = tuple(report.float_max_abs_v for report in tuple_reports)
	return replace(
		tuple_reports[-1],
		tuple_slopes=refinement_slopes(tuple_h, tuple_errors),
		tuple_levels=tuple(zip(tuple_h, tuple_errors, strict=True)),
	)


__all__ = [
	"BUMPS",
	"TRANSFORMS",
	"CosineBumpTestFunction",
	"EntropyReport",
	"LinearCombination",
	"MassReport",
	"ResidualLine",
	"SpaceTimeTestFunction",
	"SteklovReport",
	"TemporalBump",
	"WeakResidualReport",
	"default_catalog",
	"entropy_inequality_check",
	"mass_inequality_check",
	"refinement_slopes",
	"residual_tolerance",
	"steklov_average",
	"steklov_bound_check",
	"u_supersolution_residual",
	"v_weak_residual",
	"weak_residual_refinement",
	"weak_residual_report",
]
