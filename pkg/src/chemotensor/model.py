"""Continuous model data: signal kinetics, sensitivity tensor, envelope and cutoffs.

The simulated system is

	u_t = Δu - ∇·(u S_ε(x, u, v) ∇v),    v_t = Δv - u f(v),

with no-flux boundaries and ``S_ε(x, u, v) = ρ_ε(x) χ_ε(u) S(x, u, v)``. The cutoffs are
built from the smoothstep ``η``: ``ρ_ε(x) = η((dist(x, ∂Ω) - ε/2) / (ε/2))`` and
``χ_ε(u) = η(2 - 2εu)``, both clamped to ``[0, 1]``.

Matrix sizes in the hypothesis check use the Frobenius norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from chemotensor._internal.utils.typing import TypeChecker, type_checker
from chemotensor.errors import DomainError
from chemotensor.expressions import CoefficientExpression


KINETICS_TAGS: frozenset[str] = frozenset({"zero", "linear", "monod", "expression"})
TENSOR_TAGS: frozenset[str] = frozenset(
	{"zero", "scalar", "rotational", "saturating", "expression"}
)

# Smoothstep polynomials by order: C1 cubic, C2 quintic, C3 septic.
_DICT_SMOOTHSTEP: dict[int, tuple[float, ...]] = {
	1: (0.0, 0.0, 3.0, -2.0),
	2: (0.0, 0.0, 0.0, 10.0, -15.0, 6.0),
	3: (0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0),
}

_FLOAT_FD_STEP = 1e-6


@type_checker
def smoothstep(array_s: np.ndarray | float, int_order: int = 2) -> np.ndarray:
	"""Clamped smoothstep ``η``: 0 below 0, 1 above 1, a monotone polynomial in between.

	Parameters
	----------
	array_s : np.ndarray | float
		Arguments.
	int_order : int
		Smoothness order; 2 gives ``6s^5 - 15s^4 + 10s^3``.

	Returns
	-------
	np.ndarray
		Values in ``[0, 1]``.

	Raises
	------
	DomainError
		For an unknown order.
	"""
	if int_order not in _DICT_SMOOTHSTEP:
		raise DomainError(f"smoothstep order must be one of {sorted(_DICT_SMOOTHSTEP)}")
	array_clamped = np.clip(np.asarray(array_s, dtype=np.float64), 0.0, 1.0)
	tuple_coefs = _DICT_SMOOTHSTEP[int_order]
	return np.asarray(np.polynomial.polynomial.polyval(array_clamped, tuple_coefs))


@dataclass(frozen=True)
class Kinetics(metaclass=TypeChecker):
	"""Signal consumption rate ``f``.

	Parameters
	----------
	str_tag : str
		``"zero"``, ``"linear"`` (``κv``), ``"monod"`` (``κv / (1 + v)``) or ``"expression"``.
	float_kappa : float
		Rate constant of the linear and monod forms.
	str_expression : str | None
		Expression in ``v`` for the ``"expression"`` tag.

	Raises
	------
	DomainError
		On an unknown tag, a non-positive rate, or a missing expression.
	"""

	str_tag: str = "linear"
	float_kappa: float = 1.0
	str_expression: str | None = None
	_expression: CoefficientExpression | None = field(
		init=False, default=None, repr=False, compare=False
	)

	def __post_init__(self) -> None:
		if self.str_tag not in KINETICS_TAGS:
			raise DomainError(f"kinetics tag {self.str_tag!r} not in {sorted(KINETICS_TAGS)}")
		if self.str_tag in ("linear", "monod") and not self.float_kappa > 0.0:
			raise DomainError(f"kinetics rate must be positive, got {self.float_kappa}")
		if self.str_tag == "expression":
			if self.str_expression is None:
				raise DomainError("expression kinetics needs str_expression")
			expression = CoefficientExpression(self.str_expression)
			if not expression.variables <= {"v"}:
				raise DomainError(
					f"kinetics may only read v, got {sorted(expression.variables)}"
				)
			object.__setattr__(self, "_expression", expression)

	def evaluate(self, array_v: np.ndarray | float) -> np.ndarray:
		"""Return ``f(v)``.

		Parameters
		----------
		array_v : np.ndarray | float
			Concentrations.

		Returns
		-------
		np.ndarray
			Rates.
		"""
		array_v = np.asarray(array_v, dtype=np.float64)
		if self.str_tag == "zero":
			return np.zeros_like(array_v)
		if self.str_tag == "linear":
			return np.asarray(self.float_kappa * array_v)
		if self.str_tag == "monod":
			return np.asarray(self.float_kappa * array_v / (1.0 + array_v))
		expression = self._expression
		if expression is None:
			raise DomainError("expression kinetics was built without an expression")
		return expression.evaluate(v=array_v)

	def derivative(self, array_v: np.ndarray | float) -> np.ndarray:
		"""Return ``f'(v)``; expressions use a central difference (one-sided at 0).

		Parameters
		----------
		array_v : np.ndarray | float
			Concentrations.

		Returns
		-------
		np.ndarray
			Derivatives.
		"""
		array_v = np.asarray(array_v, dtype=np.float64)
		if self.str_tag == "zero":
			return np.zeros_like(array_v)
		if self.str_tag == "linear":
			return np.full_like(array_v, self.float_kappa)
		if self.str_tag == "monod":
			return np.asarray(self.float_kappa / (1.0 + array_v) ** 2)
		array_step = _FLOAT_FD_STEP * np.maximum(1.0, np.abs(array_v))
		array_left = np.maximum(array_v - array_step, 0.0)
		array_right = array_v + array_step
		return np.asarray(
			(self.evaluate(array_right) - self.evaluate(array_left)) / (array_right - array_left)
		)

	def absorption_rate(self, array_v: np.ndarray | float) -> np.ndarray:
		"""Return ``f(v) / v``, continued by ``f'(0)`` where ``v = 0``.

		Parameters
		----------
		array_v : np.ndarray | float
			Concentrations.

		Returns
		-------
		np.ndarray
			Linearised absorption rates.
		"""
		array_v = np.asarray(array_v, dtype=np.float64)
		array_positive = array_v > 0.0
		array_safe = np.where(array_positive, array_v, 1.0)
		return np.where(
			array_positive,
			self.evaluate(array_safe) / array_safe,
			self.derivative(np.zeros_like(array_v)),
		)

	def supremum(self, float_v_max: float, int_samples: int = 1025) -> float:
		"""Sampled ``sup f`` on ``[0, float_v_max]``.

		Parameters
		----------
		float_v_max : float
			Upper end of the interval.
		int_samples : int
			Number of equispaced samples.

		Returns
		-------
		float
			Largest sampled rate.
		"""
		return float(np.max(self.evaluate(np.linspace(0.0, float_v_max, int_samples))))


@dataclass(frozen=True)
class Envelope(metaclass=TypeChecker):
	"""Growth envelope ``S₀``, a nondecreasing bound on the tensor size.

	Parameters
	----------
	float_value : float
		Constant envelope value, used when ``str_expression`` is ``None``.
	str_expression : str | None
		Expression in ``v``.
	"""

	float_value: float = 0.0
	str_expression: str | None = None
	_expression: CoefficientExpression | None = field(
		init=False, default=None, repr=False, compare=False
	)

	def __post_init__(self) -> None:
		if self.str_expression is not None:
			expression = CoefficientExpression(self.str_expression)
			if not expression.variables <= {"v"}:
				raise DomainError(
					f"the envelope may only read v, got {sorted(expression.variables)}"
				)
			object.__setattr__(self, "_expression", expression)
		elif self.float_value < 0.0:
			raise DomainError(f"envelope value must be nonnegative, got {self.float_value}")

	def evaluate(self, array_v: np.ndarray | float) -> np.ndarray:
		"""Return ``S₀(v)``.

		Parameters
		----------
		array_v : np.ndarray | float
			Concentrations.

		Returns
		-------
		np.ndarray
			Envelope values.
		"""
		array_v = np.asarray(array_v, dtype=np.float64)
		if self._expression is None:
			return np.full_like(array_v, self.float_value)
		return self._expression.evaluate(v=array_v)


@dataclass(frozen=True)
class SensitivityTensor(metaclass=TypeChecker):
	"""Sensitivity tensor ``S(x, u, v)``.

	Parameters
	----------
	str_tag : str
		``"zero"``; ``"scalar"`` (``χI``); ``"rotational"`` (``[[χ, β], [-β, χ]]``, which
		reduces to ``χ`` in 1D); ``"saturating"`` (``χ / (1 + u) I``); ``"expression"``.
	float_chi : float
		Diagonal strength.
	float_beta : float
		Rotational strength.
	tuple_entries : tuple of str
		Row-major entry expressions in ``x``, ``y``, ``u``, ``v`` for the ``"expression"`` tag
		(one entry in 1D, four in 2D).
	envelope : Envelope | None
		Explicit envelope. Built-in tags default to their constant Frobenius bound;
		expression tensors must supply one.

	Raises
	------
	DomainError
		On an unknown tag or a missing expression envelope.
	"""

	str_tag: str = "scalar"
	float_chi: float = 1.0
	float_beta: float = 0.0
	tuple_entries: tuple[str, ...] = ()
	envelope: Envelope | None = None
	_expressions: tuple[CoefficientExpression, ...] = field(
		init=False, default=(), repr=False, compare=False
	)

	def __post_init__(self) -> None:
		if self.str_tag not in TENSOR_TAGS:
			raise DomainError(f"tensor tag {self.str_tag!r} not in {sorted(TENSOR_TAGS)}")
		if self.str_tag == "expression":
			if len(self.tuple_entries) not in (1, 4):
				raise DomainError("an expression tensor has 1 (1D) or 4 (2D) entries")
			if self.envelope is None:
				raise DomainError("an expression tensor needs an explicit envelope")
			object.__setattr__(
				self,
				"_expressions",
				tuple(CoefficientExpression(str_entry) for str_entry in self.tuple_entries),
			)

	def resolved_envelope(self, int_dim: int) -> Envelope:
		"""Return the explicit envelope, or the constant Frobenius bound of a built-in tag.

		Parameters
		----------
		int_dim : int
			Space dimension.

		Returns
		-------
		Envelope
			The envelope ``S₀``.
		"""
		if self.envelope is not None:
			return self.envelope
		float_chi = abs(self.float_chi)
		if self.str_tag == "zero":
			return Envelope(0.0)
		if self.str_tag == "rotational" and int_dim == 2:
			return Envelope(float(np.sqrt(2.0 * self.float_chi**2 + 2.0 * self.float_beta**2)))
		return Envelope(float_chi * float(np.sqrt(int_dim)))

	def evaluate(
		self,
		array_x: np.ndarray | float,
		array_y: np.ndarray | float,
		array_u: np.ndarray | float,
		array_v: np.ndarray | float,
		int_dim: int,
	) -> np.ndarray:
		"""Return ``S`` with shape ``(n, n, *broadcast shape)``.

		Parameters
		----------
		array_x, array_y : np.ndarray | float
			Position components (``array_y`` is ignored by built-in tags).
		array_u, array_v : np.ndarray | float
			Density and concentration.
		int_dim : int
			Space dimension ``n``.

		Returns
		-------
		np.ndarray
			Tensor entries.

		Raises
		------
		DomainError
			If an expression tensor's entry count does not match ``int_dim``.
		"""
		list_inputs = [
			np.asarray(array_in, dtype=np.float64)
			for array_in in (array_x, array_y, array_u, array_v)
		]
		tuple_shape = np.broadcast_shapes(*(array_in.shape for array_in in list_inputs))
		array_x, array_y, array_u, array_v = (
			np.broadcast_to(array_in, tuple_shape) for array_in in list_inputs
		)
		array_out = np.zeros((int_dim, int_dim, *tuple_shape))
		if self.str_tag == "zero":
			return array_out
		if self.str_tag == "expression":
			if len(self._expressions) != int_dim * int_dim:
				raise DomainError(
					f"expression tensor has {len(self._expressions)} entries, dimension {int_dim}"
				)
			for int_k, expression in enumerate(self._expressions):
				array_out[int_k // int_dim, int_k % int_dim] = expression.evaluate(
					x=array_x, y=array_y, u=array_u, v=array_v
				)
			return array_out
		array_diag = np.full(tuple_shape, self.float_chi)
		if self.str_tag == "saturating":
			array_diag = array_diag / (1.0 + array_u)
		for int_i in range(int_dim):
			array_out[int_i, int_i] = array_diag
		if self.str_tag == "rotational" and int_dim == 2:
			array_out[0, 1] = self.float_beta
			array_out[1, 0] = -self.float_beta
		return array_out


@dataclass(frozen=True)
class CutoffPair(metaclass=TypeChecker):
	"""The ε-regularization cutoffs ``ρ_ε`` (space) and ``χ_ε`` (density).

	Parameters
	----------
	float_eps : float
		Regularization parameter in ``(0, 1)``.
	int_smoothstep_order : int
		Smoothness order of ``η`` (default 2, the quintic).
	bool_spatial : bool
		When ``False``, ``ρ_ε ≡ 1`` (fixture for cutoff-free studies).

	Raises
	------
	DomainError
		If ``float_eps`` is outside ``(0, 1)``.
	"""

	float_eps: float
	int_smoothstep_order: int = 2
	bool_spatial: bool = True

	def __post_init__(self) -> None:
		if not 0.0 < self.float_eps < 1.0:
			raise DomainError(f"eps must lie in (0, 1), got {self.float_eps}")
		smoothstep(0.0, self.int_smoothstep_order)

	def rho(
		self,
		array_x: np.ndarray | float,
		array_y: np.ndarray | float,
		tuple_extents: tuple[float, ...],
	) -> np.ndarray:
		"""Spatial cutoff: 0 within ``ε/2`` of the boundary, 1 beyond distance ``ε``.

		Parameters
		----------
		array_x, array_y : np.ndarray | float
			Position components; ``array_y`` is ignored in 1D.
		tuple_extents : tuple of float
			Domain extents, one per simulated axis.

		Returns
		-------
		np.ndarray
			Cutoff values.
		"""
		array_x = np.asarray(array_x, dtype=np.float64)
		array_dist = np.minimum(array_x, tuple_extents[0] - array_x)
		if len(tuple_extents) == 2:
			array_y = np.asarray(array_y, dtype=np.float64)
			array_dist = np.minimum(array_dist, np.minimum(array_y, tuple_extents[1] - array_y))
		if not self.bool_spatial:
			return np.ones_like(array_dist)
		float_half = 0.5 * self.float_eps
		return smoothstep((array_dist - float_half) / float_half, self.int_smoothstep_order)

	def chi(self, array_u: np.ndarray | float) -> np.ndarray:
		"""Density cutoff: 1 for ``u <= 1/(2ε)``, 0 for ``u >= 1/ε``.

		Parameters
		----------
		array_u : np.ndarray | float
			Densities.

		Returns
		-------
		np.ndarray
			Cutoff values.
		"""
		array_u = np.asarray(array_u, dtype=np.float64)
		return smoothstep(2.0 - 2.0 * self.float_eps * array_u, self.int_smoothstep_order)


@dataclass(frozen=True)
class ModelSpec(metaclass=TypeChecker):
	"""Complete model data of one regularized system.

	Parameters
	----------
	kinetics : Kinetics
		Signal consumption ``f``.
	tensor : SensitivityTensor
		Sensitivity ``S``.
	cutoffs : CutoffPair
		Regularization cutoffs.
	int_dim : int
		Space dimension, 1 or 2.
	tuple_extents : tuple of float
		Domain extents; defaults to the unit interval or square.
	"""

	kinetics: Kinetics
	tensor: SensitivityTensor
	cutoffs: CutoffPair
	int_dim: int = 2
	tuple_extents: tuple[float, ...] = ()

	def __post_init__(self) -> None:
		if self.int_dim not in (1, 2):
			raise DomainError(f"dimension must be 1 or 2, got {self.int_dim}")
		if not self.tuple_extents:
			object.__setattr__(self, "tuple_extents", (1.0,) * self.int_dim)
		if len(self.tuple_extents) != self.int_dim or min(self.tuple_extents) <= 0.0:
			raise DomainError(f"extents {self.tuple_extents} do not fit dimension {self.int_dim}")

	@property
	def envelope(self) -> Envelope:
		"""The envelope ``S₀`` in effect."""
		return self.tensor.resolved_envelope(self.int_dim)

	def with_eps(self, float_eps: float) -> ModelSpec:
		"""Return the same model with another regularization parameter.

		Parameters
		----------
		float_eps : float
			New ``ε``.

		Returns
		-------
		ModelSpec
			The re-regularized model.
		"""
		return replace(self, cutoffs=replace(self.cutoffs, float_eps=float_eps))


@type_checker
def _check_domain(
	spec: ModelSpec,
	array_x: np.ndarray,
	array_y: np.ndarray,
	array_u: np.ndarray,
	array_v: np.ndarray,
) -> None:
	"""Raise :class:`DomainError` for negative data or positions outside the closed domain."""
	if array_u.size and float(array_u.min()) < 0.0:
		raise DomainError(f"density must be nonnegative, got min {float(array_u.min())}")
	if array_v.size and float(array_v.min()) < 0.0:
		raise DomainError(f"concentration must be nonnegative, got min {float(array_v.min())}")
	list_coords = [array_x] if spec.int_dim == 1 else [array_x, array_y]
	for array_c, float_l in zip(list_coords, spec.tuple_extents, strict=True):
		if array_c.size and (float(array_c.min()) < 0.0 or float(array_c.max()) > float_l):
			raise DomainError(f"position outside [0, {float_l}]")


@type_checker
def regularized_tensor(
	spec: ModelSpec,
	tuple_position: tuple[np.ndarray | float, ...],
	array_u: np.ndarray | float,
	array_v: np.ndarray | float,
) -> np.ndarray:
	"""Return ``S_ε(x, u, v) = ρ_ε(x) χ_ε(u) S(x, u, v)``.

	Parameters
	----------
	spec : ModelSpec
		The model.
	tuple_position : tuple
		``(x,)`` in 1D or ``(x, y)`` in 2D; scalars or arrays.
	array_u, array_v : np.ndarray | float
		Density and concentration, broadcastable against the position.

	Returns
	-------
	np.ndarray
		Shape ``(n, n)`` for scalar arguments, ``(n, n, *shape)`` for arrays.

	Raises
	------
	DomainError
		If ``u`` or ``v`` is negative or the position lies outside the closed domain.
	"""
	array_x = np.asarray(tuple_position[0], dtype=np.float64)
	array_y = np.asarray(
		tuple_position[1] if len(tuple_position) > 1 else 0.5, dtype=np.float64
	)
	array_u = np.asarray(array_u, dtype=np.float64)
	array_v = np.asarray(array_v, dtype=np.float64)
	_check_domain(spec, array_x, array_y, array_u, array_v)
	array_scale = spec.cutoffs.rho(array_x, array_y, spec.tuple_extents) * spec.cutoffs.chi(
		array_u
	)
	return array_scale * spec.tensor.evaluate(array_x, array_y, array_u, array_v, spec.int_dim)


@dataclass(frozen=True)
class SamplingPlan(metaclass=TypeChecker):
	"""Sample lattice for :func:`validate_hypotheses`.

	Parameters
	----------
	int_points : int
		Samples per axis (positions, densities and concentrations alike).
	float_u_max : float
		Largest sampled density.
	float_v_max : float
		Largest sampled concentration.
	float_smoothness_bound : float
		Largest accepted scaled second difference of any tensor entry.
	"""

	int_points: int = 13
	float_u_max: float = 10.0
	float_v_max: float = 5.0
	float_smoothness_bound: float = 1.0e6


@dataclass(frozen=True)
class HypothesisFinding(metaclass=TypeChecker):
	"""One sampled violation.

	Parameters
	----------
	str_check : str
		Hypothesis name (``"f(0)=0"``, ``"f>=0"``, ``"|S|<=S0"``, ``"S0 monotone"``,
		``"S smooth"``).
	str_message : str
		Diagnostic with the offending sample.
	bool_heuristic : bool
		Whether the check is only a finite-difference heuristic.
	"""

	str_check: str
	str_message: str
	bool_heuristic: bool = False


@dataclass(frozen=True)
class HypothesisReport(metaclass=TypeChecker):
	"""Outcome of :func:`validate_hypotheses`.

	Parameters
	----------
	tuple_findings : tuple of HypothesisFinding
		Every sampled violation.
	int_samples : int
		Number of ``(x, u, v)`` samples examined.
	"""

	tuple_findings: tuple[HypothesisFinding, ...]
	int_samples: int

	@property
	def bool_passed(self) -> bool:
		"""Whether no non-heuristic check failed."""
		return not any(not finding.bool_heuristic for finding in self.tuple_findings)


@type_checker
def validate_hypotheses(spec: ModelSpec, plan: SamplingPlan | None = None) -> HypothesisReport:
	"""Sample the kinetics, tensor and envelope hypotheses on a lattice.

	Checks ``f(0) = 0``, ``f >= 0``, ``|S|_F <= S₀(v)``, monotonicity of ``S₀``, and, as a
	heuristic only, boundedness of scaled second differences of ``S`` along ``u`` and ``v``.

	Parameters
	----------
	spec : ModelSpec
		The model.
	plan : SamplingPlan | None
		Sample lattice; defaults to :class:`SamplingPlan`.

	Returns
	-------
	HypothesisReport
		Findings (empty when every sample passes).
	"""
	plan = plan or SamplingPlan()
	list_findings: list[HypothesisFinding] = []
	array_v = np.linspace(0.0, plan.float_v_max, plan.int_points)
	array_u = np.linspace(0.0, plan.float_u_max, plan.int_points)

	float_f0 = float(spec.kinetics.evaluate(0.0))
	if float_f0 != 0.0:
		list_findings.append(HypothesisFinding("f(0)=0", f"f(0) = {float_f0:.6g}"))
	array_f = spec.kinetics.evaluate(array_v)
	if float(array_f.min()) < 0.0:
		int_k = int(np.argmin(array_f))
		list_findings.append(
			HypothesisFinding("f>=0", f"f({array_v[int_k]:.6g}) = {array_f[int_k]:.6g}")
		)

	array_s0 = spec.envelope.evaluate(array_v)
	if np.any(np.diff(array_s0) < -1e-12 * np.maximum(1.0, np.abs(array_s0[:-1]))):
		list_findings.append(
			HypothesisFinding("S0 monotone", "S0 decreases between sampled concentrations")
		)

	list_axes = [np.linspace(0.0, float_l, plan.int_points) for float_l in spec.tuple_extents]
	if spec.int_dim == 1:
		list_axes.append(np.array([0.5]))
	grid_x, grid_y, grid_u, grid_v = np.meshgrid(*list_axes, array_u, array_v, indexing="ij")
	array_s = spec.tensor.evaluate(grid_x, grid_y, grid_u, grid_v, spec.int_dim)
	array_norm = np.sqrt(np.sum(array_s**2, axis=(0, 1)))
	array_excess = array_norm - spec.envelope.evaluate(grid_v) * (1.0 + 1e-12)
	if float(array_excess.max()) > 0.0:
		tuple_idx = np.unravel_index(int(np.argmax(array_excess)), array_excess.shape)
		list_findings.append(
			HypothesisFinding(
				"|S|<=S0",
				f"|S|_F = {array_norm[tuple_idx]:.6g} exceeds S0 = "
				f"{float(spec.envelope.evaluate(grid_v[tuple_idx])):.6g} at "
				f"x = {grid_x[tuple_idx]:.4g}, u = {grid_u[tuple_idx]:.4g}, "
				f"v = {grid_v[tuple_idx]:.4g}",
			)
		)

	float_du = array_u[1] - array_u[0]
	float_dv = array_v[1] - array_v[0]
	float_curv_u = float(np.abs(np.diff(array_s, n=2, axis=4)).max(initial=0.0)) / float_du**2
	float_curv_v = float(np.abs(np.diff(array_s, n=2, axis=5)).max(initial=0.0)) / float_dv**2
	float_curv = max(float_curv_u, float_curv_v)
	if not np.isfinite(float_curv) or float_curv > plan.float_smoothness_bound:
		list_findings.append(
			HypothesisFinding(
				"S smooth",
				f"scaled second difference {float_curv:.6g} exceeds "
				f"{plan.float_smoothness_bound:.6g} (finite-difference heuristic)",
				bool_heuristic=True,
			)
		)
	return HypothesisReport(tuple(list_findings), int(array_norm.size))


__all__ = [
	"KINETICS_TAGS",
	"TENSOR_TAGS",
	"CutoffPair",
	"Envelope",
	"HypothesisFinding",
	"HypothesisReport",
	"Kinetics",
	"ModelSpec",
	"SamplingPlan",
	"SensitivityTensor",
	"regularized_tensor",
	"smoothstep",
	"validate_hypotheses",
]
