"""Coefficient expressions for user-defined kinetics, tensors and envelopes.

Grammar (anything else is rejected with :class:`~chemotensor.errors.ExpressionError`)::

	expr := number | name | expr ('+' | '-' | '*' | '/') expr | ('-' | '+') expr
	      | ('exp' | 'sin' | 'cos') '(' expr ')' | '(' expr ')'
	name := 'x' | 'y' | 'u' | 'v'

Expressions are parsed once with :mod:`ast` and evaluated by walking the validated tree
with NumPy ufuncs, so they broadcast over arrays of positions and field values.
"""

from __future__ import annotations

import ast
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from chemotensor._internal.utils.typing import TypeChecker, type_checker
from chemotensor.errors import ExpressionError


VARIABLES: frozenset[str] = frozenset({"x", "y", "u", "v"})

_DICT_FUNCTIONS: dict[str, Callable[[Any], Any]] = {
	"exp": np.exp,
	"sin": np.sin,
	"cos": np.cos,
}

_DICT_BINARY: dict[type[ast.operator], Callable[[Any, Any], Any]] = {
	ast.Add: np.add,
	ast.Sub: np.subtract,
	ast.Mult: np.multiply,
	ast.Div: np.divide,
}


@type_checker
def _check_node(node: ast.AST, str_source: str) -> frozenset[str]:
	"""Validate ``node`` against the grammar and return the variables it reads."""
	if isinstance(node, ast.Expression):
		return _check_node(node.body, str_source)
	if isinstance(node, ast.Constant):
		if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
			raise ExpressionError(f"{str_source!r}: only numeric constants are allowed")
		return frozenset()
	if isinstance(node, ast.Name):
		if node.id not in VARIABLES:
			raise ExpressionError(
				f"{str_source!r}: unknown name {node.id!r}; allowed: {sorted(VARIABLES)}"
			)
		return frozenset({node.id})
	if isinstance(node, ast.BinOp):
		if type(node.op) not in _DICT_BINARY:
			raise ExpressionError(f"{str_source!r}: operator {type(node.op).__name__} not allowed")
		return _check_node(node.left, str_source) | _check_node(node.right, str_source)
	if isinstance(node, ast.UnaryOp):
		if not isinstance(node.op, (ast.USub, ast.UAdd)):
			raise ExpressionError(f"{str_source!r}: unary {type(node.op).__name__} not allowed")
		return _check_node(node.operand, str_source)
	if isinstance(node, ast.Call):
		if (
			not isinstance(node.func, ast.Name)
			or node.func.id not in _DICT_FUNCTIONS
			or len(node.args) != 1
			or node.keywords
		):
			raise ExpressionError(
				f"{str_source!r}: only exp(.), sin(.), cos(.) with one argument are allowed"
			)
		return _check_node(node.args[0], str_source)
	raise ExpressionError(f"{str_source!r}: construct {type(node).__name__} not allowed")


@type_checker
def _evaluate_node(node: ast.AST, dict_values: Mapping[str, Any]) -> Any:
	"""Evaluate a validated node."""
	if isinstance(node, ast.Expression):
		return _evaluate_node(node.body, dict_values)
	if isinstance(node, ast.Constant):
		return float(node.value)
	if isinstance(node, ast.Name):
		return dict_values[node.id]
	if isinstance(node, ast.BinOp):
		return _DICT_BINARY[type(node.op)](
			_evaluate_node(node.left, dict_values), _evaluate_node(node.right, dict_values)
		)
	if isinstance(node, ast.UnaryOp):
		value = _evaluate_node(node.operand, dict_values)
		return np.negative(value) if isinstance(node.op, ast.USub) else value
	if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
		return _DICT_FUNCTIONS[node.func.id](_evaluate_node(node.args[0], dict_values))
	raise ExpressionError(f"unexpected node {type(node).__name__}")


@dataclass(frozen=True)
class CoefficientExpression(metaclass=TypeChecker):
	"""A parsed, validated coefficient expression.

	Parameters
	----------
	str_source : str
		Expression text, e.g. ``"1/(1+u)"`` or ``"0.5*cos(x)"``.

	Raises
	------
	ExpressionError
		If the text does not parse or leaves the grammar.
	"""

	str_source: str
	_tree: ast.Expression = field(init=False, repr=False, compare=False)
	_variables: frozenset[str] = field(init=False, repr=False, compare=False)

	def __post_init__(self) -> None:
		try:
			tree = ast.parse(self.str_source.strip(), mode="eval")
		except SyntaxError as err:
			raise ExpressionError(f"{self.str_source!r} does not parse: {err.msg}") from err
		object.__setattr__(self, "_tree", tree)
		object.__setattr__(self, "_variables", _check_node(tree, self.str_source))

	@property
	def variables(self) -> frozenset[str]:
		"""Names the expression reads."""
		return self._variables

	def evaluate(self, **kwargs: Any) -> np.ndarray:  # noqa: ANN401
		"""Evaluate with broadcasting over the supplied variables.

		Parameters
		----------
		**kwargs : Any
			Values of ``x``, ``y``, ``u``, ``v`` (scalars or arrays). Variables the
			expression does not read may be omitted.

		Returns
		-------
		np.ndarray
			Values broadcast to the common shape of the inputs.

		Raises
		------
		ExpressionError
			If a variable the expression reads is missing.
		"""
		set_missing = self._variables - kwargs.keys()
		if set_missing:
			raise ExpressionError(
				f"{self.str_source!r}: missing values for {sorted(set_missing)}"
			)
		list_arrays = [np.asarray(value, dtype=np.float64) for value in kwargs.values()]
		tuple_shape = np.broadcast_shapes(*(array.shape for array in list_arrays))
		with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
			result = _evaluate_node(self._tree, kwargs)
		return np.broadcast_to(np.asarray(result, dtype=np.float64), tuple_shape).copy()


__all__ = ["VARIABLES", "CoefficientExpression"]
