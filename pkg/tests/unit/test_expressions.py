"""Unit tests for the coefficient-expression grammar."""

import numpy as np
import pytest

from chemotensor.errors import ExpressionError
from chemotensor.expressions import CoefficientExpression


def test_arithmetic_and_functions_broadcast() -> None:
	"""The four operators and the three functions evaluate over arrays."""
	expression = CoefficientExpression("-x + 2*u/(1+v) + exp(0)*cos(0) - sin(0)")
	array_out = expression.evaluate(
		x=np.array([0.0, 1.0]), u=np.array([[1.0], [3.0]]), v=1.0
	)
	assert array_out.shape == (2, 2)
	np.testing.assert_allclose(array_out, [[2.0, 1.0], [4.0, 3.0]])


def test_variables_reported() -> None:
	"""Only the names actually read are reported."""
	assert CoefficientExpression("u*exp(-v)").variables == frozenset({"u", "v"})
	assert CoefficientExpression("2.5").variables == frozenset()


def test_constant_broadcasts_to_inputs() -> None:
	"""A constant takes the shape of the supplied variables."""
	np.testing.assert_allclose(CoefficientExpression("2").evaluate(v=np.zeros(3)), [2, 2, 2])


@pytest.mark.parametrize(
	"str_source",
	["", "u**2", "a+1", "__import__('os')", "log(u)", "u if v else 1", "u[0]", "exp(u, v)"],
)
def test_grammar_violations_rejected(str_source: str) -> None:
	"""Anything outside the grammar raises ``ExpressionError``.

	Parameters
	----------
	str_source : str
		Offending expression.
	"""
	with pytest.raises(ExpressionError):
		CoefficientExpression(str_source)


def test_missing_variable_rejected() -> None:
	"""Evaluating without a variable the expression reads raises ``ExpressionError``."""
	with pytest.raises(ExpressionError, match="missing"):
		CoefficientExpression("u+v").evaluate(u=1.0)
