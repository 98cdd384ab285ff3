"""Runtime type checking for the public call boundaries, backed by beartype.

Apply :class:`TypeChecker` as a class metaclass to validate every public method's annotated
argument types at call time, or :func:`type_checker` as a decorator on a standalone function.
Both complement static checking (mypy + ruff ANN); they do not replace it.

The policy block below holds the only tunables:

VIOLATION_TYPE
	Kept ``TypeError`` so callers and tests catch violations with ``pytest.raises(TypeError)``.
	beartype's own violation class is not a ``TypeError`` subclass.
PEP484_NUMERIC_TOWER
	On. Numerical call sites routinely pass ``1`` where a ``float`` is annotated (a time, an
	extent, a coefficient); the tower lets ``int`` satisfy ``float``. NumPy ``float64`` scalars
	already subclass ``float``.

Container checking is sampled (beartype's constant-time strategy): one item per container
per call. Array contents are never inspected; only the ``numpy.ndarray`` type is.
"""

from __future__ import annotations

from abc import ABCMeta
from collections.abc import Callable
from typing import Any

from beartype import BeartypeConf, beartype
from beartype.door import die_if_unbearable


VIOLATION_TYPE: type[Exception] = TypeError
PEP484_NUMERIC_TOWER: bool = True

CONF = BeartypeConf(violation_type=VIOLATION_TYPE, is_pep484_tower=PEP484_NUMERIC_TOWER)

_type_check = beartype(conf=CONF)


def validate_type(value: Any, expected_type: Any, param_name: str) -> None:
	"""Raise ``TypeError`` when ``value`` does not satisfy ``expected_type``.

	Parameters
	----------
	value : Any
		Value to validate.
	expected_type : Any
		Annotation to check against.
	param_name : str
		Parameter name shown in the error message.
	"""
	die_if_unbearable(value, expected_type, conf=CONF, exception_prefix=f"{param_name} ")


def type_checker(func: Callable[..., Any]) -> Callable[..., Any]:
	"""Wrap ``func`` so every call validates its argument and return types.

	Parameters
	----------
	func : Callable[..., Any]
		Function to wrap.

	Returns
	-------
	Callable[..., Any]
		The checked callable.
	"""
	return _type_check(func)


def _wrap_attribute(attr_value: Any) -> Any:
	"""Wrap one class attribute, preserving static/class-method descriptors.

	Parameters
	----------
	attr_value : Any
		Attribute from the class body.

	Returns
	-------
	Any
		The checked attribute, or the attribute unchanged when it is not callable.
	"""
	if isinstance(attr_value, staticmethod):
		return staticmethod(_type_check(attr_value.__func__))
	if isinstance(attr_value, classmethod):
		return classmethod(_type_check(attr_value.__func__))
	if isinstance(attr_value, property) or not callable(attr_value):
		return attr_value
	return _type_check(attr_value)


class TypeChecker(type):
	"""Metaclass applying runtime type checking to every public method and ``__init__``.

	Dunder methods other than ``__init__`` are left untouched.
	"""

	def __new__(
		cls: type[TypeChecker],
		str_name: str,
		tuple_bases: tuple,
		dict_attrs: dict[str, Any],
	) -> TypeChecker:
		"""Wrap the public methods before the class is created.

		Parameters
		----------
		cls : type[TypeChecker]
			The metaclass.
		str_name : str
			Name of the class being created.
		tuple_bases : tuple
			Base classes.
		dict_attrs : dict[str, Any]
			Class namespace.

		Returns
		-------
		TypeChecker
			The new class.
		"""
		for str_attr, attr_value in list(dict_attrs.items()):
			if str_attr.startswith("__"):
				continue
			dict_attrs[str_attr] = _wrap_attribute(attr_value)
		if "__init__" in dict_attrs:
			dict_attrs["__init__"] = _type_check(dict_attrs["__init__"])
		return super().__new__(cls, str_name, tuple_bases, dict_attrs)


class ABCTypeCheckerMeta(ABCMeta, TypeChecker):
	"""Abstract-method enforcement combined with :class:`TypeChecker` argument validation."""


__all__ = ["ABCTypeCheckerMeta", "TypeChecker", "type_checker", "validate_type"]
