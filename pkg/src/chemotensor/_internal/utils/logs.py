"""Logging seam: file logger setup, caller-context messages and the injectable emitter.

- :class:`CreateLog` configures a run's file logger (:meth:`CreateLog.basic_conf`) and emits
  messages prefixed with ``[ClassName.method_name]``, reconstructed by walking the call stack.
- :func:`log_message` is the shared entry point; it holds a single ``CreateLog`` instance.
- :class:`LogEmitter` is the sink long-running components (solver runs, the family runner)
  write progress to. The default forwards to a stdlib logger; :class:`LogsEmitter` routes
  through :class:`CreateLog` so every line carries caller context.

Library modules never attach handlers; only the CLI calls :meth:`CreateLog.basic_conf`.
"""

from __future__ import annotations

import inspect
import logging
from pathlib import Path
import time
from typing import Literal, cast

from chemotensor._internal.utils.typing import TypeChecker, type_checker


# Frames skipped when reconstructing the caller context, matched on the last dotted component
# of the module name.
_SET_SKIP_MODULES = frozenset({"typing", "inspect", "logging", "logs", "threading"})

LogLevel = Literal["debug", "info", "warning", "error", "critical"]

_VALID_LOG_LEVELS: frozenset[str] = frozenset({"debug", "info", "warning", "error", "critical"})

_LOGGER = logging.getLogger("chemotensor")


class CreateLog(metaclass=TypeChecker):
	"""Create and manage log files with a fixed format and caller context."""

	def basic_conf(
		self,
		path_log: Path,
		str_level: LogLevel = "info",
		str_logger_name: str = "chemotensor",
	) -> logging.Logger:
		"""Configure a file logger, creating the parent directory when missing.

		Parameters
		----------
		path_log : Path
			Full path to the log file.
		str_level : LogLevel
			Minimum level written (default: ``"info"``).
		str_logger_name : str
			Name of the configured logger (default: ``"chemotensor"``).

		Returns
		-------
		logging.Logger
			The configured logger; previous handlers are closed and replaced.
		"""
		path_log.parent.mkdir(parents=True, exist_ok=True)
		logger = logging.getLogger(str_logger_name)
		logger.setLevel(getattr(logging, str_level.upper()))
		for handler_old in list(logger.handlers):
			handler_old.close()
			logger.removeHandler(handler_old)
		handler = logging.FileHandler(path_log, encoding="utf-8")
		handler.setFormatter(
			logging.Formatter(
				"%(asctime)s.%(msecs)03d %(levelname)s {%(threadName)s} %(message)s",
				datefmt="%Y-%m-%d,%H:%M:%S",
			)
		)
		logger.addHandler(handler)
		logger.propagate = False
		return logger

	def log_message(
		self,
		logger: logging.Logger | None,
		message: str,
		log_level: LogLevel,
	) -> None:
		"""Log a message with reconstructed caller context.

		Parameters
		----------
		logger : logging.Logger | None
			Logger instance, or ``None`` to print to the console.
		message : str
			Message to log.
		log_level : LogLevel
			Severity of the message.

		Raises
		------
		ValueError
			If ``log_level`` is not a logger method.
		"""
		frame = inspect.currentframe()
		str_class_name = "module"
		str_method_name = "unknown"

		while frame:
			frame = frame.f_back
			if not frame:
				break
			str_module_name = frame.f_globals.get("__name__", "")
			if str_module_name.rsplit(".", 1)[-1] in _SET_SKIP_MODULES:
				continue
			self_potential_cls = frame.f_locals.get("self")
			if self_potential_cls is not None and not isinstance(
				self_potential_cls, (CreateLog, LogEmitter)
			):
				str_class_name = self_potential_cls.__class__.__name__
				str_method_name = frame.f_code.co_name
				break
			if str_module_name:
				str_method_name = frame.f_code.co_name
				break

		str_formatted = f"[{str_class_name}.{str_method_name}] {message}"

		if logger is not None:
			fn_log = getattr(logger, log_level, None)
			if fn_log is None:
				raise ValueError(f"Invalid log level: {log_level}")
			fn_log(str_formatted)
		else:
			str_timestamp = (
				f"{time.strftime('%Y-%m-%d,%H:%M:%S')}.{int(time.time() * 1000) % 1000:03d}"
			)
			print(f"{str_timestamp} {log_level.upper()} {str_formatted}")


_CLS_LOG = CreateLog()


@type_checker
def log_message(
	logger: logging.Logger | None, str_message: str, str_level: LogLevel = "info"
) -> None:
	"""Log ``str_message`` at ``str_level`` through the shared :class:`CreateLog`.

	Parameters
	----------
	logger : logging.Logger | None
		Destination logger; when ``None`` the message is printed with a timestamp.
	str_message : str
		The message to log.
	str_level : LogLevel, optional
		Severity; default ``"info"``.
	"""
	_CLS_LOG.log_message(logger, str_message, str_level)


class LogEmitter(metaclass=TypeChecker):
	"""Sink that solver runs and family runners write progress to (injectable).

	The default forwards to the ``chemotensor`` stdlib logger, which stays silent unless
	the application configures it. Callers depend only on :meth:`log_message`.
	"""

	def __init__(self, cls_logger: logging.Logger | None = None) -> None:
		"""Build an emitter over ``cls_logger``.

		Parameters
		----------
		cls_logger : logging.Logger, optional
			Destination logger; defaults to the ``chemotensor`` package logger.
		"""
		self._cls_logger = cls_logger if cls_logger is not None else _LOGGER

	def log_message(self, str_message: str, str_level: str) -> None:
		"""Emit ``str_message`` at the named level (``warning`` when the name is unknown).

		Parameters
		----------
		str_message : str
			The message to log.
		str_level : str
			Level name.
		"""
		fn_emit = getattr(self._cls_logger, str_level.lower(), self._cls_logger.warning)
		fn_emit(str_message)


class LogsEmitter(LogEmitter):
	""":class:`LogEmitter` backed by :class:`CreateLog`, adding the caller-context prefix."""

	def __init__(self, cls_logger: logging.Logger | None = None) -> None:
		"""Build a rich emitter; with no logger the lines are printed to the console.

		Parameters
		----------
		cls_logger : logging.Logger, optional
			Destination logger.
		"""
		super().__init__(cls_logger)
		self._bool_print = cls_logger is None
		self._cls_create_log = CreateLog()

	def log_message(self, str_message: str, str_level: str) -> None:
		"""Emit ``str_message``; an unrecognised level falls back to ``"warning"``.

		Parameters
		----------
		str_message : str
			The message to emit.
		str_level : str
			Level name.
		"""
		str_normalized = str_level.lower()
		log_level = cast(
			LogLevel, str_normalized if str_normalized in _VALID_LOG_LEVELS else "warning"
		)
		self._cls_create_log.log_message(
			None if self._bool_print else self._cls_logger, str_message, log_level
		)


__all__ = ["CreateLog", "LogEmitter", "LogLevel", "LogsEmitter", "log_message"]
