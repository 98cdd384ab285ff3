"""Unit tests for the hook asserting runtime type checking is applied (bin/check_typing.py)."""

import importlib.util
from pathlib import Path
from types import ModuleType

import pytest


_PATH_ROOT = Path(__file__).resolve().parents[2]


@pytest.fixture(scope="module")
def check_typing() -> ModuleType:
	"""The hook script loaded as a module."""
	spec = importlib.util.spec_from_file_location(
		"check_typing", _PATH_ROOT / "bin" / "check_typing.py"
	)
	assert spec is not None
	assert spec.loader is not None
	module = importlib.util.module_from_spec(spec)
	spec.loader.exec_module(module)
	return module


def _write_source(path_dir: Path, str_source: str) -> Path:
	"""Write one module into a throwaway source root and return the root.

	Parameters
	----------
	path_dir : pathlib.Path
		Directory standing in for the source root.
	str_source : str
		Module text.

	Returns
	-------
	pathlib.Path
		The source root.
	"""
	(path_dir / "sample.py").write_text(str_source, encoding="utf-8")
	return path_dir


def test_package_sources_are_clean(check_typing: ModuleType) -> None:
	"""Every module of the package passes the hook.

	Parameters
	----------
	check_typing : ModuleType
		The loaded hook.
	"""
	assert check_typing.main([str(_PATH_ROOT / "src" / "chemotensor")]) == 0


@pytest.mark.parametrize(
	("str_source", "str_match"),
	[
		("def step(x: float) -> float:\n    return x\n", "lacks @type_checker"),
		(
			"@type_checker\n@lru_cache\ndef get() -> int:\n    return 1\n",
			"below @type_checker",
		),
		("class Grid:\n    pass\n", "needs metaclass"),
		(
			"class Config(BaseModel, metaclass=TypeChecker):\n    pass\n",
			"must not set",
		),
	],
)
def test_findings(
	check_typing: ModuleType,
	tmp_path: Path,
	capsys: pytest.CaptureFixture[str],
	str_source: str,
	str_match: str,
) -> None:
	"""Unchecked functions, misordered caches, bare root classes and checked models are reported.

	Parameters
	----------
	check_typing : ModuleType
		The loaded hook.
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory standing in for the source root.
	capsys : pytest.CaptureFixture[str]
		Captures the printed findings.
	str_source : str
		Module text.
	str_match : str
		Text the finding must contain.
	"""
	assert check_typing.main([str(_write_source(tmp_path, str_source))]) == 1
	assert str_match in capsys.readouterr().out


def test_accepted_patterns(check_typing: ModuleType, tmp_path: Path) -> None:
	"""Checked functions, outer caches, metaclassed roots, subclasses and dunders pass.

	Parameters
	----------
	check_typing : ModuleType
		The loaded hook.
	tmp_path : pathlib.Path
		Pytest-provided throwaway directory standing in for the source root.
	"""
	str_source = (
		"@lru_cache(maxsize=1)\n@type_checker\ndef get() -> int:\n    return 1\n"
		"class Grid(metaclass=TypeChecker):\n    pass\n"
		"class Fine(Grid):\n    pass\n"
		"class Config(BaseModel):\n    pass\n"
		"def __getattr__(name: str) -> object:\n    return name\n"
	)
	assert check_typing.check_file(_write_source(tmp_path, str_source) / "sample.py") == []
