"""Check that runtime type checking is applied across ``src/chemotensor``.

The ``TypeChecker`` metaclass and the ``type_checker`` decorator turn annotated signatures
into contracts enforced at call time. Neither ruff nor mypy can assert that they are
*present*, so this hook does, for every ``.py`` under the source root except the typing
engine itself (``_internal/utils/typing.py``):

- module-level non-dunder functions, private helpers included, carry ``@type_checker``;
- with ``functools.lru_cache``, the cache is the outer decorator (``@lru_cache`` above
  ``@type_checker``), so cache hits skip the check but misses never bypass it;
- root classes (no base class) declare ``TypeChecker`` or ``ABCTypeCheckerMeta``;
  subclasses inherit the metaclass;
- pydantic ``BaseModel`` subclasses do not declare a checker metaclass (pydantic owns it).

Usage
-----
    python bin/check_typing.py [SOURCE_ROOT]

Exit code 1 when any finding is reported, 0 otherwise.
"""

import argparse
import ast
import pathlib
import sys


_CHECKER_METACLASSES = {"TypeChecker", "ABCTypeCheckerMeta"}
_CACHE_DECORATORS = {"lru_cache", "cache"}
_EXEMPT_SUFFIX = ("_internal", "utils", "typing.py")


def _is_dunder(name: str) -> bool:
    """Return whether ``name`` is a ``__dunder__``."""
    return name.startswith("__") and name.endswith("__")


def _unqualified(node: ast.expr) -> str | None:
    """Return the last dotted component of a name, attribute or call target.

    Parameters
    ----------
    node : ast.expr
        A decorator, base class or metaclass expression.

    Returns
    -------
    str or None
        ``lru_cache`` for ``functools.lru_cache(maxsize=1)``; ``None`` for anything else.
    """
    if isinstance(node, ast.Call):
        node = node.func
    if isinstance(node, ast.Name):
        return node.id
    if isinstance(node, ast.Attribute):
        return node.attr
    return None


def _metaclass_name(node: ast.ClassDef) -> str | None:
    """Return the ``metaclass=`` name of a class header, if any."""
    for keyword in node.keywords:
        if keyword.arg == "metaclass":
            return _unqualified(keyword.value)
    return None


def check_function(node: ast.FunctionDef | ast.AsyncFunctionDef, filepath: str) -> list[str]:
    """Return the findings of one module-level function.

    Parameters
    ----------
    node : ast.FunctionDef or ast.AsyncFunctionDef
        The function definition.
    filepath : str
        Source file, for messages.

    Returns
    -------
    list of str
        Findings; empty when the function is checked correctly.
    """
    if _is_dunder(node.name):
        return []
    list_decorators = [_unqualified(dec) for dec in node.decorator_list]
    if "type_checker" not in list_decorators:
        return [f"{filepath}:{node.lineno}: {node.name}() lacks @type_checker"]
    int_checker = list_decorators.index("type_checker")
    for int_pos, str_name in enumerate(list_decorators):
        if str_name in _CACHE_DECORATORS and int_pos > int_checker:
            return [f"{filepath}:{node.lineno}: {node.name}() has @{str_name} below @type_checker"]
    return []


def check_class(node: ast.ClassDef, filepath: str) -> list[str]:
    """Return the findings of one top-level class.

    Parameters
    ----------
    node : ast.ClassDef
        The class definition.
    filepath : str
        Source file, for messages.

    Returns
    -------
    list of str
        Findings; empty when the class is checked correctly.
    """
    if _is_dunder(node.name):
        return []
    set_bases = {_unqualified(base) for base in node.bases}
    str_metaclass = _metaclass_name(node)
    if "BaseModel" in set_bases:
        if str_metaclass in _CHECKER_METACLASSES:
            return [
                f"{filepath}:{node.lineno}: pydantic model {node.name} must not set "
                f"metaclass={str_metaclass}"
            ]
        return []
    if node.bases or str_metaclass in _CHECKER_METACLASSES:
        return []
    return [
        f"{filepath}:{node.lineno}: root class {node.name} needs metaclass="
        f"{' or '.join(sorted(_CHECKER_METACLASSES))}"
    ]


def check_file(path_file: pathlib.Path) -> list[str]:
    """Return every finding of one source file.

    Parameters
    ----------
    path_file : pathlib.Path
        A Python source file.

    Returns
    -------
    list of str
        Findings, in source order.
    """
    tree = ast.parse(path_file.read_text(encoding="utf-8"), filename=str(path_file))
    list_findings: list[str] = []
    for node in tree.body:
        if isinstance(node, ast.ClassDef):
            list_findings.extend(check_class(node, str(path_file)))
        elif isinstance(node, ast.FunctionDef | ast.AsyncFunctionDef):
            list_findings.extend(check_function(node, str(path_file)))
    return list_findings


def source_files(path_root: pathlib.Path) -> list[pathlib.Path]:
    """Python files under ``path_root`` without the typing engine.

    Parameters
    ----------
    path_root : pathlib.Path
        Source root.

    Returns
    -------
    list of pathlib.Path
        Files to check, sorted.
    """
    return sorted(
        path_file
        for path_file in path_root.rglob("*.py")
        if path_file.parts[-len(_EXEMPT_SUFFIX) :] != _EXEMPT_SUFFIX
    )


def main(argv: list[str] | None = None) -> int:
    """Check the source root and print every finding.

    Parameters
    ----------
    argv : list of str, optional
        Arguments without the program name.

    Returns
    -------
    int
        1 when a finding was printed, else 0.
    """
    parser = argparse.ArgumentParser(description="Check runtime type-checker application.")
    parser.add_argument(
        "root",
        nargs="?",
        type=pathlib.Path,
        default=pathlib.Path("src/chemotensor"),
        help="source root (default src/chemotensor)",
    )
    args = parser.parse_args(argv)
    list_findings = [
        str_finding
        for path_file in source_files(args.root)
        for str_finding in check_file(path_file)
    ]
    for str_finding in list_findings:
        print(str_finding)
    return 1 if list_findings else 0


if __name__ == "__main__":
    sys.exit(main())
