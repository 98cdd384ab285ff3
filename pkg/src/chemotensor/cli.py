"""Command-line entry point: ``simulate``, ``verify``, ``family``, ``refine`` and ``report``.

Exit codes
----------
0  every check passed (``family``: completed, soft warnings allowed)
1  a certificate, residual, entropy, mass or refinement-order check failed
2  the config violates its schema or the model rejects it
3  the solver failed at run time (a NaN/Inf state is dumped under ``dump/``)
4  an input file or record file is missing or malformed

Usage
-----
    chemotensor simulate --config run.json [--out DIR] [--seed-override N] [--tol-scale X]
    chemotensor verify RECORD_DIR [RECORD_DIR ...] [--catalog-size N] [--transform ln]
    chemotensor family --config plan.json [--out DIR] [--jobs N]
    chemotensor refine --config run.json [--levels 3] [--min-order 1]
    chemotensor report DIR
"""

from __future__ import annotations

import argparse
from collections.abc import Sequence
from pathlib import Path
import sys
import time

from chemotensor._internal.config.schemas.run_config import (
	RunConfig,
	load_family_plan,
	load_run_config,
	override_seed,
)
from chemotensor._internal.config.settings import Settings, get_settings
from chemotensor._internal.utils.logs import CreateLog, LogEmitter, LogsEmitter
from chemotensor._internal.utils.typing import type_checker
from chemotensor.assembly import (
	apply_tolerance_overrides,
	build_family_plan,
	build_initial_state,
	build_refinement_grids,
	build_run,
	build_tolerances,
	load_record,
)
from chemotensor.errors import (
	ChemotensorError,
	ConfigError,
	DomainError,
	FamilyAbortedError,
	NonFiniteStateError,
	RecordFormatError,
)
from chemotensor.experiments import (
	FamilyRecord,
	convergence_table,
	refinement_study,
	run_family,
)
from chemotensor.functionals import Certificate, EstimateLedger, certify
from chemotensor.grid import GridSpec
from chemotensor.persistence import (
	CONVERGENCE_NAME,
	ENTROPY_NAME,
	FAMILY_NAME,
	MASS_NAME,
	REFINEMENT_NAME,
	WEAK_RESIDUALS_NAME,
	member_dir_name,
	render_report,
	write_convergence,
	write_json,
	write_record,
	write_state_dump,
)
from chemotensor.solver import State, run
from chemotensor.verifier import (
	TRANSFORMS,
	default_catalog,
	entropy_inequality_check,
	mass_inequality_check,
	weak_residual_refinement,
	weak_residual_report,
)


EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_MISSING_INPUT = 4

LOG_NAME = "run.log"
FAMILY_SUMMARY_NAME = "family_summary.txt"


@type_checker
def build_parser() -> argparse.ArgumentParser:
	"""Argument parser of the five subcommands.

	Returns
	-------
	argparse.ArgumentParser
		The parser.
	"""
	parser_common = argparse.ArgumentParser(add_help=False)
	parser_common.add_argument(
		"--out", type=Path, default=None, help="output directory (default: $CHEMO_OUT_DIR)"
	)
	parser_common.add_argument(
		"--jobs", type=int, default=None, help="worker threads (family members, catalog)"
	)
	parser_common.add_argument(
		"--tol-scale", type=float, default=1.0, help="multiply every tolerance (default 1)"
	)
	parser_common.add_argument(
		"--seed-override", type=int, default=None, help="replace the random initial-data seed"
	)

	parser = argparse.ArgumentParser(
		prog="chemotensor",
		description="Regularized tensor-chemotaxis simulator and estimate verifier.",
	)
	subparsers = parser.add_subparsers(dest="command", required=True)

	parser_sim = subparsers.add_parser(
		"simulate", parents=[parser_common], help="run one config and certify its ledger"
	)
	parser_sim.add_argument("--config", type=Path, required=True, help="run config (JSON)")

	parser_verify = subparsers.add_parser(
		"verify", parents=[parser_common], help="check a record against the weak formulation"
	)
	parser_verify.add_argument(
		"record",
		type=Path,
		nargs="+",
		help="record directory of a simulate run; several form a refinement series",
	)
	parser_verify.add_argument(
		"--catalog-size", type=int, default=None, help="test functions (default from settings)"
	)
	parser_verify.add_argument(
		"--transform",
		choices=TRANSFORMS,
		default="ln",
		help="supersolution transform (default ln)",
	)

	parser_family = subparsers.add_parser(
		"family", parents=[parser_common], help="run an epsilon family and its Cauchy study"
	)
	parser_family.add_argument("--config", type=Path, required=True, help="family plan (JSON)")

	parser_refine = subparsers.add_parser(
		"refine", parents=[parser_common], help="run one config on refined grids, check orders"
	)
	parser_refine.add_argument("--config", type=Path, required=True, help="run config (JSON)")
	parser_refine.add_argument(
		"--levels", type=int, default=3, help="grids, each doubling the cells (default 3)"
	)
	parser_refine.add_argument(
		"--min-order", type=float, default=1.0, help="smallest accepted order (default 1)"
	)

	parser_report = subparsers.add_parser(
		"report", parents=[parser_common], help="render the reports of a directory as text"
	)
	parser_report.add_argument("directory", type=Path, help="record or family directory")
	return parser


@type_checker
def _open_log(path_out: Path, settings: Settings) -> LogEmitter:
	"""File logger at ``<out>/run.log`` wrapped in a caller-context emitter."""
	cls_logger = CreateLog().basic_conf(path_out / LOG_NAME, settings.str_log_level)
	return LogsEmitter(cls_logger)


@type_checker
def _log_certificate(certificate: Certificate, settings: Settings, emitter: LogEmitter) -> None:
	for line in certificate.tuple_lines:
		str_text = (
			f"{line.str_name}: value={line.float_value:.6e} bound={line.float_bound:.6e} "
			f"margin={line.float_margin:+.3e}"
		)
		if not line.bool_passed:
			emitter.log_message(str_text, "warning" if line.bool_soft else "error")
		elif line.str_kind == "bound" and line.float_margin < settings.float_margin_warning:
			emitter.log_message(f"{str_text} (thin margin)", "warning")
		else:
			emitter.log_message(str_text, "info")


@type_checker
def _dump_state(err: NonFiniteStateError, path_out: Path, emitter: LogEmitter) -> int:
	"""Write the offending state and return the runtime exit code."""
	path_u, _ = write_state_dump(path_out, err.float_t, err.array_u, err.array_v)
	emitter.log_message(f"{err}; state dumped to {path_u.parent}", "error")
	return EXIT_RUNTIME


@type_checker
def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
	"""Run one config, write its record and certify its ledger.

	Parameters
	----------
	args : argparse.Namespace
		Parsed arguments.
	settings : Settings
		Process settings, already scaled.

	Returns
	-------
	int
		Exit code.
	"""
	config = load_run_config(args.config)
	if args.seed_override is not None:
		config = override_seed(config, args.seed_override)
	path_out = _resolve_out(args.out, config, settings)
	emitter = _open_log(path_out, settings)
	assembled = build_run(config, args.config.parent, settings)
	tuple_notes = tuple(
		f"{finding.str_check}: {finding.str_message}"
		for finding in assembled.hypotheses.tuple_findings
	)
	for str_note in tuple_notes:
		emitter.log_message(str_note, "warning")
	ledger = EstimateLedger(assembled.spec)
	float_start = time.perf_counter()
	try:
		record = run(
			assembled.initial,
			assembled.spec,
			assembled.ctrl,
			assembled.float_tmax,
			observers=(ledger,),
			int_snapshot_stride=assembled.int_snapshot_stride,
			cls_logger=emitter,
		)
	except NonFiniteStateError as err:
		return _dump_state(err, path_out, emitter)
	float_wall = time.perf_counter() - float_start
	certificate = certify(ledger, build_tolerances(assembled.settings))
	write_record(
		path_out,
		config.model_dump(mode="json"),
		record,
		ledger,
		certificate,
		float_wall,
		tuple_notes,
	)
	_log_certificate(certificate, assembled.settings, emitter)
	emitter.log_message(
		f"record written to {path_out}: {record.int_steps} steps, "
		f"certificate {'passed' if certificate.bool_passed else 'FAILED'}",
		"info" if certificate.bool_passed else "error",
	)
	return EXIT_PASS if certificate.bool_passed else EXIT_CHECK_FAILED


@type_checker
def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
	"""Check a record: weak residuals, supersolution residuals, entropy and mass.

	Several record directories form a refinement series: every check runs on the finest
	one, and the weak-residual report adds the observed orders across the series.

	Parameters
	----------
	args : argparse.Namespace
		Parsed arguments.
	settings : Settings
		Process settings, already scaled.

	Returns
	-------
	int
		Exit code.
	"""
	list_loaded = sorted(
		((path_dir, *load_record(path_dir)) for path_dir in args.record),
		key=lambda loaded: -loaded[1].grid.float_h,
	)
	path_record, record, config = list_loaded[-1]
	settings = apply_tolerance_overrides(settings, config.tolerances)
	path_out = args.out if args.out is not None else path_record
	emitter = _open_log(path_out, settings)
	try:
		catalog = default_catalog(
			record.grid,
			min(loaded[1].float_horizon for loaded in list_loaded),
			int_size=args.catalog_size or settings.int_catalog_size,
		)
	except DomainError as err:
		raise ConfigError(f"--catalog-size: {err}") from err
	emitter.log_message(
		f"verifying {path_record}: {len(record.tuple_snapshots)} snapshots, "
		f"{len(catalog)} test functions, transform {args.transform}",
		"info",
	)
	if len(list_loaded) == 1:
		report = weak_residual_report(
			record, catalog, settings.float_c_tol, args.transform, int_jobs=args.jobs or 1
		)
	else:
		try:
			report = weak_residual_refinement(
				tuple(loaded[1] for loaded in list_loaded),
				catalog,
				settings.float_c_tol,
				args.transform,
				int_jobs=args.jobs or 1,
			)
		except DomainError as err:
			raise ConfigError(f"verify: {err}") from err
		emitter.log_message(
			f"refinement over {len(list_loaded)} records: observed orders "
			+ ", ".join(f"{float_slope:.3g}" for float_slope in report.tuple_slopes),
			"info",
		)
	entropy = entropy_inequality_check(record, float_c_tol=settings.float_c_tol)
	mass = mass_inequality_check(record, settings.float_mass_rtol)
	write_json(path_out / WEAK_RESIDUALS_NAME, report.to_dict())
	write_json(path_out / ENTROPY_NAME, entropy.to_dict())
	write_json(path_out / MASS_NAME, mass.to_dict())
	for str_name, bool_passed in (
		("weak residuals", report.bool_passed),
		("entropy inequality", entropy.bool_passed),
		("mass inequality", mass.bool_passed),
	):
		emitter.log_message(
			f"{str_name}: {'passed' if bool_passed else 'FAILED'}",
			"info" if bool_passed else "error",
		)
	bool_passed = report.bool_passed and entropy.bool_passed and mass.bool_passed
	return EXIT_PASS if bool_passed else EXIT_CHECK_FAILED


@type_checker
def _write_members(
	family: FamilyRecord, config_base: RunConfig, path_out: Path, float_wall: float
) -> None:
	for member in family.tuple_members:
		config_member = config_base.model_copy(
			update={"model": config_base.model.model_copy(update={"eps": member.float_eps})}
		)
		write_record(
			path_out / member_dir_name(member.float_eps),
			config_member.model_dump(mode="json"),
			member.record,
			member.ledger,
			member.certificate,
			float_wall,
		)


@type_checker
def cmd_family(args: argparse.Namespace, settings: Settings) -> int:
	"""Run an epsilon family, write every member and the convergence table.

	Parameters
	----------
	args : argparse.Namespace
		Parsed arguments.
	settings : Settings
		Process settings, already scaled.

	Returns
	-------
	int
		Exit code; soft convergence warnings do not fail the command.
	"""
	plan_config = load_family_plan(args.config)
	config_base = plan_config.base
	if args.seed_override is not None:
		config_base = override_seed(config_base, args.seed_override)
		plan_config = plan_config.model_copy(update={"base": config_base})
	path_out = _resolve_out(args.out, config_base, settings)
	emitter = _open_log(path_out, settings)
	plan, run_settings = build_family_plan(plan_config, args.config.parent, settings, args.jobs)
	float_start = time.perf_counter()
	try:
		family = run_family(plan, build_tolerances(run_settings), emitter)
	except FamilyAbortedError as err:
		_write_members(err.family, config_base, path_out, time.perf_counter() - float_start)
		cause = err.__cause__
		if isinstance(cause, NonFiniteStateError):
			write_state_dump(path_out, cause.float_t, cause.array_u, cause.array_v)
		emitter.log_message(f"{err}", "error")
		return EXIT_RUNTIME
	_write_members(family, config_base, path_out, time.perf_counter() - float_start)
	for member in family.tuple_members:
		_log_certificate(member.certificate, run_settings, emitter)

	dict_summary: dict[str, object] = {
		"eps": list(plan.tuple_eps),
		"bounds_uniform": family.bool_bounds_uniform,
		"certificates_passed": family.bool_certificates_passed,
	}
	bool_hard_failed = False
	if len(family.tuple_members) >= 3:
		table = convergence_table(family, settings.float_cauchy_hard_increase, emitter)
		write_convergence(path_out / CONVERGENCE_NAME, table.frame)
		(path_out / FAMILY_SUMMARY_NAME).write_text(table.to_text() + "\n", encoding="utf-8")
		dict_summary.update(
			decreasing=table.dict_decreasing,
			warnings=list(table.tuple_warnings),
			failures=list(table.tuple_failures),
		)
		bool_hard_failed = table.bool_hard_failed
	else:
		emitter.log_message(
			f"convergence table skipped: {len(family.tuple_members)} member(s), needs 3",
			"warning",
		)
	write_json(path_out / FAMILY_NAME, dict_summary)
	bool_passed = (
		family.bool_certificates_passed and family.bool_bounds_uniform and not bool_hard_failed
	)
	emitter.log_message(
		f"family written to {path_out}: {'passed' if bool_passed else 'FAILED'}",
		"info" if bool_passed else "error",
	)
	return EXIT_PASS if bool_passed else EXIT_CHECK_FAILED


@type_checker
def cmd_refine(args: argparse.Namespace, settings: Settings) -> int:
	"""Run one config on successive factor-two refinements and check the observed orders.

	Parameters
	----------
	args : argparse.Namespace
		Parsed arguments.
	settings : Settings
		Process settings, already scaled.

	Returns
	-------
	int
		Exit code; 1 when an observed order falls below ``--min-order``.
	"""
	config = load_run_config(args.config)
	if args.seed_override is not None:
		config = override_seed(config, args.seed_override)
	path_out = _resolve_out(args.out, config, settings)
	emitter = _open_log(path_out, settings)
	assembled = build_run(config, args.config.parent, settings)
	tuple_grids = build_refinement_grids(config.grid, args.levels)

	def _initial(grid: GridSpec) -> State:
		return build_initial_state(config.initial, grid, args.config.parent)

	try:
		report = refinement_study(
			_initial,
			assembled.spec,
			assembled.ctrl,
			assembled.float_tmax,
			tuple_grids,
			cls_logger=emitter,
		)
	except NonFiniteStateError as err:
		return _dump_state(err, path_out, emitter)
	tuple_orders = report.tuple_u_orders + report.tuple_v_orders
	bool_passed = min(tuple_orders) >= args.min_order
	write_json(
		path_out / REFINEMENT_NAME,
		{**report.to_dict(), "min_order": args.min_order, "passed": bool_passed},
	)
	emitter.log_message(
		f"grid refinement over {len(tuple_grids)} levels: u orders "
		+ ", ".join(f"{x:.3g}" for x in report.tuple_u_orders)
		+ "; v orders "
		+ ", ".join(f"{x:.3g}" for x in report.tuple_v_orders),
		"info" if bool_passed else "error",
	)
	return EXIT_PASS if bool_passed else EXIT_CHECK_FAILED


@type_checker
def cmd_report(args: argparse.Namespace, settings: Settings) -> int:
	"""Print the text report of a record or family directory.

	Parameters
	----------
	args : argparse.Namespace
		Parsed arguments.
	settings : Settings
		Unused; every command takes the settings.

	Returns
	-------
	int
		Exit code.
	"""
	sys.stdout.write(render_report(args.directory))
	return EXIT_PASS


@type_checker
def _resolve_out(path_out: Path | None, config: RunConfig, settings: Settings) -> Path:
	"""``--out``, else the config's ``output_dir``, else the settings default."""
	if path_out is not None:
		return path_out
	if config.output_dir is not None:
		return Path(config.output_dir)
	return settings.path_out_dir


_DICT_COMMANDS = {
	"simulate": cmd_simulate,
	"verify": cmd_verify,
	"family": cmd_family,
	"refine": cmd_refine,
	"report": cmd_report,
}


@type_checker
def main(argv: Sequence[str] | None = None) -> int:
	"""Parse arguments, dispatch the subcommand and map failures to exit codes.

	Parameters
	----------
	argv : sequence of str, optional
		Arguments without the program name; defaults to ``sys.argv[1:]``.

	Returns
	-------
	int
		Process exit code.
	"""
	args = build_parser().parse_args(argv)
	try:
		settings = get_settings().scaled(args.tol_scale)
		if args.jobs is not None and args.jobs < 1:
			raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
		int_catalog_size = getattr(args, "catalog_size", None)
		if int_catalog_size is not None and int_catalog_size < 1:
			raise ConfigError(f"--catalog-size must be >= 1, got {int_catalog_size}")
		return _DICT_COMMANDS[args.command](args, settings)
	except ConfigError as err:
		sys.stderr.write(f"config error: {err}\n")
		return EXIT_CONFIG
	except (FileNotFoundError, RecordFormatError) as err:
		sys.stderr.write(f"missing or malformed input: {err}\n")
		return EXIT_MISSING_INPUT
	except ChemotensorError as err:
		sys.stderr.write(f"runtime error: {err}\n")
		return EXIT_RUNTIME


if __name__ == "__main__":
	sys.exit(main())
