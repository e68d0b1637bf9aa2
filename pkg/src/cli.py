"""
Command-line interface.

    run <config> [--output PATH]        run a sweep and write its CSV trace
    check <config> [--iterations K]     check the variance conditions along a trajectory
    reference <config>                  print the reference optimum f*
    parse-data <file>                   validate a LIBSVM file

Exit codes: 0 on success, 1 on runtime failures, 2 on usage or config errors.
"""

import argparse
import logging
from pathlib import Path
from typing import Optional, Sequence

from rich.console import Console
from tabulate import tabulate

from src import __version__
from src.config.experiment import load_experiment_config
from src.config.log_setup import configure_logging
from src.config.settings import get_app_settings, get_harness_settings
from src.errors import AccelError, ConfigurationError
from src.harness.runner import build_problem, check_trajectory, reference_optimum, run_experiment
from src.services.datasets import load_libsvm

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="accel-oracles",
        description="Accelerated gradient methods with stochastic and compressed oracles",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run an experiment and write its CSV trace")
    run.add_argument("config", type=Path)
    run.add_argument("--output", type=Path, default=None, help="CSV path (overrides the config)")

    check = commands.add_parser("check", help="Check the variance conditions along a trajectory")
    check.add_argument("config", type=Path)
    check.add_argument("--iterations", type=int, default=20)
    check.add_argument("--mc", type=int, default=None, help="Monte-Carlo samples per check")

    reference = commands.add_parser("reference", help="Compute the reference optimum f*")
    reference.add_argument("config", type=Path)

    parse_data = commands.add_parser("parse-data", help="Validate a LIBSVM file")
    parse_data.add_argument("file", type=Path)
    parse_data.add_argument("--dim", type=int, default=None)
    return parser


def _cmd_run(args: argparse.Namespace, console: Console) -> int:
    config = load_experiment_config(args.config)
    result = run_experiment(config, get_harness_settings(), output=args.output)
    console.print(
        f"✅ {config.name}: {len(result.cells)} run(s), {result.rows_written} rows -> {result.output}",
        markup=False,
        highlight=False,
    )
    return EXIT_OK


def _cmd_check(args: argparse.Namespace, console: Console) -> int:
    config = load_experiment_config(args.config)
    if args.iterations < 1:
        raise ConfigurationError("--iterations must be >= 1")
    reports = check_trajectory(config, args.iterations, num_mc=args.mc)
    table = tabulate([r.as_row() for r in reports], headers="keys", floatfmt=".4e")
    console.print(table, markup=False, highlight=False, soft_wrap=True)
    violations = sum(1 for r in reports if not r.satisfied)
    console.print(f"{len(reports)} checks, {violations} violation(s)", markup=False, highlight=False)
    return EXIT_OK


def _cmd_reference(args: argparse.Namespace, console: Console) -> int:
    config = load_experiment_config(args.config)
    settings = get_harness_settings()
    problem = build_problem(config.problem, settings)
    optimum = reference_optimum(config, problem, settings)
    console.print(
        f"f* = {optimum.f_star!r} ({optimum.iterations} iterations, {optimum.converged_by})",
        markup=False,
        highlight=False,
    )
    return EXIT_OK


def _cmd_parse_data(args: argparse.Namespace, console: Console) -> int:
    dataset = load_libsvm(args.file, dim=args.dim)
    console.print(
        f"{dataset.num_samples} samples, dim {dataset.dim}", markup=False, highlight=False
    )
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "check": _cmd_check,
    "reference": _cmd_reference,
    "parse-data": _cmd_parse_data,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point.

    Args:
        argv: Arguments without the program name (defaults to sys.argv[1:])

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    settings = get_app_settings()
    if args.log_level:
        settings = settings.model_copy(update={"log_level": args.log_level.upper()})
    configure_logging(settings)

    console = Console()
    errors = Console(stderr=True)
    try:
        return COMMANDS[args.command](args, console)
    except ConfigurationError as e:
        errors.print(f"❌ Configuration error: {e}", markup=False, highlight=False)
        return EXIT_USAGE
    except (AccelError, OSError) as e:
        errors.print(f"❌ Error: {e}", markup=False, highlight=False)
        logger.debug("command failed", exc_info=True)
        return EXIT_FAILURE
