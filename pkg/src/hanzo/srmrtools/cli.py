"""Pieces shared by the command line tools: options, output records and exit codes."""

import sys
from concurrent.futures import ThreadPoolExecutor

import click

from hanzo.srmrtools import log
from hanzo.srmrtools.config import load_configs
from hanzo.srmrtools.errors import EXIT_INPUT, EXIT_OK, SrmrError
from hanzo.srmrtools.records import dumps

CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}


class _ExitCodes:
    """Commands return their exit code; usage errors exit as input errors."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        if not standalone_mode:
            return super().main(args, prog_name, complete_var, standalone_mode, **extra)
        try:
            rv = super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.exceptions.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_INPUT)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_INPUT)
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


class Command(_ExitCodes, click.Command):
    pass


class Group(_ExitCodes, click.Group):
    command_class = Command


def command(**kwargs):
    return click.command(cls=Command, context_settings=CONTEXT_SETTINGS, **kwargs)


def log_level_option(f):
    return click.option(
        "-L",
        "--log-level",
        "log_level",
        type=click.Choice(list(log.LEVELS), case_sensitive=False),
        default="warning",
        show_default=True,
        help="Log level for diagnostics on stderr",
    )(f)


def jobs_option(f):
    return click.option(
        "-j", "--jobs", type=click.IntRange(min=1), default=1, show_default=True,
        help="Worker threads; output order does not depend on it",
    )(f)  # fmt: skip


def config_option(f):
    return click.option(
        "-c", "--config", "config_file", type=click.Path(exists=True, dir_okay=False),
        default=None, help="JSON file of pipeline overrides (see srmr --dump-config)",
    )(f)  # fmt: skip


def keep_going_option(f):
    return click.option(
        "-k", "--keep-going", is_flag=True, default=False,
        help="Report failing files and carry on with the rest",
    )(f)  # fmt: skip


def load_pipeline_configs(config_file):
    return load_configs(config_file) if config_file else None


def emit(obj) -> None:
    """One JSON line on stdout."""
    click.echo(dumps(obj))


def error_record(path, error: SrmrError) -> dict:
    return {
        "path": str(path),
        "error": type(error).__name__,
        "message": str(error),
        "exit_code": error.exit_code,
    }


def report_error(path, error: SrmrError) -> None:
    """The error record on stderr."""
    click.echo(dumps(error_record(path, error)), err=True)


def map_files(fn, paths, jobs: int = 1):
    """Apply ``fn`` to each path on ``jobs`` threads.

    Yields ``(path, result, error)`` in input order; ``error`` is the
    SrmrError ``fn`` raised, if any, and ``result`` is then None.
    """

    def guarded(path):
        try:
            return fn(path), None
        except SrmrError as e:
            return None, e

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for path, (result, error) in zip(paths, pool.map(guarded, paths), strict=True):
            yield path, result, error


def process_files(fn, paths, jobs: int, keep_going: bool) -> int:
    """Emit ``fn``'s record for each path; return the exit code.

    Without ``keep_going`` the first failure stops the output and sets
    the exit code from the error. With it, failures are reported and
    the run exits 0.
    """
    for path, result, error in map_files(fn, paths, jobs):
        if error is not None:
            report_error(path, error)
            if not keep_going:
                return error.exit_code
            continue
        emit(result)
    return EXIT_OK


def fail(error: SrmrError) -> int:
    """Report an error that ends the command and return its exit code."""
    click.echo(f"error: {error}", err=True)
    return error.exit_code
