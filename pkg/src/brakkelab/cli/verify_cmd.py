import sys
from pathlib import Path
from typing import Optional

import typer

from brakkelab.cli.exit_codes import (
    EXIT_OK,
    EXIT_VERIFICATION,
    HANDLED_ERRORS,
    abort,
    configure_logging,
    echo_check_table,
)
from brakkelab.cli.run_cmd import output_root_option
from brakkelab.core.runner import verify_run_dir, verify_suite


def verify(
    config_path: Path = typer.Argument(
        ..., help="Scenario file whose completed run should be re-checked.",
        exists=True, dir_okay=False, resolve_path=True,
    ),
    output_root: Optional[Path] = output_root_option(),
    run_dir: Optional[Path] = typer.Option(
        None, "--run-dir",
        help="Check this run directory instead of the one the scenario names.",
        exists=True, file_okay=False, dir_okay=True, resolve_path=True,
    ),
    quiet: bool = typer.Option(True, "--quiet/--verbose", help="Log level while re-evaluating."),
):
    """
    Re-evaluates every inequality check against the stored artifacts of a completed run.
    """
    configure_logging(False, quiet)
    try:
        output = verify_run_dir(run_dir) if run_dir is not None else verify_suite(config_path, output_root)
    except HANDLED_ERRORS as e:
        abort(e, f"verifying {config_path.name}")

    typer.echo(f"Scenario '{output.scenario_name}' in {output.run_dir}:")
    echo_check_table(output.rows)
    if not output.all_passed:
        failed = sum(not row.passed for row in output.rows)
        typer.secho(f"{failed} of {len(output.rows)} check(s) failed.", fg=typer.colors.RED)
        sys.exit(EXIT_VERIFICATION)
    typer.secho(f"All {len(output.rows)} check(s) passed.", fg=typer.colors.GREEN)
    sys.exit(EXIT_OK)
