import logging
from typing import List, NoReturn

import typer
from pydantic import ValidationError

from brakkelab.core.errors import BrakkeLabError, CoverageError, NumericalFailure, VerificationFailure
from brakkelab.core.schemas import CheckOutcome
from brakkelab.utils.file_handler import ConfigInvalid
from brakkelab.utils.logging_utils import set_level

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFICATION = 4

HANDLED_ERRORS = (BrakkeLabError, ConfigInvalid, ValidationError)


def exit_code_for(error: Exception) -> int:
    if isinstance(error, (ConfigInvalid, ValidationError)):
        return EXIT_CONFIG
    if isinstance(error, (NumericalFailure, CoverageError)):
        return EXIT_NUMERICAL
    if isinstance(error, VerificationFailure):
        return EXIT_VERIFICATION
    return EXIT_ERROR


def abort(error: Exception, what: str) -> NoReturn:
    """Prints the error in red and exits with the code of its family."""
    label = "Configuration error" if exit_code_for(error) == EXIT_CONFIG else type(error).__name__
    typer.secho(f"{label} while {what}: {error}", fg=typer.colors.RED, err=True)
    raise typer.Exit(code=exit_code_for(error))


def configure_logging(verbose: bool, quiet: bool) -> None:
    if quiet:
        set_level(logging.WARNING)
    elif verbose:
        set_level(logging.DEBUG)


def _format_margin(margin) -> str:
    return "-" if margin is None else f"{margin:+.4e}"


def echo_check_table(rows: List[CheckOutcome]) -> None:
    """One line per check: verdict, name, margin, reference label (plus source terms and errors)."""
    if not rows:
        typer.secho("No checks applied to this run.", fg=typer.colors.YELLOW)
        return
    width = max(len(row.name) for row in rows)
    typer.echo(f"{'':6}{'check':<{width}}  {'margin':>12}  reference")
    for row in rows:
        verdict, colour = ("PASS", typer.colors.GREEN) if row.passed else ("FAIL", typer.colors.RED)
        typer.secho(f"{verdict:<6}", fg=colour, nl=False)
        line = f"{row.name:<{width}}  {_format_margin(row.margin):>12}  {row.reference}"
        source = row.details.get("source_integral")
        if source:
            line += f"  [source term {source:.4e}]"
        if "center" in row.details:
            line += f"  (center {row.details['center']})"
        typer.echo(line)
        if row.error:
            typer.secho(f"      {row.error}", fg=typer.colors.RED)
