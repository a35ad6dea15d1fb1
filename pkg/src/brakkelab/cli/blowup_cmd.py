import sys
from pathlib import Path
from typing import List, Optional

import typer

from brakkelab.cli.exit_codes import EXIT_OK, HANDLED_ERRORS, abort, configure_logging, echo_check_table
from brakkelab.core.runner import blowup_run_dir


def blowup(
    run_dir: Path = typer.Argument(
        ..., help="Completed run directory.",
        exists=True, file_okay=False, dir_okay=True, resolve_path=True,
    ),
    alpha_ladder: Optional[List[float]] = typer.Option(
        None, "--alpha-ladder", "-a",
        help="Scale factor of one ladder level; repeat for several. Defaults to the scenario's ladder.",
    ),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Only warnings and errors in the log."),
):
    """
    Re-runs the blow-up analysis on a stored run and rewrites blowup_report.json and slices/.
    """
    configure_logging(False, quiet)
    try:
        analysis = blowup_run_dir(run_dir, alpha_ladder or None)
    except HANDLED_ERRORS as e:
        abort(e, f"analysing {run_dir}")

    report = analysis.report
    point = ", ".join(f"{c:.6g}" for c in report.singular_point)
    typer.echo(f"Singular point ({point}) at s={report.singular_time:.9g}")
    typer.echo(f"{'alpha':>10}  {'tau':>10}  {'residual':>12}  {'self-sim.':>12}  {'flags'}")
    for sl, error in zip(report.slices, report.self_similarity_errors + [None] * len(report.slices)):
        flags = ",".join(sl.flags) if sl.flags else ""
        similarity = "-" if error is None else f"{error:.4e}"
        typer.echo(f"{sl.alpha:>10.4g}  {sl.tau:>10.4g}  {sl.residual:>12.4e}  {similarity:>12}  {flags}")
    typer.echo(f"Concentration points: {len(report.concentration)}")
    if report.checks:
        echo_check_table(report.checks)
    for name, verdict in report.verdicts.items():
        typer.secho(f"  {name}: {'yes' if verdict else 'no'}",
                    fg=typer.colors.GREEN if verdict else typer.colors.YELLOW)
    sys.exit(EXIT_OK)
