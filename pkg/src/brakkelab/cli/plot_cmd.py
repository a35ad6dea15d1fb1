import sys
from pathlib import Path

import typer

from brakkelab.cli.exit_codes import EXIT_OK, HANDLED_ERRORS, abort
from brakkelab.core.runner import register_files
from brakkelab.utils.file_handler import load_blowup_report, load_diagnostics, load_manifest
from brakkelab.utils.plotting import plot_run


def plot(
    run_dir: Path = typer.Argument(
        ..., help="Completed run directory.",
        exists=True, file_okay=False, dir_okay=True, resolve_path=True,
    ),
):
    """
    Renders SVG line charts (ledger, entropy, blow-up residuals) from a run's CSV and reports.
    """
    try:
        manifest = load_manifest(run_dir)
        frame = load_diagnostics(run_dir, manifest)
        report = load_blowup_report(run_dir, manifest)
        written = plot_run(run_dir, frame, report)
        register_files(run_dir, written)
    except HANDLED_ERRORS as e:
        abort(e, f"plotting {run_dir}")

    if not written:
        typer.secho("Nothing to plot in this run.", fg=typer.colors.YELLOW)
    for name in written:
        typer.echo(f"Wrote {run_dir / name}")
    sys.exit(EXIT_OK)
