import typer
from typing_extensions import Annotated

from brakkelab import __version__ as APP_VERSION
from brakkelab.cli import init_cmd
from brakkelab.cli.blowup_cmd import blowup as blowup_command_func
from brakkelab.cli.plot_cmd import plot as plot_command_func
from brakkelab.cli.run_cmd import batch as batch_command_func
from brakkelab.cli.run_cmd import run as run_command_func
from brakkelab.cli.verify_cmd import verify as verify_command_func

app = typer.Typer(
    name="brakkelab",
    help="brakkelab: mean curvature flow with additional forces, monotonicity ledgers and blow-up analysis.",
    add_completion=False,
    no_args_is_help=True
)

app.add_typer(init_cmd.app, name="init", help="Write a commented sample scenario and the bundled scenarios.")
app.command("run")(run_command_func)
app.command("batch")(batch_command_func)
app.command("verify")(verify_command_func)
app.command("blowup")(blowup_command_func)
app.command("plot")(plot_command_func)


def _print_version(value: bool) -> None:
    if value:
        print(f"brakkelab version: {APP_VERSION}")
        raise typer.Exit()


@app.callback()
def main_callback(
    version: Annotated[
        bool,
        typer.Option(
            "--version", "-v",
            help="Show the application's version and exit.",
            callback=_print_version,
            is_eager=True
        )
    ] = False,
):
    """
    brakkelab CLI
    """
    pass


if __name__ == "__main__":
    app()
