from importlib import resources
from pathlib import Path

import typer

app = typer.Typer(name="init", help="Write a commented sample scenario and the bundled scenarios.")

SCENARIOS_DIR_NAME = "scenarios"
SAMPLE_SCENARIO_FILENAME = "my_scenario.yaml"

SAMPLE_SCENARIO_CONTENT = """
# brakkelab scenario
# Every key except name and t_end is optional; see docs/scenario_reference.md.
name: my_scenario
# description: "What this run is for"
# seed: 0                      # seeds the randomized area-ratio search
# output_dir: runs/my_scenario # relative to --output-root / BRAKKELAB_OUTPUT_ROOT

surface:
  kind: sphere                 # sphere | torus | capsule | dumbbell | box | file
  radius: 2.0
  level: 3                     # icosphere subdivision level
#  kind: file
#  path: meshes/initial.off    # relative to this file

force:
  kind: zero                   # zero | constant | volume_preserving | rescaled_mcf | scaled_composite
#  kind: constant
#  vector: [0.0, 0.0, -0.1]

step_policy:
  snapshot_every: 10
  dense_tail: 100
#  safety: 0.25                # dt <= safety / max|A|^2
#  dt_ceiling: 1.0e-3
#  dt_floor: 1.0e-7            # a smaller admissible dt counts as a singularity

t_end: 1.5

diagnostics:
  kernel_centers:
    - {y: [0.0, 0.0, 0.0], s: 1.0}
  include_singular_center: true
  entropy_every: 50
#  local_area_windows:
#    - {x0: [2.0, 0.0, 0.0], r: 1.0, t0: 0.5}
#  gauss_bonnet_balls:
#    - {center: [0.0, 0.0, 0.0], inner_radius: 0.5, outer_radius: 1.0, epsilon: 0.5}

blowup:
  alpha0: 0.4
  levels: 3
#  alphas: [0.4, 0.2, 0.1]     # explicit ladder, strictly decreasing
#  singular_point: {y: [0.0, 0.0, 0.0], s: 1.0}

# constants:
#   epsilon_0: 0.25
#   r_cover: 0.2
"""


def _write(path: Path, content: str, force: bool) -> bool:
    if path.exists() and not force:
        typer.echo(f"File already exists, skipping: {path}. Use --force to overwrite.")
        return False
    path.write_text(content)
    typer.echo(f"Created: {path}")
    return True


@app.callback(invoke_without_command=True)
def initialize(
    project_dir: Path = typer.Option(
        ".",
        help="The directory to initialize in. Defaults to the current directory.",
        exists=True, file_okay=False, dir_okay=True, writable=True, resolve_path=True
    ),
    force: bool = typer.Option(False, "--force", "-f", help="Overwrite existing scenario files if they exist.")
):
    """
    Creates scenarios/ with a commented sample scenario and copies of the bundled ones.
    """
    typer.echo(f"Initializing brakkelab scenarios in: {project_dir}")
    scenarios_dir = project_dir / SCENARIOS_DIR_NAME
    scenarios_dir.mkdir(exist_ok=True)

    _write(scenarios_dir / SAMPLE_SCENARIO_FILENAME, SAMPLE_SCENARIO_CONTENT.lstrip(), force)
    bundled = resources.files("brakkelab") / SCENARIOS_DIR_NAME
    for entry in sorted(bundled.iterdir(), key=lambda item: item.name):
        if entry.name.endswith((".yaml", ".yml")):
            _write(scenarios_dir / entry.name, entry.read_text(), force)

    typer.secho("\nInitialization complete!", fg=typer.colors.GREEN)
    typer.echo(f"Run one with: brakkelab run {scenarios_dir.name}/{SAMPLE_SCENARIO_FILENAME}")
