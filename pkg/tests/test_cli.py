import pytest
from typer.testing import CliRunner

from brakkelab import __version__
from brakkelab.core.errors import MeshDegenerated, WindowNotCovered
from brakkelab.core.flow import FlowTrajectory
from brakkelab.core.runner import RunResult
from brakkelab.core.schemas import CheckOutcome, FlowStatus, RunManifest
from brakkelab.main import app
from brakkelab.utils.file_handler import DIAGNOSTICS_FILENAME, load_scenario, parse_scenario

runner = CliRunner()

TINY = {
    "name": "tiny",
    "surface": {"kind": "sphere", "radius": 1.0, "level": 1},
    "step_policy": {"snapshot_every": 20},
    "t_end": 0.05,
    "diagnostics": {"kernel_centers": [{"s": 0.5}], "entropy_every": 2},
}


def fake_result(tmp_path, passed):
    scenario = parse_scenario({"name": "fake", "t_end": 1.0})
    check = CheckOutcome(name="monotonicity_ledger", reference="monotonicity formula", passed=passed,
                         margin=0.1 if passed else -0.1)
    manifest = RunManifest(scenario_name="fake", seed=0, status=FlowStatus.COMPLETED, t_final=1.0,
                           scenario=scenario, checks=[check])
    traj = FlowTrajectory(force=scenario.force, t_start=0.0)
    return RunResult(run_dir=tmp_path, manifest=manifest, trajectory=traj)


@pytest.fixture
def tiny_run(write_scenario, tmp_path):
    path = write_scenario(TINY)
    result = runner.invoke(app, ["run", str(path), "-o", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    return path, tmp_path / "out" / "runs" / "tiny"


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert f"brakkelab version: {__version__}" in result.output


def test_init_writes_scenarios(tmp_path):
    result = runner.invoke(app, ["init", "--project-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    written = {p.name for p in (tmp_path / "scenarios").iterdir()}
    assert {"my_scenario.yaml", "sphere_shrink.yaml", "dumbbell.yaml"} <= written

    again = runner.invoke(app, ["init", "--project-dir", str(tmp_path)])
    assert "File already exists, skipping" in again.output

    forced = runner.invoke(app, ["init", "--project-dir", str(tmp_path), "--force"])
    assert "skipping" not in forced.output


def test_sample_scenario_is_valid(tmp_path):
    runner.invoke(app, ["init", "--project-dir", str(tmp_path)])
    for path in (tmp_path / "scenarios").iterdir():
        assert load_scenario(path).name == path.stem


def test_run_config_error_exits_2(write_scenario, tmp_path):
    path = write_scenario({"name": "bad", "t_end": -1.0})
    result = runner.invoke(app, ["run", str(path), "-o", str(tmp_path)])
    assert result.exit_code == 2
    assert "Configuration error" in result.output


def test_run_failed_checks_exit_4(mocker, write_scenario, tmp_path):
    mocker.patch("brakkelab.cli.run_cmd.run_scenario", return_value=fake_result(tmp_path, passed=False))
    path = write_scenario(TINY)
    result = runner.invoke(app, ["run", str(path)])
    assert result.exit_code == 4
    assert "FAIL" in result.output
    assert "1 check(s) failed." in result.output


def test_run_soft_fail(mocker, write_scenario, tmp_path):
    mocker.patch("brakkelab.cli.run_cmd.run_scenario", return_value=fake_result(tmp_path, passed=False))
    result = runner.invoke(app, ["run", str(write_scenario(TINY)), "--soft-fail"])
    assert result.exit_code == 0
    assert "Soft fail enabled" in result.output


def test_run_numerical_failure_exits_3(mocker, write_scenario):
    mocker.patch("brakkelab.cli.run_cmd.run_scenario",
                 side_effect=MeshDegenerated("Update produced a degenerate triangle.", {"scenario": "tiny"}))
    result = runner.invoke(app, ["run", str(write_scenario(TINY))])
    assert result.exit_code == 3
    assert "MeshDegenerated" in result.output


def test_run_uses_output_root_from_environment(write_scenario, tmp_path):
    path = write_scenario(TINY)
    result = runner.invoke(app, ["run", str(path)], env={"BRAKKELAB_OUTPUT_ROOT": str(tmp_path / "env_root")})
    assert result.exit_code == 0, result.output
    assert (tmp_path / "env_root" / "runs" / "tiny" / "manifest.json").is_file()
    assert "All checks passed." in result.output


def test_verify_after_run(tiny_run, tmp_path):
    path, run_dir = tiny_run
    result = runner.invoke(app, ["verify", str(path), "-o", str(tmp_path / "out")])
    assert result.exit_code == 0, result.output
    by_dir = runner.invoke(app, ["verify", str(path), "--run-dir", str(run_dir)])
    assert by_dir.exit_code == 0


def test_verify_truncated_run_exits_4(tiny_run):
    path, run_dir = tiny_run
    csv = run_dir / DIAGNOSTICS_FILENAME
    csv.write_text(csv.read_text().splitlines()[0] + "\n")
    result = runner.invoke(app, ["verify", str(path), "--run-dir", str(run_dir)])
    assert result.exit_code == 4


def test_blowup_without_coverage_exits_3(mocker, tiny_run):
    _, run_dir = tiny_run
    mocker.patch("brakkelab.cli.blowup_cmd.blowup_run_dir",
                 side_effect=WindowNotCovered("Rescaled window is not covered by the run."))
    result = runner.invoke(app, ["blowup", str(run_dir), "-a", "0.4", "-a", "0.2"])
    assert result.exit_code == 3


def test_plot_writes_svgs(tiny_run):
    _, run_dir = tiny_run
    result = runner.invoke(app, ["plot", str(run_dir)])
    assert result.exit_code == 0, result.output
    assert (run_dir / "plots" / "ledger.svg").is_file()
    assert (run_dir / "plots" / "entropy.svg").is_file()


def test_batch_rejects_shared_run_dir(write_scenario, tmp_path):
    write_scenario(TINY, "a.yaml")
    write_scenario(TINY, "b.yaml")
    result = runner.invoke(app, ["batch", str(tmp_path), "-o", str(tmp_path / "out")])
    assert result.exit_code == 2


def test_batch_runs_each_scenario(write_scenario, tmp_path):
    (tmp_path / "suite").mkdir()
    write_scenario(TINY, "suite/a.yaml")
    write_scenario({**TINY, "name": "tiny_two"}, "suite/b.yaml")
    result = runner.invoke(app, ["batch", str(tmp_path / "suite"), "-o", str(tmp_path / "out"), "-j", "2"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "out" / "runs" / "tiny" / "manifest.json").is_file()
    assert (tmp_path / "out" / "runs" / "tiny_two" / "manifest.json").is_file()
