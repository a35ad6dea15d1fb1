import json
import shutil

import numpy as np
import pandas as pd
import pytest

from brakkelab.core.errors import MeshDegenerated, MissingArtifacts
from brakkelab.core.runner import (
    ScenarioRunner,
    blowup_run_dir,
    load_artifacts,
    register_files,
    run_scenario,
    verify_run_dir,
)
from brakkelab.core.schemas import FlowStatus, RunManifest
from brakkelab.utils.file_handler import (
    BLOWUP_REPORT_FILENAME,
    DIAGNOSTICS_FILENAME,
    MANIFEST_FILENAME,
    parse_scenario,
)
from brakkelab.utils.mesh_io import FLOAT_FORMAT

SPHERE_SCENARIO = {
    "name": "sphere_run",
    "surface": {"kind": "sphere", "radius": 2.0, "level": 2},
    "step_policy": {"snapshot_every": 10, "dense_tail": 50},
    "t_end": 1.2,
    "diagnostics": {
        "kernel_centers": [{"y": [0.0, 0.0, 0.0], "s": 1.0}, {"y": [0.0, 0.0, 0.0], "s": 1.5}],
        "entropy_every": 50,
        "local_area_windows": [{"x0": [2.0, 0.0, 0.0], "r": 1.0, "t0": 0.5}],
        "gauss_bonnet_balls": [{"center": [2.0, 0.0, 0.0], "inner_radius": 0.5, "outer_radius": 1.0}],
    },
    "blowup": {"alphas": [0.4, 0.2]},
}


@pytest.fixture(scope="module")
def sphere_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("runs")
    return ScenarioRunner(parse_scenario(SPHERE_SCENARIO), root).run()


@pytest.fixture
def run_copy(sphere_run, tmp_path):
    target = tmp_path / "copy"
    shutil.copytree(sphere_run.run_dir, target)
    return target


def by_name(rows, name):
    return [row for row in rows if row.name == name]


def test_sphere_run_becomes_singular(sphere_run):
    manifest = sphere_run.manifest
    assert manifest.status == FlowStatus.SINGULAR
    assert manifest.singular_time == pytest.approx(1.0, abs=0.02)
    assert len(manifest.kernel_centers) == 3
    assert manifest.kernel_centers[2].s == pytest.approx(1.0, abs=0.01)
    assert np.linalg.norm(manifest.singular_point) < 0.05


def test_manifest_lists_what_is_on_disk(sphere_run):
    run_dir = sphere_run.run_dir
    manifest = RunManifest.model_validate_json((run_dir / MANIFEST_FILENAME).read_text())
    on_disk = sorted(str(p.relative_to(run_dir)) for p in run_dir.rglob("*") if p.is_file())
    assert manifest.files == on_disk
    assert {MANIFEST_FILENAME, DIAGNOSTICS_FILENAME, BLOWUP_REPORT_FILENAME} <= set(manifest.files)
    assert "slices/alpha_01.off" in manifest.files
    assert len(manifest.snapshots) == len(sphere_run.trajectory)


def test_diagnostics_table_layout(sphere_run):
    frame = pd.read_csv(sphere_run.run_dir / DIAGNOSTICS_FILENAME)
    manifest = sphere_run.manifest
    assert len(frame) == len(manifest.snapshots) * len(manifest.kernel_centers)
    for index, spec in enumerate(manifest.kernel_centers):
        rows = frame[frame["center"] == index]
        assert rows["G"].isna().tolist() == (rows["t"] >= spec.s).tolist()
    assert frame["entropy_lb"].notna().sum() >= 3 * len(manifest.kernel_centers)


def test_ledger_about_singular_time_is_flat(sphere_run):
    frame = pd.read_csv(sphere_run.run_dir / DIAGNOSTICS_FILENAME)
    rows = frame[(frame["center"] == 0) & (frame["t"] <= 0.9)]
    assert np.ptp(rows["G"]) < 0.01 * rows["G"].iloc[0]
    later = frame[frame["center"] == 1]["G"].to_numpy()
    assert later[-1] < later[0]


def test_run_checks_hold_on_the_sphere(sphere_run):
    checks = sphere_run.manifest.checks
    ledgers = by_name(checks, "monotonicity_ledger")
    assert len(ledgers) == 3
    assert ledgers[1].passed
    assert all(row.details.get("stored_G_deviation") == 0.0 for row in ledgers)
    assert by_name(checks, "entropy_growth")[0].passed
    assert by_name(checks, "local_area_bound")[0].passed
    assert by_name(checks, "area_entropy_equivalence")[0].passed


def test_gauss_bonnet_ball_skipped_once_surface_leaves(sphere_run):
    rows = by_name(sphere_run.manifest.checks, "local_gauss_bonnet")
    assert [row.details["t"] for row in rows] == [0.0]
    assert rows[0].passed


def test_blowup_report_written(sphere_run):
    report = sphere_run.blowup.report
    assert report.alphas == [0.4, 0.2]
    assert report.self_similarity_errors[0] < 0.05
    assert all(sl.mesh_file for sl in report.slices)


def test_verify_reproduces_run_checks(sphere_run):
    output = verify_run_dir(sphere_run.run_dir)
    assert output.scenario_name == "sphere_run"
    stored = [(row.name, row.passed) for row in sphere_run.manifest.checks]
    assert [(row.name, row.passed) for row in output.rows] == stored


def test_reloaded_trajectory_matches(sphere_run):
    artifacts = load_artifacts(sphere_run.run_dir)
    assert len(artifacts.trajectory) == len(sphere_run.trajectory)
    assert np.array_equal(artifacts.trajectory[-1].mesh.vertices, sphere_run.trajectory[-1].mesh.vertices)
    assert set(artifacts.slice_meshes) == {0.4, 0.2}


def test_truncated_diagnostics_are_missing(run_copy):
    path = run_copy / DIAGNOSTICS_FILENAME
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[: len(lines) // 2]))
    with pytest.raises(MissingArtifacts):
        verify_run_dir(run_copy)


def test_unlisted_file_is_missing(run_copy):
    manifest = json.loads((run_copy / MANIFEST_FILENAME).read_text())
    manifest["files"].remove(DIAGNOSTICS_FILENAME)
    (run_copy / MANIFEST_FILENAME).write_text(json.dumps(manifest))
    with pytest.raises(MissingArtifacts):
        verify_run_dir(run_copy)


def test_deleted_snapshot_is_missing(run_copy):
    (run_copy / "snapshots" / "snap_00003.off").unlink()
    with pytest.raises(MissingArtifacts):
        load_artifacts(run_copy)


def test_tampered_ledger_fails_verification(run_copy):
    path = run_copy / DIAGNOSTICS_FILENAME
    frame = pd.read_csv(path)
    first = frame.index[frame["center"] == 1][0]
    frame.loc[first, "G"] *= 1.01
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    rows = by_name(verify_run_dir(run_copy).rows, "monotonicity_ledger")
    assert not rows[1].passed
    assert rows[1].error == "stored G column disagrees with the snapshots"
    assert rows[0].error is None


def test_blowup_rerun_with_new_ladder(run_copy):
    analysis = blowup_run_dir(run_copy, [0.4])
    assert analysis.report.alphas == [0.4]
    manifest = RunManifest.model_validate_json((run_copy / MANIFEST_FILENAME).read_text())
    assert BLOWUP_REPORT_FILENAME in manifest.files
    stored = json.loads((run_copy / BLOWUP_REPORT_FILENAME).read_text())
    assert stored["alphas"] == [0.4]


def test_register_files(run_copy):
    (run_copy / "ledger.svg").write_text("<svg/>")
    manifest = register_files(run_copy, ["ledger.svg"])
    assert "ledger.svg" in manifest.files
    assert load_artifacts(run_copy).scenario.name == "sphere_run"


def test_forced_run_reports_source_term(tmp_path):
    scenario = parse_scenario({
        "name": "falling_sphere",
        "surface": {"kind": "sphere", "radius": 2.0, "level": 2},
        "force": {"kind": "constant", "vector": [0.0, 0.0, -0.1]},
        "step_policy": {"snapshot_every": 20},
        "t_end": 0.3,
        "diagnostics": {"kernel_centers": [{"s": 1.0}]},
    })
    result = ScenarioRunner(scenario, tmp_path).run()
    assert result.manifest.status == FlowStatus.COMPLETED
    ledger = by_name(result.manifest.checks, "monotonicity_ledger")[0]
    assert ledger.passed
    assert ledger.details["source_integral"] > 0
    frame = pd.read_csv(result.run_dir / DIAGNOSTICS_FILENAME)
    assert (frame["S"] > 0).all()


def test_runs_are_deterministic(write_scenario, tmp_path):
    path = write_scenario({
        "name": "tiny",
        "surface": {"kind": "sphere", "radius": 1.0, "level": 1},
        "step_policy": {"snapshot_every": 20},
        "t_end": 0.05,
        "diagnostics": {"kernel_centers": [{"s": 0.5}], "entropy_every": 2, "area_ratio_every": 2},
    })
    first = run_scenario(path, tmp_path / "a")
    second = run_scenario(path, tmp_path / "b")
    for name in first.manifest.files:
        if name == MANIFEST_FILENAME:
            continue
        assert (first.run_dir / name).read_bytes() == (second.run_dir / name).read_bytes()


def test_regular_run_skips_blowup(mocker, exact_sphere_traj, tmp_path):
    mocker.patch("brakkelab.core.runner.evolve", return_value=exact_sphere_traj.before(0.3))
    scenario = parse_scenario({"name": "no_singularity", "t_end": 0.3, "blowup": {}})
    result = ScenarioRunner(scenario, tmp_path).run()
    assert result.blowup is None
    assert BLOWUP_REPORT_FILENAME not in result.manifest.files
    assert result.manifest.kernel_centers == []
    frame = pd.read_csv(result.run_dir / DIAGNOSTICS_FILENAME)
    assert len(frame) == len(result.manifest.snapshots)
    assert frame["center"].isna().all()


def test_numerical_failure_names_the_scenario(mocker, tmp_path):
    mocker.patch("brakkelab.core.runner.evolve", side_effect=MeshDegenerated("Update produced a degenerate triangle."))
    scenario = parse_scenario({"name": "broken", "t_end": 1.0})
    with pytest.raises(MeshDegenerated) as excinfo:
        ScenarioRunner(scenario, tmp_path).run()
    assert excinfo.value.context["scenario"] == "broken"
    assert not (tmp_path / "runs" / "broken").exists()
