import logging

import pytest

from brakkelab.core.checks import (
    GaussBonnetCheck,
    InequalityCheck,
    LocalAreaCheck,
    MonotonicityLedgerCheck,
    OneSidedLedgerCheck,
    RunArtifacts,
    WeakFormCheck,
    get_check,
    run_checks,
)
from brakkelab.core.runner import ScenarioRunner
from brakkelab.core.schemas import KernelCenterSpec
from brakkelab.utils.file_handler import parse_scenario


def make_artifacts(traj, **diagnostics):
    scenario = parse_scenario({"name": "exact_sphere", "t_end": 1.0, "diagnostics": diagnostics})
    centers = list(scenario.diagnostics.kernel_centers)
    frame = ScenarioRunner(scenario).diagnostics(traj, centers)
    return RunArtifacts(scenario=scenario, trajectory=traj, kernel_centers=centers, diagnostics=frame)


@pytest.fixture(scope="module")
def short_traj(exact_sphere_traj):
    return exact_sphere_traj.before(0.3)


def test_get_check_known_and_unknown():
    assert isinstance(get_check("monotonicity_ledger"), MonotonicityLedgerCheck)
    assert isinstance(get_check("LOCAL_AREA_BOUND"), LocalAreaCheck)
    assert get_check("nonexistent") is None


def test_checks_share_the_base_class():
    check = get_check("local_gauss_bonnet", {"note": "x"})
    assert isinstance(check, InequalityCheck)
    assert check.config == {"note": "x"}


def test_unknown_check_is_skipped(short_traj, caplog):
    artifacts = make_artifacts(short_traj)
    with caplog.at_level(logging.WARNING):
        assert run_checks(artifacts, ["nonexistent"]) == []
    assert "nonexistent" in caplog.text


def test_ledger_check_matches_stored_table(short_traj):
    artifacts = make_artifacts(short_traj, kernel_centers=[{"s": 1.5}])
    rows = run_checks(artifacts, ["monotonicity_ledger"])
    assert [row.name for row in rows] == ["monotonicity_ledger", "weighted_growth"]
    assert rows[0].passed
    assert rows[0].details["stored_G_deviation"] == 0.0
    assert rows[0].details["center"] == 0


def test_ledger_check_without_matching_rows(short_traj):
    artifacts = make_artifacts(short_traj, kernel_centers=[{"s": 1.5}])
    artifacts.kernel_centers.append(KernelCenterSpec(s=2.0))
    rows = [row for row in MonotonicityLedgerCheck().evaluate(artifacts) if row.name == "monotonicity_ledger"]
    assert rows[1].details["stored_G_deviation"] is None


def test_check_settings_override_the_tolerance(short_traj):
    strict = {"monotonicity_ledger": {"tol": -0.5}}
    artifacts = make_artifacts(short_traj, kernel_centers=[{"s": 1.5}], check_settings=strict)
    assert get_check("monotonicity_ledger", strict["monotonicity_ledger"]).tolerance(0.02) == -0.5
    assert get_check("monotonicity_ledger").tolerance(0.02) == 0.02
    [ledger, growth] = run_checks(artifacts, ["monotonicity_ledger"])
    assert not ledger.passed
    assert ledger.details["tol"] == -0.5
    assert growth.passed


def test_one_sided_ledger_per_center(short_traj):
    artifacts = make_artifacts(short_traj, kernel_centers=[{"s": 1.5}, {"s": 2.0}])
    rows = run_checks(artifacts, ["one_sided_ledger"])
    assert isinstance(get_check("one_sided_ledger"), OneSidedLedgerCheck)
    assert [row.details["center"] for row in rows] == [0, 1]
    assert all(row.passed and row.name == "one_sided_ledger" for row in rows)


def test_weak_form_windows_are_checked(exact_sphere_traj):
    window = {"x0": [2.0, 0.0, 0.0], "r": 1.0, "t0": 0.0}
    artifacts = make_artifacts(exact_sphere_traj.before(0.205), weak_form_windows=[window],
                               check_settings={"brakke_weak_form": {"tol": 0.05}})
    assert isinstance(get_check("brakke_weak_form"), WeakFormCheck)
    [outcome] = run_checks(artifacts, ["brakke_weak_form"])
    assert outcome.passed
    assert outcome.details["tol"] == 0.05
    assert outcome.details["r"] == 1.0
    assert make_artifacts(exact_sphere_traj.before(0.205)).scenario.diagnostics.weak_form_windows == []


def test_local_area_window_out_of_range_fails(short_traj):
    artifacts = make_artifacts(short_traj, local_area_windows=[{"x0": [0.0, 0.0, 0.0], "r": 1.0, "t0": 2.0}])
    [outcome] = LocalAreaCheck().evaluate(artifacts)
    assert not outcome.passed
    assert outcome.error
    assert outcome.details["t0"] == 2.0


def test_gauss_bonnet_skips_empty_inner_ball(exact_sphere_traj, caplog):
    ball = {"center": [2.0, 0.0, 0.0], "inner_radius": 0.5, "outer_radius": 1.0}
    artifacts = make_artifacts(exact_sphere_traj, gauss_bonnet_balls=[ball])
    with caplog.at_level(logging.INFO):
        rows = GaussBonnetCheck().evaluate(artifacts)
    assert [row.details["t"] for row in rows] == [0.0]
    assert "ball skipped" in caplog.text


def test_all_checks_on_exact_sphere(short_traj):
    artifacts = make_artifacts(short_traj, kernel_centers=[{"s": 1.5}], entropy_every=10)
    rows = run_checks(artifacts)
    names = {row.name for row in rows}
    assert {"monotonicity_ledger", "one_sided_ledger", "entropy_growth", "area_entropy_equivalence"} <= names
    # no weak-form windows configured
    assert "brakke_weak_form" not in names
    # no blow-up report, so nothing to count
    assert "concentration_count" not in names
    assert all(row.passed for row in rows)
