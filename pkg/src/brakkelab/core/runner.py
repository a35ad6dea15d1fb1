import importlib.metadata
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .blowup import BlowupAnalysis, analyze_blowup
from .checks import RunArtifacts, run_checks
from .errors import BrakkeLabError, InsufficientTail, PreconditionUnverified
from .flow import FlowTrajectory, evolve, singular_point_estimate
from .gaussian import KernelCenter, area_ratio_sup, entropy_along, monotonicity_ledger
from .generators import build_surface
from .mesh import TriMesh
from .schemas import (
    BlowupPlan,
    FlowStatus,
    KernelCenterSpec,
    RunManifest,
    Scenario,
    SnapshotEntry,
    VerifyOutput,
)
from ..utils.file_handler import (
    BLOWUP_REPORT_FILENAME,
    DIAGNOSTICS_COLUMNS,
    DIAGNOSTICS_FILENAME,
    MANIFEST_FILENAME,
    load_blowup_report,
    load_diagnostics,
    load_manifest,
    load_scenario,
    load_trajectory,
)
from ..utils.logging_utils import get_logger
from ..utils.mesh_io import FLOAT_FORMAT, read_mesh, write_off

logger = get_logger(__name__)

SNAPSHOT_DIR = "snapshots"
SLICE_DIR = "slices"


def package_version() -> str:
    try:
        return importlib.metadata.version("brakkelab")
    except importlib.metadata.PackageNotFoundError:
        return "0.0.0-dev"


@dataclass
class RunResult:
    run_dir: Path
    manifest: RunManifest
    trajectory: FlowTrajectory
    blowup: Optional[BlowupAnalysis] = None

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.manifest.checks)


class ScenarioRunner:
    """Runs one scenario: evolve, diagnostics, blow-up, checks, artifacts."""

    def __init__(self, scenario: Scenario, output_root: Optional[Path] = None):
        self.scenario = scenario
        self.run_dir = scenario.resolved_output_dir(output_root)
        self.files: List[str] = []
        self.singular_center: Optional[KernelCenterSpec] = None

    def _with_context(self, error: BrakkeLabError) -> BrakkeLabError:
        error.context.setdefault("scenario", self.scenario.name)
        return error

    def simulate(self) -> FlowTrajectory:
        initial = build_surface(self.scenario.surface)
        logger.info(f"Scenario '{self.scenario.name}': initial surface {initial!r}")
        return evolve(initial, self.scenario.force, self.scenario.step_policy, self.scenario.t_end,
                      t_start=self.scenario.t_start)

    def kernel_centers(self, traj: FlowTrajectory) -> List[KernelCenterSpec]:
        centers = list(self.scenario.diagnostics.kernel_centers)
        if self.scenario.diagnostics.include_singular_center and traj.status == FlowStatus.SINGULAR:
            try:
                y, s = singular_point_estimate(traj)
                self.singular_center = KernelCenterSpec(y=y.tolist(), s=s)
                centers.append(self.singular_center)
            except (InsufficientTail, PreconditionUnverified) as e:
                logger.warning(f"No singular kernel center: {str(e).splitlines()[0]}")
        return centers

    def _snapshot_columns(self, traj: FlowTrajectory) -> Dict[str, np.ndarray]:
        plan = self.scenario.diagnostics
        n = len(traj)
        entropy_lb = np.full(n, np.nan)
        area_lb = np.full(n, np.nan)
        last = n - 1
        if plan.entropy_every:
            picks = sorted(set(range(0, n, plan.entropy_every)) | {last})
            _, values = entropy_along(traj, picks)
            entropy_lb[picks] = values
        if plan.area_ratio_every:
            for k in sorted(set(range(0, n, plan.area_ratio_every)) | {last}):
                area_lb[k] = area_ratio_sup(traj[k].mesh, sample_count=plan.area_ratio_samples,
                                            seed=self.scenario.seed).value
        return {"entropy_lb": entropy_lb, "area_ratio_lb": area_lb}

    def diagnostics(self, traj: FlowTrajectory, centers: Sequence[KernelCenterSpec]) -> pd.DataFrame:
        """One row per (kernel center, snapshot); ledger columns are empty at or after s."""
        per_snapshot = self._snapshot_columns(traj)
        times = traj.times()
        blocks = []
        for index, spec in enumerate(centers or [None]):
            block = pd.DataFrame({"snapshot": np.arange(len(traj)), "t": times, **per_snapshot})
            block["center"] = index if spec is not None else np.nan
            block["s"] = spec.s if spec is not None else np.nan
            for column in ("G", "D", "S", "int_D", "int_S"):
                block[column] = np.nan
            if spec is not None and self.scenario.diagnostics.ledger:
                before = traj.before(spec.s)
                if len(before) >= 2:
                    ledger = monotonicity_ledger(before, KernelCenter.at(spec.y, spec.s), self.scenario.force)
                    rows = block["t"] < spec.s
                    block.loc[rows, "G"] = ledger.G
                    block.loc[rows, "D"] = ledger.D
                    block.loc[rows, "S"] = ledger.S
                    block.loc[rows, "int_D"] = ledger.int_D
                    block.loc[rows, "int_S"] = ledger.int_S
            blocks.append(block)
        return pd.concat(blocks, ignore_index=True)[list(DIAGNOSTICS_COLUMNS)]

    def blowup(self, traj: FlowTrajectory) -> Optional[BlowupAnalysis]:
        plan = self.scenario.blowup
        if plan is None:
            return None
        if plan.singular_point is None and traj.status != FlowStatus.SINGULAR:
            logger.info("Flow did not become singular; blow-up analysis skipped")
            return None
        return analyze_blowup(traj, plan, self.scenario.constants, self.scenario.force)

    # --- artifacts --------------------------------------------------------

    def _write(self, relative: str, writer) -> None:
        path = self.run_dir / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        writer(path)
        if relative not in self.files:
            self.files.append(relative)

    def write_snapshots(self, traj: FlowTrajectory) -> List[SnapshotEntry]:
        entries = []
        for index, snap in enumerate(traj):
            relative = f"{SNAPSHOT_DIR}/snap_{index:05d}.off"
            self._write(relative, lambda path, mesh=snap.mesh: write_off(mesh, path))
            entries.append(SnapshotEntry(index=index, t=snap.t, step=snap.step, dense=snap.dense, file=relative))
        return entries

    def write_blowup(self, analysis: BlowupAnalysis) -> None:
        write_blowup_artifacts(self.run_dir, analysis, self.files,
                               self.scenario.blowup.write_slices if self.scenario.blowup else True)

    def run(self) -> RunResult:
        try:
            traj = self.simulate()
            centers = self.kernel_centers(traj)
            frame = self.diagnostics(traj, centers)
            analysis = self.blowup(traj)
        except BrakkeLabError as e:
            raise self._with_context(e)

        self.run_dir.mkdir(parents=True, exist_ok=True)
        snapshots = self.write_snapshots(traj)
        self._write(DIAGNOSTICS_FILENAME,
                    lambda path: frame.to_csv(path, index=False, float_format=FLOAT_FORMAT))
        if analysis is not None:
            self.write_blowup(analysis)

        artifacts = RunArtifacts(self.scenario, traj, centers, frame,
                                 analysis.report if analysis else None, _slice_meshes(analysis))
        checks = run_checks(artifacts)
        singular_point = self.singular_center.y if self.singular_center else None
        if analysis is not None:
            singular_point = analysis.report.singular_point
        manifest = RunManifest(
            scenario_name=self.scenario.name,
            seed=self.scenario.seed,
            brakkelab_version=package_version(),
            status=traj.status,
            t_final=traj.t_final,
            singular_time=traj.singular_time,  # detection time; the extrapolated s is in kernel_centers
            singular_point=singular_point,
            steps=traj.steps,
            kernel_centers=centers,
            snapshots=snapshots,
            files=sorted(self.files + [MANIFEST_FILENAME]),
            scenario=self.scenario,
            checks=checks,
        )
        (self.run_dir / MANIFEST_FILENAME).write_text(manifest.model_dump_json(indent=2))
        logger.info(f"Run written to {self.run_dir} ({len(manifest.files)} files)")
        return RunResult(self.run_dir, manifest, traj, analysis)


def _slice_meshes(analysis: Optional[BlowupAnalysis]) -> Dict[float, TriMesh]:
    if analysis is None:
        return {}
    return {sl.alpha: sl.mesh for sl in analysis.slices}


def write_blowup_artifacts(run_dir: Path, analysis: BlowupAnalysis, files: List[str],
                           write_slices: bool = True) -> None:
    """Writes blowup_report.json and one OFF file per selected slice; appends the names to ``files``."""
    run_dir = Path(run_dir)
    if write_slices:
        (run_dir / SLICE_DIR).mkdir(parents=True, exist_ok=True)
        for j, (sl, summary) in enumerate(zip(analysis.slices, analysis.report.slices)):
            relative = f"{SLICE_DIR}/alpha_{j:02d}.off"
            write_off(sl.mesh, run_dir / relative)
            summary.mesh_file = relative
            if relative not in files:
                files.append(relative)
    (run_dir / BLOWUP_REPORT_FILENAME).write_text(analysis.report.model_dump_json(indent=2))
    if BLOWUP_REPORT_FILENAME not in files:
        files.append(BLOWUP_REPORT_FILENAME)


def run_scenario(config_path: Path, output_root: Optional[Path] = None) -> RunResult:
    """
    Loads a scenario file and runs it end to end.

    Raises:
        ConfigInvalid: the file does not parse or validate.
        BrakkeLabError: downstream failures, with the scenario name in the context.
    """
    scenario = load_scenario(Path(config_path))
    return ScenarioRunner(scenario, output_root).run()


def load_artifacts(run_dir: Path) -> RunArtifacts:
    """
    Reads back a run directory, touching only files the manifest lists.

    Raises:
        MissingArtifacts: a listed file is absent, truncated or unparsable.
    """
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    diagnostics = load_diagnostics(run_dir, manifest)
    traj = load_trajectory(run_dir, manifest)
    report = load_blowup_report(run_dir, manifest)
    slices = {}
    if report is not None:
        for summary in report.slices:
            if summary.mesh_file and summary.mesh_file in manifest.files:
                slices[summary.alpha] = read_mesh(run_dir / summary.mesh_file)
    return RunArtifacts(manifest.scenario, traj, manifest.kernel_centers, diagnostics, report, slices)


def verify_run_dir(run_dir: Path) -> VerifyOutput:
    artifacts = load_artifacts(run_dir)
    rows = run_checks(artifacts)
    return VerifyOutput(scenario_name=artifacts.scenario.name, run_dir=str(run_dir), rows=rows)


def verify_suite(config_path: Path, output_root: Optional[Path] = None) -> VerifyOutput:
    """Re-evaluates every inequality check against the stored artifacts of a completed run."""
    scenario = load_scenario(Path(config_path))
    return verify_run_dir(scenario.resolved_output_dir(output_root))


def blowup_run_dir(run_dir: Path, alphas: Optional[List[float]] = None) -> BlowupAnalysis:
    """Re-runs the blow-up analysis on a stored run, optionally with another α ladder."""
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    traj = load_trajectory(run_dir, manifest)
    scenario = manifest.scenario
    plan = scenario.blowup or BlowupPlan()
    if alphas:
        plan = plan.model_copy(update={"alphas": sorted(alphas, reverse=True)})
    analysis = analyze_blowup(traj, plan, scenario.constants, scenario.force)
    files = list(manifest.files)
    write_blowup_artifacts(run_dir, analysis, files, plan.write_slices)
    manifest.files = sorted(files)
    (run_dir / MANIFEST_FILENAME).write_text(manifest.model_dump_json(indent=2))
    return analysis


def register_files(run_dir: Path, names: Sequence[str]) -> RunManifest:
    """Adds files written after the run (plots) to the manifest."""
    manifest = load_manifest(run_dir)
    manifest.files = sorted(set(manifest.files) | set(names))
    (Path(run_dir) / MANIFEST_FILENAME).write_text(manifest.model_dump_json(indent=2))
    return manifest
