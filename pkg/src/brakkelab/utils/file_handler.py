import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
import yaml
from pydantic import BaseModel, ValidationError

from brakkelab.core.curvature import compute_curvature
from brakkelab.core.errors import InvalidMesh, MissingArtifacts
from brakkelab.core.flow import FlowTrajectory, Snapshot
from brakkelab.core.schemas import BlowupReport, RunManifest, Scenario
from brakkelab.utils.mesh_io import read_mesh

MANIFEST_FILENAME = "manifest.json"
DIAGNOSTICS_FILENAME = "diagnostics.csv"
BLOWUP_REPORT_FILENAME = "blowup_report.json"
SCENARIO_SUFFIXES = (".yaml", ".yml", ".json")
DIAGNOSTICS_COLUMNS = ("snapshot", "center", "s", "t", "G", "D", "S", "int_D", "int_S", "entropy_lb", "area_ratio_lb")


class ConfigInvalid(Exception):
    """Raised when a scenario file cannot be read, parsed or validated."""
    def __init__(self, message, file_path: Optional[Path] = None, errors: Optional[List[dict]] = None):
        super().__init__(message)
        self.file_path = file_path
        self.errors = errors  # pydantic validation errors

    def __str__(self):
        error_str = super().__str__()
        if self.file_path:
            error_str += f"\nFile: {self.file_path}"
        if self.errors:
            for err in self.errors:
                loc = " -> ".join(map(str, err['loc']))
                error_str += f"\n  Error at '{loc}': {err['msg']} (type: {err['type']})"
        return error_str


class ArtifactLoadError(MissingArtifacts):
    """A run artifact exists but cannot be parsed."""
    def __init__(self, message, file_path: Optional[Path] = None, errors: Optional[List[dict]] = None):
        super().__init__(message, {"file": str(file_path)} if file_path else None)
        self.file_path = file_path
        self.errors = errors

    def __str__(self):
        error_str = super().__str__()
        if self.errors:
            for err in self.errors:
                loc = " -> ".join(map(str, err['loc']))
                error_str += f"\n  Error at '{loc}': {err['msg']} (type: {err['type']})"
        return error_str


def _read_raw(file_path: Path) -> Any:
    try:
        text = file_path.read_text()
    except IOError as e:
        raise ConfigInvalid(f"Could not read file: {e}", file_path=file_path)
    try:
        if file_path.suffix.lower() == ".json":
            return json.loads(text)
        return yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigInvalid(f"Invalid {file_path.suffix.lstrip('.').upper()} format: {e}", file_path=file_path)


def _resolve_paths(raw: Dict[str, Any], base_dir: Path) -> Dict[str, Any]:
    surface = raw.get("surface")
    if isinstance(surface, dict) and surface.get("kind") == "file" and isinstance(surface.get("path"), str):
        path = Path(surface["path"])
        if not path.is_absolute():
            surface = {**surface, "path": str(base_dir / path)}
        raw = {**raw, "surface": surface}
    return raw


def parse_scenario(raw: Any, file_path: Optional[Path] = None) -> Scenario:
    """Validates an already-parsed mapping into a Scenario."""
    if not isinstance(raw, dict):
        raise ConfigInvalid("Scenario content should be a dictionary (mapping).", file_path=file_path)
    if file_path is not None:
        raw = _resolve_paths(raw, file_path.parent)
    try:
        return Scenario(**raw)
    except ValidationError as e:
        raise ConfigInvalid(
            "Scenario content does not match the required schema.",
            file_path=file_path,
            errors=e.errors()
        )


def load_scenario(file_path: Path) -> Scenario:
    """
    Loads a scenario from a YAML (or JSON) file.

    Relative mesh paths in a ``file`` surface are resolved against the
    scenario's directory.

    Raises:
        ConfigInvalid: If the file cannot be opened, is not valid YAML/JSON,
                       or does not conform to the Scenario schema.
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise ConfigInvalid("Scenario file not found.", file_path=file_path)
    if not file_path.is_file():
        raise ConfigInvalid("Path provided is not a file.", file_path=file_path)
    if file_path.suffix.lower() not in SCENARIO_SUFFIXES:
        raise ConfigInvalid(f"Unsupported scenario format '{file_path.suffix}'.", file_path=file_path)

    raw_data = _read_raw(file_path)
    if raw_data is None:  # empty file
        raise ConfigInvalid("Scenario file is empty.", file_path=file_path)
    return parse_scenario(raw_data, file_path)


def find_scenarios(paths: List[Path]) -> List[Path]:
    """Scenario files named directly or found recursively under directories."""
    found: List[Path] = []
    for path in paths:
        if path.is_file() and path.suffix.lower() in SCENARIO_SUFFIXES:
            found.append(path)
        elif path.is_dir():
            for pattern in ("*.yaml", "*.yml", "*.json"):
                found.extend(sorted(path.rglob(pattern)))
    return found


# --- run artifacts ----------------------------------------------------------

def _require(run_dir: Path, name: str, listed: Optional[List[str]] = None) -> Path:
    path = run_dir / name
    if listed is not None and name not in listed:
        raise MissingArtifacts("Artifact is not listed in the manifest.", {"run_dir": str(run_dir), "file": name})
    if not path.is_file():
        raise MissingArtifacts("Run artifact not found.", {"run_dir": str(run_dir), "file": name})
    return path


def _load_model(path: Path, model: type[BaseModel]) -> BaseModel:
    try:
        return model.model_validate_json(path.read_text())
    except ValidationError as e:
        raise ArtifactLoadError("Artifact does not match its schema.", file_path=path, errors=e.errors())
    except IOError as e:
        raise ArtifactLoadError(f"Could not read artifact: {e}", file_path=path)


def load_manifest(run_dir: Path) -> RunManifest:
    return _load_model(_require(Path(run_dir), MANIFEST_FILENAME), RunManifest)


def load_blowup_report(run_dir: Path, manifest: RunManifest) -> Optional[BlowupReport]:
    if BLOWUP_REPORT_FILENAME not in manifest.files:
        return None
    return _load_model(_require(Path(run_dir), BLOWUP_REPORT_FILENAME, manifest.files), BlowupReport)


def load_diagnostics(run_dir: Path, manifest: RunManifest) -> pd.DataFrame:
    """
    Reads diagnostics.csv and checks it holds a row for every snapshot of
    every kernel center; a short or unparsable file counts as missing.
    """
    path = _require(Path(run_dir), DIAGNOSTICS_FILENAME, manifest.files)
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ArtifactLoadError(f"Could not parse diagnostics: {e}", file_path=path)
    required = set(DIAGNOSTICS_COLUMNS)
    missing = required - set(frame.columns)
    if missing:
        raise MissingArtifacts("Diagnostics table lacks columns.", {"file": str(path), "missing": sorted(missing)})
    if frame[["snapshot", "t"]].isna().any().any():
        raise MissingArtifacts("Diagnostics table has incomplete rows.", {"file": str(path)})
    expected = len(manifest.snapshots) * max(1, len(manifest.kernel_centers))
    if len(frame) < expected:
        raise MissingArtifacts("Diagnostics table is truncated.",
                               {"file": str(path), "rows": len(frame), "expected": expected})
    return frame


def load_trajectory(run_dir: Path, manifest: RunManifest) -> FlowTrajectory:
    """Rebuilds the recorded trajectory from the snapshot files listed in the manifest."""
    run_dir = Path(run_dir)
    traj = FlowTrajectory(force=manifest.scenario.force, t_start=manifest.scenario.t_start,
                          status=manifest.status, steps=manifest.steps)
    for entry in manifest.snapshots:
        path = _require(run_dir, entry.file, manifest.files)
        try:
            mesh = read_mesh(path)
        except (InvalidMesh, ValueError) as e:
            raise ArtifactLoadError(f"Could not read snapshot: {str(e).splitlines()[0]}", file_path=path)
        traj.append(Snapshot(entry.t, mesh, compute_curvature(mesh), step=entry.step, dense=entry.dense))
    if not len(traj):
        raise MissingArtifacts("Run has no snapshots.", {"run_dir": str(run_dir)})
    traj.t_final = manifest.t_final
    traj.singular_time = manifest.singular_time
    return traj
