from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .blowup import detect_concentration, concentration_count_check, static_slice
from .errors import BrakkeLabError, CoverageError, InnerBallEmpty
from .flow import FlowTrajectory
from .gaussian import (
    KernelCenter,
    check_area_entropy_equivalence,
    entropy_growth_check,
    local_area_bound_check,
    monotonicity_ledger,
    weak_form_check,
    weighted_growth_check,
)
from .mesh import TriMesh
from .schemas import BlowupReport, CheckOutcome, Constants, KernelCenterSpec, Scenario
from .topology import local_gauss_bonnet_check
from ..utils.logging_utils import get_logger

logger = get_logger(__name__)

# relative agreement required between stored and recomputed ledger values
STORED_VALUE_RTOL = 1e-9


@dataclass
class RunArtifacts:
    """Everything a check may look at: in-memory right after a run, or reloaded from a run directory."""
    scenario: Scenario
    trajectory: FlowTrajectory
    kernel_centers: List[KernelCenterSpec]
    diagnostics: pd.DataFrame
    blowup: Optional[BlowupReport] = None
    slice_meshes: Dict[float, TriMesh] = field(default_factory=dict)

    @property
    def constants(self) -> Constants:
        return self.scenario.constants


class InequalityCheck(ABC):
    """Abstract Base Class for every re-evaluable inequality."""

    check_name: str  # Must be defined by subclasses
    reference: str

    def __init__(self, check_config: Optional[Dict[str, Any]] = None):
        self.config = check_config or {}

    def tolerance(self, default: float) -> float:
        """The configured ``tol`` override, or the scenario constant."""
        return float(self.config.get("tol", default))

    @abstractmethod
    def evaluate(self, artifacts: RunArtifacts) -> List[CheckOutcome]:
        """
        Evaluates the inequality on the run artifacts.

        Returns:
            One CheckOutcome per instance of the inequality (per kernel center,
            window or ball); an empty list when the run has nothing to check.
        """
        pass

    def failed(self, error: BrakkeLabError, **details) -> CheckOutcome:
        return CheckOutcome(name=self.check_name, reference=self.reference, passed=False,
                            error=str(error).splitlines()[0], details=details)


class MonotonicityLedgerCheck(InequalityCheck):
    check_name = "monotonicity_ledger"
    reference = "monotonicity formula with additional forces"

    def evaluate(self, artifacts: RunArtifacts) -> List[CheckOutcome]:
        outcomes = []
        tol = self.tolerance(artifacts.constants.ledger_tol)
        bound = artifacts.scenario.force.bound
        for index, spec in enumerate(artifacts.kernel_centers):
            center = KernelCenter.at(spec.y, spec.s)
            traj = artifacts.trajectory.before(center.s)
            if len(traj) < 2:
                continue
            try:
                ledger = monotonicity_ledger(traj, center, artifacts.scenario.force)
            except BrakkeLabError as e:
                outcomes.append(self.failed(e, center=index))
                continue
            check = ledger.check(tol)
            deviation = self._stored_deviation(artifacts.diagnostics, index, ledger.G)
            check.details.update({"center": index, "stored_G_deviation": deviation})
            if deviation is not None and deviation > STORED_VALUE_RTOL:
                check.passed = False
                check.error = "stored G column disagrees with the snapshots"
            outcomes.append(check)
            growth = weighted_growth_check(ledger, bound, artifacts.constants.growth_tol)
            growth.details["center"] = index
            outcomes.append(growth)
        return outcomes

    @staticmethod
    def _stored_deviation(frame: pd.DataFrame, index: int, G: np.ndarray) -> Optional[float]:
        rows = frame[(frame["center"] == index) & frame["G"].notna()]
        if len(rows) != len(G):
            return None
        stored = rows["G"].to_numpy(dtype=np.float64)
        return float(np.max(np.abs(stored - G) / np.maximum(np.abs(G), 1e-300)))


class OneSidedLedgerCheck(InequalityCheck):
    """The force-free dissipation against twice the source, per kernel center."""
    check_name = "one_sided_ledger"
    reference = "one-sided monotonicity formula"

    def evaluate(self, artifacts: RunArtifacts) -> List[CheckOutcome]:
        outcomes = []
        tol = self.tolerance(artifacts.constants.ledger_tol)
        for index, spec in enumerate(artifacts.kernel_centers):
            center = KernelCenter.at(spec.y, spec.s)
            traj = artifacts.trajectory.before(center.s)
            if len(traj) < 2:
                continue
            try:
                check = monotonicity_ledger(traj, center, artifacts.scenario.force).one_sided_check(tol)
            except BrakkeLabError as e:
                outcomes.append(self.failed(e, center=index))
                continue
            check.details["center"] = index
            outcomes.append(check)
        return outcomes


class WeakFormCheck(InequalityCheck):
    check_name = "brakke_weak_form"
    reference = "Brakke inequality with a cutoff test function"

    def evaluate(self, artifacts: RunArtifacts) -> List[CheckOutcome]:
        tol = self.tolerance(artifacts.constants.ledger_tol)
        return [
            weak_form_check(artifacts.trajectory, window.x0, window.t0, window.r, artifacts.scenario.force, tol)
            for window in artifacts.scenario.diagnostics.weak_form_windows
        ]


class EntropyGrowthCheck(InequalityCheck):
    check_name = "entropy_growth"
    reference = "entropy growth bound"

    def evaluate(self, artifacts: RunArtifacts) -> List[CheckOutcome]:
        frame = artifacts.diagnostics.drop_duplicates("snapshot")
        frame = frame[frame["entropy_lb"].notna()]
        if len(frame) < 2:
            return []
        return [entropy_growth_check(frame["t"].to_numpy(), frame["entropy_lb"].to_numpy(),
                                     artifacts.scenario.force.bound, self.tolerance(artifacts.constants.growth_tol))]


class LocalAreaCheck(InequalityCheck):
    check_name = "local_area_bound"
    reference = "local area bound"

    def evaluate(self, artifacts: RunArtifacts) -> List[CheckOutcome]:
        outcomes = []
        for window in artifacts.scenario.diagnostics.local_area_windows:
            try:
                outcomes.append(local_area_bound_check(artifacts.trajectory, window.x0, window.r, window.t0,
                                                       artifacts.scenario.force.bound, artifacts.constants))
            except CoverageError as e:
                outcomes.append(self.failed(e, x0=window.x0, r=window.r, t0=window.t0))
        return outcomes


class GaussBonnetCheck(InequalityCheck):
    check_name = "local_gauss_bonnet"
    reference = "local Gauss-Bonnet inequality"

    def evaluate(self, artifacts: RunArtifacts) -> List[CheckOutcome]:
        outcomes = []
        traj = artifacts.trajectory
        picks = sorted({0, len(traj) - 1})
        for ball in artifacts.scenario.diagnostics.gauss_bonnet_balls:
            for k in picks:
                snap = traj[k]
                try:
                    check = local_gauss_bonnet_check(snap.mesh, ball.center, ball.outer_radius, ball.epsilon,
                                                     inner_radius=ball.inner_radius,
                                                     tol=self.tolerance(artifacts.constants.gauss_bonnet_tol))
                except InnerBallEmpty:
                    logger.info(f"No surface near {ball.center} at t={snap.t:.6g}; ball skipped")
                    continue
                except BrakkeLabError as e:
                    check = self.failed(e, center=ball.center)
                check.details["t"] = snap.t
                outcomes.append(check)
        return outcomes


class ConcentrationCountCheck(InequalityCheck):
    check_name = "concentration_count"
    reference = "finitely many concentration points"

    def evaluate(self, artifacts: RunArtifacts) -> List[CheckOutcome]:
        report = artifacts.blowup
        if report is None or not report.slices or not artifacts.slice_meshes:
            return []
        finest = min(report.slices, key=lambda sl: sl.alpha)
        mesh = artifacts.slice_meshes.get(finest.alpha)
        if mesh is None:
            return []
        constants = report.constants
        sl = static_slice(mesh, finest.t_rescaled)
        points = detect_concentration([sl], constants.epsilon_0, constants.r_cover)
        plan = artifacts.scenario.blowup
        radius = plan.count_radius if plan is not None else 2.0
        check = concentration_count_check(points, sl, radius, finest.entropy_lb or 0.0, constants)
        check.details["stored_count"] = len(report.concentration)
        return [check]


class AreaEntropyCheck(InequalityCheck):
    check_name = "area_entropy_equivalence"
    reference = "area growth bound is equivalent to an entropy bound"

    def evaluate(self, artifacts: RunArtifacts) -> List[CheckOutcome]:
        initial = artifacts.trajectory[0].mesh
        return [check_area_entropy_equivalence(initial, artifacts.constants,
                                               sample_count=artifacts.scenario.diagnostics.area_ratio_samples,
                                               seed=artifacts.scenario.seed)]


# Check Registry
_check_classes = {
    MonotonicityLedgerCheck.check_name: MonotonicityLedgerCheck,
    OneSidedLedgerCheck.check_name: OneSidedLedgerCheck,
    WeakFormCheck.check_name: WeakFormCheck,
    EntropyGrowthCheck.check_name: EntropyGrowthCheck,
    LocalAreaCheck.check_name: LocalAreaCheck,
    GaussBonnetCheck.check_name: GaussBonnetCheck,
    ConcentrationCountCheck.check_name: ConcentrationCountCheck,
    AreaEntropyCheck.check_name: AreaEntropyCheck,
}


def get_check(check_name: str, check_config: Optional[Dict[str, Any]] = None) -> Optional[InequalityCheck]:
    """Instance of the registered check, or None for an unknown name."""
    check_class = _check_classes.get(check_name.lower())
    if check_class:
        return check_class(check_config)
    return None


def run_checks(artifacts: RunArtifacts, names: Optional[List[str]] = None) -> List[CheckOutcome]:
    """
    Evaluates the named checks (all registered ones by default) in registry order,
    each configured from the scenario's ``diagnostics.check_settings``.
    """
    settings = artifacts.scenario.diagnostics.check_settings
    rows: List[CheckOutcome] = []
    for name in names or list(_check_classes):
        check = get_check(name, settings.get(name.lower()))
        if check is None:
            logger.warning(f"Check '{name}' not found. Skipping.")
            continue
        outcomes = check.evaluate(artifacts)
        for outcome in outcomes:
            logger.info(f"{outcome.name}: {'pass' if outcome.passed else 'FAIL'} (margin {outcome.margin})")
        rows.extend(outcomes)
    return rows
