from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Union
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Vector3 = Annotated[List[float], Field(min_length=3, max_length=3)]
PositiveFloat = Annotated[float, Field(gt=0)]


# Engineering constants of every inequality check; copied into each report
class Constants(BaseModel):
    """Constants the numerical checks compare against."""
    c_test: PositiveFloat = 32.0          # area/entropy equivalence
    c_h: PositiveFloat = 64.0             # improved H² bound
    c_a2: PositiveFloat = 16.0            # time-integrated |A|² bound
    c_count: PositiveFloat = 1.0          # concentration point count
    epsilon_0: PositiveFloat = 0.25
    r_cover: PositiveFloat = 0.2
    pinching_c: PositiveFloat = 10.0
    pinching_gamma: PositiveFloat = 1.0 / 6.0
    local_area_factor: PositiveFloat = 8.0
    ledger_tol: PositiveFloat = 0.02      # fraction of G(t1)
    growth_tol: PositiveFloat = 0.02
    gauss_bonnet_tol: PositiveFloat = 0.05
    slice_excess: PositiveFloat = 1.5
    gaussian_cutoff: PositiveFloat = 8.0  # truncate |x - y| > cutoff * sqrt(tau)

    def c_lemma(self, force_bound: float) -> float:
        """Constant of the local area bound, 1 + ‖β‖²."""
        return 1.0 + force_bound ** 2


# --- surfaces -------------------------------------------------------------

class SphereSurface(BaseModel):
    kind: Literal["sphere"] = "sphere"
    radius: PositiveFloat = 2.0
    level: int = Field(3, ge=0, le=7)
    center: Vector3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])


class TorusSurface(BaseModel):
    kind: Literal["torus"] = "torus"
    major_radius: PositiveFloat = 2.0
    minor_radius: PositiveFloat = 0.5
    n_major: int = Field(48, ge=3)
    n_minor: int = Field(24, ge=3)

    @model_validator(mode='after')
    def _embedded(self) -> 'TorusSurface':
        if self.minor_radius >= self.major_radius:
            raise ValueError("minor_radius must be smaller than major_radius")
        return self


class CapsuleSurface(BaseModel):
    kind: Literal["capsule"] = "capsule"
    length: PositiveFloat = 4.0
    radius: PositiveFloat = 1.0
    n_around: int = Field(32, ge=3)
    n_profile: int = Field(80, ge=4)

    @model_validator(mode='after')
    def _long_enough(self) -> 'CapsuleSurface':
        if self.length <= 2 * self.radius:
            raise ValueError("length must exceed the diameter")
        return self


class DumbbellSurface(BaseModel):
    kind: Literal["dumbbell"] = "dumbbell"
    bulb_radius: PositiveFloat = 1.0
    neck_radius: PositiveFloat = 0.3
    separation: PositiveFloat = 2.4
    n_around: int = Field(32, ge=3)
    n_profile: int = Field(96, ge=4)


class BoxSurface(BaseModel):
    kind: Literal["box"] = "box"
    size: PositiveFloat = 4.0
    n: int = Field(16, ge=1)


class FileSurface(BaseModel):
    kind: Literal["file"] = "file"
    path: str

    @field_validator('path')
    @classmethod
    def _exists(cls, value: str) -> str:
        if not Path(value).is_file():
            raise ValueError(f"mesh file not found: {value}")
        return value


SurfaceSpec = Annotated[
    Union[SphereSurface, TorusSurface, CapsuleSurface, DumbbellSurface, BoxSurface, FileSurface],
    Field(discriminator="kind"),
]


# --- forces ---------------------------------------------------------------

class ZeroForce(BaseModel):
    kind: Literal["zero"] = "zero"

    @property
    def bound(self) -> float:
        return 0.0


class ConstantForce(BaseModel):
    """Constant vector field v; sup-norm bound |v|."""
    kind: Literal["constant"] = "constant"
    vector: Vector3

    @property
    def bound(self) -> float:
        return float(sum(c * c for c in self.vector) ** 0.5)


class VolumePreservingForce(BaseModel):
    """Mean of the scalar mean curvature times the outward normal; ``bound`` is declared."""
    kind: Literal["volume_preserving"] = "volume_preserving"
    bound: PositiveFloat = 10.0


class RescaledMCFForce(BaseModel):
    """x⊥/2, declared bounded on the ball of radius ``domain_radius`` about the origin."""
    kind: Literal["rescaled_mcf"] = "rescaled_mcf"
    domain_radius: PositiveFloat = 4.0

    @property
    def bound(self) -> float:
        return 0.5 * self.domain_radius


class ScaledCompositeForce(BaseModel):
    """β(x) = scale · inner(shift + scale · x), the parabolic rescaling of ``inner``."""
    kind: Literal["scaled_composite"] = "scaled_composite"
    scale: PositiveFloat
    shift: Vector3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    inner: 'ForceSpec'

    @property
    def bound(self) -> float:
        return self.scale * self.inner.bound


ForceSpec = Annotated[
    Union[ZeroForce, ConstantForce, VolumePreservingForce, RescaledMCFForce, ScaledCompositeForce],
    Field(discriminator="kind"),
]
ScaledCompositeForce.model_rebuild()


# --- flow -----------------------------------------------------------------

class StepPolicy(BaseModel):
    """Adaptive step control and snapshot recording for the explicit flow."""
    model_config = ConfigDict(extra='forbid')

    safety: float = Field(0.25, gt=0.0, lt=1.0, description="c in dt <= c / max|A|^2.")
    dt_ceiling: PositiveFloat = 1e-3
    dt_floor: PositiveFloat = 1e-7
    max_displacement: PositiveFloat = Field(0.1, description="Per-step displacement cap, fraction of local mean edge length.")
    cfl: PositiveFloat = Field(0.2, description="dt <= cfl * min_edge^2.")
    a2_threshold: Optional[PositiveFloat] = Field(None, description="Absolute |A|^2 blow-up threshold; default 64 / mean_edge^2.")
    a2_threshold_factor: PositiveFloat = 64.0
    snapshot_every: int = Field(5, ge=1)
    dense_tail: int = Field(200, ge=8)
    remesh_every: int = Field(0, ge=0, description="Steps between remeshing passes; 0 disables.")
    max_steps: int = Field(200_000, ge=1)

    @model_validator(mode='after')
    def _floor_below_ceiling(self) -> 'StepPolicy':
        if self.dt_floor >= self.dt_ceiling:
            raise ValueError("dt_floor must be smaller than dt_ceiling")
        return self


class FlowStatus(str, Enum):
    RUNNING = "running"
    SINGULAR = "singular"
    COMPLETED = "completed"


# --- diagnostics ----------------------------------------------------------

class KernelCenterSpec(BaseModel):
    """Spacetime point (y, s) of a backward heat kernel."""
    y: Vector3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    s: float


class LocalAreaWindow(BaseModel):
    x0: Vector3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    r: PositiveFloat
    t0: float


class GaussBonnetBall(BaseModel):
    center: Vector3 = Field(default_factory=lambda: [0.0, 0.0, 0.0])
    inner_radius: PositiveFloat = 1.0
    outer_radius: PositiveFloat = 2.0
    epsilon: float = Field(0.5, gt=0.0, lt=1.0)

    @model_validator(mode='after')
    def _nested(self) -> 'GaussBonnetBall':
        if self.outer_radius <= self.inner_radius:
            raise ValueError("outer_radius must exceed inner_radius")
        return self


class DiagnosticsPlan(BaseModel):
    """Which monotone quantities and checks to evaluate along the run."""
    kernel_centers: List[KernelCenterSpec] = Field(default_factory=list)
    include_singular_center: bool = True
    ledger: bool = True
    entropy_every: int = Field(0, ge=0, description="Entropy lower bound every k-th snapshot; 0 disables.")
    area_ratio_every: int = Field(0, ge=0)
    area_ratio_samples: int = Field(16, ge=0)
    local_area_windows: List[LocalAreaWindow] = Field(default_factory=list)
    gauss_bonnet_balls: List[GaussBonnetBall] = Field(default_factory=list)
    weak_form_windows: List[LocalAreaWindow] = Field(
        default_factory=list, description="Brakke cutoff windows {x0, r, t0} for the weak-form inequality.")
    entropy_growth: bool = True
    check_settings: Dict[str, Dict[str, float]] = Field(
        default_factory=dict, description="Per-check overrides, e.g. {monotonicity_ledger: {tol: 0.05}}.")


class BlowupPlan(BaseModel):
    """Parabolic blow-up analysis at the first singular point."""
    singular_point: Optional[KernelCenterSpec] = None
    alpha0: PositiveFloat = 0.4
    levels: int = Field(4, ge=1)
    alphas: Optional[List[PositiveFloat]] = None
    r_ladder: List[PositiveFloat] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    snap_tolerance: PositiveFloat = Field(0.05, description="Rescaled-time distance to the nearest snapshot.")
    count_radius: PositiveFloat = 2.0
    h2_ball_radius: PositiveFloat = 0.25
    h2_outer_radius: PositiveFloat = 0.5
    write_slices: bool = True

    @field_validator('alphas')
    @classmethod
    def _strictly_decreasing(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("alphas must be strictly decreasing")
        return value

    def ladder(self) -> List[float]:
        if self.alphas:
            return list(self.alphas)
        return [self.alpha0 * 2.0 ** (-j) for j in range(self.levels)]


class Scenario(BaseModel):
    """A scenario file: initial surface, force, step policy and analysis plans."""
    model_config = ConfigDict(extra='forbid')

    name: str
    description: Optional[str] = None
    seed: int = 0
    surface: SurfaceSpec = Field(default_factory=SphereSurface)
    force: ForceSpec = Field(default_factory=ZeroForce)
    step_policy: StepPolicy = Field(default_factory=StepPolicy)
    t_start: float = 0.0
    t_end: float
    diagnostics: DiagnosticsPlan = Field(default_factory=DiagnosticsPlan)
    blowup: Optional[BlowupPlan] = None
    constants: Constants = Field(default_factory=Constants)
    output_dir: Optional[str] = None

    @model_validator(mode='after')
    def _time_span(self) -> 'Scenario':
        if self.t_end <= self.t_start:
            raise ValueError("t_end must be greater than t_start")
        return self

    def resolved_output_dir(self, output_root: Optional[Path] = None) -> Path:
        base = Path(self.output_dir) if self.output_dir else Path("runs") / self.name
        if output_root is not None and not base.is_absolute():
            return Path(output_root) / base
        return base


# --- reports --------------------------------------------------------------

class CheckOutcome(BaseModel):
    """Result of one inequality check."""
    name: str
    reference: str                       # which statement the check realizes
    passed: bool
    margin: Optional[float] = None       # rhs - lhs (or its normalized form); negative when failing
    details: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[str] = None


class SliceSummary(BaseModel):
    alpha: float
    tau: float
    t_rescaled: float
    t_original: float
    snapshot_index: int
    residual: float
    delta_alpha: Optional[float] = None
    a2_ball_mass: Dict[str, float] = Field(default_factory=dict)
    entropy_lb: Optional[float] = None
    flags: List[str] = Field(default_factory=list)
    mesh_file: Optional[str] = None


class ConcentrationPoint(BaseModel):
    point: Vector3
    mass: float


class BlowupReport(BaseModel):
    singular_point: Vector3
    singular_time: float
    alphas: List[float]
    taus: List[float]
    slices: List[SliceSummary] = Field(default_factory=list)
    residuals: List[float] = Field(default_factory=list)
    concentration: List[ConcentrationPoint] = Field(default_factory=list)
    self_similarity_errors: List[float] = Field(default_factory=list)
    source_integrals: List[float] = Field(default_factory=list)
    source_scaling_slope: Optional[float] = None
    checks: List[CheckOutcome] = Field(default_factory=list)
    verdicts: Dict[str, bool] = Field(default_factory=dict)
    constants: Constants = Field(default_factory=Constants)


class SnapshotEntry(BaseModel):
    index: int
    t: float
    step: int = 0
    dense: bool = False
    file: str


class RunManifest(BaseModel):
    """Index of a run directory; ``files`` lists every artifact written."""
    scenario_name: str
    seed: int
    brakkelab_version: Optional[str] = None
    status: FlowStatus
    t_final: float
    singular_time: Optional[float] = None
    singular_point: Optional[Vector3] = None
    steps: int = 0
    kernel_centers: List[KernelCenterSpec] = Field(default_factory=list)
    snapshots: List[SnapshotEntry] = Field(default_factory=list)
    files: List[str] = Field(default_factory=list)
    scenario: Scenario
    checks: List[CheckOutcome] = Field(default_factory=list)


class VerifyOutput(BaseModel):
    scenario_name: str
    run_dir: str
    rows: List[CheckOutcome] = Field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)
