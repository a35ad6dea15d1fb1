"""Parabolic blow-up about a singular point: rescaled slices, time-slice
selection, shrinker residuals, self-similarity and curvature concentration."""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.integrate import trapezoid
from scipy.sparse import csgraph
from scipy.spatial import cKDTree
from scipy.spatial.distance import directed_hausdorff

from .curvature import CurvatureField, compute_curvature, normal_projection
from .errors import (
    BrakkeLabError,
    EmptySlice,
    InvalidBall,
    NonNegativeTime,
    NonPositiveScale,
    NoSnapshotNearTarget,
    WindowNotCovered,
)
from .flow import FlowTrajectory, Snapshot, singular_point_estimate
from .forces import rescale_force
from .gaussian import (
    KernelCenter,
    MonotonicityLedger,
    entropy_search,
    entropy_seeds,
    gaussian_weight,
    monotonicity_ledger,
)
from .mesh import TriMesh, ball_area, integrate_scalar, vertex_to_face
from .schemas import (
    BlowupPlan,
    BlowupReport,
    CheckOutcome,
    ConcentrationPoint,
    Constants,
    ForceSpec,
    RescaledMCFForce,
    SliceSummary,
)
from .topology import allard_condition_scan, genus_and_components, local_gauss_bonnet_check, time_integrated_a2_check
from ..utils.logging_utils import get_logger

logger = get_logger(__name__)

LOW_RESOLUTION = "LowResolution"
NO_QUALIFYING_SLICE = "NoQualifyingSlice"


@dataclass
class RescaledSlice:
    """One snapshot seen in blow-up coordinates x ↦ (x−y)/α, t ↦ (t−s)/α²."""
    alpha: float
    t_rescaled: float
    t_original: float
    snapshot_index: int
    mesh: TriMesh
    curvature: CurvatureField
    residual: float
    a2_ball_mass: Dict[float, float] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    def summary(self, tau: float) -> SliceSummary:
        return SliceSummary(
            alpha=self.alpha, tau=tau, t_rescaled=self.t_rescaled, t_original=self.t_original,
            snapshot_index=self.snapshot_index, residual=self.residual,
            a2_ball_mass={f"{r:g}": m for r, m in self.a2_ball_mass.items()}, flags=list(self.flags),
        )


def residual_of(mesh: TriMesh, curvature: CurvatureField, t: float) -> float:
    """∫ρ_{0,0}(x,t)|H⃗ + x⊥/(−2t)|² dμ."""
    if not t < 0:
        raise NonNegativeTime("Shrinker residual needs a negative rescaled time.", {"t": t})
    tau = -t
    rho = gaussian_weight(mesh.vertices, np.zeros(3), tau)
    v = curvature.mean_curvature_vector + normal_projection(mesh.vertices, curvature.normals) / (2.0 * tau)
    return integrate_scalar(mesh, rho * np.einsum("ij,ij->i", v, v))


def shrinker_residual(slice_: RescaledSlice) -> float:
    return residual_of(slice_.mesh, slice_.curvature, slice_.t_rescaled)


def a2_ball_masses(mesh: TriMesh, curvature: CurvatureField, radii: Sequence[float]) -> Dict[float, float]:
    """∫_{B_R(0)}|A|² dμ for each R."""
    weights = vertex_to_face(mesh, curvature.a2)
    return {float(r): float(ball_area(mesh, [np.zeros(3)], r, face_weights=weights)[0]) for r in radii}


def _make_slice(snapshot: Snapshot, index: int, y: np.ndarray, s: float, alpha: float,
                r_ladder: Sequence[float]) -> RescaledSlice:
    mesh = snapshot.mesh.with_vertices((snapshot.mesh.vertices - y) / alpha, check=False)
    curvature = compute_curvature(mesh)
    t_rescaled = (snapshot.t - s) / alpha ** 2
    return RescaledSlice(
        alpha=alpha, t_rescaled=t_rescaled, t_original=snapshot.t, snapshot_index=index, mesh=mesh,
        curvature=curvature, residual=residual_of(mesh, curvature, t_rescaled),
        a2_ball_mass=a2_ball_masses(mesh, curvature, r_ladder),
    )


def static_slice(mesh: TriMesh, t_rescaled: float = -1.0, r_ladder: Sequence[float] = ()) -> RescaledSlice:
    """A mesh taken as already rescaled, at the given rescaled time."""
    curvature = compute_curvature(mesh)
    return RescaledSlice(1.0, t_rescaled, t_rescaled, 0, mesh, curvature,
                         residual_of(mesh, curvature, t_rescaled), a2_ball_masses(mesh, curvature, r_ladder))


def rescale_slice(traj: FlowTrajectory, y: Sequence[float], s: float, alpha: float, t_target: float,
                  snap_tolerance: float = 0.05, r_ladder: Sequence[float] = ()) -> RescaledSlice:
    """
    The snapshot nearest s + α²·t_target in rescaled coordinates.

    Raises:
        NonPositiveScale: α ≤ 0.
        NoSnapshotNearTarget: no snapshot within α²·snap_tolerance of the target time.
    """
    if not alpha > 0:
        raise NonPositiveScale("Blow-up scale must be positive.", {"alpha": alpha})
    target = s + alpha ** 2 * t_target
    k = traj.nearest(target)
    gap = abs(traj[k].t - target)
    if gap > alpha ** 2 * snap_tolerance:
        raise NoSnapshotNearTarget("No snapshot near the rescaled target time.",
                                   {"target_time": target, "nearest_time": traj[k].t, "alpha": alpha,
                                    "tolerance": alpha ** 2 * snap_tolerance})
    return _make_slice(traj[k], k, np.asarray(y, dtype=np.float64), s, alpha, r_ladder)


def _window_indices(traj: FlowTrajectory, s: float, alpha: float, t_lo: float, t_hi: float,
                    snap_tolerance: float) -> np.ndarray:
    lo, hi = s + alpha ** 2 * t_lo, s + alpha ** 2 * t_hi
    first, last = traj.span()
    slack = alpha ** 2 * snap_tolerance
    idx = traj.indices_between(lo - slack, hi + slack)
    idx = idx[traj.times()[idx] < s]
    if len(idx) == 0 or lo < first - slack or hi > last + slack:
        raise WindowNotCovered("Rescaled window is not covered by snapshots.",
                               {"alpha": alpha, "window": [t_lo, t_hi], "original": [lo, hi],
                                "span": [first, last], "inside": int(len(idx))})
    return idx


def _time_average(values: np.ndarray, t: np.ndarray) -> float:
    if len(t) < 2 or t[-1] == t[0]:
        return float(np.mean(values))
    return float(trapezoid(values, t) / (t[-1] - t[0]))


def select_time_slice(traj: FlowTrajectory, y: Sequence[float], s: float, alpha: float, tau: float,
                      r_ladder: Sequence[float] = (0.5, 1.0, 2.0), snap_tolerance: float = 0.05,
                      excess: float = 1.5) -> RescaledSlice:
    """
    A well-controlled slice in the rescaled window [−1−τ, −1].

    A slice qualifies when ∫_{B_R}|A|² and the shrinker residual are both at
    most ``excess`` times their window averages; the qualifying slice closest
    to the window midpoint is returned. Without a qualifying slice the one
    with the smallest worst normalized excess is returned, flagged.

    Raises:
        WindowNotCovered: no snapshot inside the window.
    """
    y = np.asarray(y, dtype=np.float64)
    idx = _window_indices(traj, s, alpha, -1.0 - tau, -1.0, snap_tolerance)
    slices = [_make_slice(traj[int(k)], int(k), y, s, alpha, r_ladder) for k in idx]
    if len(slices) == 1:
        only = slices[0]
        only.flags.append(LOW_RESOLUTION)
        logger.warning(f"Only one snapshot in the window for alpha={alpha:g}; slice flagged {LOW_RESOLUTION}")
        return only

    t = np.array([sl.t_rescaled for sl in slices])
    columns = [np.array([sl.residual for sl in slices])]
    columns += [np.array([sl.a2_ball_mass[float(r)] for sl in slices]) for r in r_ladder]
    normalized = []
    for col in columns:
        avg = _time_average(col, t)
        normalized.append(col / avg if avg > 0 else np.where(col > 0, np.inf, 0.0))
    worst = np.max(np.vstack(normalized), axis=0)
    qualifying = np.flatnonzero(worst <= excess * (1.0 + 1e-12))
    midpoint = -1.0 - 0.5 * tau
    if len(qualifying):
        pick = int(qualifying[np.argmin(np.abs(t[qualifying] - midpoint))])
        return slices[pick]
    pick = int(np.argmin(worst))
    chosen = slices[pick]
    chosen.flags.append(NO_QUALIFYING_SLICE)
    logger.warning(f"No slice met both controls for alpha={alpha:g}; best excess {worst[pick]:.3g}")
    return chosen


def delta_alpha(traj: FlowTrajectory, y: Sequence[float], s: float, alpha: float,
                window: Tuple[float, float] = (-2.0, -1.0), snap_tolerance: float = 0.05) -> float:
    """∫ ε_shrink dt over a rescaled window; tends to zero along blow-up sequences."""
    y = np.asarray(y, dtype=np.float64)
    idx = _window_indices(traj, s, alpha, window[0], window[1], snap_tolerance)
    t, res = [], []
    for k in idx:
        snap = traj[int(k)]
        mesh = snap.mesh.with_vertices((snap.mesh.vertices - y) / alpha, check=False)
        t_r = (snap.t - s) / alpha ** 2
        t.append(t_r)
        res.append(residual_of(mesh, compute_curvature(mesh), t_r))
    t, res = np.array(t), np.array(res)
    if len(t) < 2:
        return float(res[0] * (window[1] - window[0]))
    return float(trapezoid(res, t))


def rescaled_trajectory(traj: FlowTrajectory, y: Sequence[float], s: float, alpha: float,
                        force: Optional[ForceSpec] = None,
                        window: Optional[Tuple[float, float]] = None) -> FlowTrajectory:
    """The flow μ^α_t in rescaled coordinates, optionally restricted to a rescaled window."""
    y = np.asarray(y, dtype=np.float64)
    force = force if force is not None else traj.force
    out = FlowTrajectory(force=rescale_force(force, y, alpha), t_start=(traj.t_start - s) / alpha ** 2)
    for k, snap in enumerate(traj):
        if snap.t >= s:
            break
        t_r = (snap.t - s) / alpha ** 2
        if window is not None and not (window[0] <= t_r <= window[1]):
            continue
        mesh = snap.mesh.with_vertices((snap.mesh.vertices - y) / alpha, check=False)
        out.append(Snapshot(t_r, mesh, compute_curvature(mesh), step=snap.step, dense=snap.dense))
    if len(out) == 0:
        raise WindowNotCovered("No snapshot in the rescaled window.", {"alpha": alpha, "window": window})
    out.t_final = out.snapshots[-1].t
    out.status = traj.status
    return out


def rescaled_flow_view(traj: FlowTrajectory, y: Sequence[float], s: float) -> FlowTrajectory:
    """
    Continuous rescaling x ↦ (x−y)/√(s−t) in the time τ = −log(s−t); mean
    curvature flow becomes the rescaled flow ∂x/∂τ = H⃗ + x⊥/2.
    """
    y = np.asarray(y, dtype=np.float64)
    snapshots = []
    reach = 0.0
    for snap in traj:
        if snap.t >= s:
            break
        lam = np.sqrt(s - snap.t)
        mesh = snap.mesh.with_vertices((snap.mesh.vertices - y) / lam, check=False)
        reach = max(reach, float(np.linalg.norm(mesh.vertices, axis=1).max()))
        snapshots.append(Snapshot(-np.log(s - snap.t), mesh, compute_curvature(mesh), step=snap.step, dense=snap.dense))
    if not snapshots:
        raise WindowNotCovered("No snapshot before the singular time.", {"s": s})
    view = FlowTrajectory(force=RescaledMCFForce(domain_radius=max(2.0 * reach, 1e-12)), t_start=snapshots[0].t)
    for snap in snapshots:
        view.append(snap)
    view.t_final = snapshots[-1].t
    view.status = traj.status
    return view


def rescaled_ledger(traj: FlowTrajectory, y: Sequence[float], s: float, alpha: float,
                    force: Optional[ForceSpec] = None,
                    window: Optional[Tuple[float, float]] = None) -> MonotonicityLedger:
    """Monotonicity ledger of μ^α about (0, 0) with the rescaled force β^α."""
    view = rescaled_trajectory(traj, y, s, alpha, force, window)
    return monotonicity_ledger(view, KernelCenter(np.zeros(3), 0.0), view.force)


def source_scaling_slope(alphas: Sequence[float], source_integrals: Sequence[float]) -> Optional[float]:
    """Slope of log ∫S against log α; 2 for the α² law. None when undefined."""
    a = np.asarray(alphas, dtype=np.float64)
    v = np.asarray(source_integrals, dtype=np.float64)
    ok = v > 0
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(a[ok]), np.log(v[ok]), 1)[0])


def improved_h2_check(traj: FlowTrajectory, y: Sequence[float], s: float, alpha: float,
                      ball: Tuple[Sequence[float], float], R: float, tau: float,
                      constants: Optional[Constants] = None, snap_tolerance: float = 0.05) -> CheckOutcome:
    """
    ∫_{−1−τ}^{−1}∫_{B_r(x)}|H⃗|² dμ^α dt against C_H·τ·(r² + rR) plus the
    residual integrated over the same window. Report only.

    Raises:
        InvalidBall: B_r(x) is not inside B_R.
        WindowNotCovered: the window has no snapshots.
    """
    constants = constants or Constants()
    x, r = np.asarray(ball[0], dtype=np.float64), float(ball[1])
    if np.linalg.norm(x) + r > R * (1 + 1e-12):
        raise InvalidBall("Ball B_r(x) must lie inside B_R.", {"x": x.tolist(), "r": r, "R": R})
    y = np.asarray(y, dtype=np.float64)
    idx = _window_indices(traj, s, alpha, -1.0 - tau, -1.0, snap_tolerance)
    t, h2, res = [], [], []
    for k in idx:
        snap = traj[int(k)]
        mesh = snap.mesh.with_vertices((snap.mesh.vertices - y) / alpha, check=False)
        curv = compute_curvature(mesh)
        t_r = (snap.t - s) / alpha ** 2
        t.append(t_r)
        h2.append(float(ball_area(mesh, [x], r, face_weights=vertex_to_face(mesh, curv.h2))[0]))
        res.append(residual_of(mesh, curv, t_r))
    t, h2, res = np.array(t), np.array(h2), np.array(res)
    if len(t) > 1:
        lhs, budget = float(trapezoid(h2, t)), float(trapezoid(res, t))
    else:
        lhs, budget = float(h2[0] * tau), float(res[0] * tau)
    rhs = constants.c_h * tau * (r ** 2 + r * R) + budget
    return CheckOutcome(
        name="improved_h2",
        reference="improved H^2 bound after rescaling",
        passed=lhs <= rhs,
        margin=(rhs - lhs) / rhs if rhs > 0 else rhs - lhs,
        details={"alpha": alpha, "x": x.tolist(), "r": r, "R": R, "tau": tau, "lhs": lhs, "rhs": rhs,
                 "c_h": constants.c_h, "residual_budget": budget},
    )


# --- concentration ----------------------------------------------------------

def _cover_lattice(mesh: TriMesh, r_cover: float) -> np.ndarray:
    lo, hi = mesh.bounding_box()
    lo, hi = lo - r_cover, hi + r_cover
    axes = [np.arange(lo[k], hi[k] + 0.5 * r_cover, r_cover) for k in range(3)]
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
    distance, _ = cKDTree(mesh.vertices).query(lattice, distance_upper_bound=r_cover + mesh.max_edge_length())
    return lattice[np.isfinite(distance)]


def detect_concentration(slices: Sequence[RescaledSlice], epsilon_0: float = 0.25,
                         r_cover: float = 0.2) -> List[ConcentrationPoint]:
    """
    Points where the finest slice carries |A|² mass ≥ ε₀² in a cover ball.

    Balls of radius r_cover sit on a lattice of spacing r_cover; neighbouring
    flagged balls merge into one point, the |A|²-weighted centroid of the
    vertices they cover, with that covered mass.
    """
    if not slices:
        return []
    finest = min(slices, key=lambda sl: sl.alpha)
    mesh, curv = finest.mesh, finest.curvature
    if mesh.n_vertices == 0:
        return []
    lattice = _cover_lattice(mesh, r_cover)
    if len(lattice) == 0:
        return []
    masses = ball_area(mesh, lattice, r_cover, face_weights=vertex_to_face(mesh, curv.a2))
    flagged = lattice[masses >= epsilon_0 ** 2]
    if len(flagged) == 0:
        return []
    pairs = cKDTree(flagged).query_pairs(r_cover * np.sqrt(3.0) * (1.0 + 1e-9), output_type="ndarray")
    graph = sparse.csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(flagged),) * 2) \
        if len(pairs) else sparse.csr_matrix((len(flagged), len(flagged)))
    n_groups, labels = csgraph.connected_components(graph, directed=False)

    vertex_tree = cKDTree(mesh.vertices)
    vertex_mass = curv.a2 * mesh.vertex_areas
    points = []
    for g in range(n_groups):
        covered = set()
        for hits in vertex_tree.query_ball_point(flagged[labels == g], r_cover):
            covered.update(hits)
        covered = np.fromiter(sorted(covered), dtype=np.int64)
        w = vertex_mass[covered]
        total = float(w.sum())
        if total <= 0:
            continue
        centroid = (w[:, None] * mesh.vertices[covered]).sum(axis=0) / total
        points.append(ConcentrationPoint(point=centroid.tolist(), mass=total))
    logger.info(f"Concentration scan: {len(flagged)} flagged balls, {len(points)} points")
    return points


def concentration_count_check(points: Sequence[ConcentrationPoint], slice_: RescaledSlice, R: float,
                              entropy_value: float, constants: Optional[Constants] = None) -> CheckOutcome:
    """|Q ∩ B_R| ≤ C·(R² + 8πg(M∩B_R) + λ)/ε₀."""
    constants = constants or Constants()
    inside = sum(1 for q in points if np.linalg.norm(q.point) <= R)
    genus = genus_and_components(slice_.mesh, np.zeros(3), R).total_genus
    bound = constants.c_count * (R ** 2 + 8.0 * np.pi * genus + entropy_value) / constants.epsilon_0
    return CheckOutcome(
        name="concentration_count",
        reference="finitely many concentration points",
        passed=inside <= bound,
        margin=bound - inside,
        details={"count": inside, "bound": bound, "R": R, "genus": genus, "entropy_lb": entropy_value,
                 "epsilon_0": constants.epsilon_0},
    )


def self_similarity_error(slice_a: RescaledSlice, slice_b: RescaledSlice) -> float:
    """
    Distance between slice_a and slice_b moved to slice_a's time by the
    self-similar scaling λ = √(t_a/t_b): symmetric vertex Hausdorff distance
    over the bounding radius plus the relative area mismatch.
    """
    if slice_a.mesh.n_vertices == 0 or slice_b.mesh.n_vertices == 0:
        raise EmptySlice("Cannot compare an empty slice.")
    if not (slice_a.t_rescaled < 0 and slice_b.t_rescaled < 0):
        raise NonNegativeTime("Self-similarity needs negative rescaled times.",
                              {"t_a": slice_a.t_rescaled, "t_b": slice_b.t_rescaled})
    lam = np.sqrt(slice_a.t_rescaled / slice_b.t_rescaled)
    a = slice_a.mesh.vertices
    b = lam * slice_b.mesh.vertices
    hausdorff = max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])
    radius = float(np.linalg.norm(a, axis=1).max())
    if radius <= 0:
        raise EmptySlice("Slice has zero bounding radius.")
    area_a = slice_a.mesh.total_area
    area_b = lam ** 2 * slice_b.mesh.total_area
    return float(hausdorff / radius + abs(area_b - area_a) / area_a)


# --- full analysis ----------------------------------------------------------

@dataclass
class BlowupAnalysis:
    report: BlowupReport
    slices: List[RescaledSlice]


def analyze_blowup(traj: FlowTrajectory, plan: BlowupPlan, constants: Optional[Constants] = None,
                   force: Optional[ForceSpec] = None, residual_limit: float = 1e-3,
                   similarity_limit: float = 0.015) -> BlowupAnalysis:
    """Runs the ladder α_j and assembles the BlowupReport."""
    constants = constants or Constants()
    force = force if force is not None else traj.force
    if plan.singular_point is not None:
        y, s = np.asarray(plan.singular_point.y, dtype=np.float64), float(plan.singular_point.s)
    else:
        y, s = singular_point_estimate(traj)
    alphas = plan.ladder()
    taus = [float(np.sqrt(a)) for a in alphas]
    logger.info(f"Blow-up at y={np.round(y, 6).tolist()}, s={s:.9g} over alphas {alphas}")

    checks: List[CheckOutcome] = []
    slices: List[RescaledSlice] = []
    summaries: List[SliceSummary] = []
    used_alphas: List[float] = []
    source: List[float] = []

    initial = traj[0]
    seeds0 = entropy_seeds(initial.mesh, curvature=initial.curvature)
    entropy0 = entropy_search(initial.mesh, seeds0).value
    genus0 = genus_and_components(initial.mesh).total_genus

    for alpha, tau in zip(alphas, taus):
        try:
            sl = select_time_slice(traj, y, s, alpha, tau, plan.r_ladder, plan.snap_tolerance, constants.slice_excess)
        except WindowNotCovered as e:
            logger.warning(f"Ladder stops at alpha={alpha:g}: {str(e).splitlines()[0]}")
            checks.append(CheckOutcome(name="slice_selection", reference="selection of well-controlled slices",
                                       passed=False, error=str(e), details={"alpha": alpha}))
            break
        summary = sl.summary(tau)
        try:
            summary.delta_alpha = delta_alpha(traj, y, s, alpha, snap_tolerance=plan.snap_tolerance)
        except WindowNotCovered:
            summary.delta_alpha = None
        summary.entropy_lb = entropy_search(sl.mesh).value
        slices.append(sl)
        summaries.append(summary)
        used_alphas.append(alpha)

        for check in _per_level_checks(traj, y, s, alpha, tau, sl, plan, constants, genus0, entropy0):
            checks.append(check)
        try:
            ledger = rescaled_ledger(traj, y, s, alpha, force, window=(-2.0, -1.0))
            source.append(float(ledger.int_S[-1]))
            checks.append(ledger.check(constants.ledger_tol).model_copy(update={"name": f"rescaled_ledger[{alpha:g}]"}))
        except WindowNotCovered:
            source.append(0.0)

    similarity = [self_similarity_error(a, b) for a, b in zip(slices, slices[1:])]
    points = detect_concentration(slices, constants.epsilon_0, constants.r_cover)
    if slices:
        finest = min(slices, key=lambda sl: sl.alpha)
        checks.append(concentration_count_check(points, finest, plan.count_radius,
                                                summaries[slices.index(finest)].entropy_lb, constants))
        scan = allard_condition_scan(finest.mesh, [0.05, 0.1, 0.2], 0.1, finest.curvature)
        checks.append(CheckOutcome(name="allard_scan", reference="Allard density-ratio screening", passed=True,
                                   details={"certified": int(scan.certified_mask.sum()),
                                            "flagged": int((~scan.certified_mask).sum())}))

    for summary in summaries:
        passed = summary.entropy_lb <= (1.0 + constants.growth_tol) * constants.c_test * entropy0
        checks.append(CheckOutcome(name=f"entropy_uniformity[{summary.alpha:g}]",
                                   reference="entropy bound after rescaling", passed=passed,
                                   margin=(1.0 + constants.growth_tol) * constants.c_test * entropy0 - summary.entropy_lb,
                                   details={"entropy_lb": summary.entropy_lb, "entropy0": entropy0}))

    slope = source_scaling_slope(used_alphas, source) if force.bound > 0 else None
    residuals = [sl.residual for sl in slices]
    verdicts = {
        "residuals_small": bool(residuals) and all(r < residual_limit for r in residuals),
        "self_similar": all(e < similarity_limit for e in similarity),
        "entropy_uniform": all(c.passed for c in checks if c.name.startswith("entropy_uniformity")),
        "concentration_count": all(c.passed for c in checks if c.name == "concentration_count"),
    }
    if slope is not None:
        verdicts["source_scaling"] = abs(slope - 2.0) <= 0.1

    report = BlowupReport(
        singular_point=y.tolist(), singular_time=s, alphas=used_alphas, taus=taus[:len(used_alphas)],
        slices=summaries, residuals=residuals, concentration=points, self_similarity_errors=similarity,
        source_integrals=source, source_scaling_slope=slope, checks=checks, verdicts=verdicts,
        constants=constants,
    )
    return BlowupAnalysis(report, slices)


def _integrated_a2(traj, y, s, alpha, tau, sl, plan, constants, genus0, entropy0) -> CheckOutcome:
    view = rescaled_trajectory(traj, y, s, alpha, window=(-1.0 - tau, -1.0))
    # the recorded snapshots bound the window; the check integrates over what is covered
    return time_integrated_a2_check(view, np.zeros(3), plan.count_radius, view.span(), genus0, entropy0,
                                    residual_budget=sl.residual * tau, constants=constants)


def _per_level_checks(traj, y, s, alpha, tau, sl, plan, constants, genus0, entropy0) -> List[CheckOutcome]:
    out = []
    guarded = [
        lambda: improved_h2_check(traj, y, s, alpha, (np.zeros(3), plan.h2_ball_radius), plan.h2_outer_radius,
                                  tau, constants, plan.snap_tolerance),
        lambda: _integrated_a2(traj, y, s, alpha, tau, sl, plan, constants, genus0, entropy0),
        lambda: local_gauss_bonnet_check(sl.mesh, np.zeros(3), plan.count_radius, 0.5,
                                         inner_radius=min(1.0, 0.5 * plan.count_radius),
                                         tol=constants.gauss_bonnet_tol),
    ]
    for run in guarded:
        try:
            check = run()
        except BrakkeLabError as e:
            logger.warning(f"Check skipped at alpha={alpha:g}: {str(e).splitlines()[0]}")
            continue
        out.append(check.model_copy(update={"name": f"{check.name}[{alpha:g}]"}))
    return out
