"""Topology of surface pieces in balls and the local curvature/area inequalities
that use it: local Gauss-Bonnet, time-integrated |A|², Allard screening and
area pinching."""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.integrate import trapezoid
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .curvature import CurvatureField, compute_curvature
from .errors import InnerBallEmpty, InvalidBall, PreconditionUnverified, WindowNotCovered
from .flow import FlowTrajectory
from .mesh import TriMesh, ball_area, build_mesh, scale, translate, vertex_to_face
from .schemas import CheckOutcome, Constants


@dataclass(frozen=True)
class TopologySummary:
    euler: List[int]
    genus: List[int]
    boundary_loops: List[int]
    components: int
    inner_components: Optional[int] = None

    @property
    def total_genus(self) -> int:
        return int(sum(self.genus))


def clip_to_ball(mesh: TriMesh, center: Sequence[float], radius: float) -> Optional[Tuple[TriMesh, np.ndarray]]:
    """
    Faces whose centroid lies in the ball, as a (possibly bordered) mesh, and
    the original indices of the kept faces. None when nothing is inside.
    """
    center = np.asarray(center, dtype=np.float64)
    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    keep = np.flatnonzero(np.linalg.norm(centroids - center, axis=1) <= radius)
    if len(keep) == 0:
        return None
    faces = mesh.faces[keep]
    used, inverse = np.unique(faces.ravel(), return_inverse=True)
    clipped = build_mesh(mesh.vertices[used], inverse.reshape(-1, 3), allow_boundary=True, orient_outward=False)
    return clipped, keep


def _summarize(mesh: TriMesh) -> Tuple[int, np.ndarray, List[int], List[int], List[int]]:
    n_comp, labels = mesh.component_labels()
    n_v = np.bincount(labels, minlength=n_comp)
    n_e = np.bincount(labels[mesh.edges[:, 0]], minlength=n_comp)
    n_f = np.bincount(labels[mesh.faces[:, 0]], minlength=n_comp)
    chi = n_v - n_e + n_f

    loops = np.zeros(n_comp, dtype=int)
    bnd = mesh.boundary_edges
    if len(bnd):
        graph = sparse.csr_matrix((np.ones(len(bnd)), (bnd[:, 0], bnd[:, 1])), shape=(mesh.n_vertices,) * 2)
        _, loop_labels = csgraph.connected_components(graph, directed=False)
        on_boundary = np.unique(bnd.ravel())
        for loop in np.unique(loop_labels[on_boundary]):
            member = on_boundary[loop_labels[on_boundary] == loop][0]
            loops[labels[member]] += 1
    genus = [int(round((2 - c - b) / 2)) for c, b in zip(chi, loops)]
    return n_comp, labels, chi.tolist(), genus, loops.tolist()


def genus_and_components(mesh: TriMesh, center: Optional[Sequence[float]] = None,
                         radius: Optional[float] = None, inner_radius: float = 1.0) -> TopologySummary:
    """
    Per-component Euler characteristic and genus, optionally of M ∩ B_radius(center).

    For a clipped piece χ = 2 − 2g − b with b the number of boundary loops;
    ``inner_components`` counts the clipped components meeting B_inner_radius(center).
    """
    if center is None or radius is None:
        n_comp, _, chi, genus, loops = _summarize(mesh)
        return TopologySummary(chi, genus, loops, n_comp)
    clipped = clip_to_ball(mesh, center, radius)
    if clipped is None:
        return TopologySummary([], [], [], 0, 0)
    piece, _ = clipped
    n_comp, labels, chi, genus, loops = _summarize(piece)
    face_labels = labels[piece.faces[:, 0]]
    inner = 0
    for c in range(n_comp):
        weights = (face_labels == c).astype(float)
        if ball_area(piece, [center], inner_radius, face_weights=weights)[0] > 0:
            inner += 1
    return TopologySummary(chi, genus, loops, n_comp, inner)


def _a2_in_ball(mesh: TriMesh, curvature: CurvatureField, center, radius: float, field: str = "a2") -> float:
    values = curvature.a2 if field == "a2" else curvature.h2
    return float(ball_area(mesh, [center], radius, face_weights=vertex_to_face(mesh, values))[0])


def local_gauss_bonnet_check(mesh: TriMesh, center: Sequence[float], R: float, epsilon: float,
                             inner_radius: float = 1.0, tol: float = 0.05, n_density: int = 16) -> CheckOutcome:
    """
    (1−ε)∫_{M∩B₁}|A|² ≤ ∫_{M∩B_R}|H⃗|² + 8πg − 8πc′ + 24πR²/(ε(R−1)²), after
    rescaling so the inner ball has radius 1. Also reports
    D′ = sup_{r∈[1,R]} μ(B_r)/(πr²).

    Raises:
        InvalidBall: R does not exceed the inner radius.
        InnerBallEmpty: the surface does not meet the inner ball.
    """
    R_n = R / inner_radius
    if not R_n > 1.0:
        raise InvalidBall("Outer radius must exceed the inner radius.", {"R": R, "inner_radius": inner_radius})
    if not 0.0 < epsilon < 1.0:
        raise InvalidBall("epsilon must lie in (0, 1).", {"epsilon": epsilon})
    center = np.asarray(center, dtype=np.float64)
    normalized = scale(translate(mesh, -center), 1.0 / inner_radius)
    origin = np.zeros(3)
    if ball_area(normalized, [origin], 1.0)[0] <= 0:
        raise InnerBallEmpty("The surface does not meet the inner ball.", {"center": center.tolist()})
    curvature = compute_curvature(normalized)

    lhs = (1.0 - epsilon) * _a2_in_ball(normalized, curvature, origin, 1.0)
    h2 = _a2_in_ball(normalized, curvature, origin, R_n, field="h2")
    topo = genus_and_components(normalized, origin, R_n, inner_radius=1.0)
    rhs = (h2 + 8.0 * np.pi * topo.total_genus - 8.0 * np.pi * (topo.inner_components or 0)
           + 24.0 * np.pi * R_n ** 2 / (epsilon * (R_n - 1.0) ** 2))
    radii = np.linspace(1.0, R_n, n_density)
    d_prime = float(max(ball_area(normalized, [origin], r)[0] / (np.pi * r ** 2) for r in radii))
    slack = tol * abs(rhs)
    return CheckOutcome(
        name="local_gauss_bonnet",
        reference="local Gauss-Bonnet inequality",
        passed=lhs <= rhs + slack,
        margin=(rhs - lhs) / abs(rhs) if rhs != 0 else rhs - lhs,
        details={"center": center.tolist(), "R": R_n, "epsilon": epsilon, "lhs": lhs, "rhs": rhs,
                 "h2_integral": h2, "genus": topo.total_genus, "c_prime": topo.inner_components,
                 "D_prime": d_prime, "inner_radius": inner_radius},
    )


def time_integrated_a2_check(traj: FlowTrajectory, center: Sequence[float], R: float,
                             window: Tuple[float, float], genus0: int, entropy0: float,
                             residual_budget: float = 0.0, constants: Optional[Constants] = None) -> CheckOutcome:
    """
    ∫_window ∫_{B_R}|A|² dμ dt ≤ C·τ·(R² + 8πg(M₀) + λ(M₀)) + residual budget,
    τ the window length and C = ``constants.c_a2``.

    Raises:
        WindowNotCovered: fewer than one snapshot inside the window or the
            window sticks out of the recorded span.
    """
    constants = constants or Constants()
    t_lo, t_hi = window
    first, last = traj.span()
    idx = traj.indices_between(t_lo, t_hi)
    if len(idx) == 0 or t_lo < first - 1e-9 or t_hi > last + 1e-9:
        raise WindowNotCovered("Time window is not covered by snapshots.",
                               {"window": [t_lo, t_hi], "span": [first, last], "inside": int(len(idx))})
    center = np.asarray(center, dtype=np.float64)
    t = np.array([traj[int(k)].t for k in idx])
    mass = np.array([_a2_in_ball(traj[int(k)].mesh, traj[int(k)].curvature, center, R) for k in idx])
    tau = t_hi - t_lo
    lhs = float(trapezoid(mass, t)) if len(t) > 1 else float(mass[0] * tau)
    if len(t) > 1:
        # extend the end values to the window edges
        lhs += mass[0] * (t[0] - t_lo) + mass[-1] * (t_hi - t[-1])
    rhs = constants.c_a2 * tau * (R ** 2 + 8.0 * np.pi * genus0 + entropy0) + residual_budget
    return CheckOutcome(
        name="time_integrated_a2",
        reference="time-integrated |A|^2 bound from local Gauss-Bonnet",
        passed=lhs <= rhs,
        margin=(rhs - lhs) / rhs if rhs > 0 else rhs - lhs,
        details={"window": [t_lo, t_hi], "R": R, "lhs": lhs, "rhs": rhs, "c_a2": constants.c_a2,
                 "genus0": genus0, "entropy0": entropy0, "snapshots": int(len(idx))},
    )


@dataclass(frozen=True)
class AllardScan:
    certified: np.ndarray       # points where both conditions hold for some r
    flagged: np.ndarray         # the complement
    certified_mask: np.ndarray
    radius: np.ndarray          # smallest certifying radius per vertex, nan if none


def allard_condition_scan(mesh: TriMesh, r_ladder: Sequence[float], epsilon_a: float,
                          curvature: Optional[CurvatureField] = None) -> AllardScan:
    """
    Vertices x with, for some r in the ladder, |H⃗| ≤ ε_A/r on B_r(x) and
    μ(B_r(x)) ≤ (1+ε_A)πr².
    """
    curvature = curvature or compute_curvature(mesh)
    h = np.linalg.norm(curvature.mean_curvature_vector, axis=1)
    tree = cKDTree(mesh.vertices)
    certified = np.zeros(mesh.n_vertices, dtype=bool)
    radius = np.full(mesh.n_vertices, np.nan)
    for r in sorted(r_ladder):
        todo = np.flatnonzero(~certified)
        if len(todo) == 0:
            break
        neighborhoods = tree.query_ball_point(mesh.vertices[todo], r)
        h_max = np.array([h[nbrs].max() if len(nbrs) else 0.0 for nbrs in neighborhoods])
        density_ok = ball_area(mesh, mesh.vertices[todo], r) <= (1.0 + epsilon_a) * np.pi * r ** 2
        ok = (h_max <= epsilon_a / r) & density_ok
        certified[todo[ok]] = True
        radius[todo[ok]] = r
    return AllardScan(mesh.vertices[certified], mesh.vertices[~certified], certified, radius)


def area_pinching_check(mesh: TriMesh, x: Sequence[float], r: float, epsilon: float,
                        constants: Optional[Constants] = None, R: Optional[float] = None) -> CheckOutcome:
    """
    πr²(1 − Cε^{2γ}) ≤ μ(M′) ≤ πr²(1 + Cε^γ) for the component M′ of M ∩ B_r(x)
    through the surface point nearest x.

    Raises:
        PreconditionUnverified: ∫_{B_R(x)}|A|² > ε² (R defaults to 2r).
    """
    constants = constants or Constants()
    x = np.asarray(x, dtype=np.float64)
    R = 2.0 * r if R is None else R
    curvature = compute_curvature(mesh)
    a2_mass = _a2_in_ball(mesh, curvature, x, R)
    if a2_mass > epsilon ** 2:
        raise PreconditionUnverified("|A|^2 is not small on the analysis ball.",
                                     {"a2_integral": a2_mass, "epsilon_squared": epsilon ** 2, "R": R})
    # one edge of slack so faces crossing the sphere count toward the area
    clipped = clip_to_ball(mesh, x, r + mesh.max_edge_length())
    if clipped is None or ball_area(mesh, [x], r)[0] <= 0:
        raise InnerBallEmpty("No surface inside the ball.", {"x": x.tolist(), "r": r})
    piece, _ = clipped
    _, labels = piece.component_labels()
    nearest = int(np.argmin(np.linalg.norm(piece.vertices - x, axis=1)))
    weights = (labels[piece.faces[:, 0]] == labels[nearest]).astype(float)
    area = float(ball_area(piece, [x], r, face_weights=weights)[0])
    c, g = constants.pinching_c, constants.pinching_gamma
    lower = np.pi * r ** 2 * (1.0 - c * epsilon ** (2.0 * g))
    upper = np.pi * r ** 2 * (1.0 + c * epsilon ** g)
    return CheckOutcome(
        name="area_pinching",
        reference="area pinching of small-curvature components",
        passed=lower <= area <= upper,
        margin=min(area - lower, upper - area) / (np.pi * r ** 2),
        details={"x": x.tolist(), "r": r, "epsilon": epsilon, "area": area, "lower": lower, "upper": upper,
                 "a2_integral": a2_mass},
    )
