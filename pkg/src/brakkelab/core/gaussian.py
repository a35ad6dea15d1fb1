"""Gaussian-weighted quantities of a flow: heat kernel, F-functional, entropy,
area ratios, the force-corrected monotonicity ledger and the growth bounds
built on it.

All Gaussian integrals are truncated at |x - y| > cutoff·√τ; the neglected
planar tail is e^{-cutoff²/4} of the total (about 1e-7 for the default 8).
"""
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from .curvature import CurvatureField, compute_curvature, normal_projection
from .errors import (
    NegativeSample,
    NonPositiveScale,
    TimeAfterCenter,
    WindowOutOfRange,
)
from .flow import FlowTrajectory
from .forces import eval_force
from .mesh import TriMesh, ball_area, integrate_scalar
from .schemas import CheckOutcome, Constants, ForceSpec
from ..utils.logging_utils import get_logger

logger = get_logger(__name__)

DEFAULT_CUTOFF = 8.0
_EVAL_CHUNK = 2_000_000


@dataclass(frozen=True)
class KernelCenter:
    """Spacetime point (y, s) of the backward heat kernel ρ_{y,s}."""
    y: np.ndarray
    s: float

    @classmethod
    def at(cls, y: Sequence[float], s: float) -> "KernelCenter":
        return cls(np.asarray(y, dtype=np.float64), float(s))


def heat_kernel(center: KernelCenter, x, t: float) -> np.ndarray:
    """ρ_{y,s}(x, t) = (4π(s−t))^{-1} exp(−|x−y|²/(4(s−t))) for surfaces (m = 2)."""
    tau = center.s - t
    if not tau > 0:
        raise TimeAfterCenter("Heat kernel evaluated at or after its center time.", {"t": t, "s": center.s})
    x = np.asarray(x, dtype=np.float64)
    d2 = np.sum((x - center.y) ** 2, axis=-1)
    return np.exp(-d2 / (4.0 * tau)) / (4.0 * np.pi * tau)


def gaussian_weight(points: np.ndarray, y: np.ndarray, tau: float, cutoff: float = DEFAULT_CUTOFF) -> np.ndarray:
    """Truncated ρ at the given points for scale τ."""
    d2 = np.sum((points - y) ** 2, axis=-1)
    values = np.exp(-d2 / (4.0 * tau)) / (4.0 * np.pi * tau)
    values[d2 > cutoff ** 2 * tau] = 0.0
    return values


def f_functional(mesh: TriMesh, y: Sequence[float], tau: float, cutoff: float = DEFAULT_CUTOFF) -> float:
    """
    F_{y,s}(M) with τ = s − t: the Gaussian-weighted area
    (4πτ)^{-1} ∫ exp(−|x−y|²/(4τ)) dμ.
    """
    if not tau > 0:
        raise NonPositiveScale("Gaussian scale must be positive.", {"tau": tau})
    y = np.asarray(y, dtype=np.float64)
    return integrate_scalar(mesh, lambda nodes: gaussian_weight(nodes, y, tau, cutoff))


# --- entropy --------------------------------------------------------------

@dataclass(frozen=True)
class EntropySeeds:
    """Starting points of the entropy search; reuse them to compare meshes."""
    centers: np.ndarray
    taus: np.ndarray

    def scaled(self, factor: float) -> "EntropySeeds":
        return EntropySeeds(self.centers * factor, self.taus * factor ** 2)

    def translated(self, offset: Sequence[float]) -> "EntropySeeds":
        return EntropySeeds(self.centers + np.asarray(offset, dtype=np.float64), self.taus)


@dataclass(frozen=True)
class EntropyEstimate:
    """Best F found; a lower bound for the entropy."""
    value: float
    y: np.ndarray
    tau: float
    seeds: EntropySeeds


def entropy_seeds(mesh: TriMesh, grid: int = 5, n_tau: int = 8, n_curvature: int = 8,
                  curvature: Optional[CurvatureField] = None) -> EntropySeeds:
    """
    Centers on a ``grid³`` lattice over the bounding box plus the strongest
    local maxima of |A|²; scales log-uniform in
    [max(min(1e-3·d², 1/(2·max|A|²)), 4·mean_edge²), 10·d²], so thin necks get
    their own scale.
    """
    lo, hi = mesh.bounding_box()
    axes = [np.linspace(lo[k], hi[k], grid) for k in range(3)]
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)

    if curvature is None:
        curvature = compute_curvature(mesh)
    a2 = curvature.a2
    adj = mesh.adjacency
    neighbor_max = np.zeros(mesh.n_vertices)
    rows = np.repeat(np.arange(mesh.n_vertices), np.diff(adj.indptr))
    np.maximum.at(neighbor_max, rows, a2[adj.indices])
    maxima = np.flatnonzero(a2 >= neighbor_max)
    order = maxima[np.argsort(-a2[maxima], kind="stable")]
    if len(order) < n_curvature:
        order = np.argsort(-a2, kind="stable")
    peaks = mesh.vertices[order[:n_curvature]]

    d = mesh.diameter()
    neck_scale = 0.5 / a2.max() if a2.max() > 0 else np.inf
    tau_lo = max(min(1e-3 * d ** 2, neck_scale), 4.0 * mesh.mean_edge_length() ** 2)
    tau_hi = 10.0 * d ** 2
    taus = np.geomspace(tau_lo, max(tau_hi, tau_lo), n_tau)
    return EntropySeeds(np.vstack([lattice, peaks]), taus)


def _quadrature(mesh: TriMesh) -> Tuple[np.ndarray, np.ndarray]:
    nodes = mesh.edge_midpoints().reshape(-1, 3)
    weights = np.repeat(mesh.face_areas / 3.0, 3)
    return nodes, weights


def _f_grid(nodes: np.ndarray, weights: np.ndarray, centers: np.ndarray, tau: float, cutoff: float) -> np.ndarray:
    out = np.empty(len(centers))
    chunk = max(1, _EVAL_CHUNK // max(len(nodes), 1))
    for start in range(0, len(centers), chunk):
        d2 = cdist(centers[start:start + chunk], nodes, "sqeuclidean")
        vals = np.exp(-d2 / (4.0 * tau))
        vals[d2 > cutoff ** 2 * tau] = 0.0
        out[start:start + chunk] = vals @ weights
    return out / (4.0 * np.pi * tau)


def entropy_search(mesh: TriMesh, seeds: Optional[EntropySeeds] = None, refine: int = 4,
                   rtol: float = 1e-4, cutoff: float = DEFAULT_CUTOFF) -> EntropyEstimate:
    """
    Multi-start maximization of F over (y, τ).

    Every seed pair is evaluated, then the ``refine`` best are polished with
    Nelder–Mead in coordinates normalized by the seed scale, so the search
    commutes with translating and scaling the mesh together with its seeds.
    """
    if seeds is None:
        seeds = entropy_seeds(mesh)
    nodes, weights = _quadrature(mesh)
    table = np.stack([_f_grid(nodes, weights, seeds.centers, tau, cutoff) for tau in seeds.taus], axis=1)
    flat = np.argsort(-table, axis=None, kind="stable")[:refine]
    best_value = float(table.flat[flat[0]])
    ci, ti = np.unravel_index(flat[0], table.shape)
    best_y, best_tau = seeds.centers[ci].copy(), float(seeds.taus[ti])

    simplex = np.vstack([np.zeros(4), 0.5 * np.eye(4)])
    for index in flat:
        ci, ti = np.unravel_index(index, table.shape)
        y0, tau0 = seeds.centers[ci], float(seeds.taus[ti])
        root = np.sqrt(tau0)

        def objective(p, y0=y0, tau0=tau0, root=root):
            return -_f_grid(nodes, weights, (y0 + root * p[:3])[None, :], tau0 * np.exp(p[3]), cutoff)[0]

        result = minimize(
            objective, np.zeros(4), method="Nelder-Mead",
            options={"initial_simplex": simplex, "xatol": 1e-6, "fatol": rtol * max(table.flat[index], 1e-12),
                     "maxiter": 800},
        )
        if -result.fun > best_value:
            best_value = float(-result.fun)
            best_y = y0 + root * result.x[:3]
            best_tau = float(tau0 * np.exp(result.x[3]))
    return EntropyEstimate(best_value, best_y, best_tau, seeds)


def entropy(mesh: TriMesh, seeds: Optional[EntropySeeds] = None) -> float:
    """Lower bound for sup_{y,τ} F_{y,τ}(mesh)."""
    return entropy_search(mesh, seeds).value


# --- area ratios ----------------------------------------------------------

@dataclass(frozen=True)
class AreaRatioEstimate:
    value: float
    center: np.ndarray
    radius: float


def area_ratio_sup(mesh: TriMesh, sample_count: int = 16, seed: int = 0,
                   radii: Optional[Sequence[float]] = None, max_radius: Optional[float] = None,
                   centers: Optional[np.ndarray] = None, n_radii: int = 24) -> AreaRatioEstimate:
    """
    Lower bound for sup_x sup_R μ(B_R(x))/R².

    Centers default to all vertices, the area centroid and ``sample_count``
    seeded uniform points in the bounding box. Radii run over a geometric
    ladder from the shortest edge to the diameter; unless ``max_radius`` is
    given, each center also tries the smallest ball containing the whole mesh.
    """
    if centers is None:
        rng = np.random.default_rng(seed)
        lo, hi = mesh.bounding_box()
        centers = np.vstack([mesh.vertices, mesh.centroid()[None, :], rng.uniform(lo, hi, size=(sample_count, 3))])
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if radii is None:
        top = mesh.diameter() if max_radius is None else max_radius
        radii = np.geomspace(min(mesh.min_edge_length(), top), top, n_radii)
    radii = np.asarray(radii, dtype=np.float64)
    if max_radius is not None:
        radii = radii[radii <= max_radius * (1 + 1e-12)]

    best = AreaRatioEstimate(0.0, centers[0], float(radii[0]) if len(radii) else 0.0)
    for r in radii:
        ratios = ball_area(mesh, centers, r) / r ** 2
        k = int(np.argmax(ratios))
        if ratios[k] > best.value:
            best = AreaRatioEstimate(float(ratios[k]), centers[k].copy(), float(r))
    if max_radius is None:
        far = cdist(centers, mesh.vertices).max(axis=1)
        ratios = mesh.total_area / far ** 2
        k = int(np.argmax(ratios))
        if ratios[k] > best.value:
            best = AreaRatioEstimate(float(ratios[k]), centers[k].copy(), float(far[k]))
    return best


def check_area_entropy_equivalence(mesh: TriMesh, constants: Optional[Constants] = None,
                                   sample_count: int = 16, seed: int = 0) -> CheckOutcome:
    """Both directions of the area-ratio / entropy equivalence against C_test."""
    constants = constants or Constants()
    area = area_ratio_sup(mesh, sample_count=sample_count, seed=seed)
    ent = entropy_search(mesh)
    area_over_entropy = area.value / ent.value
    entropy_over_area = ent.value / area.value
    worst = max(area_over_entropy, entropy_over_area)
    return CheckOutcome(
        name="area_entropy_equivalence",
        reference="area growth bound is equivalent to an entropy bound",
        passed=worst <= constants.c_test,
        margin=constants.c_test - worst,
        details={
            "area_ratio_lb": area.value,
            "entropy_lb": ent.value,
            "area_over_entropy": area_over_entropy,
            "entropy_over_area": entropy_over_area,
            "c_test": constants.c_test,
            "suspected_multisheet": bool(area.value > 1.8 * np.pi and area.radius < 0.25 * mesh.diameter()),
        },
    )


# --- monotonicity ledger ----------------------------------------------------

@dataclass
class MonotonicityLedger:
    """Per-snapshot terms of the monotonicity formula about one kernel center."""
    center: KernelCenter
    t: np.ndarray
    G: np.ndarray
    D: np.ndarray     # ∫ρ|H⃗ + (x−y)⊥/(2τ) − β/2|²
    S: np.ndarray     # ∫ρ|β|²/4
    D1: np.ndarray    # ∫ρ|H⃗ + (x−y)⊥/(2τ)|²

    @property
    def int_D(self) -> np.ndarray:
        return cumulative_trapezoid(self.D, self.t, initial=0.0)

    @property
    def int_S(self) -> np.ndarray:
        return cumulative_trapezoid(self.S, self.t, initial=0.0)

    @property
    def int_D1(self) -> np.ndarray:
        return cumulative_trapezoid(self.D1, self.t, initial=0.0)

    def _pair_margin(self, lhs_rate: np.ndarray, rhs_rate: np.ndarray, tol: float) -> Tuple[float, Tuple[int, int]]:
        """min over t1 <= t2 of G(t1) + ∫rhs + tol·G(t1) − G(t2) − ∫lhs."""
        L = cumulative_trapezoid(lhs_rate, self.t, initial=0.0)
        R = cumulative_trapezoid(rhs_rate, self.t, initial=0.0)
        g = self.G
        margin = (g[:, None] * (1.0 + tol) + (R[None, :] - R[:, None])) - (g[None, :] + (L[None, :] - L[:, None]))
        margin[np.tril_indices(len(g), k=-1)] = np.inf
        i, j = np.unravel_index(int(np.argmin(margin)), margin.shape)
        return float(margin[i, j]), (int(i), int(j))

    def check(self, tol: float = 0.02) -> CheckOutcome:
        """G(t2) + ∫D ≤ G(t1) + ∫S + tol·G(t1) for every recorded pair."""
        margin, (i, j) = self._pair_margin(self.D, self.S, tol)
        return CheckOutcome(
            name="monotonicity_ledger",
            reference="monotonicity formula with additional forces",
            passed=margin >= 0,
            margin=margin,
            details={"y": self.center.y.tolist(), "s": self.center.s, "worst_t1": float(self.t[i]),
                     "worst_t2": float(self.t[j]), "source_integral": float(self.int_S[-1]), "tol": tol},
        )

    def one_sided_check(self, tol: float = 0.02) -> CheckOutcome:
        """G(t2) + ∫D₁ ≤ G(t1) + ∫2S + tol·G(t1)."""
        margin, (i, j) = self._pair_margin(self.D1, 2.0 * self.S, tol)
        return CheckOutcome(
            name="one_sided_ledger",
            reference="one-sided monotonicity formula",
            passed=margin >= 0,
            margin=margin,
            details={"y": self.center.y.tolist(), "s": self.center.s,
                     "worst_t1": float(self.t[i]), "worst_t2": float(self.t[j]), "tol": tol},
        )

    def rows(self) -> List[dict]:
        int_d, int_s = self.int_D, self.int_S
        return [
            {"t": float(self.t[k]), "G": float(self.G[k]), "D": float(self.D[k]), "S": float(self.S[k]),
             "int_D": float(int_d[k]), "int_S": float(int_s[k]), "D1": float(self.D1[k])}
            for k in range(len(self.t))
        ]


def ledger_terms(mesh: TriMesh, curvature: CurvatureField, beta: np.ndarray, center: KernelCenter,
                 t: float, cutoff: float = DEFAULT_CUTOFF) -> Tuple[float, float, float, float]:
    """(G, D, S, D₁) of one snapshot."""
    tau = center.s - t
    if not tau > 0:
        raise TimeAfterCenter("Snapshot time is not before the kernel center.", {"t": t, "s": center.s})
    G = f_functional(mesh, center.y, tau, cutoff)
    shrink = curvature.mean_curvature_vector + normal_projection(mesh.vertices - center.y, curvature.normals) / (2.0 * tau)
    corrected = shrink - 0.5 * beta
    D = kernel_integral(mesh, center.y, tau, np.einsum("ij,ij->i", corrected, corrected), cutoff)
    S = kernel_integral(mesh, center.y, tau, 0.25 * np.einsum("ij,ij->i", beta, beta), cutoff)
    D1 = kernel_integral(mesh, center.y, tau, np.einsum("ij,ij->i", shrink, shrink), cutoff)
    return G, D, S, D1


def kernel_integral(mesh: TriMesh, y: np.ndarray, tau: float, values: np.ndarray,
                    cutoff: float = DEFAULT_CUTOFF) -> float:
    """
    ∫ρ f dμ on the quadrature nodes of :func:`f_functional`: ρ is evaluated at
    the edge midpoints and the per-vertex field f is interpolated linearly.
    A constant f gives exactly f·F.
    """
    nodes = mesh.edge_midpoints()
    rho = gaussian_weight(nodes.reshape(-1, 3), y, tau, cutoff).reshape(mesh.n_faces, 3)
    corner_values = np.asarray(values, dtype=np.float64)[mesh.faces]
    node_values = 0.5 * (corner_values + np.roll(corner_values, -1, axis=1))
    return float(np.dot(mesh.face_areas, (rho * node_values).mean(axis=1)))


def monotonicity_ledger(traj: FlowTrajectory, center: KernelCenter, force: Optional[ForceSpec] = None,
                        cutoff: float = DEFAULT_CUTOFF) -> MonotonicityLedger:
    """
    Evaluates G, D, S (and the uncorrected dissipation D₁) at every snapshot.

    Raises:
        TimeAfterCenter: a snapshot time is not before s.
    """
    force = force if force is not None else traj.force
    if traj.times().max() >= center.s:
        raise TimeAfterCenter("Trajectory reaches the kernel center time.",
                              {"t_last": float(traj.times().max()), "s": center.s})
    rows = []
    for snap in traj:
        beta = eval_force(force, snap.mesh, snap.curvature)
        rows.append(ledger_terms(snap.mesh, snap.curvature, beta, center, snap.t, cutoff))
    G, D, S, D1 = (np.array(col) for col in zip(*rows))
    return MonotonicityLedger(center, traj.times(), G, D, S, D1)


def weighted_growth_check(ledger: MonotonicityLedger, force_bound: float, tol: float = 0.02) -> CheckOutcome:
    """G(t2) ≤ e^{‖β‖²(t2−t1)/4}·G(t1)·(1+tol) for all recorded t1 ≤ t2."""
    t, g = ledger.t, ledger.G
    growth = np.exp(force_bound ** 2 * (t[None, :] - t[:, None]) / 4.0)
    ratio = g[None, :] / (growth * g[:, None] * (1.0 + tol))
    ratio[np.tril_indices(len(t), k=-1)] = 0.0
    worst = float(ratio.max())
    return CheckOutcome(
        name="weighted_growth",
        reference="growth of the Gaussian weighted area",
        passed=worst <= 1.0,
        margin=1.0 - worst,
        details={"y": ledger.center.y.tolist(), "s": ledger.center.s, "force_bound": force_bound, "tol": tol},
    )


def entropy_growth_check(times: Sequence[float], values: Sequence[float], force_bound: float,
                         tol: float = 0.02) -> CheckOutcome:
    """λ(t) ≤ e^{‖β‖²(t−T₀)/4}·λ(T₀)·(1+tol) from entropy lower bounds with shared seeds."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    bound = np.exp(force_bound ** 2 * (times - times[0]) / 4.0) * values[0] * (1.0 + tol)
    worst = float((values / bound).max())
    return CheckOutcome(
        name="entropy_growth",
        reference="entropy growth bound",
        passed=worst <= 1.0,
        margin=1.0 - worst,
        details={"t": times.tolist(), "entropy_lb": values.tolist(), "force_bound": force_bound, "tol": tol},
    )


def entropy_along(traj: FlowTrajectory, indices: Iterable[int]) -> Tuple[List[float], List[float]]:
    """Entropy lower bounds at selected snapshots, all searched from the first one's seeds."""
    indices = list(indices)
    seeds = entropy_seeds(traj[indices[0]].mesh, curvature=traj[indices[0]].curvature)
    times, values = [], []
    for k in indices:
        times.append(traj[k].t)
        values.append(entropy_search(traj[k].mesh, seeds).value)
    return times, values


# --- local area bound -----------------------------------------------------

def local_area_bound_check(traj: FlowTrajectory, x0: Sequence[float], r: float, t0: float,
                           force_bound: Optional[float] = None, constants: Optional[Constants] = None) -> CheckOutcome:
    """
    μ_t(B_{r/2}(x₀)) ≤ 8·e^{(C + C/r)(t − t_s)}·μ_{t_s}(B_r(x₀)) on [t_s, t₀],
    t_s = t₀ − r²/16, C = 1 + ‖β‖².

    Raises:
        WindowOutOfRange: the window is not inside the recorded time span.
    """
    constants = constants or Constants()
    if force_bound is None:
        force_bound = float(traj.force.bound)
    if not r > 0:
        raise NonPositiveScale("Ball radius must be positive.", {"r": r})
    t_start = t0 - r ** 2 / 16.0
    first, last = traj.span()
    if t_start < first - 1e-12 or t0 > last + 1e-12:
        raise WindowOutOfRange("Local area window is outside the trajectory.",
                               {"window": [t_start, t0], "span": [first, last]})
    idx = traj.indices_between(t_start - 1e-12, t0 + 1e-12)
    if len(idx) == 0:
        idx = np.array([traj.nearest(t_start)])
    ref = traj[int(idx[0])]
    x0 = np.asarray(x0, dtype=np.float64)
    base = float(ball_area(ref.mesh, x0[None, :], r)[0])
    c = constants.c_lemma(force_bound)
    worst, worst_t = 0.0, ref.t
    for k in idx:
        snap = traj[int(k)]
        lhs = float(ball_area(snap.mesh, x0[None, :], 0.5 * r)[0])
        rhs = constants.local_area_factor * np.exp((c + c / r) * (snap.t - ref.t)) * base
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else np.inf)
        if ratio > worst:
            worst, worst_t = ratio, snap.t
    return CheckOutcome(
        name="local_area_bound",
        reference="local area bound",
        passed=worst <= 1.0,
        margin=1.0 - worst,
        details={"x0": x0.tolist(), "r": r, "t0": t0, "window_start": ref.t, "c_lemma": c,
                 "worst_t": worst_t, "base_area": base},
    )


# --- Brakke weak form with the cutoff test function -------------------------

def brakke_cutoff(x: np.ndarray, t: float, x0: Sequence[float], t0: float, r: float) -> np.ndarray:
    """φ = (1 − (|x−x₀|² + 2m(t−t₀))/r²)³₊ with m = 2."""
    q = (np.sum((np.asarray(x) - np.asarray(x0)) ** 2, axis=-1) + 4.0 * (t - t0)) / r ** 2
    return np.clip(1.0 - q, 0.0, None) ** 3


def _weak_form_terms(mesh: TriMesh, curvature: CurvatureField, beta: np.ndarray, t: float,
                     x0: np.ndarray, t0: float, r: float) -> Tuple[float, float]:
    """(∫φ dμ, ∫(H⃗+β)·(−φH⃗ + D⊥φ) + ∂φ/∂t dμ) of one snapshot."""
    x = mesh.vertices
    q = (np.sum((x - x0) ** 2, axis=1) + 4.0 * (t - t0)) / r ** 2
    base = np.clip(1.0 - q, 0.0, None)
    phi = base ** 3
    dphi = (-6.0 * base ** 2 / r ** 2)[:, None] * (x - x0)
    dphi_dt = -12.0 * base ** 2 / r ** 2
    h = curvature.mean_curvature_vector
    velocity = h + beta
    integrand = np.einsum("ij,ij->i", velocity, -phi[:, None] * h + normal_projection(dphi, curvature.normals)) + dphi_dt
    mass = integrate_scalar(mesh, lambda nodes: brakke_cutoff(nodes, t, x0, t0, r))
    return mass, integrate_scalar(mesh, integrand)


def weak_form_check(traj: FlowTrajectory, x0: Sequence[float], t0: float, r: float,
                    force: Optional[ForceSpec] = None, tol: float = 0.02) -> CheckOutcome:
    """
    ∫φ dμ_{t2} ≤ ∫φ dμ_{t1} + ∫∫[(H⃗+β)·(−φH⃗ + D⊥φ) + ∂φ/∂t] + tol·max ∫φ
    for every recorded pair, with Brakke's cutoff about (x₀, t₀).
    """
    force = force if force is not None else traj.force
    x0 = np.asarray(x0, dtype=np.float64)
    mass, rate = [], []
    for snap in traj:
        beta = eval_force(force, snap.mesh, snap.curvature)
        m, q = _weak_form_terms(snap.mesh, snap.curvature, beta, snap.t, x0, t0, r)
        mass.append(m)
        rate.append(q)
    mass, rate = np.array(mass), np.array(rate)
    cum = cumulative_trapezoid(rate, traj.times(), initial=0.0)
    slack = tol * max(float(mass.max()), 1e-300)
    margin = (mass[:, None] + (cum[None, :] - cum[:, None]) + slack) - mass[None, :]
    margin[np.tril_indices(len(mass), k=-1)] = np.inf
    worst = float(margin.min())
    return CheckOutcome(
        name="brakke_weak_form",
        reference="Brakke inequality with a cutoff test function",
        passed=worst >= 0,
        margin=worst,
        details={"x0": x0.tolist(), "t0": t0, "r": r, "tol": tol},
    )


# --- comparison lemma -----------------------------------------------------

@dataclass(frozen=True)
class GronwallResult:
    times: np.ndarray
    bound: np.ndarray
    verdict: bool
    hypothesis_holds: bool


def gronwall_bound(samples: Sequence[Tuple[float, float]], C: float, t0: float,
                   rtol: float = 1e-9) -> GronwallResult:
    """
    Exponential comparison bound e^{C(t−t₀)}f(t₀) at the sample times.

    ``verdict`` is true when f stays below the bound from t₀ on; the integral
    hypothesis f(t) ≤ f(t₀) + C∫_{t₀}^t f is checked with the trapezoid rule
    and reported separately.

    Raises:
        NegativeSample: some f(t) < 0.
    """
    data = np.asarray(samples, dtype=np.float64)
    t, f = data[:, 0], data[:, 1]
    if np.any(f < 0):
        raise NegativeSample("Comparison lemma needs a non-negative function.", {"min": float(f.min())})
    if np.any(np.diff(t) < 0):
        raise ValueError("Samples must be sorted by time.")
    k0 = int(np.argmin(np.abs(t - t0)))
    f0 = f[k0]
    bound = np.exp(C * (t - t[k0])) * f0
    after = slice(k0, None)
    integral = cumulative_trapezoid(f[after], t[after], initial=0.0)
    hypothesis = bool(np.all(f[after] <= (f0 + C * integral) * (1.0 + rtol)))
    verdict = bool(np.all(f[after] <= bound[after] * (1.0 + rtol)))
    return GronwallResult(t, bound, verdict, hypothesis)
