"""Explicit time integration of ∂x/∂t = H⃗ + β with adaptive steps and
singular-time detection."""
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .curvature import CurvatureField, compute_curvature
from .errors import (
    DegenerateFace,
    InsufficientTail,
    MeshDegenerated,
    NonPositiveScale,
    NumericalDegeneracy,
    PreconditionUnverified,
)
from .forces import eval_force
from .mesh import TriMesh
from .remesh import remesh
from .schemas import FlowStatus, ForceSpec, StepPolicy, ZeroForce
from ..utils.logging_utils import get_logger

logger = get_logger(__name__)

MIN_DENSE_SNAPSHOTS = 8
SINGULAR_FIT_POINTS = 32


@dataclass(frozen=True)
class Snapshot:
    t: float
    mesh: TriMesh
    curvature: CurvatureField
    step: int = 0
    dense: bool = False


@dataclass
class FlowTrajectory:
    """Time-stamped snapshots of one flow plus its termination status."""
    force: ForceSpec
    t_start: float
    snapshots: List[Snapshot] = field(default_factory=list)
    status: FlowStatus = FlowStatus.RUNNING
    t_final: Optional[float] = None
    singular_time: Optional[float] = None
    singular_location: Optional[np.ndarray] = None
    singular_reason: Optional[str] = None
    steps: int = 0

    def append(self, snapshot: Snapshot) -> None:
        if self.snapshots and snapshot.t <= self.snapshots[-1].t:
            raise ValueError("Snapshot times must be strictly increasing.")
        self.snapshots.append(snapshot)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, index) -> Snapshot:
        return self.snapshots[index]

    def __iter__(self):
        return iter(self.snapshots)

    def times(self) -> np.ndarray:
        return np.array([snap.t for snap in self.snapshots])

    def span(self) -> Tuple[float, float]:
        return self.snapshots[0].t, self.snapshots[-1].t

    def nearest(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times() - t)))

    def indices_between(self, t0: float, t1: float) -> np.ndarray:
        times = self.times()
        return np.flatnonzero((times >= t0) & (times <= t1))

    def before(self, s: float) -> "FlowTrajectory":
        """Copy restricted to the snapshots strictly earlier than s."""
        kept = FlowTrajectory(force=self.force, t_start=self.t_start, status=self.status, steps=self.steps)
        kept.snapshots = [snap for snap in self.snapshots if snap.t < s]
        kept.t_final = kept.snapshots[-1].t if kept.snapshots else None
        return kept

    @classmethod
    def from_meshes(cls, meshes: Sequence[TriMesh], times: Sequence[float],
                    force: Optional[ForceSpec] = None, dense: bool = True) -> "FlowTrajectory":
        """Wraps prescribed meshes (closed-form solutions, stored runs) as a trajectory."""
        traj = cls(force=force or ZeroForce(), t_start=float(times[0]))
        for k, (mesh, t) in enumerate(zip(meshes, times)):
            traj.append(Snapshot(float(t), mesh, compute_curvature(mesh), step=k, dense=dense))
        traj.t_final = float(times[-1])
        traj.status = FlowStatus.COMPLETED
        return traj


def _advance(mesh: TriMesh, velocity: np.ndarray, dt: float) -> TriMesh:
    try:
        moved = mesh.with_vertices(mesh.vertices + dt * velocity)
    except DegenerateFace as e:
        raise MeshDegenerated("Update produced a degenerate triangle; dt too large.", {"dt": dt, **e.context})
    flipped = np.einsum("ij,ij->i", moved.face_normals, mesh.face_normals) <= 0.0
    if flipped.any():
        raise MeshDegenerated("Update inverted triangles; dt too large.",
                              {"dt": dt, "inverted_faces": int(flipped.sum())})
    return moved


def _velocity(mesh: TriMesh, force: ForceSpec, curvature: CurvatureField) -> np.ndarray:
    return curvature.mean_curvature_vector + eval_force(force, mesh, curvature)


def step(mesh: TriMesh, force: ForceSpec, dt: float, curvature: Optional[CurvatureField] = None) -> TriMesh:
    """
    One forward-Euler update x ← x + dt·(H⃗ + β).

    Raises:
        MeshDegenerated: the updated mesh has a degenerate or inverted triangle.
        SupNormViolation: propagated from the force evaluation.
    """
    if not dt > 0:
        raise NonPositiveScale("Time step must be positive.", {"dt": dt})
    if curvature is None:
        try:
            curvature = compute_curvature(mesh)
        except NumericalDegeneracy as e:
            raise MeshDegenerated(str(e), e.context)
    return _advance(mesh, _velocity(mesh, force, curvature), dt)


def a2_threshold(mesh: TriMesh, policy: StepPolicy) -> float:
    if policy.a2_threshold is not None:
        return policy.a2_threshold
    return policy.a2_threshold_factor / mesh.mean_edge_length() ** 2


def choose_dt(mesh: TriMesh, curvature: CurvatureField, velocity: np.ndarray, policy: StepPolicy) -> float:
    """min(ceiling, c / max|A|², displacement cap, cfl · min_edge²)."""
    candidates = [policy.dt_ceiling, policy.cfl * mesh.min_edge_length() ** 2]
    max_a2 = curvature.max_a2()
    if max_a2 > 0:
        candidates.append(policy.safety / max_a2)
    speed = np.linalg.norm(velocity, axis=1)
    moving = speed > 0
    if moving.any():
        reach = policy.max_displacement * mesh.local_mean_edge_length()
        candidates.append(float((reach[moving] / speed[moving]).min()))
    return float(min(candidates))


def evolve(initial: TriMesh, force: ForceSpec, policy: StepPolicy, t_end: float,
           t_start: float = 0.0) -> FlowTrajectory:
    """
    Integrates the flow from ``t_start`` until ``t_end`` or a detected singularity.

    Snapshots are kept every ``policy.snapshot_every`` steps, at every step once
    max|A|² exceeds half the blow-up threshold, and for the last
    ``policy.dense_tail`` steps of the run. Degenerate updates end the run with
    a singular status located at the max-|A|² vertex.
    """
    traj = FlowTrajectory(force=force, t_start=t_start)
    mesh = initial
    curvature = compute_curvature(mesh)
    t = t_start
    kept = {0: Snapshot(t, mesh, curvature, step=0)}
    tail = deque(maxlen=policy.dense_tail)
    n_steps = 0
    logger.info(f"Evolving {mesh!r} with force '{force.kind}' from t={t_start:.6g} to t={t_end:.6g}")

    def mark_singular(reason: str, context: Optional[dict] = None) -> None:
        traj.status = FlowStatus.SINGULAR
        traj.singular_time = t
        traj.singular_location = mesh.vertices[int(np.argmax(curvature.a2))].copy()
        traj.singular_reason = reason
        logger.info(f"Singularity detected at t={t:.9g} ({reason}), max|A|^2={curvature.max_a2():.6g}"
                    + (f" {context}" if context else ""))

    while True:
        if t_end - t <= 1e-12 * max(1.0, abs(t_end)):
            traj.status = FlowStatus.COMPLETED
            break
        if n_steps >= policy.max_steps:
            logger.warning(f"Step budget of {policy.max_steps} exhausted at t={t:.6g}")
            break
        threshold = a2_threshold(mesh, policy)
        max_a2 = curvature.max_a2()
        if max_a2 > threshold:
            mark_singular("curvature_threshold", {"threshold": threshold})
            break
        velocity = _velocity(mesh, force, curvature)
        dt = choose_dt(mesh, curvature, velocity, policy)
        if dt < policy.dt_floor:
            mark_singular("dt_floor", {"dt": dt})
            break
        dt = min(dt, t_end - t)
        try:
            new_mesh = _advance(mesh, velocity, dt)
            if policy.remesh_every and (n_steps + 1) % policy.remesh_every == 0:
                new_mesh = remesh(new_mesh)
            new_curvature = compute_curvature(new_mesh)
        except (MeshDegenerated, NumericalDegeneracy, DegenerateFace) as e:
            mark_singular("mesh_degenerated", {"error": str(e).splitlines()[0]})
            break
        mesh, curvature = new_mesh, new_curvature
        t += dt
        n_steps += 1
        dense = curvature.max_a2() > 0.5 * a2_threshold(mesh, policy)
        snapshot = Snapshot(t, mesh, curvature, step=n_steps, dense=dense)
        if dense or n_steps % policy.snapshot_every == 0:
            kept[n_steps] = snapshot
        tail.append(snapshot)

    for snapshot in tail:
        if snapshot.step not in kept or not kept[snapshot.step].dense:
            kept[snapshot.step] = Snapshot(snapshot.t, snapshot.mesh, snapshot.curvature, snapshot.step, dense=True)
    for k in sorted(kept):
        traj.append(kept[k])
    traj.steps = n_steps
    traj.t_final = t
    logger.info(f"Flow stopped: status={traj.status.value}, t={t:.9g}, steps={n_steps}, snapshots={len(traj)}")
    return traj


def singular_point_estimate(traj: FlowTrajectory, fit_points: int = SINGULAR_FIT_POINTS) -> Tuple[np.ndarray, float]:
    """
    Extrapolated singular point (y, s).

    s is where the linear fit of 1/max|A|² against t over the last dense
    snapshots reaches zero; y is the |A|²-weighted centroid of the top-decile
    |A|² vertices of the last snapshot.

    Raises:
        InsufficientTail: fewer than 8 dense snapshots.
    """
    if traj.status != FlowStatus.SINGULAR:
        raise PreconditionUnverified("Trajectory did not end singular.", {"status": traj.status.value})
    dense = [snap for snap in traj.snapshots if snap.dense]
    if len(dense) < MIN_DENSE_SNAPSHOTS:
        raise InsufficientTail("Not enough dense snapshots near the singular time.",
                               {"dense_snapshots": len(dense), "required": MIN_DENSE_SNAPSHOTS})
    fit = dense[-fit_points:]
    t = np.array([snap.t for snap in fit])
    inv = np.array([1.0 / snap.curvature.max_a2() for snap in fit])
    slope, intercept = np.polyfit(t - t[-1], inv, 1)
    if slope < 0:
        s = t[-1] - intercept / slope
    else:
        logger.warning("1/max|A|^2 is not decreasing near the end of the run; using the last snapshot time")
        s = t[-1]
    s = max(float(s), float(t[-1]))

    last = traj.snapshots[-1]
    a2 = last.curvature.a2
    cut = np.quantile(a2, 0.9) * (1.0 - 1e-6)
    top = a2 >= cut
    weights = a2[top]
    y = (weights[:, None] * last.mesh.vertices[top]).sum(axis=0) / weights.sum()
    return y, s
