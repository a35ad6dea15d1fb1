"""Optional mesh maintenance for long non-singular runs: Delaunay edge flips and
tangential Laplacian smoothing. Off unless ``StepPolicy.remesh_every`` is set."""
import numpy as np

from .mesh import TriMesh, build_mesh
from ..utils.logging_utils import get_logger

logger = get_logger(__name__)


def _opposite_angle(x: np.ndarray, apex: int, a: int, b: int) -> float:
    u = x[a] - x[apex]
    w = x[b] - x[apex]
    return float(np.arctan2(np.linalg.norm(np.cross(u, w)), np.dot(u, w)))


def delaunay_flips(mesh: TriMesh, max_passes: int = 3) -> TriMesh:
    """Flips interior edges whose opposite angles sum to more than π."""
    x = mesh.vertices
    faces = mesh.faces.copy()
    total = 0
    for _ in range(max_passes):
        half_edge_owner = {}
        for f, (a, b, c) in enumerate(faces):
            half_edge_owner[(a, b)] = (f, c)
            half_edge_owner[(b, c)] = (f, a)
            half_edge_owner[(c, a)] = (f, b)
        existing = {tuple(sorted(key)) for key in half_edge_owner}
        touched = np.zeros(len(faces), dtype=bool)
        flips = 0
        for (i, j), (f1, k) in half_edge_owner.items():
            if i > j or (j, i) not in half_edge_owner:
                continue
            f2, l = half_edge_owner[(j, i)]
            if touched[f1] or touched[f2] or tuple(sorted((k, l))) in existing:
                continue
            if _opposite_angle(x, k, i, j) + _opposite_angle(x, l, i, j) <= np.pi + 1e-12:
                continue
            faces[f1] = (i, l, k)
            faces[f2] = (l, j, k)
            touched[f1] = touched[f2] = True
            existing.discard((min(i, j), max(i, j)))
            existing.add((min(k, l), max(k, l)))
            flips += 1
        total += flips
        if flips == 0:
            break
    if total:
        logger.debug(f"Delaunay pass flipped {total} edges")
    return build_mesh(x, faces, allow_boundary=not mesh.is_closed, orient_outward=False)


def tangential_smoothing(mesh: TriMesh, weight: float = 0.5) -> TriMesh:
    """Moves each vertex toward its one-ring mean, projected to the tangent plane."""
    adj = mesh.adjacency
    degree = np.asarray(adj.sum(axis=1)).ravel()
    offset = adj @ mesh.vertices / degree[:, None] - mesh.vertices
    n = mesh.vertex_normals
    tangential = offset - np.einsum("ij,ij->i", offset, n)[:, None] * n
    tangential[mesh.boundary_vertices] = 0.0
    return mesh.with_vertices(mesh.vertices + weight * tangential)


def remesh(mesh: TriMesh, smoothing: float = 0.5) -> TriMesh:
    return tangential_smoothing(delaunay_flips(mesh), smoothing)
