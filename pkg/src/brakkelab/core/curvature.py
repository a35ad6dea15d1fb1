"""Discrete curvature: cotangent mean curvature vector, angle-defect Gaussian
curvature and the squared second fundamental form.

Sign convention: ``mean_curvature = -H⃗·n`` so a sphere with outward normals
has positive scalar mean curvature ``2/r``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NumericalDegeneracy
from .mesh import TriMesh
from ..utils.logging_utils import get_logger

logger = get_logger(__name__)

COT_LIMIT = 1e8


@dataclass(frozen=True)
class CurvatureField:
    """Per-vertex curvature quantities of one mesh snapshot."""
    mean_curvature_vector: np.ndarray  # (V, 3), 1/length
    mean_curvature: np.ndarray         # (V,), scalar H, positive on outward spheres
    gaussian_curvature: np.ndarray     # (V,), 1/length²
    a2: np.ndarray                     # (V,), |A|²
    normals: np.ndarray                # (V, 3) unit
    clamped: int = 0                   # vertices where H² - 2K < |H⃗|²/2

    @property
    def h2(self) -> np.ndarray:
        """|H⃗|² per vertex."""
        return np.einsum("ij,ij->i", self.mean_curvature_vector, self.mean_curvature_vector)

    def max_a2(self) -> float:
        return float(self.a2.max())


def cotangent_weights(mesh: TriMesh) -> np.ndarray:
    """
    Cotangent of the angle at each face corner, shape ``(F, 3)``; column k is
    the angle at ``faces[:, k]``, opposite the edge ``(k+1, k+2)``.
    """
    tri = mesh.vertices[mesh.faces]
    cots = np.empty((mesh.n_faces, 3))
    double_area = 2.0 * mesh.face_areas
    for k in range(3):
        u = tri[:, (k + 1) % 3] - tri[:, k]
        w = tri[:, (k + 2) % 3] - tri[:, k]
        cots[:, k] = np.einsum("ij,ij->i", u, w) / double_area
    worst = np.abs(cots).max()
    if not np.isfinite(worst) or worst > COT_LIMIT:
        raise NumericalDegeneracy("Cotangent weight exceeds the degeneracy limit.",
                                  {"max_abs_cot": float(worst), "limit": COT_LIMIT})
    return cots


def corner_angles(mesh: TriMesh) -> np.ndarray:
    """Interior angle at each face corner, ``(F, 3)``."""
    tri = mesh.vertices[mesh.faces]
    angles = np.empty((mesh.n_faces, 3))
    for k in range(3):
        u = tri[:, (k + 1) % 3] - tri[:, k]
        w = tri[:, (k + 2) % 3] - tri[:, k]
        angles[:, k] = np.arctan2(np.linalg.norm(np.cross(u, w), axis=1), np.einsum("ij,ij->i", u, w))
    return angles


def cotangent_laplacian(mesh: TriMesh, cots: np.ndarray = None) -> np.ndarray:
    """Σ_j ½(cot α_ij + cot β_ij)(x_j − x_i) per vertex, i.e. minus the area gradient."""
    if cots is None:
        cots = cotangent_weights(mesh)
    x = mesh.vertices
    f = mesh.faces
    lap = np.zeros_like(x)
    for k in range(3):
        i, j = f[:, (k + 1) % 3], f[:, (k + 2) % 3]
        w = 0.5 * cots[:, k][:, None]
        d = w * (x[j] - x[i])
        for axis in range(3):
            lap[:, axis] += np.bincount(i, weights=d[:, axis], minlength=mesh.n_vertices)
            lap[:, axis] -= np.bincount(j, weights=d[:, axis], minlength=mesh.n_vertices)
    return lap


def mixed_vertex_areas(mesh: TriMesh, cots: np.ndarray = None) -> np.ndarray:
    """
    Mixed Voronoi dual areas.

    A non-obtuse face gives each corner its Voronoi share
    ⅛(|e_ij|² cot γ_k + |e_ik|² cot γ_j); an obtuse face gives half its area
    to the obtuse corner and a quarter to the other two. The areas partition
    the total area like the barycentric ones.
    """
    if cots is None:
        cots = cotangent_weights(mesh)
    tri = mesh.vertices[mesh.faces]
    # squared length of the edge opposite each corner
    opposite2 = np.stack(
        [np.sum((tri[:, (k + 2) % 3] - tri[:, (k + 1) % 3]) ** 2, axis=1) for k in range(3)], axis=1
    )
    voronoi = np.empty_like(cots)
    for k in range(3):
        j, m = (k + 1) % 3, (k + 2) % 3
        # edge (k, j) is opposite corner m, edge (k, m) opposite corner j
        voronoi[:, k] = 0.125 * (opposite2[:, m] * cots[:, m] + opposite2[:, j] * cots[:, j])
    obtuse = cots < 0.0
    any_obtuse = obtuse.any(axis=1)
    area = mesh.face_areas[:, None]
    shares = np.where(any_obtuse[:, None], np.where(obtuse, 0.5 * area, 0.25 * area), voronoi)
    return np.bincount(mesh.faces.ravel(), weights=shares.ravel(), minlength=mesh.n_vertices)


def angle_defect(mesh: TriMesh) -> np.ndarray:
    """2π minus the angle sum at each vertex (zero at boundary vertices)."""
    angle_sum = np.bincount(mesh.faces.ravel(), weights=corner_angles(mesh).ravel(), minlength=mesh.n_vertices)
    defect = 2.0 * np.pi - angle_sum
    defect[mesh.boundary_vertices] = 0.0
    return defect


def compute_curvature(mesh: TriMesh) -> CurvatureField:
    """
    Builds the CurvatureField of a mesh.

    H⃗ is the cotangent Laplacian divided by the mixed Voronoi area, which
    makes its normal part exact for a one-ring inscribed in a sphere with
    non-obtuse faces whatever the valence. K is the angle defect divided by
    the barycentric dual area of the measure, so ∫K dμ is the total defect.
    |A|² is H² − 2K, clamped below at |H⃗|²/2 (which is also ≥ 0). Boundary
    vertices of bordered fixtures get zero curvature.
    """
    cots = cotangent_weights(mesh)
    areas = mixed_vertex_areas(mesh, cots)
    hvec = cotangent_laplacian(mesh, cots) / areas[:, None]
    hvec[mesh.boundary_vertices] = 0.0
    normals = mesh.vertex_normals
    h_scalar = -np.einsum("ij,ij->i", hvec, normals)
    gauss = angle_defect(mesh) / mesh.vertex_areas

    raw = h_scalar ** 2 - 2.0 * gauss
    floor = 0.5 * np.einsum("ij,ij->i", hvec, hvec)
    clamped_mask = raw < floor
    a2 = np.where(clamped_mask, floor, raw)
    n_clamped = int(clamped_mask.sum())
    if n_clamped:
        logger.debug(f"|A|^2 clamped at {n_clamped} of {mesh.n_vertices} vertices")
    return CurvatureField(
        mean_curvature_vector=hvec,
        mean_curvature=h_scalar,
        gaussian_curvature=gauss,
        a2=a2,
        normals=normals,
        clamped=n_clamped,
    )


def scale_curvature(curvature: CurvatureField, factor: float) -> CurvatureField:
    """Curvature of the mesh scaled by ``factor`` (normals unchanged)."""
    return CurvatureField(
        mean_curvature_vector=curvature.mean_curvature_vector / factor,
        mean_curvature=curvature.mean_curvature / factor,
        gaussian_curvature=curvature.gaussian_curvature / factor ** 2,
        a2=curvature.a2 / factor ** 2,
        normals=curvature.normals,
        clamped=curvature.clamped,
    )


def normal_projection(vectors: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Projection of per-vertex vectors onto the normal line, v⊥ = (v·n)n."""
    return np.einsum("ij,ij->i", vectors, normals)[:, None] * normals
