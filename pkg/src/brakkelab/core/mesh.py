"""Closed oriented triangle meshes: the discrete surface M_t and its measure.

The measure of a mesh is the two-dimensional Hausdorff measure restricted to
its triangles. Everything else in the package integrates against it through
:func:`integrate_scalar` or :func:`ball_area`.
"""
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial.distance import cdist

from .errors import (
    DegenerateFace,
    InconsistentOrientation,
    InvalidMesh,
    NonFiniteInput,
    NonManifold,
)

DEGENERATE_AREA_FRACTION = 1e-14
# triangles per chunk when clipping against many balls at once
_CLIP_CHUNK_PAIRS = 400_000
# points closer than this fraction of the disk radius to its center span no sector
_CENTER_SNAP = 1e-12

ScalarField = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


class TriMesh:
    """Closed (or, for fixtures, bordered) oriented triangle mesh.

    Parameters
    ----------
    vertices : array_like
        ``(V, 3)`` float positions.
    faces : array_like
        ``(F, 3)`` int vertex indices, consistently oriented.

    Notes
    -----
    Instances are treated as immutable snapshots. Geometry is computed once
    in the constructor; :meth:`with_vertices` reuses the topology for a moved
    copy. Use :func:`build_mesh` to construct from raw data, it runs the
    manifold checks that the constructor assumes.
    """

    def __init__(self, vertices: np.ndarray, faces: np.ndarray, _topology: Optional[dict] = None):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)
        self._topology = _topology if _topology is not None else _build_topology(self.faces, len(self.vertices))
        self._edge_lengths: Optional[np.ndarray] = None

        p0, p1, p2 = (self.vertices[self.faces[:, k]] for k in range(3))
        cross = np.cross(p1 - p0, p2 - p0)
        double_area = np.linalg.norm(cross, axis=1)
        self.face_areas = 0.5 * double_area
        with np.errstate(invalid="ignore", divide="ignore"):
            self.face_normals = cross / double_area[:, None]
        # barycentric dual areas
        self.vertex_areas = np.bincount(
            self.faces.ravel(), weights=np.repeat(self.face_areas / 3.0, 3), minlength=self.n_vertices
        )
        corners = self.faces.ravel()
        vn = np.stack(
            [np.bincount(corners, weights=np.repeat(cross[:, axis], 3), minlength=self.n_vertices) for axis in range(3)],
            axis=1,
        )
        norms = np.linalg.norm(vn, axis=1)
        norms[norms == 0] = 1.0
        self.vertex_normals = vn / norms[:, None]

    # -- topology -------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges, ``(E, 2)`` with ``edges[:, 0] < edges[:, 1]``."""
        return self._topology["edges"]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric one-ring adjacency as a sparse matrix."""
        return self._topology["adjacency"]

    @property
    def boundary_edges(self) -> np.ndarray:
        return self.edges[self._topology["edge_face_count"] == 1]

    @property
    def boundary_vertices(self) -> np.ndarray:
        """Boolean mask of vertices lying on a boundary edge."""
        return self._topology["boundary_vertex"]

    @property
    def is_closed(self) -> bool:
        return not bool(self.boundary_vertices.any())

    def neighbors(self, vertex: int) -> np.ndarray:
        adj = self.adjacency
        return adj.indices[adj.indptr[vertex]:adj.indptr[vertex + 1]]

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    def component_labels(self) -> Tuple[int, np.ndarray]:
        """Connected components of the vertex graph (count, per-vertex label)."""
        return csgraph.connected_components(self.adjacency, directed=False)

    # -- geometry -------------------------------------------------------
    @property
    def total_area(self) -> float:
        return float(self.face_areas.sum())

    def edge_lengths(self) -> np.ndarray:
        if self._edge_lengths is None:
            e = self.edges
            self._edge_lengths = np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)
            self._edge_lengths.setflags(write=False)
        return self._edge_lengths

    def mean_edge_length(self) -> float:
        return float(self.edge_lengths().mean())

    def min_edge_length(self) -> float:
        return float(self.edge_lengths().min())

    def max_edge_length(self) -> float:
        return float(self.edge_lengths().max())

    def local_mean_edge_length(self) -> np.ndarray:
        """Mean length of the edges incident to each vertex."""
        e = self.edges
        lengths = self.edge_lengths()
        total = np.bincount(e.ravel(), weights=np.repeat(lengths, 2), minlength=self.n_vertices)
        count = np.bincount(e.ravel(), minlength=self.n_vertices)
        return total / np.maximum(count, 1)

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def diameter(self) -> float:
        """Bounding-box diagonal (an upper bound for the true diameter)."""
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def centroid(self) -> np.ndarray:
        """Area-weighted centroid of the surface."""
        return (self.vertex_areas[:, None] * self.vertices).sum(axis=0) / self.vertex_areas.sum()

    def edge_midpoints(self) -> np.ndarray:
        """Per-face edge midpoints, shape ``(F, 3, 3)``: the degree-2 quadrature nodes."""
        v = self.vertices[self.faces]
        return 0.5 * (v + np.roll(v, -1, axis=1))

    def with_vertices(self, vertices: np.ndarray, check: bool = True) -> "TriMesh":
        """Same connectivity, new positions."""
        vertices = np.asarray(vertices, dtype=np.float64)
        if vertices.shape != self.vertices.shape:
            raise InvalidMesh("Vertex array shape does not match the mesh.",
                              {"expected": self.vertices.shape, "got": vertices.shape})
        if not np.all(np.isfinite(vertices)):
            raise NonFiniteInput("Non-finite vertex positions.")
        moved = TriMesh(vertices, self.faces, _topology=self._topology)
        if check:
            _check_face_areas(moved.face_areas)
        return moved

    def __repr__(self) -> str:
        return f"TriMesh(V={self.n_vertices}, F={self.n_faces}, chi={self.euler_characteristic()})"


def _build_topology(faces: np.ndarray, n_vertices: int) -> dict:
    half_edges = np.stack([faces, np.roll(faces, -1, axis=1)], axis=2).reshape(-1, 2)
    undirected = np.sort(half_edges, axis=1)
    edges, inverse, counts = np.unique(undirected, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    boundary_vertex = np.zeros(n_vertices, dtype=bool)
    boundary_vertex[edges[counts == 1].ravel()] = True
    n_e = len(edges)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    adjacency = sparse.csr_matrix((np.ones(2 * n_e), (rows, cols)), shape=(n_vertices, n_vertices))
    return {
        "half_edges": half_edges,
        "edges": edges,
        "edge_face_count": counts,
        "half_edge_to_edge": inverse,
        "boundary_vertex": boundary_vertex,
        "adjacency": adjacency,
    }


def _check_face_areas(face_areas: np.ndarray) -> None:
    mean_area = face_areas.mean()
    bad = np.flatnonzero(~(face_areas > DEGENERATE_AREA_FRACTION * mean_area))
    if len(bad):
        raise DegenerateFace(
            "Triangle area below the degeneracy threshold.",
            {"faces": bad[:10].tolist(), "min_area": float(face_areas.min()), "mean_area": float(mean_area)},
        )


def build_mesh(raw_vertices, raw_faces, allow_boundary: bool = False, orient_outward: bool = True) -> TriMesh:
    """
    Validates raw arrays and returns a TriMesh.

    Args:
        raw_vertices: ``(V, 3)`` positions.
        raw_faces: ``(F, 3)`` vertex indices.
        allow_boundary: accept bordered surfaces (test fixtures such as flat
            patches); closed input is required otherwise.
        orient_outward: flip closed components with negative signed volume.

    Raises:
        NonManifold: boundary edge (unless allowed) or an edge on more than two faces.
        InconsistentOrientation: an edge traversed twice in the same direction.
        DegenerateFace: a face with area below 1e-14 of the mean face area.
    """
    vertices = np.asarray(raw_vertices, dtype=np.float64)
    faces = np.asarray(raw_faces, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise InvalidMesh("Vertices should be an (V, 3) array.", {"shape": vertices.shape})
    if faces.ndim != 2 or faces.shape[1] != 3 or len(faces) == 0:
        raise InvalidMesh("Faces should be a non-empty (F, 3) array.", {"shape": faces.shape})
    if not np.all(np.isfinite(vertices)):
        raise NonFiniteInput("Non-finite vertex positions.")
    if faces.min() < 0 or faces.max() >= len(vertices):
        raise InvalidMesh("Face index out of range.", {"n_vertices": len(vertices), "max_index": int(faces.max())})
    if np.any((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])):
        raise DegenerateFace("Face with a repeated vertex index.")
    referenced = np.zeros(len(vertices), dtype=bool)
    referenced[faces.ravel()] = True
    if not referenced.all():
        raise InvalidMesh("Unreferenced vertices.", {"count": int((~referenced).sum())})

    topology = _build_topology(faces, len(vertices))
    counts = topology["edge_face_count"]
    if np.any(counts > 2):
        raise NonManifold("Edge shared by more than two faces.",
                          {"edges": topology["edges"][counts > 2][:10].tolist()})
    if not allow_boundary and np.any(counts == 1):
        raise NonManifold("Boundary edge found; the surface is not closed.",
                          {"edges": topology["edges"][counts == 1][:10].tolist()})
    _, directed_counts = np.unique(topology["half_edges"], axis=0, return_counts=True)
    if np.any(directed_counts > 1):
        raise InconsistentOrientation("An edge appears twice with the same direction.")

    mesh = TriMesh(vertices, faces, _topology=topology)
    _check_face_areas(mesh.face_areas)

    if orient_outward:
        n_comp, labels = mesh.component_labels()
        face_labels = labels[faces[:, 0]]
        p0, p1, p2 = (vertices[faces[:, k]] for k in range(3))
        signed = np.einsum("ij,ij->i", p0, np.cross(p1, p2)) / 6.0
        volume = np.bincount(face_labels, weights=signed, minlength=n_comp)
        closed = ~np.bincount(labels, weights=topology["boundary_vertex"].astype(float), minlength=n_comp).astype(bool)
        flip = closed & (volume < 0)
        if flip.any():
            faces = faces.copy()
            mask = flip[face_labels]
            faces[mask] = faces[mask][:, ::-1]
            mesh = TriMesh(vertices, faces)
    return mesh


def integrate_scalar(mesh: TriMesh, f: ScalarField) -> float:
    """
    ∫ f dμ over the mesh with the 3-point edge-midpoint rule (exact for
    quadratics on each triangle).

    ``f`` may be a per-vertex array (linearly interpolated, so the midpoint
    values are edge averages), a per-face array (constant on each face) or a
    callable evaluated at the ``(N, 3)`` quadrature nodes.
    """
    if callable(f):
        nodes = mesh.edge_midpoints().reshape(-1, 3)
        values = np.asarray(f(nodes), dtype=np.float64).reshape(mesh.n_faces, 3)
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("Integrand is not finite at the quadrature nodes.")
        return float(np.dot(mesh.face_areas, values.mean(axis=1)))
    values = np.asarray(f, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput("Integrand contains non-finite values.")
    if values.shape == (mesh.n_vertices,):
        return float(np.dot(mesh.face_areas, values[mesh.faces].mean(axis=1)))
    if values.shape == (mesh.n_faces,):
        return float(np.dot(mesh.face_areas, values))
    raise NonFiniteInput("Integrand is neither per-vertex nor per-face.", {"shape": values.shape})


def vertex_to_face(mesh: TriMesh, values: np.ndarray) -> np.ndarray:
    """Face averages of a per-vertex field (the linear interpolant's mean)."""
    return np.asarray(values)[mesh.faces].mean(axis=1)


def enclosed_volume(mesh: TriMesh) -> float:
    """Signed enclosed volume by the divergence theorem (positive for outward orientation)."""
    p0, p1, p2 = (mesh.vertices[mesh.faces[:, k]] for k in range(3))
    return float(np.einsum("ij,ij->i", p0, np.cross(p1, p2)).sum() / 6.0)


def translate(mesh: TriMesh, offset) -> TriMesh:
    return mesh.with_vertices(mesh.vertices + np.asarray(offset, dtype=np.float64), check=False)


def scale(mesh: TriMesh, factor: float, about=(0.0, 0.0, 0.0)) -> TriMesh:
    about = np.asarray(about, dtype=np.float64)
    return mesh.with_vertices(about + factor * (mesh.vertices - about), check=False)


def rotate(mesh: TriMesh, rotation: np.ndarray, about=(0.0, 0.0, 0.0)) -> TriMesh:
    about = np.asarray(about, dtype=np.float64)
    return mesh.with_vertices(about + (mesh.vertices - about) @ np.asarray(rotation).T, check=False)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about ``axis`` by ``angle`` radians."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


def merge(*meshes: TriMesh) -> TriMesh:
    """Disjoint union of meshes."""
    vertices, faces, offset = [], [], 0
    for m in meshes:
        vertices.append(m.vertices)
        faces.append(m.faces + offset)
        offset += m.n_vertices
    return build_mesh(np.vstack(vertices), np.vstack(faces),
                      allow_boundary=not all(m.is_closed for m in meshes), orient_outward=False)


# -- ball-restricted measure ----------------------------------------------

def _angle(ux, uy, vx, vy, rho):
    """Signed angle from u to v; zero when either point sits on the disk center."""
    tiny = (ux * ux + uy * uy <= (_CENTER_SNAP * rho) ** 2) | (vx * vx + vy * vy <= (_CENTER_SNAP * rho) ** 2)
    return np.where(tiny, 0.0, np.arctan2(ux * vy - uy * vx, ux * vx + uy * vy))


def _segment_disk_area(ax, ay, bx, by, rho):
    """Signed area of (disk of radius rho at the origin) ∩ (triangle origin, A, B).

    Clip points are interpolated as (1 − s)A + sB so that s = 0 and s = 1
    reproduce the endpoints bit for bit.
    """
    dx, dy = bx - ax, by - ay
    a = dx * dx + dy * dy
    b = 2.0 * (ax * dx + ay * dy)
    c = ax * ax + ay * ay - rho * rho
    disc = b * b - 4.0 * a * c
    hit = disc > 0
    sq = np.sqrt(np.where(hit, disc, 0.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        t1 = np.where(hit, (-b - sq) / (2.0 * a), 0.0)
        t2 = np.where(hit, (-b + sq) / (2.0 * a), 0.0)
    s1 = np.clip(t1, 0.0, 1.0)
    s2 = np.clip(t2, 0.0, 1.0)
    p1x, p1y = (1.0 - s1) * ax + s1 * bx, (1.0 - s1) * ay + s1 * by
    p2x, p2y = (1.0 - s2) * ax + s2 * bx, (1.0 - s2) * ay + s2 * by
    r2 = rho * rho
    return 0.5 * (r2 * _angle(ax, ay, p1x, p1y, rho) + (p1x * p2y - p1y * p2x) + r2 * _angle(p2x, p2y, bx, by, rho))


def triangle_ball_area(p0: np.ndarray, p1: np.ndarray, p2: np.ndarray, centers: np.ndarray, radius) -> np.ndarray:
    """
    Exact area of triangle ∩ ball for stacked ``(K, 3)`` triangles and centers.

    The ball cuts the triangle's plane in a disk; its intersection with the
    triangle is the sum of three signed disk-sector/triangle pieces, one per edge.
    """
    radius = np.broadcast_to(np.asarray(radius, dtype=np.float64), (len(p0),))
    cross = np.cross(p1 - p0, p2 - p0)
    nrm = np.linalg.norm(cross, axis=1)
    nhat = cross / nrm[:, None]
    delta = np.einsum("ij,ij->i", centers - p0, nhat)
    rho2 = radius * radius - delta * delta
    inside = rho2 > 0
    rho = np.sqrt(np.where(inside, rho2, 0.0))
    q = centers - delta[:, None] * nhat
    e1 = p1 - p0
    e1 = e1 / np.linalg.norm(e1, axis=1)[:, None]
    e2 = np.cross(nhat, e1)
    coords = []
    for p in (p0, p1, p2):
        rel = p - q
        coords.append((np.einsum("ij,ij->i", rel, e1), np.einsum("ij,ij->i", rel, e2)))
    total = np.zeros(len(p0))
    for (ax, ay), (bx, by) in zip(coords, coords[1:] + coords[:1]):
        total += _segment_disk_area(ax, ay, bx, by, rho)
    clipped = np.minimum(np.abs(total), 0.5 * nrm)
    return np.where(inside, clipped, 0.0)


def ball_area(mesh: TriMesh, centers, radius, face_weights: Optional[np.ndarray] = None) -> np.ndarray:
    """
    μ(B_r(c)) for each center, or ∫_{B_r(c)} w dμ when per-face weights are given.

    Faces entirely inside the ball count fully; faces crossing the sphere are
    clipped exactly with :func:`triangle_ball_area`.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    radius = float(radius)
    weights = np.ones(mesh.n_faces) if face_weights is None else np.asarray(face_weights, dtype=np.float64)
    if weights.shape != (mesh.n_faces,):
        raise NonFiniteInput("Face weights must be per-face.", {"shape": weights.shape})
    tri = mesh.vertices[mesh.faces]
    face_center = tri.mean(axis=1)
    circum = np.linalg.norm(tri - face_center[:, None, :], axis=2).max(axis=1)
    weighted_area = mesh.face_areas * weights

    out = np.zeros(len(centers))
    chunk = max(1, _CLIP_CHUNK_PAIRS // max(mesh.n_faces, 1))
    for start in range(0, len(centers), chunk):
        c = centers[start:start + chunk]
        vert_in = cdist(c, mesh.vertices) <= radius
        face_in = vert_in[:, mesh.faces].all(axis=2)
        near = cdist(c, face_center) <= radius + circum[None, :]
        crossing = near & ~face_in
        out[start:start + chunk] = face_in.astype(float) @ weighted_area
        ci, fi = np.nonzero(crossing)
        if len(ci):
            clipped = triangle_ball_area(tri[fi, 0], tri[fi, 1], tri[fi, 2], c[ci], radius)
            out[start:start + chunk] += np.bincount(ci, weights=clipped * weights[fi], minlength=len(c))
    return out
