"""Builtin surfaces used by scenarios and tests."""
from pathlib import Path
from typing import Any, Callable, Dict, Sequence, Tuple

import numpy as np

from .mesh import TriMesh, build_mesh, merge, translate
from .schemas import FileSurface, SurfaceSpec
from ..utils.mesh_io import read_mesh


def icosahedron() -> Tuple[np.ndarray, np.ndarray]:
    """Raw vertices (on the unit sphere) and faces of the regular icosahedron."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    vertices = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    vertices /= np.linalg.norm(vertices, axis=1)[:, None]
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return vertices, faces


def subdivide(vertices: np.ndarray, faces: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One step of 1-to-4 midpoint subdivision."""
    a, b, c = faces[:, 0], faces[:, 1], faces[:, 2]
    face_edges = np.stack([np.stack([a, b], 1), np.stack([b, c], 1), np.stack([c, a], 1)], axis=1)
    keys = np.sort(face_edges.reshape(-1, 2), axis=1)
    edges, inverse = np.unique(keys, axis=0, return_inverse=True)
    mid = (len(vertices) + inverse.ravel()).reshape(-1, 3)
    ab, bc, ca = mid[:, 0], mid[:, 1], mid[:, 2]
    new_vertices = np.vstack([vertices, 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])])
    new_faces = np.concatenate([
        np.stack([a, ab, ca], 1),
        np.stack([b, bc, ab], 1),
        np.stack([c, ca, bc], 1),
        np.stack([ab, bc, ca], 1),
    ])
    return new_vertices, new_faces


def icosphere(radius: float = 1.0, level: int = 3, center: Sequence[float] = (0.0, 0.0, 0.0)) -> TriMesh:
    """Subdivided icosahedron projected to the sphere of the given radius."""
    vertices, faces = icosahedron()
    for _ in range(level):
        vertices, faces = subdivide(vertices, faces)
        vertices /= np.linalg.norm(vertices, axis=1)[:, None]
    return build_mesh(radius * vertices + np.asarray(center, dtype=np.float64), faces)


def torus(major_radius: float = 2.0, minor_radius: float = 0.5, n_major: int = 48, n_minor: int = 24) -> TriMesh:
    u = 2.0 * np.pi * np.arange(n_major) / n_major
    v = 2.0 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major_radius + minor_radius * np.cos(vv)
    vertices = np.stack([ring * np.cos(uu), ring * np.sin(uu), minor_radius * np.sin(vv)], axis=-1).reshape(-1, 3)
    i, j = np.meshgrid(np.arange(n_major), np.arange(n_minor), indexing="ij")
    p00 = i * n_minor + j
    p10 = ((i + 1) % n_major) * n_minor + j
    p01 = i * n_minor + (j + 1) % n_minor
    p11 = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
    faces = np.concatenate([
        np.stack([p00, p10, p11], -1).reshape(-1, 3),
        np.stack([p00, p11, p01], -1).reshape(-1, 3),
    ])
    return build_mesh(vertices, faces)


def _resample_profile(r: np.ndarray, z: np.ndarray, n_points: int) -> Tuple[np.ndarray, np.ndarray]:
    """Equal arc-length samples of a meridian polyline from the south to the north pole."""
    seg = np.hypot(np.diff(r), np.diff(z))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    target = np.linspace(0.0, s[-1], n_points)
    return np.interp(target, s, r), np.interp(target, s, z)


def surface_of_revolution(r: np.ndarray, z: np.ndarray, n_around: int) -> TriMesh:
    """
    Revolves a meridian about the z axis. The meridian runs from a south pole
    (``r[0] == 0``) to a north pole (``r[-1] == 0``); interior samples must
    have ``r > 0``.
    """
    rings_r, rings_z = r[1:-1], z[1:-1]
    n_rings = len(rings_r)
    theta = 2.0 * np.pi * np.arange(n_around) / n_around
    ring_pts = np.stack([
        rings_r[:, None] * np.cos(theta)[None, :],
        rings_r[:, None] * np.sin(theta)[None, :],
        np.repeat(rings_z[:, None], n_around, axis=1),
    ], axis=-1).reshape(-1, 3)
    south = np.array([[0.0, 0.0, z[0]]])
    north = np.array([[0.0, 0.0, z[-1]]])
    vertices = np.vstack([south, ring_pts, north])
    south_idx, north_idx = 0, len(vertices) - 1

    def ring(k):
        return 1 + k * n_around + np.arange(n_around)

    nxt = np.roll(np.arange(n_around), -1)
    faces = [np.stack([np.full(n_around, south_idx), ring(0)[nxt], ring(0)], 1)]
    for k in range(n_rings - 1):
        lo, hi = ring(k), ring(k + 1)
        faces.append(np.stack([lo, lo[nxt], hi[nxt]], 1))
        faces.append(np.stack([lo, hi[nxt], hi], 1))
    last = ring(n_rings - 1)
    faces.append(np.stack([last, last[nxt], np.full(n_around, north_idx)], 1))
    return build_mesh(vertices, np.concatenate(faces))


def capsule(length: float = 4.0, radius: float = 1.0, n_around: int = 32, n_profile: int = 80) -> TriMesh:
    """Cylinder of the given radius capped by hemispheres; ``length`` is tip to tip."""
    half = 0.5 * length - radius
    south = np.linspace(-0.5 * np.pi, 0.0, 64)
    north = np.linspace(0.0, 0.5 * np.pi, 64)[1:]
    shaft = np.linspace(-half, half, 64)[1:-1]
    r = np.concatenate([radius * np.cos(south), np.full_like(shaft, radius), radius * np.cos(north)])
    z = np.concatenate([-half + radius * np.sin(south), shaft, half + radius * np.sin(north)])
    r, z = _resample_profile(r, z, n_profile)
    r[0] = r[-1] = 0.0
    return surface_of_revolution(r, z, n_around)


def dumbbell(bulb_radius: float = 1.0, neck_radius: float = 0.3, separation: float = 2.4,
             n_around: int = 32, n_profile: int = 96) -> TriMesh:
    """
    Two spheres of radius ``bulb_radius`` with centers ``separation`` apart on
    the z axis, joined by a neck of radius ``neck_radius`` at z = 0. The
    meridian is the smooth maximum (4-norm) of the sphere profiles and a
    tapered neck profile, so the neck pinches before the bulbs collapse.
    """
    c = 0.5 * separation
    z_dense = np.linspace(-(c + bulb_radius), c + bulb_radius, 4001)
    bulb = np.sqrt(np.clip(bulb_radius ** 2 - (np.abs(z_dense) - c) ** 2, 0.0, None))
    taper = np.clip(1.0 - (z_dense / c) ** 2, 0.0, None)
    p = 4.0
    r_dense = (bulb ** p + (neck_radius * taper) ** p) ** (1.0 / p)
    r, z = _resample_profile(r_dense, z_dense, n_profile)
    r[0] = r[-1] = 0.0
    return surface_of_revolution(r, z, n_around)


def _grid(n_u: int, n_v: int) -> np.ndarray:
    """Faces of an (n_u+1) x (n_v+1) vertex grid, row-major, oriented along u × v."""
    i, j = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    p00 = i * (n_v + 1) + j
    p10 = (i + 1) * (n_v + 1) + j
    p01 = p00 + 1
    p11 = p10 + 1
    return np.concatenate([np.stack([p00, p10, p11], -1).reshape(-1, 3), np.stack([p00, p11, p01], -1).reshape(-1, 3)])


def flat_patch(size: float = 2.0, n: int = 20, height: float = 0.0) -> TriMesh:
    """Square ``[-size/2, size/2]²`` in the plane z = height, normal +z."""
    s = np.linspace(-0.5 * size, 0.5 * size, n + 1)
    xx, yy = np.meshgrid(s, s, indexing="ij")
    vertices = np.stack([xx, yy, np.full_like(xx, height)], -1).reshape(-1, 3)
    return build_mesh(vertices, _grid(n, n), allow_boundary=True)


def parallel_sheets(size: float = 2.0, n: int = 20, gap: float = 0.01) -> TriMesh:
    """Two flat patches at z = ±gap/2."""
    return merge(flat_patch(size, n, -0.5 * gap), flat_patch(size, n, 0.5 * gap))


def gaussian_bump(size: float = 0.6, n: int = 80, amplitude: float = 0.05, width: float = 0.03) -> TriMesh:
    """Flat patch with a Gaussian bump ``z = A exp(-|x|²/(2w²))`` at the origin."""
    s = np.linspace(-0.5 * size, 0.5 * size, n + 1)
    xx, yy = np.meshgrid(s, s, indexing="ij")
    zz = amplitude * np.exp(-(xx ** 2 + yy ** 2) / (2.0 * width ** 2))
    vertices = np.stack([xx, yy, zz], -1).reshape(-1, 3)
    return build_mesh(vertices, _grid(n, n), allow_boundary=True)


def closed_box(size: float = 4.0, n: int = 16) -> TriMesh:
    """Axis-aligned closed cube surface centred at the origin, ``n`` cells per side."""
    m = n + 1
    idx = -np.ones((m, m, m), dtype=np.int64)
    g = np.arange(m)
    on_surface = np.zeros((m, m, m), dtype=bool)
    on_surface[[0, -1], :, :] = True
    on_surface[:, [0, -1], :] = True
    on_surface[:, :, [0, -1]] = True
    idx[on_surface] = np.arange(on_surface.sum())
    coords = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1)[on_surface].astype(np.float64)
    vertices = (coords / n - 0.5) * size

    # (fixed axis, fixed index, u axis, v axis) with e_u × e_v outward
    sides = [(0, 0, 2, 1), (0, n, 1, 2), (1, 0, 0, 2), (1, n, 2, 0), (2, 0, 1, 0), (2, n, 0, 1)]
    grid = _grid(n, n)
    faces = []
    for axis, value, u_axis, v_axis in sides:
        uu, vv = np.meshgrid(g, g, indexing="ij")
        sel = [None, None, None]
        sel[axis] = np.full_like(uu, value)
        sel[u_axis] = uu
        sel[v_axis] = vv
        side_idx = idx[sel[0], sel[1], sel[2]].ravel()
        faces.append(side_idx[grid])
    return build_mesh(vertices, np.concatenate(faces))


def two_spheres(radius: float = 2.0, separation: float = 20.0, level: int = 3) -> TriMesh:
    """Disjoint union of two equal spheres centred at ``(±separation/2, 0, 0)``."""
    a = icosphere(radius, level)
    return merge(translate(a, (-0.5 * separation, 0.0, 0.0)), translate(a, (0.5 * separation, 0.0, 0.0)))


# Surface Factory
def _from_file(spec: FileSurface) -> TriMesh:
    return read_mesh(Path(spec.path), orient_outward=True)


_surface_builders: Dict[str, Callable[[Any], TriMesh]] = {
    "sphere": lambda spec: icosphere(spec.radius, spec.level, spec.center),
    "torus": lambda spec: torus(spec.major_radius, spec.minor_radius, spec.n_major, spec.n_minor),
    "capsule": lambda spec: capsule(spec.length, spec.radius, spec.n_around, spec.n_profile),
    "dumbbell": lambda spec: dumbbell(spec.bulb_radius, spec.neck_radius, spec.separation,
                                      spec.n_around, spec.n_profile),
    "box": lambda spec: closed_box(spec.size, spec.n),
    "file": _from_file,
}


def build_surface(spec: SurfaceSpec) -> TriMesh:
    """Initial mesh of a scenario from its ``surface`` entry."""
    builder = _surface_builders.get(spec.kind)
    if builder is None:
        raise ValueError(f"Unknown surface kind '{spec.kind}'")
    return builder(spec)
