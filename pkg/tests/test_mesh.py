import numpy as np
import pytest

from brakkelab.core.errors import DegenerateFace, InconsistentOrientation, NonFiniteInput, NonManifold
from brakkelab.core.generators import flat_patch, icosahedron, icosphere, torus
from brakkelab.core.mesh import (
    ball_area,
    build_mesh,
    enclosed_volume,
    integrate_scalar,
    rotate,
    rotation_matrix,
    scale,
    translate,
    triangle_ball_area,
)
from brakkelab.utils.mesh_io import read_mesh, write_obj, write_off


def test_icosahedron_is_valid_sphere():
    vertices, faces = icosahedron()
    mesh = build_mesh(vertices, faces)
    assert (mesh.n_vertices, mesh.n_edges, mesh.n_faces) == (12, 30, 20)
    assert mesh.euler_characteristic() == 2
    assert mesh.is_closed
    assert enclosed_volume(mesh) > 0


def test_inward_faces_are_flipped_outward():
    vertices, faces = icosahedron()
    mesh = build_mesh(vertices, faces[:, ::-1])
    assert enclosed_volume(mesh) > 0


def test_torus_euler_characteristic(torus_mesh):
    assert torus_mesh.euler_characteristic() == 0


def test_missing_face_is_non_manifold():
    vertices, faces = icosahedron()
    with pytest.raises(NonManifold):
        build_mesh(vertices, faces[1:])


def test_missing_face_allowed_for_bordered_fixture():
    vertices, faces = icosahedron()
    mesh = build_mesh(vertices, faces[1:], allow_boundary=True)
    assert not mesh.is_closed
    assert mesh.boundary_vertices.sum() == 3


def test_flipped_face_is_inconsistent():
    vertices, faces = icosahedron()
    faces = faces.copy()
    faces[0] = faces[0][::-1]
    with pytest.raises(InconsistentOrientation):
        build_mesh(vertices, faces)


def test_repeated_index_is_degenerate():
    vertices, faces = icosahedron()
    faces = faces.copy()
    faces[0] = [0, 0, 1]
    with pytest.raises(DegenerateFace):
        build_mesh(vertices, faces, allow_boundary=True)


def test_non_finite_vertex_rejected():
    vertices, faces = icosahedron()
    vertices = vertices.copy()
    vertices[3, 1] = np.nan
    with pytest.raises(NonFiniteInput):
        build_mesh(vertices, faces)


def test_dual_areas_partition_total_area(sphere2):
    assert sphere2.vertex_areas.sum() == pytest.approx(sphere2.total_area, rel=1e-12)


def test_integrate_constant_gives_area(sphere2_fine):
    ones = np.ones(sphere2_fine.n_vertices)
    assert integrate_scalar(sphere2_fine, ones) == pytest.approx(16.0 * np.pi, rel=5e-3)


def test_integrate_squared_norm_on_unit_sphere():
    mesh = icosphere(1.0, 4)
    by_vertex = integrate_scalar(mesh, np.sum(mesh.vertices ** 2, axis=1))
    by_node = integrate_scalar(mesh, lambda x: np.sum(x ** 2, axis=1))
    assert by_vertex == pytest.approx(4.0 * np.pi, rel=1e-2)
    assert by_node == pytest.approx(4.0 * np.pi, rel=1e-2)


def test_integration_is_linear(torus_mesh):
    rng = np.random.default_rng(3)
    f = rng.normal(size=torus_mesh.n_vertices)
    g = rng.normal(size=torus_mesh.n_vertices)
    combined = integrate_scalar(torus_mesh, 2.5 * f - 0.75 * g)
    separate = 2.5 * integrate_scalar(torus_mesh, f) - 0.75 * integrate_scalar(torus_mesh, g)
    assert combined == pytest.approx(separate, rel=1e-12, abs=1e-12)
    by_node = integrate_scalar(torus_mesh, lambda x: 2.0 * x[:, 0] ** 2 + x[:, 2])
    assert by_node == pytest.approx(2.0 * integrate_scalar(torus_mesh, lambda x: x[:, 0] ** 2)
                                    + integrate_scalar(torus_mesh, lambda x: x[:, 2]), rel=1e-12, abs=1e-12)


def test_sphere_area_converges_under_refinement():
    errors = [abs(icosphere(2.0, level).total_area - 16.0 * np.pi) for level in range(2, 6)]
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
    assert errors[-1] < 1e-3 * 16.0 * np.pi


def test_integrate_rejects_non_finite(sphere2):
    values = np.ones(sphere2.n_vertices)
    values[0] = np.inf
    with pytest.raises(NonFiniteInput):
        integrate_scalar(sphere2, values)


def test_ball_area_of_plane_is_disk(plane):
    area = ball_area(plane, [[0.0, 0.0, 0.0], [0.13, -0.27, 0.1]], 0.5)
    assert area[0] == pytest.approx(np.pi * 0.25, rel=1e-9)
    assert area[1] == pytest.approx(np.pi * (0.25 - 0.01), rel=1e-9)


def test_ball_area_far_away_is_zero(plane):
    assert ball_area(plane, [[0.0, 0.0, 5.0]], 1.0)[0] == 0.0


def test_ball_area_with_face_weights(plane):
    half = np.full(plane.n_faces, 0.5)
    weighted = ball_area(plane, [[0.0, 0.0, 0.0]], 0.5, face_weights=half)[0]
    assert weighted == pytest.approx(0.5 * np.pi * 0.25, rel=1e-9)


def sampled_ball_area(tri, center, radius, rng, n=20000):
    r1 = np.sqrt(rng.random(n))[:, None]
    r2 = rng.random(n)[:, None]
    points = (1.0 - r1) * tri[0] + r1 * (1.0 - r2) * tri[1] + r1 * r2 * tri[2]
    area = 0.5 * np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0]))
    return area * np.mean(np.linalg.norm(points - center, axis=1) <= radius), area


def test_ball_centered_on_triangle_corner_is_a_sector():
    theta = 1.0
    p0, p1, p2 = np.zeros(3), np.array([1.0, 0.0, 0.0]), np.array([np.cos(theta), np.sin(theta), 0.0])
    tri = [p[None, :] for p in (p0, p1, p2)]
    at_p0 = triangle_ball_area(*tri, p0[None, :], 0.3)[0]
    at_p1 = triangle_ball_area(*tri, p1[None, :], 0.3)[0]
    on_edge = triangle_ball_area(*tri, np.array([[0.5, 0.0, 0.0]]), 0.1)[0]
    assert at_p0 == pytest.approx(0.5 * theta * 0.09, rel=1e-12)
    assert at_p1 == pytest.approx(0.25 * (np.pi - theta) * 0.09, rel=1e-12)
    assert on_edge == pytest.approx(0.5 * np.pi * 0.01, rel=1e-12)


@pytest.mark.parametrize("vertex", [0, 1730])
@pytest.mark.parametrize("radius", [0.13, 0.15, 0.16])
def test_ball_on_mesh_vertex_matches_sampling(vertex, radius):
    mesh = icosphere(2.0, 4)
    center = mesh.vertices[vertex]
    rng = np.random.default_rng(vertex)
    tri = mesh.vertices[mesh.faces]
    near = np.nonzero(np.linalg.norm(tri - center, axis=2).min(axis=1) <= 2.0 * radius)[0]
    assert len(near) > 5
    clipped = triangle_ball_area(tri[near, 0], tri[near, 1], tri[near, 2],
                                 np.repeat(center[None, :], len(near), axis=0), radius)
    for k, face in enumerate(near):
        sampled, area = sampled_ball_area(tri[face], center, radius, rng)
        assert 0.0 <= clipped[k] <= area * (1.0 + 1e-12)
        assert abs(clipped[k] - sampled) <= 0.02 * area


@pytest.mark.parametrize("vertex", [0, 1730])
def test_ball_on_sphere_vertex_is_a_flat_disk(vertex):
    # a ball centered on a sphere of any radius cuts out area πR²
    mesh = icosphere(2.0, 4)
    area = ball_area(mesh, mesh.vertices[vertex][None, :], 0.15)[0]
    assert area == pytest.approx(np.pi * 0.15 ** 2, rel=2e-2)


def test_rigid_motions_preserve_area(sphere2):
    R = rotation_matrix([1.0, 2.0, 3.0], 0.7)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-14)
    moved = translate(rotate(sphere2, R), (1.0, -2.0, 0.5))
    assert moved.total_area == pytest.approx(sphere2.total_area, rel=1e-12)
    assert np.allclose(moved.centroid(), [1.0, -2.0, 0.5], atol=1e-12)


def test_scale_multiplies_area_and_volume(sphere2):
    doubled = scale(sphere2, 2.0)
    assert doubled.total_area == pytest.approx(4.0 * sphere2.total_area, rel=1e-12)
    assert enclosed_volume(doubled) == pytest.approx(8.0 * enclosed_volume(sphere2), rel=1e-12)


def test_off_and_obj_files_reproduce_vertices(tmp_path, torus_mesh):
    off = read_mesh(write_off(torus_mesh, tmp_path / "torus.off"))
    obj = read_mesh(write_obj(torus_mesh, tmp_path / "torus.obj"))
    assert np.array_equal(off.vertices, torus_mesh.vertices)
    assert np.array_equal(obj.faces, torus_mesh.faces)


def test_bordered_file_needs_allow_boundary(tmp_path):
    path = write_off(flat_patch(1.0, 4), tmp_path / "patch.off")
    with pytest.raises(NonManifold):
        read_mesh(path)
    assert read_mesh(path, allow_boundary=True).n_faces == 32


def test_generated_torus_has_expected_size():
    mesh = torus(2.0, 0.5, n_major=12, n_minor=6)
    assert mesh.n_vertices == 72
    assert mesh.n_faces == 144
