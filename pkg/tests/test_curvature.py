import numpy as np
import pytest

from brakkelab.core.curvature import compute_curvature, cotangent_laplacian, mixed_vertex_areas, scale_curvature
from brakkelab.core.generators import capsule, flat_patch
from brakkelab.core.mesh import build_mesh, integrate_scalar, scale


def test_sphere_mean_curvature(sphere2_fine):
    curv = compute_curvature(sphere2_fine)
    error = np.abs(curv.mean_curvature - 1.0)
    assert error.mean() < 0.01
    assert error.max() < 0.03


def test_sphere_curvature_vector_points_inward(sphere2_fine):
    curv = compute_curvature(sphere2_fine)
    radial = sphere2_fine.vertices / np.linalg.norm(sphere2_fine.vertices, axis=1)[:, None]
    cosines = -np.einsum("ij,ij->i", curv.mean_curvature_vector, radial) / np.linalg.norm(
        curv.mean_curvature_vector, axis=1)
    assert cosines.min() > np.cos(0.2)


def test_sphere_second_fundamental_form(sphere2_fine):
    curv = compute_curvature(sphere2_fine)
    areas = sphere2_fine.vertex_areas
    assert np.average(curv.gaussian_curvature, weights=areas) == pytest.approx(0.25, rel=0.01)
    assert np.average(curv.a2, weights=areas) == pytest.approx(0.5, rel=0.03)
    assert np.all(curv.a2 >= 0.0)
    assert curv.max_a2() == curv.a2.max()


def test_plane_is_flat():
    mesh = flat_patch(2.0, 12)
    curv = compute_curvature(mesh)
    assert np.abs(curv.mean_curvature_vector).max() < 1e-9
    assert np.abs(curv.gaussian_curvature).max() < 1e-9
    assert np.abs(curv.a2).max() < 1e-9


def test_boundary_vertices_carry_no_curvature(bump):
    curv = compute_curvature(bump)
    edge = bump.boundary_vertices
    assert edge.any()
    assert np.all(curv.mean_curvature_vector[edge] == 0.0)
    assert np.all(curv.gaussian_curvature[edge] == 0.0)


def test_cylinder_part_of_capsule():
    mesh = capsule(length=8.0, radius=1.0, n_around=48, n_profile=80)
    curv = compute_curvature(mesh)
    shaft = np.abs(mesh.vertices[:, 2]) < 1.0
    assert shaft.sum() > 0
    assert np.abs(curv.mean_curvature[shaft] - 1.0).max() < 0.02
    assert np.abs(curv.gaussian_curvature[shaft]).max() < 1e-6


def test_laplacian_sums_to_zero(torus_mesh):
    L = cotangent_laplacian(torus_mesh)
    assert np.abs(L.sum(axis=0)).max() < 1e-10
    assert np.abs(L).max() > 1e-3


def test_curvature_scales_inversely(sphere2):
    curv = compute_curvature(sphere2)
    doubled = compute_curvature(scale(sphere2, 2.0))
    predicted = scale_curvature(curv, 2.0)
    assert np.allclose(doubled.mean_curvature, predicted.mean_curvature, rtol=1e-10)
    assert np.allclose(doubled.a2, predicted.a2, rtol=1e-10)


@pytest.mark.parametrize("fixture, chi", [("sphere2", 2), ("sphere2_fine", 2), ("torus_mesh", 0)])
def test_total_gaussian_curvature_is_topological(request, fixture, chi):
    mesh = request.getfixturevalue(fixture)
    curv = compute_curvature(mesh)
    assert mesh.euler_characteristic() == chi
    total = integrate_scalar(mesh, curv.gaussian_curvature)
    assert total == pytest.approx(2.0 * np.pi * chi, rel=1e-9, abs=1e-9)


def test_mixed_areas_partition_total_area(sphere2_fine, torus_mesh):
    for mesh in (sphere2_fine, torus_mesh):
        assert mixed_vertex_areas(mesh).sum() == pytest.approx(mesh.total_area, rel=1e-12)


def test_obtuse_face_gives_half_its_area_to_the_obtuse_corner():
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.1, 0.0]])
    mesh = build_mesh(vertices, np.array([[0, 1, 2]]), allow_boundary=True)
    areas = mixed_vertex_areas(mesh)
    assert areas == pytest.approx([0.0125, 0.0125, 0.025], rel=1e-12)


def test_mean_curvature_exact_at_five_valent_vertices(sphere2_fine):
    curv = compute_curvature(sphere2_fine)
    valence = np.bincount(sphere2_fine.edges.ravel(), minlength=sphere2_fine.n_vertices)
    five = valence == 5
    assert five.sum() == 12
    assert np.abs(curv.mean_curvature[five] - 1.0).max() < 0.02
