import numpy as np
import pytest

from brakkelab.core.flow import evolve
from brakkelab.core.generators import flat_patch, icosphere
from brakkelab.core.remesh import delaunay_flips, remesh, tangential_smoothing
from brakkelab.core.schemas import StepPolicy, ZeroForce


def face_set(mesh):
    return {frozenset(face) for face in mesh.faces.tolist()}


def test_icosphere_is_already_delaunay():
    mesh = icosphere(1.0, 2)
    assert face_set(delaunay_flips(mesh)) == face_set(mesh)


def test_flips_fix_a_sheared_patch():
    mesh = flat_patch(1.0, 6)
    sheared = mesh.with_vertices(mesh.vertices @ np.array([[1.0, 0.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    flipped = delaunay_flips(sheared)
    assert len(flipped.faces) == len(sheared.faces)
    assert face_set(flipped) != face_set(sheared)
    assert flipped.total_area == pytest.approx(sheared.total_area, rel=1e-12)


def test_smoothing_keeps_the_boundary_and_the_plane():
    mesh = flat_patch(1.0, 6)
    rng = np.random.default_rng(0)
    jitter = np.zeros_like(mesh.vertices)
    jitter[:, :2] = rng.uniform(-0.02, 0.02, (len(mesh.vertices), 2))
    jitter[mesh.boundary_vertices] = 0.0
    smoothed = tangential_smoothing(mesh.with_vertices(mesh.vertices + jitter))
    assert np.allclose(smoothed.vertices[:, 2], 0.0)
    assert np.array_equal(smoothed.vertices[mesh.boundary_vertices], mesh.vertices[mesh.boundary_vertices])


def test_remesh_keeps_the_sphere():
    mesh = icosphere(2.0, 3)
    out = remesh(mesh)
    assert out.euler_characteristic() == 2
    assert out.total_area == pytest.approx(mesh.total_area, rel=1e-2)


def test_flow_with_remeshing_tracks_the_exact_radius():
    traj = evolve(icosphere(2.0, 2), ZeroForce(), StepPolicy(remesh_every=20), t_end=0.5)
    radius = np.linalg.norm(traj[-1].mesh.vertices, axis=1).mean()
    assert radius == pytest.approx(np.sqrt(2.0), rel=2e-2)
