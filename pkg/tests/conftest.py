from pathlib import Path

import numpy as np
import pytest
import yaml

from brakkelab.core.flow import FlowTrajectory
from brakkelab.core.generators import flat_patch, gaussian_bump, icosphere, torus
from brakkelab.core.mesh import scale, translate


def shrinking_sphere(times, level=3, radius=2.0, center=(0.0, 0.0, 0.0)):
    """Closed-form flow of a sphere: radius √(r0² − 4t), singular at r0²/4."""
    base = icosphere(radius, level)
    s = radius ** 2 / 4.0
    meshes = [translate(scale(base, np.sqrt(1.0 - t / s)), center) for t in times]
    return FlowTrajectory.from_meshes(meshes, times)


@pytest.fixture(scope="session")
def sphere2():
    return icosphere(2.0, 3)


@pytest.fixture(scope="session")
def sphere2_fine():
    return icosphere(2.0, 4)


@pytest.fixture(scope="session")
def torus_mesh():
    return torus(2.0, 0.5)


@pytest.fixture(scope="session")
def plane():
    return flat_patch(2.0, 20)


@pytest.fixture(scope="session")
def bump():
    return gaussian_bump()


@pytest.fixture(scope="session")
def exact_sphere_traj():
    """Radius-2 sphere shrinking to the origin at s = 1, snapshots every 0.01."""
    return shrinking_sphere(np.linspace(0.0, 0.99, 100))


@pytest.fixture
def write_scenario(tmp_path: Path):
    """Writes a scenario mapping to a YAML file under tmp_path."""
    def _write(data: dict, name: str = "scenario.yaml") -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data, sort_keys=False))
        return path
    return _write


@pytest.fixture(scope="session")
def sphere_flow():
    return shrinking_sphere
