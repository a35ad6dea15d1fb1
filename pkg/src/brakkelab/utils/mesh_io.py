"""ASCII OFF / OBJ reading and writing.

Positions are written with 17 significant digits so a write/read cycle
reproduces every float64 exactly.
"""
from pathlib import Path
from typing import Tuple

import numpy as np

from ..core.mesh import TriMesh, build_mesh
from ..core.errors import InvalidMesh

FLOAT_FORMAT = "%.17g"


def _format_rows(rows: np.ndarray, fmt: str, prefix: str = "") -> str:
    return "".join(prefix + " ".join(fmt % value for value in row) + "\n" for row in rows)


def write_off(mesh: TriMesh, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = f"OFF\n{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}\n"
    body += _format_rows(mesh.vertices, FLOAT_FORMAT)
    body += _format_rows(mesh.faces, "%d", prefix="3 ")
    path.write_text(body)
    return path


def write_obj(mesh: TriMesh, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = _format_rows(mesh.vertices, FLOAT_FORMAT, prefix="v ")
    body += _format_rows(mesh.faces + 1, "%d", prefix="f ")
    path.write_text(body)
    return path


def parse_off(text: str) -> Tuple[np.ndarray, np.ndarray]:
    tokens = [line.split("#")[0].strip() for line in text.splitlines()]
    tokens = [t for t in tokens if t]
    if not tokens or not tokens[0].startswith("OFF"):
        raise InvalidMesh("Missing OFF header.")
    header = tokens[0][3:].split() or tokens.pop(1).split()
    n_v, n_f = int(header[0]), int(header[1])
    body = tokens[1:]
    if len(body) < n_v + n_f:
        raise InvalidMesh("OFF file is truncated.", {"expected_rows": n_v + n_f, "found_rows": len(body)})
    vertices = np.array([[float(x) for x in row.split()[:3]] for row in body[:n_v]])
    faces = []
    for row in body[n_v:n_v + n_f]:
        values = [int(x) for x in row.split()]
        if values[0] != 3:
            raise InvalidMesh("Only triangle faces are supported.", {"face": row})
        faces.append(values[1:4])
    return vertices, np.array(faces, dtype=np.int64)


def parse_obj(text: str) -> Tuple[np.ndarray, np.ndarray]:
    vertices, faces = [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            vertices.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
            if len(idx) != 3:
                raise InvalidMesh("Only triangle faces are supported.", {"face": line})
            faces.append(idx)
    return np.array(vertices, dtype=np.float64), np.array(faces, dtype=np.int64)


def read_mesh(path: Path, allow_boundary: bool = False, orient_outward: bool = False) -> TriMesh:
    """Reads an .off or .obj file and validates it with build_mesh."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".off":
        vertices, faces = parse_off(path.read_text())
    elif suffix == ".obj":
        vertices, faces = parse_obj(path.read_text())
    else:
        raise InvalidMesh("Unsupported mesh format.", {"path": str(path)})
    return build_mesh(vertices, faces, allow_boundary=allow_boundary, orient_outward=orient_outward)


def write_mesh(mesh: TriMesh, path: Path) -> Path:
    if Path(path).suffix.lower() == ".obj":
        return write_obj(mesh, path)
    return write_off(mesh, path)
