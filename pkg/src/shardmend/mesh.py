"""Triangle meshes: OBJ/OFF loading and blue-noise surface sampling.

Polygonal faces are fan-triangulated at load time. Sampling draws an
area-weighted uniform oversample of the surface and thins it with greedy
sample elimination until exactly the requested number of points remain.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import MeshError
from .geometry import as_cloud

OVERSAMPLE_FACTOR = 4.0


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (v, 3) float64
    faces: np.ndarray  # (f, 3) int64, indices into vertices

    def triangle_areas(self) -> np.ndarray:
        a = self.vertices[self.faces[:, 0]]
        b = self.vertices[self.faces[:, 1]]
        c = self.vertices[self.faces[:, 2]]
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def surface_area(self) -> float:
        return float(self.triangle_areas().sum())


def _fan_triangulate(indices: list[int]) -> list[tuple[int, int, int]]:
    return [(indices[0], indices[i], indices[i + 1]) for i in range(1, len(indices) - 1)]


def _build_mesh(vertices: list, faces: list[list[int]], path) -> Mesh:
    verts = np.asarray(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[1] != 3:
        raise MeshError(f"{path}: vertices must be 3D")
    tris = []
    for face in faces:
        if len(face) < 3:
            raise MeshError(f"{path}: face with fewer than 3 vertices")
        for idx in face:
            if idx < 0 or idx >= len(verts):
                raise MeshError(f"{path}: face index out of range ({idx} of {len(verts)})")
        tris.extend(_fan_triangulate(face))
    return Mesh(verts, np.asarray(tris, dtype=np.int64).reshape(-1, 3))


def _parse_obj(lines, path) -> Mesh:
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshError(f"{path}:{lineno}: vertex needs 3 coordinates")
            vertices.append([float(p) for p in parts[1:4]])
        elif parts[0] == "f":
            face = []
            for token in parts[1:]:
                # tokens may be v, v/vt, v//vn, v/vt/vn; only the vertex index matters
                idx = int(token.split("/")[0])
                # OBJ is 1-based; negative indices count back from the current end
                face.append(idx - 1 if idx > 0 else len(vertices) + idx)
            faces.append(face)
        # vn/vt/usemtl/etc. are ignored
    return _build_mesh(vertices, faces, path)


def _parse_off(lines, path) -> Mesh:
    tokens: list[str] = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    pos = 1
    try:
        n_verts, n_faces = int(tokens[pos]), int(tokens[pos + 1])
        pos += 3  # skip the edge count
        vertices = []
        for _ in range(n_verts):
            vertices.append([float(t) for t in tokens[pos : pos + 3]])
            pos += 3
        faces = []
        for _ in range(n_faces):
            k = int(tokens[pos])
            faces.append([int(t) for t in tokens[pos + 1 : pos + 1 + k]])
            pos += 1 + k
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: truncated or malformed OFF data") from exc
    return _build_mesh(vertices, faces, path)


def load_mesh(path) -> Mesh:
    """Load a triangulated mesh from an OBJ or OFF file.

    Distinct failures: unreadable file, unsupported format, out-of-range face
    index. Polygons with more than 3 vertices are fan-triangulated.
    """
    ext = os.path.splitext(str(path))[1].lower()
    if ext not in (".obj", ".off"):
        raise MeshError(f"{path}: unsupported format {ext or '(none)'}; expected .obj or .off")
    try:
        with open(path, "r", encoding="ascii", errors="replace") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise MeshError(f"{path}: unreadable file ({exc})") from exc
    if ext == ".obj":
        return _parse_obj(lines, path)
    return _parse_off(lines, path)


def sample_surface_uniform(mesh: Mesh, count: int, seed: int) -> np.ndarray:
    """Area-weighted uniform sample of `count` points on the mesh surface."""
    if count < 1:
        raise ValueError(f"sample count must be >= 1, got {count}")
    areas = mesh.triangle_areas()
    total = float(areas.sum())
    if total <= 0.0:
        raise MeshError("mesh has zero surface area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=count, p=areas / total)
    # uniform barycentric coordinates (square-root trick)
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    a = mesh.vertices[mesh.faces[tri, 0]]
    b = mesh.vertices[mesh.faces[tri, 1]]
    c = mesh.vertices[mesh.faces[tri, 2]]
    pts = (1.0 - r1)[:, None] * a + (r1 * (1.0 - r2))[:, None] * b + (r1 * r2)[:, None] * c
    return as_cloud(pts)


def poisson_disk_sample(
    mesh: Mesh, count: int, seed: int, oversample: float = OVERSAMPLE_FACTOR
) -> np.ndarray:
    """Blue-noise surface sample of exactly `count` points.

    Oversamples the surface uniformly by `oversample`x, then greedily
    eliminates the point with the smallest nearest-neighbor spacing until
    `count` remain. Deterministic for a given seed.
    """
    pool_size = int(oversample * count)
    if count > pool_size:
        raise ValueError(f"count {count} exceeds oversample pool {pool_size}")
    pool = sample_surface_uniform(mesh, pool_size, seed)
    keep = kernels.eliminate(pool, count)
    return pool[keep]
