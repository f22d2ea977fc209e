"""Point-cloud primitives: validation, file I/O, normalization, downsampling, rotation.

A point cloud is a float64 numpy array of shape (n, 3). All operations are
pure and, where randomized, deterministic for a given 64-bit seed. Point order
matters only for reproducibility; the semantics treat clouds as sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCloudError

XYZ_FORMAT = "%.9g %.9g %.9g"


def as_cloud(points) -> np.ndarray:
    """Coerce to a validated (n, 3) float64 array with finite entries."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"point cloud must have shape (n, 3), got {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("point cloud is empty")
    if not np.isfinite(arr).all():
        raise ValueError("point cloud contains non-finite coordinates")
    return arr


def save_xyz(path, cloud) -> None:
    """Write an ASCII XYZ file: one `%.9g %.9g %.9g` line per point, LF endings."""
    cloud = as_cloud(cloud)
    lines = [XYZ_FORMAT % (x, y, z) for x, y, z in cloud]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def load_xyz(path) -> np.ndarray:
    """Read an ASCII XYZ file written by :func:`save_xyz` (no header, 3 floats/line)."""
    points = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 coordinates, got {len(parts)}")
            points.append([float(p) for p in parts])
    return as_cloud(points)


@dataclass(frozen=True)
class NormalizationRecord:
    """Invertible record of a normalize() call: p_norm = (p - translation) / scale."""

    translation: tuple[float, float, float]
    scale: float

    def apply(self, cloud) -> np.ndarray:
        cloud = as_cloud(cloud)
        return (cloud - np.asarray(self.translation)) / self.scale

    def invert(self, cloud) -> np.ndarray:
        cloud = as_cloud(cloud)
        return cloud * self.scale + np.asarray(self.translation)


def normalize(cloud) -> tuple[np.ndarray, NormalizationRecord]:
    """Translate the centroid to the origin and scale the largest bbox extent to 1.

    Returns the normalized cloud and the record that inverts the transform.
    Raises DegenerateCloudError when the cloud has zero extent.
    """
    cloud = as_cloud(cloud)
    centroid = cloud.mean(axis=0)
    extent = float((cloud.max(axis=0) - cloud.min(axis=0)).max())
    if extent <= 0.0:
        raise DegenerateCloudError("cannot normalize a cloud with zero extent")
    record = NormalizationRecord(tuple(centroid), extent)
    return (cloud - centroid) / extent, record


def random_downsample(cloud, m: int, seed: int) -> np.ndarray:
    """Uniform subset of exactly m points, without replacement, seeded."""
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    if m < 1:
        raise ValueError(f"target count must be >= 1, got {m}")
    if m > n:
        raise ValueError(f"cannot downsample {n} points to {m}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=m, replace=False)
    return cloud[idx]


def rotation_xz(theta_x: float, theta_z: float) -> np.ndarray:
    """Rotation matrix R_z(theta_z) @ R_x(theta_x), angles in degrees.

    Right-handed, counter-clockwise positive looking down each axis.
    """
    ax = np.deg2rad(theta_x)
    az = np.deg2rad(theta_z)
    cx, sx = np.cos(ax), np.sin(ax)
    cz, sz = np.cos(az), np.sin(az)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    return rz @ rx


def rotate_xz(cloud, theta_x: float, theta_z: float) -> np.ndarray:
    """Rotate every point by R_z(theta_z) @ R_x(theta_x), angles in degrees."""
    if not (np.isfinite(theta_x) and np.isfinite(theta_z)):
        raise ValueError("rotation angles must be finite")
    cloud = as_cloud(cloud)
    return cloud @ rotation_xz(theta_x, theta_z).T
