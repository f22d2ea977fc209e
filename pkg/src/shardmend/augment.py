"""Fracture augmentation: oblique planar cuts producing complete/broken/repair triplets.

A cut rotates the cloud, thresholds on height in the rotated frame, and keeps
the partition in the original frame. The low side (below the cut plane) is the
repair fragment, the rest is the broken object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCutError, InsufficientDensityError
from .geometry import as_cloud, random_downsample, rotate_xz

MAX_CUT_ATTEMPTS = 16


@dataclass(frozen=True)
class CutSpec:
    """One oblique planar cut: rotation angles (degrees), height fraction, seed."""

    theta_x: float
    theta_z: float
    height_fraction: float
    seed: int


@dataclass(frozen=True)
class AugmentBounds:
    """Sampling bounds for random cuts, plus optional output point counts.

    Angles are signed uniform in (-max_angle, +max_angle); the cut height is
    uniform in [height_low, height_high] of the rotated-frame extent. When
    points_broken/points_repair are set, fragments are count-fixed and cuts
    leaving a fragment too sparse are re-drawn.
    """

    cuts_per_object: int = 4
    height_low: float = 0.18
    height_high: float = 0.22
    max_angle: float = 30.0
    points_broken: int | None = None
    points_repair: int | None = None

    def check(self) -> None:
        if self.cuts_per_object < 1:
            raise ValueError("cuts_per_object must be >= 1")
        if not (0.0 < self.height_low <= self.height_high < 1.0):
            raise ValueError("height bounds must satisfy 0 < low <= high < 1")
        if not (0.0 < self.max_angle < 90.0):
            raise ValueError("max_angle must be in (0, 90)")


@dataclass(frozen=True)
class Triplet:
    complete: np.ndarray
    broken: np.ndarray
    repair: np.ndarray
    cut: CutSpec
    object_id: str


def apply_cut(cloud, cut: CutSpec) -> tuple[np.ndarray, np.ndarray]:
    """Partition a cloud by the cut plane; returns (broken, repair).

    The mask is computed in the rotated frame but applied to the original
    rows, so broken + repair reproduce the input bitwise.
    """
    cloud = as_cloud(cloud)
    if not (0.0 < cut.height_fraction < 1.0):
        raise ValueError(f"height_fraction must be in (0, 1), got {cut.height_fraction}")
    y = rotate_xz(cloud, cut.theta_x, cut.theta_z)[:, 1]
    h = y.min() + cut.height_fraction * (y.max() - y.min())
    repair_mask = y < h
    if not repair_mask.any() or repair_mask.all():
        raise DegenerateCutError("cut leaves an empty side")
    return cloud[~repair_mask], cloud[repair_mask]


def fix_counts(part, target: int, seed: int) -> np.ndarray:
    """Resample a fragment to exactly `target` points.

    Fragments at or above the target are subsampled without replacement;
    fragments with at least target/2 points are sampled with replacement.
    Sparser fragments raise InsufficientDensityError: re-draw the cut.
    """
    part = as_cloud(part)
    if target < 1:
        raise ValueError(f"target must be >= 1, got {target}")
    n = part.shape[0]
    if n >= target:
        return random_downsample(part, target, seed)
    if 2 * n >= target:
        rng = np.random.default_rng(seed)
        return part[rng.choice(n, size=target, replace=True)]
    raise InsufficientDensityError(
        f"insufficient density: fragment has {n} points, need >= {(target + 1) // 2} for target {target}"
    )


def _draw_cut(rng: np.random.Generator, bounds: AugmentBounds, seed: int) -> CutSpec:
    while True:
        tx = rng.uniform(-bounds.max_angle, bounds.max_angle)
        tz = rng.uniform(-bounds.max_angle, bounds.max_angle)
        if abs(tx) < bounds.max_angle and abs(tz) < bounds.max_angle:
            break
    frac = rng.uniform(bounds.height_low, bounds.height_high)
    return CutSpec(float(tx), float(tz), float(frac), seed)


def make_triplets(cloud, object_id: str, k: int, bounds: AugmentBounds, seed: int) -> list[Triplet]:
    """Generate k independent cut triplets of one normalized cloud.

    Deterministic for a given seed. Degenerate cuts (an empty or too-sparse
    side) are re-drawn up to MAX_CUT_ATTEMPTS times, then the object fails.
    """
    cloud = as_cloud(cloud)
    bounds.check()
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    children = np.random.SeedSequence(seed).spawn(k)
    triplets = []
    for i, child in enumerate(children):
        cut_seed = int(child.generate_state(1, np.uint64)[0])
        rng = np.random.default_rng(np.random.SeedSequence(cut_seed))
        for _ in range(MAX_CUT_ATTEMPTS):
            cut = _draw_cut(rng, bounds, cut_seed)
            broken_seed = int(rng.integers(0, 2**63))
            repair_seed = int(rng.integers(0, 2**63))
            try:
                broken, repair = apply_cut(cloud, cut)
                if bounds.points_broken is not None:
                    broken = fix_counts(broken, bounds.points_broken, broken_seed)
                if bounds.points_repair is not None:
                    repair = fix_counts(repair, bounds.points_repair, repair_seed)
            except (DegenerateCutError, InsufficientDensityError):
                continue
            triplets.append(Triplet(cloud, broken, repair, cut, f"{object_id}__c{i}"))
            break
        else:
            raise DegenerateCutError(
                f"{object_id}: {MAX_CUT_ATTEMPTS} consecutive degenerate cuts"
            )
    return triplets
