"""Chamfer and Hausdorff distances over exact nearest-neighbor queries."""

from __future__ import annotations

import numpy as np

from . import kernels
from .geometry import as_cloud

# Pinned variant, recorded in every report file: unsquared distances,
# bidirectional, mean per direction for chamfer / max for hausdorff.
CHAMFER_VARIANT = "unsquared-bidirectional-mean"


class SpatialIndex:
    """Exact nearest-neighbor index over one cloud (balanced kd-tree, leaf 16)."""

    def __init__(self, cloud, leaf_size: int = kernels.LEAF_SIZE):
        self.cloud = as_cloud(cloud)
        self._tree = kernels.build_tree(self.cloud, leaf_size)

    def nearest(self, queries) -> tuple[np.ndarray, np.ndarray]:
        """Unsquared distance and index of the nearest indexed point per query."""
        d2, idx = kernels.query(self._tree, np.asarray(queries, dtype=np.float64))
        return np.sqrt(d2), idx


def nn_distances(a, b) -> np.ndarray:
    """For each point of a, the unsquared distance to its nearest neighbor in b."""
    return SpatialIndex(b).nearest(as_cloud(a))[0]


def chamfer(a, b) -> float:
    """Bidirectional chamfer distance: mean NN distance a->b plus mean b->a."""
    a = as_cloud(a)
    b = as_cloud(b)
    return float(nn_distances(a, b).mean() + nn_distances(b, a).mean())


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance: max of the two directed max-min distances."""
    a = as_cloud(a)
    b = as_cloud(b)
    return float(max(nn_distances(a, b).max(), nn_distances(b, a).max()))
