"""Balanced kd-tree construction shared by the compiled and fallback backends.

The tree is stored as flat arrays so both backends can traverse it. Nodes
split at the median of the widest axis; leaves hold up to `leaf_size` points
as a contiguous range of the `order` permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 16


@dataclass
class KDTree:
    points: np.ndarray  # (n, 3) float64, C-contiguous
    order: np.ndarray  # (n,) int64 permutation; leaves own contiguous slices
    axis: np.ndarray  # (nodes,) int32 split axis, -1 for leaves
    split: np.ndarray  # (nodes,) float64 split coordinate
    left: np.ndarray  # (nodes,) int32 child ids, -1 for leaves
    right: np.ndarray  # (nodes,) int32
    start: np.ndarray  # (nodes,) int32 range into `order`
    end: np.ndarray  # (nodes,) int32
    leaf_size: int


def build(points, leaf_size: int = LEAF_SIZE) -> KDTree:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    order = np.arange(n, dtype=np.int64)
    axis: list[int] = []
    split: list[float] = []
    left: list[int] = []
    right: list[int] = []
    start: list[int] = []
    end: list[int] = []

    def new_node(s: int, e: int) -> int:
        nid = len(axis)
        axis.append(-1)
        split.append(np.nan)
        left.append(-1)
        right.append(-1)
        start.append(s)
        end.append(e)
        return nid

    def descend(s: int, e: int) -> int:
        nid = new_node(s, e)
        count = e - s
        if count <= leaf_size:
            return nid
        seg = order[s:e]
        coords = pts[seg]
        ax = int(np.argmax(coords.max(axis=0) - coords.min(axis=0)))
        k = count // 2
        part = np.argpartition(coords[:, ax], k)
        order[s:e] = seg[part]
        axis[nid] = ax
        split[nid] = float(pts[order[s + k], ax])
        left[nid] = descend(s, s + k)
        right[nid] = descend(s + k, e)
        return nid

    if n > 0:
        descend(0, n)
    else:
        new_node(0, 0)

    return KDTree(
        points=pts,
        order=order,
        axis=np.asarray(axis, dtype=np.int32),
        split=np.asarray(split, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        start=np.asarray(start, dtype=np.int32),
        end=np.asarray(end, dtype=np.int32),
        leaf_size=leaf_size,
    )
