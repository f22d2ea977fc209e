"""Pure-numpy kernel backend: exact NN queries and greedy sample elimination.

Mirrors the compiled backend bit for bit: squared distances use the same
dx*dx + dy*dy + dz*dz evaluation order, and elimination breaks ties on the
smallest point index.
"""

from __future__ import annotations

import numpy as np

from .tree import LEAF_SIZE, KDTree, build

__all__ = ["build", "query", "eliminate"]


def _d2_block(q: np.ndarray, p: np.ndarray) -> np.ndarray:
    diff = q[:, None, :] - p[None, :, :]
    return diff[..., 0] ** 2 + diff[..., 1] ** 2 + diff[..., 2] ** 2


def query(tree: KDTree, queries, exclude=None) -> tuple[np.ndarray, np.ndarray]:
    """Exact nearest neighbor for each query point.

    Returns (squared distances, point indices). `exclude`, when given, is a
    per-query point index to skip (used for self-neighbor queries).
    """
    q = np.ascontiguousarray(queries, dtype=np.float64)
    nq = q.shape[0]
    best_d2 = np.full(nq, np.inf)
    best_idx = np.full(nq, -1, dtype=np.int64)
    ex = None if exclude is None else np.asarray(exclude, dtype=np.int64)

    def visit(node: int, qidx: np.ndarray) -> None:
        if tree.left[node] < 0:
            didx = tree.order[tree.start[node] : tree.end[node]]
            if didx.size == 0:
                return
            d2 = _d2_block(q[qidx], tree.points[didx])
            if ex is not None:
                d2[didx[None, :] == ex[qidx][:, None]] = np.inf
            loc = np.argmin(d2, axis=1)
            vals = d2[np.arange(len(qidx)), loc]
            upd = vals < best_d2[qidx]
            sel = qidx[upd]
            best_d2[sel] = vals[upd]
            best_idx[sel] = didx[loc[upd]]
            return
        ax = tree.axis[node]
        delta = q[qidx, ax] - tree.split[node]
        near_left = delta <= 0.0
        groups = (
            (qidx[near_left], delta[near_left], tree.left[node], tree.right[node]),
            (qidx[~near_left], delta[~near_left], tree.right[node], tree.left[node]),
        )
        for sub, _, near, _ in groups:
            if sub.size:
                visit(near, sub)
        for sub, d, _, far in groups:
            if sub.size:
                live = d * d < best_d2[sub]
                if np.any(live):
                    visit(far, sub[live])

    if nq:
        visit(0, np.arange(nq, dtype=np.int64))
    return best_d2, best_idx


def eliminate(points, keep: int, leaf_size: int = LEAF_SIZE) -> np.ndarray:
    """Greedy blue-noise thinning: repeatedly drop the point with the smallest
    nearest-neighbor spacing until `keep` remain. Returns kept indices,
    ascending. Ties are broken on the smallest index.
    """
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n = pts.shape[0]
    if keep < 1 or keep > n:
        raise ValueError(f"keep must be in [1, {n}], got {keep}")
    if keep == n:
        return np.arange(n, dtype=np.int64)

    tree = build(pts, leaf_size)
    d2, nn = query(tree, pts, exclude=np.arange(n, dtype=np.int64))
    alive = np.ones(n, dtype=bool)
    for _ in range(n - keep):
        victim = int(np.argmin(np.where(alive, d2, np.inf)))
        alive[victim] = False
        for v in np.flatnonzero(alive & (nn == victim)):
            row = pts - pts[v]
            rd2 = row[:, 0] ** 2 + row[:, 1] ** 2 + row[:, 2] ** 2
            rd2[~alive] = np.inf
            rd2[v] = np.inf
            j = int(np.argmin(rd2))
            nn[v] = j
            d2[v] = rd2[j]
    return np.flatnonzero(alive).astype(np.int64)
