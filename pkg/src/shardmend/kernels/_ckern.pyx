# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernel backend: exact kd-tree NN queries and greedy elimination.

Semantics match kernels.fallback exactly; see that module for the contract.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

from .tree import LEAF_SIZE, build

cnp.import_array()

__all__ = ["build", "query", "eliminate"]

ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32
ctypedef cnp.uint8_t u8


cdef void _query_one(const double[:, ::1] pts, const i64[::1] order,
                     const i32[::1] ax, const double[::1] split,
                     const i32[::1] left, const i32[::1] right,
                     const i32[::1] start, const i32[::1] end,
                     const u8* alive, double qx, double qy, double qz,
                     i64 exclude, int node,
                     double* bd2, i64* bidx) noexcept nogil:
    cdef int i, a
    cdef i64 pi
    cdef double dx, dy, dz, d2, dd
    if left[node] < 0:
        for i in range(start[node], end[node]):
            pi = order[i]
            if pi == exclude:
                continue
            if alive != NULL and alive[pi] == 0:
                continue
            dx = qx - pts[pi, 0]
            dy = qy - pts[pi, 1]
            dz = qz - pts[pi, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < bd2[0]:
                bd2[0] = d2
                bidx[0] = pi
        return
    a = ax[node]
    if a == 0:
        dd = qx - split[node]
    elif a == 1:
        dd = qy - split[node]
    else:
        dd = qz - split[node]
    if dd <= 0:
        _query_one(pts, order, ax, split, left, right, start, end, alive,
                   qx, qy, qz, exclude, left[node], bd2, bidx)
        if dd * dd < bd2[0]:
            _query_one(pts, order, ax, split, left, right, start, end, alive,
                       qx, qy, qz, exclude, right[node], bd2, bidx)
    else:
        _query_one(pts, order, ax, split, left, right, start, end, alive,
                   qx, qy, qz, exclude, right[node], bd2, bidx)
        if dd * dd < bd2[0]:
            _query_one(pts, order, ax, split, left, right, start, end, alive,
                       qx, qy, qz, exclude, left[node], bd2, bidx)


def query(tree, queries, exclude=None):
    """Exact nearest neighbor per query point; returns (squared dists, indices)."""
    cdef const double[:, ::1] pts = tree.points
    cdef const i64[::1] order = tree.order
    cdef const i32[::1] ax = tree.axis
    cdef const double[::1] split = tree.split
    cdef const i32[::1] left = tree.left
    cdef const i32[::1] right = tree.right
    cdef const i32[::1] start = tree.start
    cdef const i32[::1] end = tree.end

    q_arr = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, ::1] q = q_arr
    cdef Py_ssize_t nq = q.shape[0]
    d2_arr = np.full(nq, np.inf)
    idx_arr = np.full(nq, -1, dtype=np.int64)
    cdef double[::1] d2 = d2_arr
    cdef i64[::1] idx = idx_arr

    cdef const i64[::1] ex
    cdef bint has_ex = exclude is not None
    if has_ex:
        ex = np.ascontiguousarray(exclude, dtype=np.int64)

    cdef Py_ssize_t i
    cdef i64 e
    with nogil:
        for i in range(nq):
            e = ex[i] if has_ex else -1
            _query_one(pts, order, ax, split, left, right, start, end, NULL,
                       q[i, 0], q[i, 1], q[i, 2], e, 0, &d2[i], &idx[i])
    return d2_arr, idx_arr


def eliminate(points, int keep, int leaf_size=LEAF_SIZE):
    """Greedy blue-noise thinning; same contract as kernels.fallback.eliminate."""
    pts_arr = np.ascontiguousarray(points, dtype=np.float64)
    cdef Py_ssize_t n = pts_arr.shape[0]
    if keep < 1 or keep > n:
        raise ValueError(f"keep must be in [1, {n}], got {keep}")
    if keep == n:
        return np.arange(n, dtype=np.int64)

    tree = build(pts_arr, leaf_size)
    d2_arr, nn_arr = query(tree, pts_arr, exclude=np.arange(n, dtype=np.int64))

    cdef const double[:, ::1] pts = tree.points
    cdef const i64[::1] order = tree.order
    cdef const i32[::1] ax = tree.axis
    cdef const double[::1] split = tree.split
    cdef const i32[::1] left = tree.left
    cdef const i32[::1] right = tree.right
    cdef const i32[::1] start = tree.start
    cdef const i32[::1] end = tree.end

    cdef double[::1] d2 = d2_arr
    cdef i64[::1] nn = nn_arr
    alive_arr = np.ones(n, dtype=np.uint8)
    cdef u8[::1] alive = alive_arr

    cdef Py_ssize_t removals = n - keep
    cdef Py_ssize_t r, i, victim
    cdef double best
    with nogil:
        for r in range(removals):
            victim = -1
            best = 0.0
            for i in range(n):
                if alive[i] and (victim < 0 or d2[i] < best):
                    victim = i
                    best = d2[i]
            alive[victim] = 0
            for i in range(n):
                if alive[i] and nn[i] == victim:
                    d2[i] = INFINITY
                    nn[i] = -1
                    _query_one(pts, order, ax, split, left, right, start, end,
                               &alive[0], pts[i, 0], pts[i, 1], pts[i, 2],
                               <i64> i, 0, &d2[i], &nn[i])
    return np.flatnonzero(alive_arr).astype(np.int64)
