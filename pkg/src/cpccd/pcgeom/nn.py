"""Exact nearest-neighbour index over a 3D point set.

The tree is built in numpy (median split along the widest axis, leaf buckets)
and queried by the active kernel backend. Answers are identical to an
exhaustive scan: distances compare as ``dx*dx + dy*dy + dz*dz`` and ties go
to the lowest point index.
"""
from __future__ import annotations

import numpy as np

from cpccd import _kernels
from cpccd.errors import EmptyCloud, InvalidArgument
from cpccd.pcgeom.cloud import PointCloud

LEAF_SIZE = 16


class NnIndex:
    def __init__(self, cloud, leaf_size: int = LEAF_SIZE, backend: str | None = None):
        points = cloud.points if isinstance(cloud, PointCloud) else cloud
        points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 3)
        if points.shape[0] == 0:
            raise EmptyCloud("cannot index an empty cloud")
        if leaf_size < 1:
            raise InvalidArgument("leaf_size must be >= 1")
        points.setflags(write=False)
        self.points = points
        self._kern = _kernels.get(backend)
        self._build(leaf_size)

    def __len__(self):
        return self.points.shape[0]

    def _build(self, leaf_size):
        pts = self.points
        perm = np.arange(pts.shape[0], dtype=np.int64)
        lo_l, hi_l, dim_l, split_l, left_l, right_l = [], [], [], [], [], []

        def new_node(lo, hi):
            lo_l.append(lo)
            hi_l.append(hi)
            dim_l.append(-1)
            split_l.append(0.0)
            left_l.append(-1)
            right_l.append(-1)
            return len(lo_l) - 1

        root = new_node(0, pts.shape[0])
        work = [root]
        while work:
            node = work.pop()
            lo, hi = lo_l[node], hi_l[node]
            if hi - lo <= leaf_size:
                continue
            seg = pts[perm[lo:hi]]
            spread = seg.max(axis=0) - seg.min(axis=0)
            dim = int(np.argmax(spread))
            if spread[dim] == 0.0:
                continue  # all coincident: keep as a leaf
            mid = (hi - lo) // 2
            order = np.argpartition(seg[:, dim], mid, kind="introselect")
            perm[lo:hi] = perm[lo:hi][order]
            m = lo + mid
            dim_l[node] = dim
            split_l[node] = float(pts[perm[m], dim])
            left = new_node(lo, m)
            right = new_node(m, hi)
            left_l[node] = left
            right_l[node] = right
            work.extend((left, right))

        i64 = np.int64
        self._perm = perm
        self._lo = np.asarray(lo_l, dtype=i64)
        self._hi = np.asarray(hi_l, dtype=i64)
        self._dim = np.asarray(dim_l, dtype=i64)
        self._split = np.asarray(split_l, dtype=np.float64)
        self._left = np.asarray(left_l, dtype=i64)
        self._right = np.asarray(right_l, dtype=i64)

    def query_sq(self, queries, skip=None):
        """Indices and squared distances of the nearest point to each query.

        ``skip[i] >= 0`` excludes that point index from query ``i`` (used for
        nearest-other-point queries). A query with nothing left to match gets
        index -1 and distance inf.
        """
        q = np.ascontiguousarray(queries, dtype=np.float64).reshape(-1, 3)
        if skip is None:
            skip = np.full(q.shape[0], -1, dtype=np.int64)
        else:
            skip = np.ascontiguousarray(skip, dtype=np.int64).reshape(-1)
            if skip.shape[0] != q.shape[0]:
                raise InvalidArgument("skip must have one entry per query")
        return self._kern.nn_query(
            self.points, self._perm, self._lo, self._hi, self._dim, self._split,
            self._left, self._right, q, skip,
        )

    def query_many(self, queries, skip=None):
        idx, d2 = self.query_sq(queries, skip)
        return idx, np.sqrt(d2)

    def query(self, q) -> tuple[int, float]:
        idx, dist = self.query_many(np.asarray(q, dtype=np.float64).reshape(1, 3))
        return int(idx[0]), float(dist[0])

    def nearest_other(self):
        """For every indexed point, the nearest *other* indexed point."""
        n = self.points.shape[0]
        return self.query_many(self.points, np.arange(n, dtype=np.int64))


def nn_query(index: NnIndex, q) -> tuple[int, float]:
    return index.query(q)


def mean_nn_spacing(points) -> float:
    """Mean distance from each point to its nearest other point (0 for n < 2)."""
    points = points.points if isinstance(points, PointCloud) else np.asarray(points)
    if points.shape[0] < 2:
        return 0.0
    _, d = NnIndex(points).nearest_other()
    return float(np.mean(d))
