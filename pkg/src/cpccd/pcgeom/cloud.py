"""Point cloud and bounding box types."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cpccd.errors import EmptyCloud, InvalidArgument

OBJECT = 0
ADDED = 1
LABEL_NAMES = {OBJECT: "object", ADDED: "added"}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Ordered (N, 3) float64 points with optional per-point provenance labels.

    Labels are ``OBJECT`` (0) for points of the scanned object and ``ADDED``
    (1) for points introduced by an external corruption. A cloud without
    labels is treated as all-object. Arrays are read-only after construction.
    """

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.size == 0:
            pts = pts.reshape(0, 3)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise InvalidArgument(f"points must have shape (N, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgument("point coordinates must be finite")
        object.__setattr__(self, "points", _frozen(np.ascontiguousarray(pts)))
        if self.labels is not None:
            lab = np.array(self.labels, dtype=np.uint8, copy=True).reshape(-1)
            if lab.shape[0] != pts.shape[0]:
                raise InvalidArgument(f"{lab.shape[0]} labels for {pts.shape[0]} points")
            if lab.size and lab.max() > ADDED:
                raise InvalidArgument("labels must be 0 (object) or 1 (added)")
            object.__setattr__(self, "labels", _frozen(lab))

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.count

    def label_array(self) -> np.ndarray:
        """Labels, defaulting to all-object."""
        if self.labels is None:
            return np.zeros(self.count, dtype=np.uint8)
        return self.labels

    @property
    def object_mask(self) -> np.ndarray:
        return self.label_array() == OBJECT

    def object_part(self) -> PointCloud:
        return self.select(np.nonzero(self.object_mask)[0])

    def centroid(self) -> np.ndarray:
        require_nonempty(self)
        return self.points.mean(axis=0)

    def with_points(self, points) -> PointCloud:
        return PointCloud(points, self.labels)

    def select(self, idx) -> PointCloud:
        idx = np.asarray(idx)
        labels = None if self.labels is None else self.labels[idx]
        return PointCloud(self.points[idx], labels)

    def append(self, points, label: int = ADDED) -> PointCloud:
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        labels = np.concatenate([self.label_array(), np.full(points.shape[0], label, np.uint8)])
        return PointCloud(np.vstack([self.points, points]), labels)

    def equals(self, other: PointCloud) -> bool:
        """Exact equality of points and (defaulted) labels."""
        return (
            self.count == other.count
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.label_array(), other.label_array())
        )


def require_nonempty(cloud: PointCloud) -> None:
    if cloud.count == 0:
        raise EmptyCloud("operation requires a nonempty point cloud")


@dataclass(frozen=True)
class Aabb:
    min: tuple[float, float, float]
    max: tuple[float, float, float]

    def __post_init__(self):
        if any(lo > hi for lo, hi in zip(self.min, self.max)):
            raise InvalidArgument(f"degenerate box {self.min} > {self.max}")

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.min, dtype=np.float64)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.max, dtype=np.float64)

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def dilate(self, d: float) -> Aabb:
        return Aabb(tuple(self.lo - d), tuple(self.hi + d))

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        return np.all((points >= self.lo - tol) & (points <= self.hi + tol), axis=1)


def aabb(cloud: PointCloud) -> Aabb:
    require_nonempty(cloud)
    lo = cloud.points.min(axis=0)
    hi = cloud.points.max(axis=0)
    return Aabb(tuple(float(v) for v in lo), tuple(float(v) for v in hi))
