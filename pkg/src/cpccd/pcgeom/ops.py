"""Rigid transforms, plane projection and farthest point sampling."""
from __future__ import annotations

import math

import numpy as np

from cpccd import _kernels
from cpccd.errors import InvalidArgument
from cpccd.pcgeom.cloud import PointCloud, require_nonempty
from cpccd.pcgeom.rng import RngStream


def rotation_matrix(theta_x: float, theta_y: float, theta_z: float) -> np.ndarray:
    """``R_z @ R_y @ R_x`` for angles in degrees."""
    ax, ay, az = (math.radians(t) for t in (theta_x, theta_y, theta_z))
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]], dtype=np.float64)
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]], dtype=np.float64)
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]], dtype=np.float64)
    return rz @ ry @ rx


def rotate(cloud: PointCloud, theta_x: float, theta_y: float, theta_z: float) -> PointCloud:
    """Rotate about the centroid; zero angles return the input unchanged."""
    if cloud.count == 0 or (theta_x == 0 and theta_y == 0 and theta_z == 0):
        return cloud
    c = cloud.centroid()
    r = rotation_matrix(theta_x, theta_y, theta_z)
    return cloud.with_points((cloud.points - c) @ r.T + c)


def scale(cloud: PointCloud, s: float) -> PointCloud:
    """Scale by ``s`` about the centroid."""
    if not s > 0:
        raise InvalidArgument(f"scale factor must be > 0, got {s}")
    if cloud.count == 0 or s == 1:
        return cloud
    c = cloud.centroid()
    return cloud.with_points(c + s * (cloud.points - c))


def project_to_plane(cloud: PointCloud, normal, offset: float) -> PointCloud:
    """Orthogonal projection onto the plane ``normal . p = offset``."""
    n = np.asarray(normal, dtype=np.float64).reshape(3)
    norm = float(np.linalg.norm(n))
    if norm == 0.0:
        raise InvalidArgument("plane normal must be nonzero")
    n = n / norm
    off = float(offset) / norm
    resid = cloud.points @ n - off
    return cloud.with_points(cloud.points - resid[:, None] * n[None, :])


def farthest_point_sample(cloud: PointCloud, k: int, rng: RngStream,
                          backend: str | None = None) -> PointCloud:
    """Greedy max-min subset of ``k`` points in selection order.

    The first point is drawn from ``rng``; every later pick maximizes the
    distance to the already chosen set, ties resolved to the lowest index.
    """
    require_nonempty(cloud)
    if not 1 <= k <= cloud.count:
        raise InvalidArgument(f"k must be in [1, {cloud.count}], got {k}")
    first = int(rng.integers(cloud.count))
    idx = _kernels.get(backend).farthest_point_sample(cloud.points, first, int(k))
    return cloud.select(idx)


def fps_indices(points: np.ndarray, k: int, first: int, backend: str | None = None) -> np.ndarray:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    return _kernels.get(backend).farthest_point_sample(pts, int(first), int(k))
