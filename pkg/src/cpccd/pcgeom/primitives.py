"""Uniform surface sampling of the twelve interference shapes.

Every shape sits in a canonical pose: centered on the origin with its largest
bounding extent equal to 1. Planar shapes lie in z = 0 and are filled regions;
solid shapes are sampled on their boundary surface.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from cpccd.errors import InvalidArgument
from cpccd.pcgeom.cloud import PointCloud
from cpccd.pcgeom.rng import RngStream


class PrimitiveKind(str, enum.Enum):
    CIRCLE = "circle"
    SQUARE = "square"
    RECTANGLE = "rectangle"
    TRIANGLE = "triangle"
    ELLIPSE = "ellipse"
    HEXAGON = "hexagon"
    DIAMOND = "diamond"
    PARALLELOGRAM = "parallelogram"
    CYLINDER = "cylinder"
    SPHERE = "sphere"
    CUBE = "cube"
    PYRAMID = "pyramid"


PRIMITIVES = tuple(PrimitiveKind)


def _fan(poly):
    """Triangle fan of a convex planar polygon given as 2D vertices."""
    v = np.array([(x, y, 0.0) for x, y in poly])
    return np.stack([np.stack([v[0], v[i], v[i + 1]]) for i in range(1, len(v) - 1)])


_H = math.sqrt(3) / 2
_POLYGONS = {
    PrimitiveKind.SQUARE: [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)],
    PrimitiveKind.RECTANGLE: [(-0.5, -0.25), (0.5, -0.25), (0.5, 0.25), (-0.5, 0.25)],
    PrimitiveKind.TRIANGLE: [(-0.5, -_H / 2), (0.5, -_H / 2), (0.0, _H / 2)],
    PrimitiveKind.HEXAGON: [
        (0.5 * math.cos(math.pi / 3 * i), 0.5 * math.sin(math.pi / 3 * i)) for i in range(6)
    ],
    PrimitiveKind.DIAMOND: [(0.5, 0.0), (0.0, 0.3), (-0.5, 0.0), (0.0, -0.3)],
    PrimitiveKind.PARALLELOGRAM: [(-0.5, -0.25), (0.2, -0.25), (0.5, 0.25), (-0.2, 0.25)],
}


def _pyramid_tris():
    b = [(-0.5, -0.5, -0.5), (0.5, -0.5, -0.5), (0.5, 0.5, -0.5), (-0.5, 0.5, -0.5)]
    apex = (0.0, 0.0, 0.5)
    tris = [(b[0], b[1], b[2]), (b[0], b[2], b[3])]
    tris += [(b[i], b[(i + 1) % 4], apex) for i in range(4)]
    return np.array(tris, dtype=np.float64)


def sample_triangles(tris: np.ndarray, n: int, rng: RngStream) -> np.ndarray:
    """Area-weighted uniform samples on a triangle soup of shape (T, 3, 3)."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    which = rng.choice(len(tris), size=n, p=areas / areas.sum())
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1
    u[flip] = 1 - u[flip]
    v[flip] = 1 - v[flip]
    a, b, c = a[which], b[which], c[which]
    return a + u[:, None] * (b - a) + v[:, None] * (c - a)


def _disk(n, rng, rx, ry):
    r = np.sqrt(rng.random(n))
    t = rng.uniform(0.0, 2 * math.pi, n)
    return np.column_stack([rx * r * np.cos(t), ry * r * np.sin(t), np.zeros(n)])


def _sphere(n, rng):
    return 0.5 * rng.unit_vectors(n)


def _cylinder(n, rng):
    # lateral area pi*2r*h = pi, each cap pi*r^2 = pi/4
    part = rng.choice(3, size=n, p=[2 / 3, 1 / 6, 1 / 6])
    t = rng.uniform(0.0, 2 * math.pi, n)
    out = np.empty((n, 3))
    side = part == 0
    out[side, 0] = 0.5 * np.cos(t[side])
    out[side, 1] = 0.5 * np.sin(t[side])
    out[side, 2] = rng.uniform(-0.5, 0.5, int(side.sum()))
    caps = ~side
    r = 0.5 * np.sqrt(rng.random(int(caps.sum())))
    out[caps, 0] = r * np.cos(t[caps])
    out[caps, 1] = r * np.sin(t[caps])
    out[caps, 2] = np.where(part[caps] == 1, 0.5, -0.5)
    return out


def _cube(n, rng):
    face = rng.integers(0, 6, n)
    uv = rng.uniform(-0.5, 0.5, (n, 2))
    axis = face // 2
    sign = np.where(face % 2 == 0, -0.5, 0.5)
    out = np.empty((n, 3))
    for ax in range(3):
        m = axis == ax
        others = [d for d in range(3) if d != ax]
        out[m, ax] = sign[m]
        out[m, others[0]] = uv[m, 0]
        out[m, others[1]] = uv[m, 1]
    return out


def sample_primitive(kind: PrimitiveKind | str, n: int, rng: RngStream) -> PointCloud:
    kind = PrimitiveKind(kind)
    if n < 1:
        raise InvalidArgument(f"need n >= 1 samples, got {n}")
    if kind is PrimitiveKind.CIRCLE:
        pts = _disk(n, rng, 0.5, 0.5)
    elif kind is PrimitiveKind.ELLIPSE:
        pts = _disk(n, rng, 0.5, 0.25)
    elif kind in _POLYGONS:
        pts = sample_triangles(_fan(_POLYGONS[kind]), n, rng)
    elif kind is PrimitiveKind.SPHERE:
        pts = _sphere(n, rng)
    elif kind is PrimitiveKind.CYLINDER:
        pts = _cylinder(n, rng)
    elif kind is PrimitiveKind.CUBE:
        pts = _cube(n, rng)
    else:
        pts = sample_triangles(_pyramid_tris(), n, rng)
    return PointCloud(pts)
