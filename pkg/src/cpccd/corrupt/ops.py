"""The eight corruptions.

Every ``apply_*`` is a pure function of ``(cloud, spec, rng key, recipe)``.
Geometry (bounding box, density, occlusion) is always measured on the
object-labelled points of the input; points appended by external corruptions
carry the ``ADDED`` label and existing points keep their order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cpccd.corrupt.recipe import Recipe
from cpccd.corrupt.spec import (
    RCC_ORDER,
    CorruptionKind,
    CorruptionSpec,
    round_half_up,
    sample_params,
    validate,
)
from cpccd.errors import InvalidArgument
from cpccd.pcgeom import (
    ADDED,
    PRIMITIVES,
    Aabb,
    NnIndex,
    PointCloud,
    aabb,
    mean_nn_spacing,
    require_nonempty,
    rotate,
    sample_primitive,
    scale,
)
from cpccd.pcgeom.rng import RngStream

K = CorruptionKind
# spacing used when a cloud is too small to have a meaningful NN spacing
_FALLBACK_SPACING = 0.02


@dataclass(frozen=True)
class CorruptionStats:
    added: int = 0
    removed: int = 0
    displaced: int = 0
    fallback_placements: int = 0

    def __add__(self, other: CorruptionStats) -> CorruptionStats:
        return CorruptionStats(
            self.added + other.added,
            self.removed + other.removed,
            self.displaced + other.displaced,
            self.fallback_placements + other.fallback_placements,
        )


@dataclass(frozen=True)
class CorruptionResult:
    cloud: PointCloud
    spec: CorruptionSpec
    stats: CorruptionStats
    # occlusion radius actually used by BI_W / BI_F, None otherwise
    r_occ: float | None = None
    steps: tuple[CorruptionResult, ...] = field(default=())

    def __post_init__(self):
        validate(self.spec)


def _labelled(cloud: PointCloud) -> PointCloud:
    return cloud if cloud.labels is not None else PointCloud(cloud.points, cloud.label_array())


def _check(cloud: PointCloud, spec: CorruptionSpec, kind: CorruptionKind):
    if spec.kind is not kind:
        raise InvalidArgument(f"expected a {kind.value} spec, got {spec.kind.value}")
    validate(spec)
    require_nonempty(cloud)
    return _labelled(cloud)


def _split_evenly(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _spacing(points: np.ndarray) -> float:
    s = mean_nn_spacing(points)
    return s if s > 0 else _FALLBACK_SPACING


# -- primitive placement -----------------------------------------------------

def _min_dist(index: NnIndex, pts: np.ndarray) -> float:
    _, d2 = index.query_sq(pts)
    return math.sqrt(float(d2.min()))


def _place_at_distance(index: NnIndex, obj: np.ndarray, local: np.ndarray, nd: float,
                       rng: RngStream) -> np.ndarray:
    """Translate ``local`` so its closest approach to the object is ``nd``.

    One primitive sample is pinned to a random object point, then the shape
    slides along a random direction; the closest-approach distance is
    continuous in the slide, so bisection finds the separation. The returned
    placement satisfies ``nd <= distance <= nd + 1e-12``.
    """
    anchor = obj[int(rng.integers(obj.shape[0]))]
    pin = local[int(rng.integers(local.shape[0]))]
    base = local - pin + anchor
    u = rng.unit_vectors(1)[0]
    lo, hi = 0.0, nd
    while _min_dist(index, base + hi * u) < nd:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _min_dist(index, base + mid * u) < nd:
            lo = mid
        else:
            hi = mid
    return base + hi * u


def _flat_fallback(obj: np.ndarray, local: np.ndarray, nd: float, rng: RngStream) -> np.ndarray:
    """Shape flattened onto a plane ``nd`` outside an extreme object point.

    Always feasible: every sample sits at distance >= nd from the object along
    the chosen axis, and its footprint is at most ``nd`` wide so it stays in
    the ``nd``-dilated box.
    """
    axis = int(rng.integers(3))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    extreme = int(np.argmax(sign * obj[:, axis]))
    anchor = obj[extreme].copy()
    anchor[axis] += sign * nd
    flat = local.copy()
    flat[:, axis] = 0.0
    span = float(np.max(flat.max(axis=0) - flat.min(axis=0)))
    if span > 0:
        flat *= 0.5 * nd / span
    pin = flat[int(rng.integers(flat.shape[0]))]
    out = flat - pin + anchor
    out[:, axis] = anchor[axis]
    return out


def place_primitives(obj: np.ndarray, counts: list[int], size: float, nd: float,
                     rng: RngStream, bounds: Aabb | None, attempts: int):
    """Sample and place one random shape per entry of ``counts``.

    Returns a list of point arrays and the number of placements that needed
    the flat fallback.
    """
    index = NnIndex(obj)
    placed, fallbacks = [], 0
    for j, n in enumerate(counts):
        if n == 0:
            placed.append(np.empty((0, 3)))
            continue
        sub = rng.child(f"shape{j}")
        kind = PRIMITIVES[int(sub.integers(len(PRIMITIVES)))]
        canon = sample_primitive(kind, n, sub).points
        result = None
        for attempt in range(attempts):
            # shrink after every 8 failed tries so crowded boxes still admit a shape
            shrink = 0.7 ** (attempt // 8)
            local = canon @ sub.rotation_matrix().T * (size * shrink)
            cand = _place_at_distance(index, obj, local, nd, sub)
            if bounds is None or bool(np.all(bounds.contains(cand, tol=1e-12))):
                result = cand
                break
        if result is None:
            result = _flat_fallback(obj, canon @ sub.rotation_matrix().T, nd, sub)
            fallbacks += 1
        placed.append(result)
    return placed, fallbacks


# -- background patches ------------------------------------------------------

def _jittered_grid(lo: np.ndarray, hi: np.ndarray, spacing: float, max_points: int,
                   rng: RngStream) -> np.ndarray:
    """One uniform sample per cell of a grid over the 2D box [lo, hi]."""
    ext = np.maximum(hi - lo, 0.0)
    counts = np.maximum(1, np.ceil(ext / spacing)).astype(int)
    while counts[0] * counts[1] > max_points:
        spacing *= 1.1
        counts = np.maximum(1, np.ceil(ext / spacing)).astype(int)
    cell = ext / counts
    ii, jj = np.meshgrid(np.arange(counts[0]), np.arange(counts[1]), indexing="ij")
    base = np.column_stack([ii.ravel(), jj.ravel()]).astype(np.float64)
    jitter = rng.random((base.shape[0], 2))
    return lo + (base + jitter) * cell


def _background_patch(obj: np.ndarray, axis: int, coord: float, lo2: np.ndarray, hi2: np.ndarray,
                      recipe: Recipe, rng: RngStream) -> tuple[np.ndarray, float]:
    """Planar patch ``x[axis] = coord`` minus points hidden behind the object."""
    spacing = _spacing(obj)
    r_occ = recipe.r_occ_factor * spacing
    others = [d for d in range(3) if d != axis]
    grid = _jittered_grid(lo2, hi2, spacing / math.sqrt(recipe.wall_density),
                          recipe.wall_max_points, rng)
    patch = np.empty((grid.shape[0], 3))
    patch[:, axis] = coord
    patch[:, others[0]] = grid[:, 0]
    patch[:, others[1]] = grid[:, 1]
    shadow = obj.copy()
    shadow[:, axis] = coord
    _, d = NnIndex(shadow).query_many(patch)
    return patch[d > r_occ], r_occ


# -- the corruptions ---------------------------------------------------------

def apply_eoi(cloud: PointCloud, spec: CorruptionSpec, rng: RngStream,
              recipe: Recipe | None = None) -> CorruptionResult:
    """External object interference: shapes near, but clear of, the object."""
    recipe = recipe or Recipe()
    cloud = _check(cloud, spec, K.E_OI)
    obj = cloud.points[cloud.object_mask]
    n_t = obj.shape[0]
    total = round_half_up(spec.n_points * n_t)
    box = aabb(PointCloud(obj))
    size = recipe.primitive_scale * float(box.extent.max())
    shapes, fallbacks = place_primitives(
        obj, _split_evenly(total, spec.n_objects), size, spec.distance, rng,
        box.dilate(spec.distance), recipe.placement_attempts,
    )
    added = np.vstack(shapes) if shapes else np.empty((0, 3))
    return CorruptionResult(
        cloud.append(added, ADDED), spec,
        CorruptionStats(added=added.shape[0], fallback_placements=fallbacks),
    )


def apply_biw(cloud: PointCloud, spec: CorruptionSpec, rng: RngStream,
              recipe: Recipe | None = None) -> CorruptionResult:
    """Wall behind the object, parallel to its largest bounding-box face."""
    recipe = recipe or Recipe()
    cloud = _check(cloud, spec, K.BI_W)
    obj = cloud.points[cloud.object_mask]
    box = aabb(PointCloud(obj))
    ext = box.extent
    areas = np.array([ext[1] * ext[2], ext[0] * ext[2], ext[0] * ext[1]])
    axis = int(np.argmax(areas))
    behind = rng.random() < 0.5
    coord = box.hi[axis] + spec.distance if behind else box.lo[axis] - spec.distance
    others = [d for d in range(3) if d != axis]
    wall, r_occ = _background_patch(obj, axis, coord, box.lo[others], box.hi[others], recipe, rng)
    return CorruptionResult(
        cloud.append(wall, ADDED), spec, CorruptionStats(added=wall.shape[0]), r_occ=r_occ,
    )


def floor_visible(obj: np.ndarray, recipe: Recipe) -> bool:
    """True when some object point falls in the bottom quarter of the reference frame."""
    lo, hi = recipe.floor_frame
    return bool(np.any(obj[:, 1] <= lo + 0.25 * (hi - lo)))


def apply_bif(cloud: PointCloud, spec: CorruptionSpec, rng: RngStream,
              recipe: Recipe | None = None) -> CorruptionResult:
    """Floor patch under the object, only if the object's bottom is in view."""
    recipe = recipe or Recipe()
    cloud = _check(cloud, spec, K.BI_F)
    obj = cloud.points[cloud.object_mask]
    if not floor_visible(obj, recipe):
        return CorruptionResult(cloud, spec, CorruptionStats())
    box = aabb(PointCloud(obj))
    lo2, hi2 = box.lo[[0, 2]], box.hi[[0, 2]]
    center, half = 0.5 * (lo2 + hi2), 0.5 * (hi2 - lo2) * (1.0 + recipe.floor_margin)
    floor, r_occ = _background_patch(obj, 1, box.lo[1], center - half, center + half, recipe, rng)
    return CorruptionResult(
        cloud.append(floor, ADDED), spec, CorruptionStats(added=floor.shape[0]), r_occ=r_occ,
    )


def apply_oboo(cloud: PointCloud, spec: CorruptionSpec, rng: RngStream,
               recipe: Recipe | None = None) -> CorruptionResult:
    """Occlusion: drop the object points nearest to shapes placed beside it."""
    recipe = recipe or Recipe()
    cloud = _check(cloud, spec, K.O_BOO)
    obj_idx = np.nonzero(cloud.object_mask)[0]
    obj = cloud.points[obj_idx]
    n_t = obj.shape[0]
    k = round_half_up(spec.n_points * n_t)
    if k >= n_t:
        raise InvalidArgument(f"O_BOO would remove {k} of {n_t} points")
    size = recipe.primitive_scale * float(aabb(PointCloud(obj)).extent.max())
    occluders, fallbacks = place_primitives(
        obj, [recipe.occluder_samples] * spec.n_objects, size, spec.distance, rng,
        None, recipe.placement_attempts,
    )
    removed = np.zeros(n_t, dtype=bool)
    for occ, quota in zip(occluders, _split_evenly(k, spec.n_objects)):
        if quota == 0:
            continue
        _, d2 = NnIndex(occ).query_sq(obj)
        d2 = np.where(removed, np.inf, d2)
        order = np.lexsort((np.arange(n_t), d2))
        removed[order[:quota]] = True
    keep = np.ones(cloud.count, dtype=bool)
    keep[obj_idx[removed]] = False
    return CorruptionResult(
        cloud.select(np.nonzero(keep)[0]), spec,
        CorruptionStats(removed=int(removed.sum()), fallback_placements=fallbacks),
    )


def apply_djt(cloud: PointCloud, spec: CorruptionSpec, rng: RngStream,
              recipe: Recipe | None = None) -> CorruptionResult:
    """Jitter a fraction of points, then drag them along one shared direction."""
    cloud = _check(cloud, spec, K.D_JT)
    obj_idx = np.nonzero(cloud.object_mask)[0]
    n_sel = round_half_up(spec.phi * len(obj_idx)) if spec.phi else 0
    if n_sel == 0:
        return CorruptionResult(cloud, spec, CorruptionStats())
    sel = np.sort(rng.choice(obj_idx, size=n_sel, replace=False))
    direction = rng.unit_vectors(1)[0]
    jitter = rng.unit_vectors(n_sel) * rng.uniform(0.0, spec.jitter, n_sel)[:, None]
    trail = rng.uniform(0.0, spec.trail, n_sel)[:, None] * direction
    pts = cloud.points.copy()
    pts[sel] += jitter + trail
    return CorruptionResult(cloud.with_points(pts), spec, CorruptionStats(displaced=n_sel))


def apply_tr(cloud: PointCloud, spec: CorruptionSpec, rng: RngStream = None,
             recipe: Recipe | None = None) -> CorruptionResult:
    cloud = _check(cloud, spec, K.T_R)
    out = rotate(cloud, *spec.theta)
    moved = 0 if out is cloud else cloud.count
    return CorruptionResult(out, spec, CorruptionStats(displaced=moved))


def apply_is(cloud: PointCloud, spec: CorruptionSpec, rng: RngStream = None,
             recipe: Recipe | None = None) -> CorruptionResult:
    cloud = _check(cloud, spec, K.I_S)
    out = scale(cloud, spec.scale)
    moved = 0 if out is cloud else cloud.count
    return CorruptionResult(out, spec, CorruptionStats(displaced=moved))


def apply_rcc(cloud: PointCloud, spec: CorruptionSpec, rng: RngStream,
              recipe: Recipe | None = None) -> CorruptionResult:
    """Apply each member of the subset in the fixed canonical order.

    Member ``k`` draws from ``rng.child(k.value)``, so the result can be
    replayed step by step from the recorded sub-specs.
    """
    cloud = _check(cloud, spec, K.R_CC)
    steps = []
    stats = CorruptionStats()
    for kind in RCC_ORDER:
        if kind not in spec.subset:
            continue
        res = APPLY[kind](cloud, spec.sub_spec(kind), rng.child(kind.value), recipe)
        steps.append(res)
        stats = stats + res.stats
        cloud = res.cloud
    r_occ = next((s.r_occ for s in reversed(steps) if s.r_occ is not None), None)
    return CorruptionResult(cloud, spec, stats, r_occ=r_occ, steps=tuple(steps))


APPLY = {
    K.E_OI: apply_eoi,
    K.BI_W: apply_biw,
    K.BI_F: apply_bif,
    K.O_BOO: apply_oboo,
    K.D_JT: apply_djt,
    K.T_R: apply_tr,
    K.I_S: apply_is,
    K.R_CC: apply_rcc,
}


def apply(cloud: PointCloud, spec: CorruptionSpec, rng: RngStream,
          recipe: Recipe | None = None) -> CorruptionResult:
    return APPLY[spec.kind](cloud, spec, rng, recipe)


def corrupt(cloud: PointCloud, kind: CorruptionKind | str, rng: RngStream,
            recipe: Recipe | None = None) -> CorruptionResult:
    """Sample parameters for ``kind`` and apply them.

    Parameters come from ``rng.child("params")`` and the geometry from
    ``rng.child("apply")``.
    """
    kind = CorruptionKind(kind)
    spec = sample_params(kind, rng.child("params"), recipe)
    return apply(cloud, spec, rng.child("apply"), recipe)


__all__ = [
    "APPLY", "CorruptionResult", "CorruptionStats", "apply", "apply_bif", "apply_biw",
    "apply_djt", "apply_eoi", "apply_is", "apply_oboo", "apply_rcc", "apply_tr", "corrupt",
    "floor_visible", "place_primitives",
]
