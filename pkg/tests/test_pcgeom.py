import itertools

import numpy as np
import pytest

from cpccd.errors import EmptyCloud, InvalidArgument
from cpccd.pcgeom import (
    ADDED,
    OBJECT,
    PRIMITIVES,
    Aabb,
    PointCloud,
    PrimitiveKind,
    RngStream,
    aabb,
    farthest_point_sample,
    project_to_plane,
    require_nonempty,
    rotate,
    rotation_matrix,
    sample_primitive,
    scale,
)
from cpccd.pcgeom.ops import fps_indices


def pairwise(p):
    return np.linalg.norm(p[:, None] - p[None], axis=-1)


class TestPointCloud:
    def test_rejects_bad_shape_and_nonfinite(self):
        with pytest.raises(InvalidArgument):
            PointCloud(np.zeros((4, 2)))
        with pytest.raises(InvalidArgument):
            PointCloud(np.array([[0.0, np.nan, 0.0]]))

    def test_label_validation(self):
        with pytest.raises(InvalidArgument):
            PointCloud(np.zeros((2, 3)), np.array([0]))
        with pytest.raises(InvalidArgument):
            PointCloud(np.zeros((2, 3)), np.array([0, 7]))

    def test_arrays_are_read_only(self):
        c = PointCloud(np.zeros((3, 3)))
        with pytest.raises(ValueError):
            c.points[0, 0] = 1.0

    def test_append_keeps_prefix_and_labels(self):
        c = PointCloud(np.arange(9.0).reshape(3, 3))
        d = c.append(np.ones((2, 3)))
        np.testing.assert_array_equal(d.points[:3], c.points)
        assert d.label_array().tolist() == [OBJECT] * 3 + [ADDED] * 2
        assert d.object_part().equals(PointCloud(c.points, np.zeros(3, dtype=np.uint8)))

    def test_empty_cloud_guard(self):
        with pytest.raises(EmptyCloud):
            require_nonempty(PointCloud(np.empty((0, 3))))

    def test_aabb(self):
        c = PointCloud(np.array([[0, 0, 0], [1, 2, 3], [-1, 1, 0.5]], dtype=float))
        box = aabb(c)
        np.testing.assert_array_equal(box.lo, [-1, 0, 0])
        np.testing.assert_array_equal(box.extent, [2, 2, 3])
        assert box.contains(c.points).all()
        assert not box.contains(np.array([[0, 0, 3.1]]))[0]
        assert box.dilate(0.2).contains(np.array([[0, 0, 3.1]]))[0]
        with pytest.raises(InvalidArgument):
            Aabb(np.array([1.0, 0, 0]), np.array([0.0, 0, 0]))


class TestTransforms:
    @pytest.mark.parametrize("angles", [(0, 0, 0), (10, 0, 0), (3, 7, 9), (90, 45, 30)])
    def test_rotation_is_orthonormal(self, angles):
        r = rotation_matrix(*angles)
        np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-14)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-14)

    def test_rotation_about_z_by_90(self):
        r = rotation_matrix(0, 0, 90)
        np.testing.assert_allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-15)

    def test_rotate_keeps_centroid_and_distances(self, small_partial):
        out = rotate(small_partial, 4, 8, 9)
        np.testing.assert_allclose(out.centroid(), small_partial.centroid(), atol=1e-14)
        np.testing.assert_allclose(pairwise(out.points), pairwise(small_partial.points), atol=1e-12)

    def test_zero_rotation_is_identity(self, small_partial):
        assert rotate(small_partial, 0, 0, 0) is small_partial

    def test_scale(self, small_partial):
        out = scale(small_partial, 1.7)
        np.testing.assert_allclose(pairwise(out.points), 1.7 * pairwise(small_partial.points),
                                   rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(out.centroid(), small_partial.centroid(), atol=1e-14)
        assert scale(small_partial, 1.0) is small_partial
        with pytest.raises(InvalidArgument):
            scale(small_partial, 0.0)

    def test_project_to_plane(self, small_partial):
        out = project_to_plane(small_partial, [0, 2, 0], -1.0)
        np.testing.assert_allclose(out.points[:, 1], -0.5, atol=1e-15)
        np.testing.assert_array_equal(out.points[:, [0, 2]], small_partial.points[:, [0, 2]])
        with pytest.raises(InvalidArgument):
            project_to_plane(small_partial, [0, 0, 0], 0)


def fps_oracle(points, first, k):
    chosen = [first]
    best = [float("inf")] * len(points)
    for _ in range(k - 1):
        last = points[chosen[-1]]
        for i, p in enumerate(points):
            d = sum((float(a) - float(b)) ** 2 for a, b in zip(p, last))
            best[i] = min(best[i], d)
        cand = [i for i in range(len(points)) if i not in chosen]
        chosen.append(max(cand, key=lambda i: (best[i], -i)))
    return chosen


class TestFarthestPointSampling:
    @pytest.mark.parametrize("backend", ["python", "cython"])
    def test_matches_greedy_oracle(self, backend, small_partial):
        from cpccd import _kernels
        if backend not in _kernels.BACKENDS:
            pytest.skip("extension not built")
        pts = small_partial.points[:80]
        got = fps_indices(pts, 25, 7, backend=backend).tolist()
        assert got == fps_oracle(pts, 7, 25)

    def test_distinct_and_deterministic(self, partial):
        a = farthest_point_sample(partial, 128, RngStream(5))
        b = farthest_point_sample(partial, 128, RngStream(5))
        assert a.equals(b)
        assert len({tuple(p) for p in a.points}) == 128

    def test_duplicates_never_chosen_twice(self):
        pts = np.repeat(np.eye(3), 4, axis=0)
        idx = fps_indices(pts, 3, 0)
        assert sorted(pts[idx].argmax(axis=1).tolist()) == [0, 1, 2]

    def test_k_bounds(self, small_partial):
        with pytest.raises(InvalidArgument):
            farthest_point_sample(small_partial, 0, RngStream(0))
        with pytest.raises(InvalidArgument):
            farthest_point_sample(small_partial, small_partial.count + 1, RngStream(0))

    def test_min_separation_beats_random(self, partial):
        sub = farthest_point_sample(partial, 64, RngStream(0)).points
        rnd = partial.points[np.random.default_rng(0).choice(partial.count, 64, replace=False)]
        sep = lambda p: np.min(pairwise(p) + np.eye(len(p)) * 9)
        assert sep(sub) > sep(rnd)


class TestRngStream:
    def test_same_key_same_draws(self):
        a, b = RngStream(3, "x", "E_OI"), RngStream(3, "x", "E_OI")
        assert a.seed == b.seed
        np.testing.assert_array_equal(a.random(5), b.random(5))

    def test_keys_are_independent(self):
        seeds = {RngStream(s, o, k).seed for s, o, k in itertools.product(
            (0, 1), ("a", "b"), ("E_OI", "BI_W"))}
        assert len(seeds) == 8

    def test_child_is_keyed_not_positional(self):
        parent = RngStream(0, "obj")
        parent.random(100)
        assert parent.child("t").seed == RngStream(0, "obj").child("t").seed
        assert parent.child("t").seed != parent.child("u").seed

    def test_unit_vectors_and_rotations(self):
        r = RngStream(9)
        v = r.unit_vectors(50)
        np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-14)
        m = r.rotation_matrix()
        np.testing.assert_allclose(m @ m.T, np.eye(3), atol=1e-14)
        assert np.linalg.det(m) == pytest.approx(1.0)


class TestPrimitives:
    def test_twelve_shapes(self):
        assert len(PRIMITIVES) == 12

    @pytest.mark.parametrize("kind", list(PrimitiveKind))
    def test_sample_count_and_bounds(self, kind):
        c = sample_primitive(kind, 300, RngStream(1, kind.value))
        assert c.count == 300
        assert np.all(np.abs(c.points) <= 0.5 + 1e-12)

    @pytest.mark.parametrize("kind", ["square", "circle", "hexagon", "ellipse"])
    def test_planar_shapes_lie_in_z0(self, kind):
        c = sample_primitive(kind, 100, RngStream(2))
        np.testing.assert_array_equal(c.points[:, 2], 0.0)

    def test_sphere_on_surface(self):
        c = sample_primitive("sphere", 200, RngStream(4))
        np.testing.assert_allclose(np.linalg.norm(c.points, axis=1), 0.5, atol=1e-12)

    def test_cube_on_faces(self):
        p = sample_primitive("cube", 200, RngStream(4)).points
        assert np.all(np.isclose(np.abs(p).max(axis=1), 0.5, atol=1e-12))

    def test_rejects_zero(self):
        with pytest.raises(InvalidArgument):
            sample_primitive("cube", 0, RngStream(0))
