import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfspace_depth.geometry import (
    ConvexRegion,
    EmptyRegionError,
    GeometryError,
    Halfplane,
    UnitDirection,
    contains,
    hausdorff_by_vertices,
    hausdorff_distance,
    intersect_halfplane_arrays,
    intersect_halfplanes,
    point_to_region_distance,
    region_from_dict,
    region_subset,
    region_to_dict,
    regular_polygon,
)

from oracles import hull_polygon

UNIT = ConvexRegion.box(0, 0, 1, 1)


def hp(ux, uy, t):
    return Halfplane(UnitDirection(ux, uy), t)


def random_polygon(rng, k=12, center=(0, 0), spread=1.0):
    pts = np.asarray(center) + spread * rng.normal(size=(k, 2))
    return ConvexRegion.from_points(hull_polygon(pts))


polygons = st.integers(0, 2**32 - 1).map(lambda s: random_polygon(np.random.default_rng(s), k=int(3 + s % 20)))


class TestTypes:
    def test_unit_direction_normalised(self):
        u = UnitDirection(3.0, 4.0)
        assert abs(u.ux**2 + u.uy**2 - 1) < 1e-12
        assert (u.ux, u.uy) == pytest.approx((0.6, 0.8))

    def test_zero_direction_rejected(self):
        with pytest.raises(GeometryError):
            UnitDirection(0.0, 0.0)

    def test_halfplane_translation(self):
        h = hp(1, 1, 0.5)
        c = (2.0, -1.0)
        g = h.translate(c)
        assert g.t == pytest.approx(0.5 + (2.0 - 1.0) / math.sqrt(2))
        z = np.array([0.3, 0.1])
        assert h.contains(z) == g.contains(z + c)

    def test_non_finite_offset_rejected(self):
        with pytest.raises(GeometryError):
            hp(1, 0, math.inf)
        with pytest.raises(GeometryError):
            intersect_halfplane_arrays([[1, 0]], [math.nan], (-1, -1, 1, 1))

    def test_json_roundtrip(self):
        r = regular_polygon(1.0, 7)
        assert np.allclose(region_from_dict(region_to_dict(r)).vertices, r.vertices)
        assert region_to_dict(ConvexRegion()) == {"vertices": []}


class TestIntersection:
    def test_axis_box(self):
        r = intersect_halfplanes([hp(1, 0, 1), hp(-1, 0, 1), hp(0, 1, 1), hp(0, -1, 1)], (-5, -5, 5, 5))
        assert len(r) == 4
        assert r.area() == pytest.approx(4.0)
        assert hausdorff_distance(r, ConvexRegion.box(-1, -1, 1, 1)) < 1e-12

    def test_contradiction_is_empty(self):
        assert intersect_halfplanes([hp(1, 0, 0), hp(-1, 0, -1)], (-5, -5, 5, 5)).is_empty

    def test_circumscribed_64gon(self):
        k = 64
        a = 2 * np.pi * np.arange(k) / k
        r = intersect_halfplane_arrays(np.column_stack([np.cos(a), np.sin(a)]), np.ones(k), (-3, -3, 3, 3))
        assert len(r) == k
        # exact area of a regular k-gon circumscribing the unit circle
        assert r.area() == pytest.approx(k * math.tan(math.pi / k), rel=1e-12)
        # the series form pi (1 + tan^2(pi/k) / 3) drops fourth-order terms
        assert r.area() == pytest.approx(math.pi * (1 + math.tan(math.pi / k) ** 2 / 3), abs=1e-5)

    def test_vertex_count_bound(self):
        rng = np.random.default_rng(1)
        a = rng.uniform(0, 2 * np.pi, 40)
        r = intersect_halfplane_arrays(np.column_stack([np.cos(a), np.sin(a)]), rng.uniform(0.5, 1.5, 40), (-9, -9, 9, 9))
        assert len(r) <= 40 + 4

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_result_inside_every_halfplane(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(3, 60))
        a = rng.uniform(0, 2 * np.pi, m)
        u = np.column_stack([np.cos(a), np.sin(a)])
        t = rng.uniform(-0.2, 1.5, m)
        r = intersect_halfplane_arrays(u, t, (-10, -10, 10, 10))
        if not r.is_empty:
            assert np.all(r.vertices @ u.T <= t + 1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_redundant_halfplane_changes_nothing(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(3, 40))
        a = np.sort(rng.uniform(0, 2 * np.pi, m))
        u = np.column_stack([np.cos(a), np.sin(a)])
        t = rng.uniform(0.5, 1.5, m)
        r = intersect_halfplane_arrays(u, t, (-10, -10, 10, 10))
        b = rng.uniform(0, 2 * np.pi)
        ub = np.array([math.cos(b), math.sin(b)])
        slack = float((r.vertices @ ub).max()) + rng.uniform(1e-6, 1.0)
        r2 = intersect_halfplane_arrays(np.vstack([u, ub]), np.append(t, slack), (-10, -10, 10, 10))
        assert r.vertices.shape == r2.vertices.shape
        # same vertex set, the cyclic start may differ
        d = np.linalg.norm(r.vertices[:, None] - r2.vertices[None], axis=-1)
        assert d.min(axis=1).max() <= 1e-10 and d.min(axis=0).max() <= 1e-10

    def test_matches_hull_of_constraints(self):
        # a polygon written as halfplanes comes back unchanged
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = random_polygon(rng)
            v = p.vertices
            e = np.roll(v, -1, axis=0) - v
            n = np.column_stack([e[:, 1], -e[:, 0]])
            n /= np.linalg.norm(n, axis=1, keepdims=True)
            t = (n * v).sum(1)
            r = intersect_halfplane_arrays(n, t, (-20, -20, 20, 20))
            assert hausdorff_distance(r, p) < 1e-10


class TestMembershipAndDistance:
    def test_examples(self):
        assert contains(UNIT, (0.5, 0.5))
        assert not contains(UNIT, (2.0, 0.0))
        assert contains(UNIT, (1.0, 0.5))
        assert point_to_region_distance((0.5, 0.5), UNIT) == 0.0
        assert point_to_region_distance((2.0, 0.5), UNIT) == pytest.approx(1.0)
        assert point_to_region_distance((2.0, 2.0), UNIT) == pytest.approx(math.sqrt(2))

    def test_empty_region_errors(self):
        with pytest.raises(EmptyRegionError):
            point_to_region_distance((0, 0), ConvexRegion())
        with pytest.raises(EmptyRegionError):
            hausdorff_distance(UNIT, ConvexRegion())
        assert not contains(ConvexRegion(), (0, 0))


class TestHausdorff:
    def test_rectangles(self):
        assert hausdorff_distance(UNIT, ConvexRegion.box(0, 0, 2, 1)) == pytest.approx(1.0)

    def test_concentric_disks(self):
        assert abs(hausdorff_distance(regular_polygon(1.0, 256), regular_polygon(0.5, 256)) - 0.5) < 1e-3

    def test_cauchy_squares(self):
        def sq(alpha):
            c = 1 / math.tan(math.pi * alpha)
            return ConvexRegion.box(-c, -c, c, c)

        want = math.sqrt(2) * (1 / math.tan(0.2 * math.pi) - 1 / math.tan(0.25 * math.pi))
        assert hausdorff_distance(sq(0.2), sq(0.25)) == pytest.approx(want, rel=1e-12)

    def test_degenerate_regions(self):
        pt = ConvexRegion(np.array([[0.0, 0.0]]))
        seg = ConvexRegion(np.array([[0.0, 0.0], [1.0, 0.0]]))
        assert hausdorff_distance(pt, seg) == pytest.approx(1.0)
        assert hausdorff_distance(pt, UNIT) == pytest.approx(math.sqrt(2))

    @settings(max_examples=100, deadline=None)
    @given(polygons, polygons)
    def test_support_route_matches_vertex_route(self, a, b):
        assert hausdorff_distance(a, b) == pytest.approx(hausdorff_by_vertices(a, b), rel=1e-9, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(polygons, polygons, polygons)
    def test_metric_axioms(self, a, b, c):
        ab, ba = hausdorff_distance(a, b), hausdorff_distance(b, a)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert hausdorff_distance(a, a) < 1e-12
        assert hausdorff_distance(a, c) <= ab + hausdorff_distance(b, c) + 1e-12

    def test_zero_distance_means_mutual_containment(self):
        rng = np.random.default_rng(7)
        p = random_polygon(rng)
        # the same set with its vertex list rotated and an extra point on an edge
        v = np.roll(p.vertices, 3, axis=0)
        q = ConvexRegion(np.insert(v, 1, 0.5 * (v[0] + v[1]), axis=0))
        assert hausdorff_distance(p, q) < 1e-12
        assert region_subset(p, q, 1e-10) and region_subset(q, p, 1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_nested_monotonicity(self, seed):
        # A in B in C implies rho_H(A, C) >= rho_H(B, C)
        rng = np.random.default_rng(seed)
        c = random_polygon(rng)
        centre = c.vertices.mean(axis=0)
        s1, s2 = np.sort(rng.uniform(0.05, 1.0, 2))
        b = ConvexRegion(centre + s2 * (c.vertices - centre))
        a = ConvexRegion(centre + s1 * (c.vertices - centre))
        assert region_subset(a, b) and region_subset(b, c)
        assert hausdorff_distance(a, c) >= hausdorff_distance(b, c) - 1e-12
