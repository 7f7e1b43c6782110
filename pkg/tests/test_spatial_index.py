import math

import numpy as np
import pytest

from potgrid.geodesy import GeoPoint, orthodromic_distance
from potgrid.kernels import kernel_eval, make_kernel
from potgrid.spatial_index import (
    DEFAULT_LEAF_CAPACITY,
    MAX_DEPTH,
    CutoffPolicy,
    StockPoint,
    build_quadtree,
    evaluate_potential,
    evaluate_potential_instrumented,
    min_distance_to_node,
)


def random_cloud(n, seed=99, bbox=(-5.0, 40.0, 12.0, 52.0), integer_stocks=False):
    rng = np.random.default_rng(seed)
    west, south, east, north = bbox
    lons = rng.uniform(west, east, n)
    lats = rng.uniform(south, north, n)
    stocks = rng.integers(0, 500, n).astype(float) if integer_stocks else rng.uniform(0.0, 500.0, n)
    return [
        StockPoint(id=f"u{i}", location=GeoPoint(lat=float(lats[i]), lon=float(lons[i])), stocks={"s": float(stocks[i])})
        for i in range(n)
    ]


def walk(node):
    yield node
    for c in node.children:
        yield from walk(c)


def subtree_entries(node):
    if node.is_leaf:
        yield from node.entries
    else:
        for c in node.children:
            yield from subtree_entries(c)


def brute_potential(m, points, k):
    return sum(p.stocks["s"] * kernel_eval(k, orthodromic_distance(m, p.location)) for p in points)


class TestStockPoint:
    def test_rejects_negative_stock(self):
        with pytest.raises(ValueError, match="must be >= 0"):
            StockPoint(id="x", location=GeoPoint(lat=0.0, lon=0.0), stocks={"pop": -1.0})

    def test_rejects_nan_stock(self):
        with pytest.raises(ValueError):
            StockPoint(id="x", location=GeoPoint(lat=0.0, lon=0.0), stocks={"pop": float("nan")})

    def test_policy_rejects_negative_epsilon(self):
        with pytest.raises(ValueError):
            CutoffPolicy(epsilon=-1e-3)


class TestTreeStructure:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            build_quadtree([], "s")

    def test_rejects_missing_variable(self):
        pts = random_cloud(5)
        with pytest.raises(ValueError, match="missing variable"):
            build_quadtree(pts, "nope")

    def test_rejects_bad_capacity(self):
        with pytest.raises(ValueError):
            build_quadtree(random_cloud(5), "s", leaf_capacity=0)

    def test_parent_total_is_exact_child_sum(self):
        root = build_quadtree(random_cloud(700), "s")
        for node in walk(root):
            if not node.is_leaf:
                total = 0.0
                for c in node.children:
                    total += c.total_stock
                assert node.total_stock == total  # exact: same order, same op

    def test_point_and_stock_conservation(self):
        pts = random_cloud(500, integer_stocks=True)
        root = build_quadtree(pts, "s")
        assert root.count == 500
        assert root.total_stock == sum(p.stocks["s"] for p in pts)  # integers: exact
        assert len(list(subtree_entries(root))) == 500

    def test_leaves_respect_capacity(self):
        root = build_quadtree(random_cloud(900), "s", leaf_capacity=4)
        def depth_walk(node, d):
            yield node, d
            for c in node.children:
                yield from depth_walk(c, d + 1)
        for node, d in depth_walk(root, 0):
            if node.is_leaf:
                assert len(node.entries) <= 4 or d >= MAX_DEPTH

    def test_leaf_bbox_contains_entries(self):
        root = build_quadtree(random_cloud(400), "s")
        for node in walk(root):
            south, west, north, east = node.bbox
            for g, _ in node.entries:
                assert south <= g.lat <= north
                assert west <= g.lon <= east

    def test_children_in_fixed_quadrant_order(self):
        root = build_quadtree(random_cloud(400), "s")
        for node in walk(root):
            if node.is_leaf:
                continue
            south, west, north, east = node.bbox
            mid_lat, mid_lon = 0.5 * (south + north), 0.5 * (west + east)
            expected = [
                (south, west, mid_lat, mid_lon),
                (south, mid_lon, mid_lat, east),
                (mid_lat, west, north, mid_lon),
                (mid_lat, mid_lon, north, east),
            ]
            ranks = [expected.index(c.bbox) for c in node.children]
            assert ranks == sorted(ranks)

    def test_coincident_points_terminate_at_max_depth(self):
        pts = [
            StockPoint(id=f"c{i}", location=GeoPoint(lat=45.0, lon=5.0), stocks={"s": 1.0})
            for i in range(20)
        ] + [StockPoint(id="far", location=GeoPoint(lat=46.0, lon=6.0), stocks={"s": 1.0})]
        root = build_quadtree(pts, "s", leaf_capacity=8)
        big = max((len(n.entries) for n in walk(root) if n.is_leaf), default=0)
        assert big == 20  # stacked points end up sharing one deep leaf
        assert root.count == 21

    def test_centroid_is_stock_weighted(self):
        pts = [
            StockPoint(id="a", location=GeoPoint(lat=40.0, lon=0.0), stocks={"s": 3.0}),
            StockPoint(id="b", location=GeoPoint(lat=50.0, lon=10.0), stocks={"s": 1.0}),
        ]
        root = build_quadtree(pts, "s")
        assert root.centroid.lat == pytest.approx(42.5, rel=1e-12)
        assert root.centroid.lon == pytest.approx(2.5, rel=1e-12)

    def test_zero_stock_centroid_falls_back_to_mean(self):
        pts = [
            StockPoint(id="a", location=GeoPoint(lat=40.0, lon=0.0), stocks={"s": 0.0}),
            StockPoint(id="b", location=GeoPoint(lat=50.0, lon=10.0), stocks={"s": 0.0}),
        ]
        root = build_quadtree(pts, "s")
        assert root.centroid.lat == pytest.approx(45.0)
        assert root.total_stock == 0.0


class TestMinDistance:
    def test_zero_inside(self):
        root = build_quadtree(random_cloud(50), "s")
        south, west, north, east = root.bbox
        inside = GeoPoint(lat=0.5 * (south + north), lon=0.5 * (west + east))
        assert min_distance_to_node(inside, root) == 0.0

    def test_due_north_south(self):
        root = build_quadtree(random_cloud(50, bbox=(0.0, 40.0, 10.0, 50.0)), "s")
        south, west, north, east = root.bbox
        above = GeoPoint(lat=north + 1.0, lon=0.5 * (west + east))
        expected = math.radians(above.lat - north) * 6371.0
        assert min_distance_to_node(above, root) == pytest.approx(expected, rel=1e-12)

    def test_is_lower_bound_for_all_subtree_points(self):
        pts = random_cloud(400, seed=3)
        root = build_quadtree(pts, "s")
        rng = np.random.default_rng(8)
        queries = [GeoPoint(lat=float(la), lon=float(lo)) for la, lo in zip(rng.uniform(-60, 75, 40), rng.uniform(-180, 180, 40))]
        for m in queries:
            for node in walk(root):
                bound = min_distance_to_node(m, node)
                nearest = min(orthodromic_distance(m, g) for g, _ in subtree_entries(node))
                assert bound <= nearest + 1e-9

    def test_bound_is_tight_on_boundary(self):
        # Sample the box edges densely: the bound must match the true
        # minimum boundary distance to within the sampling resolution.
        node = build_quadtree(random_cloud(9, bbox=(10.0, 45.0, 20.0, 50.0)), "s")
        south, west, north, east = node.bbox
        lats = np.linspace(south, north, 400)
        lons = np.linspace(west, east, 400)
        edge = (
            [GeoPoint(lat=float(la), lon=west) for la in lats]
            + [GeoPoint(lat=float(la), lon=east) for la in lats]
            + [GeoPoint(lat=south, lon=float(lo)) for lo in lons]
            + [GeoPoint(lat=north, lon=float(lo)) for lo in lons]
        )
        for m in [GeoPoint(lat=48.0, lon=2.0), GeoPoint(lat=60.0, lon=35.0), GeoPoint(lat=-10.0, lon=14.9)]:
            bound = min_distance_to_node(m, node)
            sampled = min(orthodromic_distance(m, g) for g in edge)
            assert bound <= sampled + 1e-9
            assert bound >= sampled - 2.0  # sampling grain, not bound slack

    def test_longitude_wraps(self):
        pts = [
            StockPoint(id="a", location=GeoPoint(lat=0.0, lon=178.0), stocks={"s": 1.0}),
            StockPoint(id="b", location=GeoPoint(lat=5.0, lon=179.5), stocks={"s": 1.0}),
        ]
        root = build_quadtree(pts, "s")
        west_side = GeoPoint(lat=2.0, lon=-179.0)
        d = min_distance_to_node(west_side, root)
        assert d <= orthodromic_distance(west_side, GeoPoint(lat=2.0, lon=179.5)) + 1e-9
        assert d < 500.0  # wraps across the antimeridian instead of going around


class TestEvaluate:
    def test_exact_mode_matches_brute_force(self):
        pts = random_cloud(300, seed=5)
        root = build_quadtree(pts, "s")
        k = make_kernel("gaussian", 60.0)
        rng = np.random.default_rng(11)
        for _ in range(25):
            m = GeoPoint(lat=float(rng.uniform(38, 54)), lon=float(rng.uniform(-8, 15)))
            phi = evaluate_potential(m, root, k, CutoffPolicy(epsilon=0.0))
            ref = brute_potential(m, pts, k)
            assert phi == pytest.approx(ref, rel=1e-12)

    def test_disabled_policy_is_exact(self):
        pts = random_cloud(100, seed=6)
        root = build_quadtree(pts, "s")
        k = make_kernel("pareto", 40.0)
        m = GeoPoint(lat=45.0, lon=3.0)
        off = evaluate_potential(m, root, k, CutoffPolicy(epsilon=1e-2, enabled=False))
        assert off == pytest.approx(brute_potential(m, pts, k), rel=1e-12)

    def test_exact_mode_visits_every_point(self):
        pts = random_cloud(200, seed=7)
        root = build_quadtree(pts, "s")
        k = make_kernel("gaussian", 50.0)
        res = evaluate_potential_instrumented(GeoPoint(lat=44.0, lon=2.0), root, k, CutoffPolicy(epsilon=0.0))
        assert res.visited_points == 200
        assert res.prunes == ()
        assert res.discarded_total == 0.0

    @pytest.mark.parametrize("kind,portee", [("gaussian", 80.0), ("disk", 120.0), ("pareto", 60.0), ("damped-disk", 90.0)])
    def test_pruned_error_within_epsilon(self, kind, portee):
        # Skipped subtrees are disjoint and each passes the whole-dataset
        # threshold, so the total skipped mass stays within eps times the
        # final sum, even for heavy tails whose skips run close to their
        # bounds.
        pts = random_cloud(800, seed=13)
        root = build_quadtree(pts, "s")
        k = make_kernel(kind, portee)
        eps = 1e-3
        rng = np.random.default_rng(17)
        for _ in range(10):
            m = GeoPoint(lat=float(rng.uniform(40, 52)), lon=float(rng.uniform(-5, 12)))
            exact = brute_potential(m, pts, k)
            pruned = evaluate_potential(m, root, k, CutoffPolicy(epsilon=eps))
            assert pruned <= exact + 1e-12 * exact  # pruning only discards mass
            if exact > 0.0:
                assert (exact - pruned) / exact <= eps * (1.0 + 1e-9)

    def test_gaussian_pruned_error_within_one_percent(self):
        pts = random_cloud(800, seed=13)
        root = build_quadtree(pts, "s")
        k = make_kernel("gaussian", 80.0)
        rng = np.random.default_rng(17)
        for _ in range(10):
            m = GeoPoint(lat=float(rng.uniform(40, 52)), lon=float(rng.uniform(-5, 12)))
            exact = brute_potential(m, pts, k)
            pruned = evaluate_potential(m, root, k, CutoffPolicy(epsilon=1e-3))
            if exact > 0.0:
                assert (exact - pruned) / exact <= 1e-2

    def test_instrumented_accounting_is_exact(self):
        pts = random_cloud(600, seed=23)
        root = build_quadtree(pts, "s")
        k = make_kernel("gaussian", 70.0)
        rng = np.random.default_rng(29)
        pruned_something = 0
        for _ in range(20):
            m = GeoPoint(lat=float(rng.uniform(40, 52)), lon=float(rng.uniform(-5, 12)))
            res = evaluate_potential_instrumented(m, root, k, CutoffPolicy(epsilon=1e-3))
            assert res.phi == evaluate_potential(m, root, k, CutoffPolicy(epsilon=1e-3))
            assert res.phi_exact == pytest.approx(brute_potential(m, pts, k), rel=1e-9)
            for event in res.prunes:
                assert event.discarded <= event.bound * (1.0 + 1e-12)
                assert event.bound <= 1e-3 * event.phi_at_prune * (1.0 + 1e-12)
            # Budget: bounds (hence true discards) sum to at most eps * phi.
            assert sum(e.bound for e in res.prunes) <= 1e-3 * res.phi * (1.0 + 1e-12)
            assert res.discarded_total <= 1e-3 * res.phi * (1.0 + 1e-12)
            pruned_something += bool(res.prunes)
        assert pruned_something > 0  # the scenario actually exercises cut-offs

    def test_far_heavy_point_is_not_lost(self):
        # A dominant stock far away must survive pruning: its own bound
        # exceeds epsilon times any partial sum built from light points.
        pts = random_cloud(200, seed=31, bbox=(0.0, 40.0, 2.0, 42.0))
        pts.append(StockPoint(id="giant", location=GeoPoint(lat=49.5, lon=9.5), stocks={"s": 1e9}))
        root = build_quadtree(pts, "s")
        k = make_kernel("pareto", 50.0)
        m = GeoPoint(lat=40.5, lon=0.5)
        pruned = evaluate_potential(m, root, k, CutoffPolicy(epsilon=1e-3))
        exact = brute_potential(m, pts, k)
        assert (exact - pruned) / exact <= 1e-3 * (1.0 + 1e-9)
        contribution_giant = 1e9 * kernel_eval(k, orthodromic_distance(m, GeoPoint(lat=49.5, lon=9.5)))
        assert pruned >= contribution_giant  # the giant itself was summed

    def test_error_grows_with_epsilon(self):
        pts = random_cloud(800, seed=37)
        root = build_quadtree(pts, "s")
        k = make_kernel("gaussian", 60.0)
        rng = np.random.default_rng(41)
        queries = [GeoPoint(lat=float(rng.uniform(41, 51)), lon=float(rng.uniform(-4, 11))) for _ in range(15)]
        errors = []
        for eps in (0.0, 1e-4, 1e-3, 1e-2):
            worst = 0.0
            for m in queries:
                exact = brute_potential(m, pts, k)
                got = evaluate_potential(m, root, k, CutoffPolicy(epsilon=eps, enabled=eps > 0))
                if exact > 0:
                    worst = max(worst, abs(exact - got) / exact)
            errors.append(worst)
        # eps=0 walks the whole tree; only summation order differs from the
        # flat loop, so the gap is a few ulps, not exactly zero.
        assert errors[0] <= 1e-12
        assert all(a <= b + 1e-15 for a, b in zip(errors, errors[1:]))

    def test_default_leaf_capacity(self):
        assert DEFAULT_LEAF_CAPACITY == 8
