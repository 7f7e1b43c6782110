"""Quadtree over stock points with algebraic cut-off evaluation.

The tree is a top-down region quadtree in lat/lon coordinate space: each
split halves the parent box at its coordinate midpoints, recursing until a
quadrant holds at most ``leaf_capacity`` points or the maximum depth is
reached (coincident points then share a multi-point leaf). Every node
carries the total stock of its subtree, combined in fixed child order so
that a parent's total equals the sum of its children's totals exactly, and
a stock-weighted centroid.

Potential evaluation walks the tree depth-first, children ordered
near-to-far by a spherical lower bound on the node distance. A subtree is
skipped ("cut off") when the kernel value at its nearest corner, scaled
by the stock of the *entire* dataset, fits under ``epsilon`` times the
potential accumulated so far. That test is stricter than comparing the
subtree's own bound ``total_stock * f(d_min)``, and it makes the error
additive-safe: skipped subtrees are disjoint, so their discarded masses
sum to at most ``sum(stock_q / stock_root) * epsilon * phi <= epsilon``
times the final potential, no matter how many cut-offs fire. Pruned
subtrees contribute zero; no centroid approximation is substituted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .geodesy import GeoPoint, SphereModel, orthodromic_distance
from .kernels import Kernel, kernel_eval

__all__ = [
    "StockPoint",
    "QuadNode",
    "CutoffPolicy",
    "PruneEvent",
    "build_quadtree",
    "min_distance_to_node",
    "evaluate_potential",
    "evaluate_potential_instrumented",
    "DEFAULT_LEAF_CAPACITY",
    "MAX_DEPTH",
]

DEFAULT_LEAF_CAPACITY = 8
MAX_DEPTH = 24

DistanceFn = Callable[[GeoPoint, GeoPoint], float]


@dataclass(frozen=True)
class StockPoint:
    """One territorial unit: representative point plus per-variable stocks."""

    id: str
    location: GeoPoint
    stocks: Mapping[str, float]

    def __post_init__(self) -> None:
        for name, value in self.stocks.items():
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"stock {name!r} of unit {self.id!r} must be >= 0, got {value}")


@dataclass(frozen=True)
class CutoffPolicy:
    """Relative pruning threshold; epsilon=0 or disabled means exact.

    epsilon caps the total discarded mass of one evaluation relative to
    its final potential, not each skip separately.
    """

    epsilon: float = 1e-3
    enabled: bool = True

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


class QuadNode:
    """A quadtree node: bbox, subtree stock aggregate, children or points.

    ``bbox`` is (south, west, north, east) in degrees. ``children`` holds
    the non-empty quadrants in fixed SW, SE, NW, NE order; ``entries``
    holds leaf payload as (location, stock) pairs in input order.
    """

    __slots__ = ("bbox", "total_stock", "centroid", "children", "entries", "count")

    def __init__(
        self,
        bbox: tuple[float, float, float, float],
        total_stock: float,
        centroid: GeoPoint,
        children: tuple["QuadNode", ...] = (),
        entries: tuple[tuple[GeoPoint, float], ...] = (),
    ) -> None:
        self.bbox = bbox
        self.total_stock = total_stock
        self.centroid = centroid
        self.children = children
        self.entries = entries
        self.count = len(entries) if not children else sum(c.count for c in children)

    @property
    def is_leaf(self) -> bool:
        return not self.children


def _centroid(pairs: Sequence[tuple[GeoPoint, float]]) -> GeoPoint:
    """Stock-weighted mean location; plain mean when all stocks are zero."""
    w = sum(s for _, s in pairs)
    if w > 0.0:
        lat = sum(g.lat * s for g, s in pairs) / w
        lon = sum(g.lon * s for g, s in pairs) / w
    else:
        lat = sum(g.lat for g, _ in pairs) / len(pairs)
        lon = sum(g.lon for g, _ in pairs) / len(pairs)
    return GeoPoint(lat=min(max(lat, -90.0), 90.0), lon=lon)


def _build(pairs: list[tuple[GeoPoint, float]], bbox: tuple[float, float, float, float], depth: int, leaf_capacity: int) -> QuadNode:
    if len(pairs) <= leaf_capacity or depth >= MAX_DEPTH:
        total = 0.0
        for _, s in pairs:
            total += s
        return QuadNode(bbox, total, _centroid(pairs), entries=tuple(pairs))
    south, west, north, east = bbox
    mid_lat = 0.5 * (south + north)
    mid_lon = 0.5 * (west + east)
    buckets: list[list[tuple[GeoPoint, float]]] = [[], [], [], []]
    for g, s in pairs:
        qi = 2 * (g.lat >= mid_lat) + (g.lon >= mid_lon)
        buckets[qi].append((g, s))
    child_boxes = (
        (south, west, mid_lat, mid_lon),
        (south, mid_lon, mid_lat, east),
        (mid_lat, west, north, mid_lon),
        (mid_lat, mid_lon, north, east),
    )
    children = tuple(
        _build(bucket, child_boxes[qi], depth + 1, leaf_capacity)
        for qi, bucket in enumerate(buckets)
        if bucket
    )
    # Fixed child order makes the parent aggregate exactly the sum of the
    # children's aggregates.
    total = 0.0
    for c in children:
        total += c.total_stock
    merged = [(c.centroid, c.total_stock) for c in children]
    return QuadNode(bbox, total, _centroid(merged), children=children)


def build_quadtree(
    points: Sequence[StockPoint],
    variable: str,
    leaf_capacity: int = DEFAULT_LEAF_CAPACITY,
) -> QuadNode:
    """Region quadtree over the points' bounding box for one stock variable."""
    if not points:
        raise ValueError("cannot build a quadtree over an empty point list")
    if leaf_capacity < 1:
        raise ValueError(f"leaf_capacity must be >= 1, got {leaf_capacity}")
    pairs: list[tuple[GeoPoint, float]] = []
    for p in points:
        if variable not in p.stocks:
            raise ValueError(f"unit {p.id!r} is missing variable {variable!r}")
        pairs.append((p.location, float(p.stocks[variable])))
    lats = [g.lat for g, _ in pairs]
    lons = [g.lon for g, _ in pairs]
    bbox = (min(lats), min(lons), max(lats), max(lons))
    return _build(pairs, bbox, 0, leaf_capacity)


def min_distance_to_node(m: GeoPoint, node: QuadNode, sphere: SphereModel = SphereModel()) -> float:
    """Lower bound (km) on the great-circle distance from m to node.bbox.

    Zero when m lies inside the box. For a box whose edges are parallels
    and meridians the nearest boundary point sits either due north/south of
    m (when m's longitude falls inside the box's range) or on the nearer
    meridian edge. On that edge the distance cosine
    ``g(lat) = sin(lat_m) sin(lat) + cos(lat_m) cos(dlon) cos(lat)`` is
    maximized over the box's latitude interval: at the interior stationary
    point atan2 yields when it falls inside the interval, else at one of
    the two endpoints (the stationary point can leave [-pi/2, pi/2] when
    cos(dlon) < 0, so both endpoints must be tried). Longitude offsets are
    measured circularly, so the bound never exceeds the true minimum.
    """
    south, west, north, east = node.bbox
    lat_m = m.lat_rad
    # Circular position of m's longitude relative to [west, east].
    dwest = math.radians(m.lon - west) % (2.0 * math.pi)
    width = math.radians(east - west)
    if dwest <= width:
        dlon = 0.0
    else:
        # Angular distance to the nearer meridian edge.
        dlon = min(2.0 * math.pi - dwest, dwest - width)
    if dlon == 0.0:
        if south <= m.lat <= north:
            return 0.0
        return sphere.radius_km * (math.radians(south) - lat_m if m.lat < south else lat_m - math.radians(north))
    a = math.sin(lat_m)
    b = math.cos(lat_m) * math.cos(dlon)
    south_r = math.radians(south)
    north_r = math.radians(north)
    xs = a * math.sin(south_r) + b * math.cos(south_r)
    xn = a * math.sin(north_r) + b * math.cos(north_r)
    x = xs if xs > xn else xn
    lat_best = math.atan2(a, b)
    if south_r <= lat_best <= north_r:
        xb = a * math.sin(lat_best) + b * math.cos(lat_best)
        if xb > x:
            x = xb
    if x > 1.0:
        x = 1.0
    elif x < -1.0:
        x = -1.0
    return sphere.radius_km * math.acos(x)


def _default_distance(sphere: SphereModel) -> DistanceFn:
    return lambda m, g: orthodromic_distance(m, g, sphere)


def evaluate_potential(
    m: GeoPoint,
    root: QuadNode,
    k: Kernel,
    policy: CutoffPolicy = CutoffPolicy(),
    dist: DistanceFn | None = None,
    sphere: SphereModel = SphereModel(),
) -> float:
    """Potential at m: stock-weighted sum of f(distance) over the tree.

    With epsilon=0 or the policy disabled, every point is visited and the
    result is the exact sum in tree traversal order. ``dist`` may supply a
    cached/tabulated distance; it must never fall below the spherical
    bound used for pruning.

    The cut-off test scales the nearest-corner kernel value by the whole
    dataset's stock, not the subtree's: skipped subtrees are disjoint, so
    this keeps the total mass ever discarded within epsilon times the
    final potential, not epsilon per skip.
    """
    if dist is None:
        dist = _default_distance(sphere)
    prune = policy.enabled and policy.epsilon > 0.0
    eps = policy.epsilon
    root_stock = root.total_stock
    phi = 0.0

    def visit(node: QuadNode) -> None:
        nonlocal phi
        if prune and phi > 0.0:
            if root_stock * kernel_eval(k, min_distance_to_node(m, node, sphere)) <= eps * phi:
                return
        if node.is_leaf:
            for g, s in node.entries:
                phi += s * kernel_eval(k, dist(m, g))
            return
        ordered = sorted(range(len(node.children)), key=lambda i: (min_distance_to_node(m, node.children[i], sphere), i))
        for i in ordered:
            visit(node.children[i])

    visit(root)
    return phi


@dataclass(frozen=True)
class PruneEvent:
    """One cut-off: the bound that justified it and what it really discarded."""

    bound: float
    discarded: float
    phi_at_prune: float
    node_stock: float
    d_min_km: float


@dataclass(frozen=True)
class InstrumentedResult:
    phi: float
    discarded_total: float
    prunes: tuple[PruneEvent, ...] = field(default=())
    visited_points: int = 0

    @property
    def phi_exact(self) -> float:
        return self.phi + self.discarded_total


def evaluate_potential_instrumented(
    m: GeoPoint,
    root: QuadNode,
    k: Kernel,
    policy: CutoffPolicy = CutoffPolicy(),
    dist: DistanceFn | None = None,
    sphere: SphereModel = SphereModel(),
) -> InstrumentedResult:
    """Same traversal as :func:`evaluate_potential`, but each prune also
    computes the exact contribution it discarded (by descending into the
    pruned subtree without further pruning)."""
    if dist is None:
        dist = _default_distance(sphere)
    prune = policy.enabled and policy.epsilon > 0.0
    eps = policy.epsilon
    root_stock = root.total_stock
    phi = 0.0
    visited = 0
    events: list[PruneEvent] = []

    def exact_subtree(node: QuadNode) -> float:
        if node.is_leaf:
            return sum(s * kernel_eval(k, dist(m, g)) for g, s in node.entries)
        return sum(exact_subtree(c) for c in node.children)

    def visit(node: QuadNode) -> None:
        nonlocal phi, visited
        if prune and phi > 0.0:
            d_min = min_distance_to_node(m, node, sphere)
            f_min = kernel_eval(k, d_min)
            if root_stock * f_min <= eps * phi:
                events.append(PruneEvent(bound=node.total_stock * f_min, discarded=exact_subtree(node), phi_at_prune=phi, node_stock=node.total_stock, d_min_km=d_min))
                return
        if node.is_leaf:
            for g, s in node.entries:
                phi += s * kernel_eval(k, dist(m, g))
            visited += len(node.entries)
            return
        ordered = sorted(range(len(node.children)), key=lambda i: (min_distance_to_node(m, node.children[i], sphere), i))
        for i in ordered:
            visit(node.children[i])

    visit(root)
    return InstrumentedResult(
        phi=phi,
        discarded_total=sum(e.discarded for e in events),
        prunes=tuple(events),
        visited_points=visited,
    )
