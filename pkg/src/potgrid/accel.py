"""Compiled evaluation paths for grid computation.

The object quadtree from :mod:`potgrid.spatial_index` is flattened into
numpy arrays (nodes in breadth-first order so each node's children are
contiguous; leaf points reordered so each leaf's slice is contiguous) and
walked by numba-jitted kernels. Traversal semantics match the reference
``evaluate_potential`` exactly: pop-time cut-off test, children expanded
near-to-far by the spherical lower bound, leaf points summed in stored
order. The naive path keeps the original input point order.

All jitted functions run without fastmath and write each cell into its own
output slot, so results are bit-identical regardless of how rows are
partitioned across worker threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .spatial_index import QuadNode

__all__ = ["FlatTree", "flatten_tree", "point_arrays", "fill_rows_tree", "fill_rows_naive"]

TWO_PI = 2.0 * math.pi
_STACK_CAP = 160  # > 4 * MAX_DEPTH + slack


@dataclass(frozen=True)
class FlatTree:
    """Array view of a quadtree; all arrays read-only after construction."""

    bbox_rad: np.ndarray  # (n, 4) south, west, north, east
    stock: np.ndarray  # (n,)
    child_start: np.ndarray  # (n,) int32, -1 for leaves
    child_count: np.ndarray  # (n,) int32
    leaf_start: np.ndarray  # (n,) int32, -1 for internal nodes
    leaf_count: np.ndarray  # (n,) int32
    pt_sinlat: np.ndarray
    pt_coslat: np.ndarray
    pt_lon_rad: np.ndarray
    pt_stock: np.ndarray


def flatten_tree(root: QuadNode) -> FlatTree:
    """Breadth-first flattening; children of a node occupy a contiguous run."""
    nodes: list[QuadNode] = [root]
    head = 0
    child_start: list[int] = []
    child_count: list[int] = []
    leaf_spans: list[tuple[int, int]] = []
    pt_lat: list[float] = []
    pt_lon: list[float] = []
    pt_stock: list[float] = []
    while head < len(nodes):
        node = nodes[head]
        head += 1
        if node.is_leaf:
            child_start.append(-1)
            child_count.append(0)
            start = len(pt_lat)
            for g, s in node.entries:
                pt_lat.append(g.lat_rad)
                pt_lon.append(g.lon_rad)
                pt_stock.append(s)
            leaf_spans.append((start, len(node.entries)))
        else:
            child_start.append(len(nodes))
            child_count.append(len(node.children))
            leaf_spans.append((-1, 0))
            nodes.extend(node.children)

    n = len(nodes)
    bbox = np.empty((n, 4), dtype=np.float64)
    stock = np.empty(n, dtype=np.float64)
    for i, node in enumerate(nodes):
        south, west, north, east = node.bbox
        bbox[i, 0] = math.radians(south)
        bbox[i, 1] = math.radians(west)
        bbox[i, 2] = math.radians(north)
        bbox[i, 3] = math.radians(east)
        stock[i] = node.total_stock
    lat_arr = np.asarray(pt_lat, dtype=np.float64)
    arrays = dict(
        bbox_rad=bbox,
        stock=stock,
        child_start=np.asarray(child_start, dtype=np.int32),
        child_count=np.asarray(child_count, dtype=np.int32),
        leaf_start=np.asarray([s for s, _ in leaf_spans], dtype=np.int32),
        leaf_count=np.asarray([c for _, c in leaf_spans], dtype=np.int32),
        pt_sinlat=np.sin(lat_arr),
        pt_coslat=np.cos(lat_arr),
        pt_lon_rad=np.asarray(pt_lon, dtype=np.float64),
        pt_stock=np.asarray(pt_stock, dtype=np.float64),
    )
    for a in arrays.values():
        a.flags.writeable = False
    return FlatTree(**arrays)


def point_arrays(lats_deg, lons_deg, stocks) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Input-order point arrays for the naive path."""
    lat = np.radians(np.asarray(lats_deg, dtype=np.float64))
    lon = np.radians(np.asarray(lons_deg, dtype=np.float64))
    return np.sin(lat), np.cos(lat), lon, np.asarray(stocks, dtype=np.float64)


@njit(cache=True, nogil=True, inline="always")
def _kernel_f(code: int, p0: float, p1: float, p2: float, r: float) -> float:
    # disk: p0=R, p1=norm; damped-disk: p0=R, p1=norm, p2=1/R^2;
    # gaussian: p0=1/s^2, p1=norm; pareto: p0=1/b, p1=c, p2=beta.
    if code == 0:
        return p1 if r <= p0 else 0.0
    if code == 1:
        if r > p0:
            return 0.0
        return p1 * (1.0 - (r * r) * p2)
    if code == 2:
        return p1 * math.exp(-(r * r) * p0)
    return p1 * (1.0 + r * p0) ** (-p2)


@njit(cache=True, nogil=True, inline="always")
def _min_dist_km(
    lat_m: float,
    lon_m: float,
    sin_m: float,
    cos_m: float,
    south: float,
    west: float,
    north: float,
    east: float,
    radius: float,
) -> float:
    dwest = (lon_m - west) % TWO_PI
    width = east - west
    if dwest <= width:
        if lat_m < south:
            return radius * (south - lat_m)
        if lat_m > north:
            return radius * (lat_m - north)
        return 0.0
    dlon = min(TWO_PI - dwest, dwest - width)
    b = cos_m * math.cos(dlon)
    xs = sin_m * math.sin(south) + b * math.cos(south)
    xn = sin_m * math.sin(north) + b * math.cos(north)
    x = xs if xs > xn else xn
    lat_best = math.atan2(sin_m, b)
    if south <= lat_best and lat_best <= north:
        xb = sin_m * math.sin(lat_best) + b * math.cos(lat_best)
        if xb > x:
            x = xb
    if x > 1.0:
        x = 1.0
    elif x < -1.0:
        x = -1.0
    return radius * math.acos(x)


@njit(cache=True, nogil=True, inline="always")
def _point_distance_km(
    sin_m: float,
    cos_m: float,
    lon_m: float,
    sin_e: float,
    cos_e: float,
    lon_e: float,
    radius: float,
    table: np.ndarray,
    grain: int,
    use_table: bool,
) -> float:
    dlon = lon_e - lon_m
    if use_table:
        theta = dlon % TWO_PI
        j = int(theta * grain / TWO_PI)
        if j >= grain:
            j = 0
        c = table[j]
    else:
        c = math.cos(dlon)
    x = sin_m * sin_e + cos_m * cos_e * c
    if x > 1.0:
        x = 1.0
    elif x < -1.0:
        x = -1.0
    return math.acos(x) * radius


@njit(cache=True, nogil=True)
def _eval_cell_tree(
    lat_m, lon_m, sin_m, cos_m,
    bbox, stock, child_start, child_count, leaf_start, leaf_count,
    pt_sinlat, pt_coslat, pt_lon, pt_stock,
    code, p0, p1, p2,
    eps, prune, radius, table, grain, use_table,
):
    stack = np.empty(_STACK_CAP, dtype=np.int32)
    stack[0] = 0
    top = 1
    phi = 0.0
    # Cut-off scales by the whole dataset's stock (node 0 is the root), so
    # the disjoint skipped subtrees discard at most eps * phi in total.
    root_stock = stock[0]
    order = np.empty(4, dtype=np.int32)
    dists = np.empty(4, dtype=np.float64)
    while top > 0:
        top -= 1
        node = stack[top]
        if prune and phi > 0.0:
            d = _min_dist_km(lat_m, lon_m, sin_m, cos_m, bbox[node, 0], bbox[node, 1], bbox[node, 2], bbox[node, 3], radius)
            if root_stock * _kernel_f(code, p0, p1, p2, d) <= eps * phi:
                continue
        cs = child_start[node]
        if cs < 0:
            ls = leaf_start[node]
            for e in range(ls, ls + leaf_count[node]):
                d = _point_distance_km(sin_m, cos_m, lon_m, pt_sinlat[e], pt_coslat[e], pt_lon[e], radius, table, grain, use_table)
                phi += pt_stock[e] * _kernel_f(code, p0, p1, p2, d)
            continue
        nc = child_count[node]
        for ci in range(nc):
            c = cs + ci
            order[ci] = c
            dists[ci] = _min_dist_km(lat_m, lon_m, sin_m, cos_m, bbox[c, 0], bbox[c, 1], bbox[c, 2], bbox[c, 3], radius)
        # Insertion sort by (distance, index); push far-to-near so the
        # nearest child pops first.
        for ci in range(1, nc):
            dv = dists[ci]
            ov = order[ci]
            k = ci - 1
            while k >= 0 and (dists[k] > dv or (dists[k] == dv and order[k] > ov)):
                dists[k + 1] = dists[k]
                order[k + 1] = order[k]
                k -= 1
            dists[k + 1] = dv
            order[k + 1] = ov
        for ci in range(nc - 1, -1, -1):
            stack[top] = order[ci]
            top += 1
    return phi


@njit(cache=True, nogil=True)
def fill_rows_tree(
    out, row0, row1, width,
    south, west, north, east, height,
    bbox, stock, child_start, child_count, leaf_start, leaf_count,
    pt_sinlat, pt_coslat, pt_lon, pt_stock,
    code, p0, p1, p2,
    eps, prune, radius, table, grain, use_table,
):
    dlat = (north - south) / height
    dlon = (east - west) / width
    for i in range(row0, row1):
        lat_deg = north - (i + 0.5) * dlat
        lat_m = math.radians(lat_deg)
        sin_m = math.sin(lat_m)
        cos_m = math.cos(lat_m)
        for j in range(width):
            lon_m = math.radians(west + (j + 0.5) * dlon)
            out[i * width + j] = _eval_cell_tree(
                lat_m, lon_m, sin_m, cos_m,
                bbox, stock, child_start, child_count, leaf_start, leaf_count,
                pt_sinlat, pt_coslat, pt_lon, pt_stock,
                code, p0, p1, p2,
                eps, prune, radius, table, grain, use_table,
            )


@njit(cache=True, nogil=True)
def fill_rows_naive(
    out, row0, row1, width,
    south, west, north, east, height,
    pt_sinlat, pt_coslat, pt_lon, pt_stock,
    code, p0, p1, p2,
    radius,
):
    empty = np.empty(0, dtype=np.float64)
    dlat = (north - south) / height
    dlon = (east - west) / width
    n = pt_lon.shape[0]
    for i in range(row0, row1):
        lat_deg = north - (i + 0.5) * dlat
        lat_m = math.radians(lat_deg)
        sin_m = math.sin(lat_m)
        cos_m = math.cos(lat_m)
        for j in range(width):
            lon_m = math.radians(west + (j + 0.5) * dlon)
            phi = 0.0
            for e in range(n):
                d = _point_distance_km(sin_m, cos_m, lon_m, pt_sinlat[e], pt_coslat[e], pt_lon[e], radius, empty, 0, False)
                phi += pt_stock[e] * _kernel_f(code, p0, p1, p2, d)
            out[i * width + j] = phi
