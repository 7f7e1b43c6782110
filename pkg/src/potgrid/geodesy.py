"""Great-circle (orthodromic) distances on the sphere.

Two evaluation paths are provided:

- :func:`orthodromic_distance`, the exact spherical law-of-cosines path.
- :func:`fast_distance`, the same formula fed from a :class:`TrigCache`
  holding precomputed per-point latitude sines/cosines and, optionally, a
  tabulated cosine of the longitude difference.

Per-point latitude trig is always exact (precomputing it changes nothing),
so the only approximation lives in the optional cosine table. The table
maps an angle to the cosine of the *lower bound* of its bin, which is the
cosine of another admissible longitude difference at most ``2*pi/grain``
radians away. Moving one endpoint of a great-circle arc by ``h`` radians of
longitude displaces it by at most ``r*h`` km, so the worst-case distance
error is bounded by :func:`tabulation_bound_km`, which shrinks as the grain
grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "GeoPoint",
    "SphereModel",
    "TrigCache",
    "DEFAULT_GRAIN",
    "orthodromic_distance",
    "build_trig_cache",
    "fast_distance",
    "tabulation_bound_km",
]

TWO_PI = 2.0 * math.pi

#: Default bin count for the cosine table. Tabulation itself is off by
#: default; callers opt in per cache.
DEFAULT_GRAIN = 2**20


def _normalize_lon(lon: float) -> float:
    """Fold a longitude in degrees into (-180, 180]."""
    x = math.fmod(lon, 360.0)
    if x <= -180.0:
        x += 360.0
    elif x > 180.0:
        x -= 360.0
    return x


@dataclass(frozen=True)
class GeoPoint:
    """A point on the sphere, latitude/longitude in degrees.

    Latitude must lie in [-90, 90]; longitude is normalized into
    (-180, 180] on construction.
    """

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinate: ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        object.__setattr__(self, "lon", _normalize_lon(self.lon))

    @property
    def lat_rad(self) -> float:
        return math.radians(self.lat)

    @property
    def lon_rad(self) -> float:
        return math.radians(self.lon)


@dataclass(frozen=True)
class SphereModel:
    """Spherical earth model; radius in kilometers."""

    radius_km: float = 6371.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius_km) and self.radius_km > 0.0):
            raise ValueError(f"sphere radius must be positive, got {self.radius_km}")


def orthodromic_distance(a: GeoPoint, b: GeoPoint, sphere: SphereModel = SphereModel()) -> float:
    """Exact great-circle distance between two points, in km.

    The arccos argument is clamped to [-1, 1]: floating rounding can push
    it marginally outside for identical or antipodal points. Conditioning
    note: near-coincident points can read as up to ~r*sqrt(2*eps), about
    1.4e-4 km, apart (the classic law-of-cosines short-range limit); at
    kilometer scales and beyond the formula is accurate to well under a
    meter.
    """
    sin_a = math.sin(a.lat_rad)
    cos_a = math.cos(a.lat_rad)
    sin_b = math.sin(b.lat_rad)
    cos_b = math.cos(b.lat_rad)
    x = sin_a * sin_b + cos_a * cos_b * math.cos(b.lon_rad - a.lon_rad)
    if x > 1.0:
        x = 1.0
    elif x < -1.0:
        x = -1.0
    return math.acos(x) * sphere.radius_km


@dataclass(frozen=True)
class TrigCache:
    """Immutable per-point trig cache, optionally with a cosine table.

    ``cos_table[j] == cos(2*pi*j/grain)``: the value used for any angle in
    bin ``j`` is the exact cosine at the bin's lower bound. ``cos_table``
    is None when tabulation is disabled, in which case lookups fall back
    to ``math.cos`` and :func:`fast_distance` is bit-identical to
    :func:`orthodromic_distance`.
    """

    lat_rad: np.ndarray
    lon_rad: np.ndarray
    sin_lat: np.ndarray
    cos_lat: np.ndarray
    grain: int
    cos_table: np.ndarray | None = field(default=None)

    def __len__(self) -> int:
        return int(self.lat_rad.shape[0])

    @property
    def tabulated(self) -> bool:
        return self.cos_table is not None

    def cos_dlon(self, dlon_rad: float) -> float:
        """Cosine of a longitude difference via the active path."""
        if self.cos_table is None:
            return math.cos(dlon_rad)
        theta = math.fmod(dlon_rad, TWO_PI)
        if theta < 0.0:
            theta += TWO_PI
        j = int(theta * self.grain / TWO_PI)
        if j >= self.grain:  # theta == 2*pi after rounding
            j = 0
        return float(self.cos_table[j])


def build_trig_cache(
    points: Sequence[GeoPoint],
    grain: int = DEFAULT_GRAIN,
    tabulate: bool = False,
) -> TrigCache:
    """Precompute latitude trig for ``points``; optionally tabulate cos.

    ``grain`` is the number of bins covering [0, 2*pi). Rejects grain < 2.
    The resulting cache is immutable; arrays are marked read-only.
    """
    if grain < 2:
        raise ValueError(f"grain must be >= 2, got {grain}")
    lat = np.array([p.lat_rad for p in points], dtype=np.float64)
    lon = np.array([p.lon_rad for p in points], dtype=np.float64)
    sin_lat = np.sin(lat)
    cos_lat = np.cos(lat)
    table = None
    if tabulate:
        # Exact cosine at each bin's lower bound.
        edges = np.arange(grain, dtype=np.float64) * (TWO_PI / grain)
        table = np.cos(edges)
        table.flags.writeable = False
    for arr in (lat, lon, sin_lat, cos_lat):
        arr.flags.writeable = False
    return TrigCache(lat_rad=lat, lon_rad=lon, sin_lat=sin_lat, cos_lat=cos_lat, grain=grain, cos_table=table)


def fast_distance(i: int, b: GeoPoint, cache: TrigCache, sphere: SphereModel = SphereModel()) -> float:
    """Distance from cached point ``i`` to ``b``, in km.

    Same formula and operation order as :func:`orthodromic_distance`, with
    the cached point's latitude trig read from the cache. With tabulation
    disabled the result is bit-identical to the exact path; with tabulation
    enabled the error is bounded by :func:`tabulation_bound_km`.
    """
    sin_a = float(cache.sin_lat[i])
    cos_a = float(cache.cos_lat[i])
    sin_b = math.sin(b.lat_rad)
    cos_b = math.cos(b.lat_rad)
    x = sin_a * sin_b + cos_a * cos_b * cache.cos_dlon(b.lon_rad - float(cache.lon_rad[i]))
    if x > 1.0:
        x = 1.0
    elif x < -1.0:
        x = -1.0
    return math.acos(x) * sphere.radius_km


def tabulation_bound_km(grain: int, sphere: SphereModel = SphereModel()) -> float:
    """Worst-case |tabulated - exact| distance error for a given grain.

    The tabulated cosine equals the exact cosine at a longitude difference
    displaced by less than one bin width ``h = 2*pi/grain``, i.e. the exact
    distance to a point moved by < h radians along its parallel. That move
    spans at most ``r*h`` km of great-circle arc, so by the triangle
    inequality the distance error is < ``r * 2*pi / grain``.
    """
    return sphere.radius_km * TWO_PI / grain
