"""Great-circle geometry on a spherical Earth.

All distances are in meters on a sphere of radius EARTH_RADIUS_M (IUGG mean
radius). Coordinates are decimal degrees.
"""

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_M = 6_371_008.8

__all__ = [
    "EARTH_RADIUS_M",
    "GeoPoint",
    "haversine_distance",
    "pairwise_distances",
    "local_offset",
    "offset_point",
    "weighted_mean_point",
]


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points.

    Computed as R * 2*arcsin(sqrt(f1 + f2)) where f1 is the squared half-angle
    sine of the latitude difference and f2 the longitude term weighted by both
    cosine latitudes. The arcsin argument is clamped to [0, 1] so rounding near
    antipodal pairs cannot leave the domain.
    """
    lat_a = math.radians(a.lat)
    lat_b = math.radians(b.lat)
    f1 = math.sin((lat_a - lat_b) / 2.0) ** 2
    f2 = math.cos(lat_a) * math.cos(lat_b) * math.sin(math.radians(a.lon - b.lon) / 2.0) ** 2
    arg = math.sqrt(min(f1 + f2, 1.0))
    return EARTH_RADIUS_M * 2.0 * math.asin(arg)


def pairwise_distances(points_a, points_b=None) -> np.ndarray:
    """Dense matrix of great-circle distances, meters.

    points_a / points_b are sequences of GeoPoint; points_b defaults to
    points_a. Vectorized twin of haversine_distance for the batch paths
    (offline clustering, oracle labeling); agrees with the scalar kernel to
    floating-point rounding.
    """
    if points_b is None:
        points_b = points_a
    la = np.radians(np.array([p.lat for p in points_a], dtype=float))[:, None]
    lo = np.radians(np.array([p.lon for p in points_a], dtype=float))[:, None]
    lb = np.radians(np.array([p.lat for p in points_b], dtype=float))[None, :]
    lob = np.radians(np.array([p.lon for p in points_b], dtype=float))[None, :]
    f1 = np.sin((la - lb) / 2.0) ** 2
    f2 = np.cos(la) * np.cos(lb) * np.sin((lo - lob) / 2.0) ** 2
    arg = np.sqrt(np.clip(f1 + f2, 0.0, 1.0))
    return EARTH_RADIUS_M * 2.0 * np.arcsin(arg)


def local_offset(origin: GeoPoint, p: GeoPoint) -> tuple[float, float]:
    """(east, north) meters of p relative to origin, equirectangular at origin.

    Valid for the few-kilometer scales this package works at.
    """
    north = math.radians(p.lat - origin.lat) * EARTH_RADIUS_M
    east = math.radians(p.lon - origin.lon) * EARTH_RADIUS_M * math.cos(math.radians(origin.lat))
    return east, north


def offset_point(origin: GeoPoint, east_m: float, north_m: float) -> GeoPoint:
    """Point displaced from origin by (east_m, north_m) meters."""
    dlat = math.degrees(north_m / EARTH_RADIUS_M)
    dlon = math.degrees(east_m / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat))))
    return GeoPoint(origin.lat + dlat, origin.lon + dlon)


def weighted_mean_point(points, weights) -> GeoPoint:
    """Weighted mean position, computed in the tangent plane at the first point."""
    if len(points) != len(weights) or not points:
        raise ValueError("points and weights must be equal-length and non-empty")
    total = float(sum(weights))
    if total <= 0:
        raise ValueError("weights must sum to a positive value")
    anchor = points[0]
    east = north = 0.0
    for p, w in zip(points, weights):
        e, n = local_offset(anchor, p)
        east += w * e
        north += w * n
    return offset_point(anchor, east / total, north / total)
