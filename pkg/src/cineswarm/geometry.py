"""Local ENU geometry, geographic conversion, and polyline utilities.

All mission execution happens in a local east-north-up frame anchored at the
mission origin. Geographic coordinates only appear at the edges (mission
files, plan waypoints); the flat-earth equirectangular projection below is
accurate to well under a meter for the sub-degree areas missions cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

EARTH_RADIUS_M = 6371000.0


class CoordinateError(ValueError):
    """Out-of-range or out-of-area geographic coordinates."""


@dataclass(frozen=True)
class GeoPoint:
    """Geographic position: latitude/longitude in degrees, altitude in meters.

    Altitude is relative to the mission origin's ground level, not AMSL;
    the sim world and all local math treat z=0 as the origin's ground.
    """

    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise CoordinateError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise CoordinateError(f"longitude {self.lon} outside [-180, 180]")
        if not math.isfinite(self.alt):
            raise CoordinateError("altitude must be finite")


@dataclass(frozen=True)
class LocalPoint:
    """Point in the local frame: x east, y north, z up, meters."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError("LocalPoint components must be finite")

    def __add__(self, other: "LocalPoint") -> "LocalPoint":
        return LocalPoint(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "LocalPoint") -> "LocalPoint":
        return LocalPoint(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, k: float) -> "LocalPoint":
        return LocalPoint(self.x * k, self.y * k, self.z * k)

    def dot(self, other: "LocalPoint") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def norm_2d(self) -> float:
        return math.hypot(self.x, self.y)

    def distance_to(self, other: "LocalPoint") -> float:
        return (self - other).norm()

    def with_z(self, z: float) -> "LocalPoint":
        return LocalPoint(self.x, self.y, z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


ORIGIN = LocalPoint(0.0, 0.0, 0.0)

# Projection validity limit; one degree of latitude is ~111 km, far beyond
# any filming area, so exceeding it means the wrong origin was used.
MAX_LOCAL_EXTENT_DEG = 1.0


def geo_to_local(p: GeoPoint, origin: GeoPoint) -> LocalPoint:
    """Equirectangular projection of ``p`` into the frame anchored at ``origin``."""
    dlat = p.lat - origin.lat
    dlon = p.lon - origin.lon
    if abs(dlat) > MAX_LOCAL_EXTENT_DEG or abs(dlon) > MAX_LOCAL_EXTENT_DEG:
        raise CoordinateError(
            f"point ({p.lat}, {p.lon}) more than {MAX_LOCAL_EXTENT_DEG} deg from origin"
        )
    x = EARTH_RADIUS_M * math.cos(math.radians(origin.lat)) * math.radians(dlon)
    y = EARTH_RADIUS_M * math.radians(dlat)
    return LocalPoint(x, y, p.alt - origin.alt)


def local_to_geo(p: LocalPoint, origin: GeoPoint) -> GeoPoint:
    """Inverse of :func:`geo_to_local` for the same origin."""
    lat = origin.lat + math.degrees(p.y / EARTH_RADIUS_M)
    lon = origin.lon + math.degrees(
        p.x / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat)))
    )
    return GeoPoint(lat, lon, p.z + origin.alt)


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(a, math.tau)
    if a <= -math.pi:
        return math.pi
    return a


def rotate_z(p: LocalPoint, yaw: float) -> LocalPoint:
    """Rotate ``p`` about the z axis by ``yaw`` radians (right-handed)."""
    c, s = math.cos(yaw), math.sin(yaw)
    return LocalPoint(c * p.x - s * p.y, s * p.x + c * p.y, p.z)


def heading_of(v: LocalPoint) -> float:
    """Horizontal heading of a vector; 0 means east, pi/2 north."""
    return math.atan2(v.y, v.x)


def unit_from_heading(h: float) -> LocalPoint:
    return LocalPoint(math.cos(h), math.sin(h), 0.0)


def lerp(a: float, b: float, lam: float) -> float:
    return a + (b - a) * lam


class Polyline:
    """Piecewise-linear path with arc-length queries.

    Degenerate polylines (a single point, or repeated identical points) are
    allowed; their tangent heading defaults to east.
    """

    def __init__(self, points: Sequence[LocalPoint]):
        if not points:
            raise ValueError("polyline needs at least one point")
        self.points = list(points)
        self._cum = [0.0]
        for a, b in zip(self.points, self.points[1:]):
            self._cum.append(self._cum[-1] + a.distance_to(b))

    @property
    def length(self) -> float:
        return self._cum[-1]

    def _segment_index(self, s: float) -> int:
        # index of the segment containing arc length s (clamped)
        lo, hi = 0, len(self._cum) - 1
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if self._cum[mid] <= s:
                lo = mid
            else:
                hi = mid
        return lo

    def point_at(self, s: float) -> LocalPoint:
        if len(self.points) == 1 or s <= 0.0:
            return self.points[0]
        if s >= self.length:
            return self.points[-1]
        i = self._segment_index(s)
        a, b = self.points[i], self.points[i + 1]
        seg = self._cum[i + 1] - self._cum[i]
        if seg <= 0.0:
            return a
        lam = (s - self._cum[i]) / seg
        return LocalPoint(
            lerp(a.x, b.x, lam), lerp(a.y, b.y, lam), lerp(a.z, b.z, lam)
        )

    def heading_at(self, s: float) -> float:
        """Horizontal tangent heading at arc length s; clamps to end segments."""
        if len(self.points) == 1:
            return 0.0
        if s >= self.length:
            i = len(self.points) - 2
        else:
            i = self._segment_index(max(s, 0.0))
        # skip zero-length (or vertical) segments when picking the tangent
        for j in range(i, len(self.points) - 1):
            d = self.points[j + 1] - self.points[j]
            if d.norm_2d() > 1e-12:
                return heading_of(d)
        for j in range(i, 0, -1):
            d = self.points[j] - self.points[j - 1]
            if d.norm_2d() > 1e-12:
                return heading_of(d)
        return 0.0

    def project(self, p: LocalPoint) -> float:
        """Arc length of the closest point of the polyline to ``p``."""
        if len(self.points) == 1:
            return 0.0
        best_s = 0.0
        best_d = math.inf
        for i in range(len(self.points) - 1):
            a, b = self.points[i], self.points[i + 1]
            ab = b - a
            denom = ab.dot(ab)
            lam = 0.0 if denom <= 0.0 else max(0.0, min(1.0, (p - a).dot(ab) / denom))
            q = a + ab.scaled(lam)
            d = p.distance_to(q)
            if d < best_d:
                best_d = d
                best_s = self._cum[i] + lam * (self._cum[i + 1] - self._cum[i])
        return best_s


def polyline_length(points: Iterable[LocalPoint]) -> float:
    pts = list(points)
    return sum(a.distance_to(b) for a, b in zip(pts, pts[1:]))
