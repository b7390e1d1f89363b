"""Operating area: bounds, no-fly zones, base stations, drone specs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import shapely
from shapely.geometry import Polygon

from .geometry import LocalPoint


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class Bounds:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise MapError("bounds must have positive extent")

    def contains(self, p: LocalPoint) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max


@dataclass
class DroneSpec:
    drone_id: str
    home: LocalPoint
    max_speed: float = 8.0
    flight_time_budget: float = 1200.0

    def __post_init__(self):
        if not self.max_speed > 0.0:
            raise MapError("max_speed must be positive")
        if not self.flight_time_budget > 0.0:
            raise MapError("flight_time_budget must be positive")


@dataclass
class WorldMap:
    """No-fly polygons and base stations inside a rectangular operating area.

    Polygons are 2D vertex rings (not explicitly closed); altitude is not
    part of the exclusion, a no-fly zone blocks every altitude.
    """

    bounds: Bounds
    no_fly_zones: list[list[LocalPoint]] = field(default_factory=list)
    base_stations: list[LocalPoint] = field(default_factory=list)

    def __post_init__(self):
        for i, ring in enumerate(self.no_fly_zones):
            if len(ring) < 3:
                raise MapError(f"no-fly zone {i} needs at least 3 vertices")
            poly = Polygon([(p.x, p.y) for p in ring])
            if not poly.is_valid:
                raise MapError(f"no-fly zone {i} is not a valid polygon")
            for p in ring:
                if not self.bounds.contains(p):
                    raise MapError(f"no-fly zone {i} extends outside bounds")
        for i, s in enumerate(self.base_stations):
            if not self.bounds.contains(s):
                raise MapError(f"base station {i} outside bounds")
            if self.contains_point(s):
                raise MapError(f"base station {i} lies inside a no-fly zone")

    @cached_property
    def nfz_union(self):
        """Union of raw no-fly polygons (shapely geometry, possibly empty)."""
        polys = [Polygon([(p.x, p.y) for p in ring]) for ring in self.no_fly_zones]
        return shapely.union_all(polys) if polys else Polygon()

    def inflated_union(self, margin: float):
        if self.nfz_union.is_empty:
            return self.nfz_union
        return self.nfz_union.buffer(margin)

    def contains_point(self, p: LocalPoint) -> bool:
        """True if ``p`` lies inside (or on) any no-fly zone."""
        if self.nfz_union.is_empty:
            return False
        return bool(shapely.intersects_xy(self.nfz_union, p.x, p.y))


def segment_clear(geom, a: LocalPoint, b: LocalPoint, step: float) -> bool:
    """Sampled check that segment a-b stays outside ``geom``.

    Samples at most every ``step`` meters, endpoints included.
    """
    if geom.is_empty:
        return True
    length = max(a.distance_to(b), 1e-9)
    n = max(2, int(math.ceil(length / step)) + 1)
    lam = np.linspace(0.0, 1.0, n)
    xs = a.x + (b.x - a.x) * lam
    ys = a.y + (b.y - a.y) * lam
    return not bool(np.any(shapely.intersects_xy(geom, xs, ys)))


def path_clear(geom, points: list[LocalPoint], step: float) -> bool:
    return all(segment_clear(geom, p, q, step) for p, q in zip(points, points[1:]))


# ---------------------------------------------------------------------------
# Map file format


def _num(obj, key, path):
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MapError(f"{path}.{key}: expected a number")
    return float(v)


def parse_map(data: bytes | str) -> WorldMap:
    try:
        root = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MapError(f"invalid JSON: {exc}") from exc
    if not isinstance(root, dict):
        raise MapError("$: expected an object")
    for key in root:
        if key not in {"bounds", "no_fly_zones", "base_stations"}:
            raise MapError(f"$.{key}: unknown field")
    if "bounds" not in root:
        raise MapError("$.bounds: missing required field")
    b = root["bounds"]
    if not isinstance(b, dict):
        raise MapError("$.bounds: expected an object")
    bounds = Bounds(
        _num(b, "x_min", "$.bounds"), _num(b, "y_min", "$.bounds"),
        _num(b, "x_max", "$.bounds"), _num(b, "y_max", "$.bounds"),
    )
    zones = []
    for i, ring in enumerate(root.get("no_fly_zones", [])):
        if not isinstance(ring, list):
            raise MapError(f"$.no_fly_zones[{i}]: expected a list")
        zones.append(
            [LocalPoint(_num(v, "x", f"$.no_fly_zones[{i}][{j}]"),
                        _num(v, "y", f"$.no_fly_zones[{i}][{j}]"))
             for j, v in enumerate(ring)]
        )
    stations = []
    for i, s in enumerate(root.get("base_stations", [])):
        stations.append(
            LocalPoint(_num(s, "x", f"$.base_stations[{i}]"),
                       _num(s, "y", f"$.base_stations[{i}]"),
                       _num(s, "z", f"$.base_stations[{i}]") if "z" in s else 0.0)
        )
    return WorldMap(bounds=bounds, no_fly_zones=zones, base_stations=stations)


def serialize_map(m: WorldMap) -> bytes:
    out = {
        "bounds": {"x_min": m.bounds.x_min, "y_min": m.bounds.y_min,
                   "x_max": m.bounds.x_max, "y_max": m.bounds.y_max},
        "no_fly_zones": [[{"x": p.x, "y": p.y} for p in ring] for ring in m.no_fly_zones],
        "base_stations": [{"x": p.x, "y": p.y, "z": p.z} for p in m.base_stations],
    }
    return (json.dumps(out, indent=2) + "\n").encode()
