"""Distributed multi-drone cinematography: mission model, planning,
event-synchronized execution, and a deterministic simulation world."""

from .geometry import GeoPoint, LocalPoint, geo_to_local, local_to_geo
from .model import (
    DronePlan,
    Event,
    FramingType,
    Mission,
    MissionParseError,
    NavigationAction,
    NavKind,
    RTMode,
    ShootingAction,
    ShotParameters,
    ShotType,
    STType,
    parse_mission,
    serialize_mission,
    validate_mission,
)
from .planner import PlanResult, plan_mission
from .session import SessionConfig, SimSession, default_drones
from .worldmap import DroneSpec, WorldMap, parse_map, serialize_map

__all__ = [
    "DronePlan",
    "DroneSpec",
    "Event",
    "FramingType",
    "GeoPoint",
    "LocalPoint",
    "Mission",
    "MissionParseError",
    "NavKind",
    "NavigationAction",
    "PlanResult",
    "RTMode",
    "STType",
    "SessionConfig",
    "ShootingAction",
    "ShotParameters",
    "ShotType",
    "SimSession",
    "WorldMap",
    "default_drones",
    "geo_to_local",
    "local_to_geo",
    "parse_map",
    "parse_mission",
    "plan_mission",
    "serialize_map",
    "serialize_mission",
    "validate_mission",
]

__version__ = "0.1.0"
