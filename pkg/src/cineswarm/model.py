"""Mission data model: shots, plans, events, and the mission file format.

The JSON mission format keeps angles in degrees; everything in memory is
radians and meters. Parsing is strict: unknown fields and malformed values
are rejected with the JSON path of the offending element, and serialization
emits a canonical form (fixed key order, angle fields rounded to
nanodegrees) so that serialize(parse(serialize(m))) == serialize(m).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Any, Optional

from .geometry import CoordinateError, GeoPoint


class ShotType(Enum):
    STATIC = "static"
    FLY_THROUGH = "fly_through"
    ELEVATOR = "elevator"
    CHASE_LEAD = "chase_lead"
    FLYBY = "flyby"
    LATERAL = "lateral"
    ESTABLISH = "establish"
    ORBIT = "orbit"


class FramingType(Enum):
    LONG = "long"
    MEDIUM = "medium"
    CLOSE_UP = "close_up"


class RTMode(Enum):
    VIRTUAL_TRAJ = "virtual_traj"
    VIRTUAL_PATH = "virtual_path"
    ACTUAL_TARGET = "actual_target"


class STType(Enum):
    VIRTUAL = "virtual"
    REAL = "real"
    NONE = "none"


@dataclass
class ShotParameters:
    """Per-shot geometric parameters. Angles radians, distances meters.

    Only the subset required by the shot type is meaningful; the rest stay
    None. See REQUIRED_PARAMS for the per-type rows.
    """

    pan_s: Optional[float] = None
    pan_e: Optional[float] = None
    tilt_s: Optional[float] = None
    tilt_e: Optional[float] = None
    x_s: Optional[float] = None
    x_e: Optional[float] = None
    y_0: Optional[float] = None
    z_0: Optional[float] = None
    z_s: Optional[float] = None
    z_e: Optional[float] = None
    r_0: Optional[float] = None
    azimuth_s: Optional[float] = None
    angular_speed: Optional[float] = None

    def provided(self) -> set[str]:
        return {f.name for f in fields(self) if getattr(self, f.name) is not None}


PARAM_NAMES = [f.name for f in fields(ShotParameters)]

# Required parameter set per shot type.
REQUIRED_PARAMS: dict[ShotType, frozenset[str]] = {
    ShotType.STATIC: frozenset({"pan_s", "tilt_s", "pan_e", "tilt_e", "z_0"}),
    ShotType.FLY_THROUGH: frozenset({"pan_s", "tilt_s", "pan_e", "tilt_e", "z_0"}),
    ShotType.ELEVATOR: frozenset({"z_s", "z_e"}),
    ShotType.CHASE_LEAD: frozenset({"x_s", "x_e", "z_0"}),
    ShotType.FLYBY: frozenset({"x_s", "x_e", "y_0", "z_0"}),
    ShotType.LATERAL: frozenset({"y_0", "z_0"}),
    ShotType.ESTABLISH: frozenset({"x_s", "x_e", "z_s", "z_e"}),
    ShotType.ORBIT: frozenset({"r_0", "azimuth_s", "angular_speed", "z_0"}),
}

# Parameters stored in degrees on disk and radians in memory.
ANGLE_PARAMS = frozenset({"pan_s", "pan_e", "tilt_s", "tilt_e", "azimuth_s", "angular_speed"})


@dataclass
class ShootingAction:
    """A single shot: what to film, from where, starting when."""

    id: str
    shot_type: ShotType
    framing: FramingType
    duration: float
    rt_mode: RTMode
    rt_path: list[GeoPoint] = field(default_factory=list)
    rt_speed: float = 0.0
    start_event: Optional[str] = None
    rt_id: Optional[str] = None
    st_type: STType = STType.NONE
    st_id: Optional[str] = None
    params: ShotParameters = field(default_factory=ShotParameters)


class NavKind(Enum):
    TAKE_OFF = "take_off"
    LAND = "land"
    GO_TO_WAYPOINT = "go_to_waypoint"


@dataclass
class NavigationAction:
    kind: NavKind
    waypoints: list[GeoPoint] = field(default_factory=list)
    alt: Optional[float] = None  # TakeOff target altitude, meters

    def __post_init__(self):
        if self.kind is NavKind.GO_TO_WAYPOINT and not self.waypoints:
            raise ValueError("GoToWaypoint needs at least one waypoint")
        if self.kind is NavKind.TAKE_OFF and self.alt is None:
            raise ValueError("TakeOff needs a target altitude")
        if self.kind is NavKind.LAND and (self.waypoints or self.alt is not None):
            raise ValueError("Land carries no waypoints or altitude")


Action = "NavigationAction | ShootingAction"


@dataclass
class Event:
    name: str
    timestamp: float

    def __post_init__(self):
        if not self.name:
            raise ValueError("event name must be non-empty")


@dataclass
class Mission:
    origin: GeoPoint
    shots: list[ShootingAction]
    event_estimates: dict[str, float] = field(default_factory=dict)


@dataclass
class DronePlan:
    drone_id: str
    actions: list = field(default_factory=list)  # NavigationAction | ShootingAction


def validate_plan(plan: DronePlan) -> list[str]:
    """Structural checks for a freshly planned (ground start) drone plan."""
    problems = []
    if not plan.actions:
        return ["plan has no actions"]
    first, last = plan.actions[0], plan.actions[-1]
    if not (isinstance(first, NavigationAction) and first.kind is NavKind.TAKE_OFF):
        problems.append("first action must be TakeOff")
    if not (isinstance(last, NavigationAction) and last.kind is NavKind.LAND):
        problems.append("last action must be Land")
    return problems


@dataclass(frozen=True)
class ValidationFinding:
    shot_id: Optional[str]
    rule: str

    def __str__(self):
        where = self.shot_id if self.shot_id is not None else "mission"
        return f"{where}: {self.rule}"


def validate_mission(m: Mission) -> list[ValidationFinding]:
    """Semantic validation; returns an empty list when the mission is executable."""
    findings: list[ValidationFinding] = []
    seen: set[str] = set()
    for shot in m.shots:
        if shot.id in seen:
            findings.append(ValidationFinding(shot.id, "duplicate shot id"))
        seen.add(shot.id)

        if not (shot.duration > 0.0 and math.isfinite(shot.duration)):
            findings.append(ValidationFinding(shot.id, "duration must be positive"))

        required = REQUIRED_PARAMS[shot.shot_type]
        present = shot.params.provided()
        for name in sorted(required - present):
            findings.append(
                ValidationFinding(shot.id, f"{shot.shot_type.value} requires {name}")
            )
        for name in sorted(present - required):
            findings.append(
                ValidationFinding(
                    shot.id, f"unexpected parameter {name} for {shot.shot_type.value}"
                )
            )
        if shot.params.r_0 is not None and not shot.params.r_0 > 0.0:
            findings.append(ValidationFinding(shot.id, "r_0 must be positive"))

        if shot.rt_speed < 0.0:
            findings.append(ValidationFinding(shot.id, "rt_speed must be >= 0"))

        if shot.rt_mode in (RTMode.VIRTUAL_TRAJ, RTMode.VIRTUAL_PATH) and not shot.rt_path:
            findings.append(
                ValidationFinding(shot.id, f"{shot.rt_mode.value} requires a non-empty rt_path")
            )
        if shot.rt_mode is RTMode.VIRTUAL_PATH and shot.rt_id is None:
            findings.append(ValidationFinding(shot.id, "virtual_path requires rt_id"))
        if shot.rt_mode is RTMode.ACTUAL_TARGET:
            if shot.st_id is None:
                findings.append(ValidationFinding(shot.id, "actual_target requires st_id"))
            if shot.st_type is STType.NONE:
                findings.append(
                    ValidationFinding(shot.id, "actual_target requires st_type != none")
                )
        if shot.st_type is STType.REAL and shot.st_id is None:
            findings.append(ValidationFinding(shot.id, "real shooting target requires st_id"))

        if shot.start_event is not None and shot.start_event not in m.event_estimates:
            findings.append(
                ValidationFinding(shot.id, f"no estimate for event {shot.start_event}")
            )
    return findings


# ---------------------------------------------------------------------------
# Mission file format


class MissionParseError(ValueError):
    """Schema violation; ``path`` points at the offending JSON element."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _check_keys(obj: dict, allowed: set[str], required: set[str], path: str):
    if not isinstance(obj, dict):
        raise MissionParseError(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            raise MissionParseError(f"{path}.{key}", "unknown field")
    for key in required:
        if key not in obj:
            raise MissionParseError(f"{path}.{key}", "missing required field")


def _number(obj: dict, key: str, path: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise MissionParseError(f"{path}.{key}", "expected a number")
    if not math.isfinite(float(v)):
        raise MissionParseError(f"{path}.{key}", "must be finite")
    return float(v)


def _string(obj: dict, key: str, path: str) -> str:
    v = obj[key]
    if not isinstance(v, str):
        raise MissionParseError(f"{path}.{key}", "expected a string")
    return v


def _geo_point(obj: Any, path: str) -> GeoPoint:
    _check_keys(obj, {"lat", "lon", "alt"}, {"lat", "lon"}, path)
    alt = _number(obj, "alt", path) if "alt" in obj else 0.0
    try:
        return GeoPoint(_number(obj, "lat", path), _number(obj, "lon", path), alt)
    except CoordinateError as exc:
        raise MissionParseError(path, str(exc)) from exc


def _enum(cls, obj: dict, key: str, path: str):
    raw = _string(obj, key, path)
    try:
        return cls(raw)
    except ValueError:
        valid = ", ".join(e.value for e in cls)
        raise MissionParseError(f"{path}.{key}", f"unknown value {raw!r} (one of: {valid})")


def _shot_params(obj: Any, path: str) -> ShotParameters:
    _check_keys(obj, set(PARAM_NAMES), set(), path)
    kwargs = {}
    for name in PARAM_NAMES:
        if name in obj:
            v = _number(obj, name, path)
            kwargs[name] = math.radians(v) if name in ANGLE_PARAMS else v
    return ShotParameters(**kwargs)


_SHOT_FIELDS = {
    "id", "shot_type", "framing", "start_event", "duration_s", "rt_mode",
    "rt_path", "rt_speed_ms", "rt_id", "st_type", "st_id", "params",
}
_SHOT_REQUIRED = {"id", "shot_type", "framing", "duration_s", "rt_mode", "rt_path", "st_type", "params"}


def _shot(obj: Any, path: str) -> ShootingAction:
    _check_keys(obj, _SHOT_FIELDS, _SHOT_REQUIRED, path)
    raw_path = obj["rt_path"]
    if not isinstance(raw_path, list):
        raise MissionParseError(f"{path}.rt_path", "expected a list")
    rt_path = [_geo_point(p, f"{path}.rt_path[{i}]") for i, p in enumerate(raw_path)]
    return ShootingAction(
        id=_string(obj, "id", path),
        shot_type=_enum(ShotType, obj, "shot_type", path),
        framing=_enum(FramingType, obj, "framing", path),
        duration=_number(obj, "duration_s", path),
        rt_mode=_enum(RTMode, obj, "rt_mode", path),
        rt_path=rt_path,
        rt_speed=_number(obj, "rt_speed_ms", path) if "rt_speed_ms" in obj else 0.0,
        start_event=_string(obj, "start_event", path) if "start_event" in obj else None,
        rt_id=_string(obj, "rt_id", path) if "rt_id" in obj else None,
        st_type=_enum(STType, obj, "st_type", path),
        st_id=_string(obj, "st_id", path) if "st_id" in obj else None,
        params=_shot_params(obj["params"], f"{path}.params"),
    )


def parse_mission(data: bytes | str) -> Mission:
    try:
        root = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MissionParseError("$", f"invalid JSON: {exc}") from exc
    _check_keys(root, {"origin", "event_estimates", "shots"}, {"origin", "shots"}, "$")
    origin = _geo_point(root["origin"], "$.origin")
    estimates: dict[str, float] = {}
    if "event_estimates" in root:
        raw = root["event_estimates"]
        if not isinstance(raw, dict):
            raise MissionParseError("$.event_estimates", "expected an object")
        for name, value in raw.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise MissionParseError(f"$.event_estimates.{name}", "expected a number")
            estimates[name] = float(value)
    if not isinstance(root["shots"], list):
        raise MissionParseError("$.shots", "expected a list")
    shots = [_shot(s, f"$.shots[{i}]") for i, s in enumerate(root["shots"])]
    return Mission(origin=origin, shots=shots, event_estimates=estimates)


def _angle_out(rad: float) -> float:
    # nanodegree grid keeps deg->rad->deg round trips byte-stable
    return round(math.degrees(rad), 9)


def geo_point_to_json(p: GeoPoint) -> dict:
    return {"lat": p.lat, "lon": p.lon, "alt": p.alt}


def shot_to_json(shot: ShootingAction) -> dict:
    out: dict[str, Any] = {
        "id": shot.id,
        "shot_type": shot.shot_type.value,
        "framing": shot.framing.value,
    }
    if shot.start_event is not None:
        out["start_event"] = shot.start_event
    out["duration_s"] = shot.duration
    out["rt_mode"] = shot.rt_mode.value
    out["rt_path"] = [geo_point_to_json(p) for p in shot.rt_path]
    out["rt_speed_ms"] = shot.rt_speed
    if shot.rt_id is not None:
        out["rt_id"] = shot.rt_id
    out["st_type"] = shot.st_type.value
    if shot.st_id is not None:
        out["st_id"] = shot.st_id
    params = {}
    for name in PARAM_NAMES:
        v = getattr(shot.params, name)
        if v is not None:
            params[name] = _angle_out(v) if name in ANGLE_PARAMS else v
    out["params"] = params
    return out


def shot_from_json(obj: dict, path: str = "$") -> ShootingAction:
    return _shot(obj, path)


def _nav_to_json(a: NavigationAction) -> dict:
    out: dict[str, Any] = {"nav": a.kind.value}
    if a.kind is NavKind.TAKE_OFF:
        out["alt"] = a.alt
    elif a.kind is NavKind.GO_TO_WAYPOINT:
        out["waypoints"] = [geo_point_to_json(p) for p in a.waypoints]
    return out


def _nav_from_json(obj: dict, path: str) -> NavigationAction:
    kind = _enum(NavKind, obj, "nav", path)
    if kind is NavKind.TAKE_OFF:
        _check_keys(obj, {"nav", "alt"}, {"nav", "alt"}, path)
        return NavigationAction(kind=kind, alt=_number(obj, "alt", path))
    if kind is NavKind.LAND:
        _check_keys(obj, {"nav"}, {"nav"}, path)
        return NavigationAction(kind=kind)
    _check_keys(obj, {"nav", "waypoints"}, {"nav", "waypoints"}, path)
    raw = obj["waypoints"]
    if not isinstance(raw, list) or not raw:
        raise MissionParseError(f"{path}.waypoints", "expected a non-empty list")
    wps = [_geo_point(p, f"{path}.waypoints[{i}]") for i, p in enumerate(raw)]
    return NavigationAction(kind=kind, waypoints=wps)


def plan_to_json(plan: DronePlan) -> dict:
    actions = [
        _nav_to_json(a) if isinstance(a, NavigationAction) else shot_to_json(a)
        for a in plan.actions
    ]
    return {"drone_id": plan.drone_id, "actions": actions}


def plan_from_json(obj: Any, path: str = "$") -> DronePlan:
    _check_keys(obj, {"drone_id", "actions"}, {"drone_id", "actions"}, path)
    raw = obj["actions"]
    if not isinstance(raw, list):
        raise MissionParseError(f"{path}.actions", "expected a list")
    actions = []
    for i, a in enumerate(raw):
        p = f"{path}.actions[{i}]"
        if not isinstance(a, dict):
            raise MissionParseError(p, "expected an object")
        actions.append(_nav_from_json(a, p) if "nav" in a else _shot(a, p))
    return DronePlan(drone_id=_string(obj, "drone_id", path), actions=actions)


def mission_to_json(m: Mission) -> dict:
    return {
        "origin": geo_point_to_json(m.origin),
        "event_estimates": {k: m.event_estimates[k] for k in sorted(m.event_estimates)},
        "shots": [shot_to_json(s) for s in m.shots],
    }


def serialize_mission(m: Mission) -> bytes:
    return (json.dumps(mission_to_json(m), indent=2) + "\n").encode()
