import math
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from cineswarm.geometry import GeoPoint, LocalPoint, local_to_geo
from cineswarm.model import (
    FramingType,
    Mission,
    RTMode,
    ShootingAction,
    ShotParameters,
    ShotType,
    STType,
)
from cineswarm.worldmap import Bounds, WorldMap

settings.register_profile(
    "default",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

# a flat spot in open country; every local-frame test hangs off this anchor
ORIGIN = GeoPoint(37.41, -6.0)


def geo(x: float, y: float, z: float = 0.0, origin: GeoPoint = ORIGIN) -> GeoPoint:
    """Geographic point at local meters (x east, y north)."""
    return local_to_geo(LocalPoint(x, y, z), origin)


def open_map(half: float = 200.0, bases=((0.0, -30.0),)) -> WorldMap:
    return WorldMap(
        bounds=Bounds(-half, -half, half, half),
        no_fly_zones=[],
        base_stations=[LocalPoint(x, y, 0.0) for x, y in bases],
    )


def lateral_shot(
    shot_id: str = "s1",
    rail=((0.0, 0.0), (60.0, 0.0)),
    speed: float = 2.0,
    duration: float = 10.0,
    start_event=None,
    y_0: float = -12.0,
    z_0: float = 5.0,
) -> ShootingAction:
    return ShootingAction(
        id=shot_id,
        shot_type=ShotType.LATERAL,
        framing=FramingType.MEDIUM,
        duration=duration,
        rt_mode=RTMode.VIRTUAL_TRAJ,
        rt_path=[geo(x, y) for x, y in rail],
        rt_speed=speed,
        start_event=start_event,
        st_type=STType.VIRTUAL,
        params=ShotParameters(y_0=y_0, z_0=z_0),
    )


def orbit_shot(
    shot_id: str = "orb",
    center=(0.0, 0.0),
    r_0: float = 10.0,
    duration: float = 8.0,
    angular_speed: float = math.radians(10.0),
    azimuth_s: float = 0.0,
    start_event=None,
) -> ShootingAction:
    return ShootingAction(
        id=shot_id,
        shot_type=ShotType.ORBIT,
        framing=FramingType.LONG,
        duration=duration,
        rt_mode=RTMode.VIRTUAL_TRAJ,
        rt_path=[geo(*center)],
        rt_speed=0.0,
        start_event=start_event,
        st_type=STType.VIRTUAL,
        params=ShotParameters(
            r_0=r_0, azimuth_s=azimuth_s, angular_speed=angular_speed, z_0=6.0
        ),
    )


def one_shot_mission(shot: ShootingAction, estimates=None) -> Mission:
    return Mission(origin=ORIGIN, shots=[shot], event_estimates=dict(estimates or {}))


@pytest.fixture(scope="session")
def parkour_paths():
    return SCENARIOS / "parkour.json", SCENARIOS / "parkour_map.json"


@pytest.fixture(scope="session")
def rowing_paths():
    return SCENARIOS / "rowing.json", SCENARIOS / "rowing_map.json"
