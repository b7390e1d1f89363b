#!/usr/bin/env python3
"""Regenerate the bundled scenario files in scenarios/.

Shot geometry is authored in local meters around each site origin and
converted to lat/lon on output, so edits stay readable. Run from anywhere:

    python3 scripts/make_scenarios.py
"""

from __future__ import annotations

import math
import pathlib

from cineswarm.geometry import GeoPoint, LocalPoint, local_to_geo
from cineswarm.model import (
    ANGLE_PARAMS,
    FramingType,
    Mission,
    RTMode,
    ShootingAction,
    ShotParameters,
    ShotType,
    STType,
    serialize_mission,
)
from cineswarm.worldmap import Bounds, WorldMap, serialize_map

OUT_DIR = pathlib.Path(__file__).resolve().parent.parent / "scenarios"


def rail(origin: GeoPoint, *xy: tuple[float, float]) -> list[GeoPoint]:
    return [local_to_geo(LocalPoint(x, y, 0.0), origin) for x, y in xy]


def deg(**kwargs: float) -> ShotParameters:
    # authored in degrees here, stored in radians in memory (like the parser)
    return ShotParameters(
        **{k: math.radians(v) if k in ANGLE_PARAMS else v for k, v in kwargs.items()}
    )


def parkour() -> tuple[Mission, WorldMap]:
    """Two drones cover a street parkour run: a fly-through and a flyby on
    the athlete's line, plus a static wide, a lateral and a quarter orbit."""
    origin = GeoPoint(37.41, -6.0)

    shots = [
        ShootingAction(
            id="ft1",
            shot_type=ShotType.FLY_THROUGH,
            framing=FramingType.MEDIUM,
            duration=12.0,
            rt_mode=RTMode.VIRTUAL_TRAJ,
            rt_path=rail(origin, (0.0, 12.0), (36.0, 12.0)),
            rt_speed=3.0,
            start_event="START_RACE",
            st_type=STType.NONE,
            params=deg(pan_s=0.0, pan_e=0.0, tilt_s=-30.0, tilt_e=-60.0, z_0=6.0),
        ),
        ShootingAction(
            id="fb2",
            shot_type=ShotType.FLYBY,
            framing=FramingType.MEDIUM,
            duration=14.0,
            rt_mode=RTMode.VIRTUAL_TRAJ,
            rt_path=rail(origin, (5.0, 0.0), (55.0, 0.0)),
            rt_speed=2.5,
            st_type=STType.VIRTUAL,
            params=deg(x_s=18.0, x_e=-18.0, y_0=-8.0, z_0=4.0),
        ),
        ShootingAction(
            id="st3",
            shot_type=ShotType.STATIC,
            framing=FramingType.LONG,
            duration=10.0,
            rt_mode=RTMode.VIRTUAL_TRAJ,
            rt_path=rail(origin, (30.0, 6.0), (40.0, 6.0)),
            rt_speed=0.0,
            start_event="START_RACE",
            st_type=STType.NONE,
            params=deg(pan_s=-30.0, pan_e=30.0, tilt_s=-50.0, tilt_e=-15.0, z_0=12.0),
        ),
        ShootingAction(
            id="lt4",
            shot_type=ShotType.LATERAL,
            framing=FramingType.MEDIUM,
            duration=16.0,
            rt_mode=RTMode.VIRTUAL_TRAJ,
            rt_path=rail(origin, (36.0, 12.0), (60.0, 12.0)),
            rt_speed=1.5,
            st_type=STType.VIRTUAL,
            params=deg(y_0=-12.0, z_0=3.0),
        ),
        ShootingAction(
            id="ob5",
            shot_type=ShotType.ORBIT,
            framing=FramingType.LONG,
            duration=20.0,
            rt_mode=RTMode.VIRTUAL_TRAJ,
            rt_path=rail(origin, (60.0, 12.0), (70.0, 12.0)),
            rt_speed=0.0,
            st_type=STType.VIRTUAL,
            params=deg(r_0=12.0, azimuth_s=-90.0, angular_speed=4.5, z_0=8.0),
        ),
    ]
    mission = Mission(origin=origin, shots=shots, event_estimates={"START_RACE": 20.0})

    world = WorldMap(
        bounds=Bounds(-40.0, -40.0, 100.0, 40.0),
        no_fly_zones=[
            # spectator area south of the flyby line
            [LocalPoint(14.0, -30.0), LocalPoint(30.0, -30.0),
             LocalPoint(30.0, -16.0), LocalPoint(14.0, -16.0)],
        ],
        base_stations=[LocalPoint(-12.0, 18.0), LocalPoint(0.0, -10.0)],
    )
    return mission, world


def rowing() -> tuple[Mission, WorldMap]:
    """Regatta coverage: one drone holds a 50 m lateral on the lead boat
    (live GPS), the other pulls an establishing shot back along the course."""
    origin = GeoPoint(37.42, -5.99)

    course = rail(origin, (0.0, 40.0), (150.0, 40.0))
    shots = [
        ShootingAction(
            id="lat_boat",
            shot_type=ShotType.LATERAL,
            framing=FramingType.LONG,
            duration=40.0,
            rt_mode=RTMode.ACTUAL_TARGET,
            rt_path=course,
            rt_speed=3.0,
            start_event="GO",
            st_type=STType.REAL,
            st_id="boat_1",
            params=deg(y_0=-50.0, z_0=3.0),
        ),
        ShootingAction(
            id="est_course",
            shot_type=ShotType.ESTABLISH,
            framing=FramingType.LONG,
            duration=30.0,
            rt_mode=RTMode.VIRTUAL_TRAJ,
            rt_path=course,
            rt_speed=3.0,
            start_event="GO",
            st_type=STType.VIRTUAL,
            params=deg(x_s=-20.0, x_e=-35.0, z_s=8.0, z_e=20.0),
        ),
    ]
    mission = Mission(origin=origin, shots=shots, event_estimates={"GO": 25.0})

    world = WorldMap(
        bounds=Bounds(-60.0, -80.0, 220.0, 100.0),
        no_fly_zones=[
            # bank-side spectators
            [LocalPoint(40.0, -40.0), LocalPoint(120.0, -40.0),
             LocalPoint(120.0, -20.0), LocalPoint(40.0, -20.0)],
        ],
        base_stations=[LocalPoint(-20.0, -20.0), LocalPoint(-20.0, 0.0)],
    )
    return mission, world


def main():
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for name, build in (("parkour", parkour), ("rowing", rowing)):
        mission, world = build()
        (OUT_DIR / f"{name}.json").write_bytes(serialize_mission(mission))
        (OUT_DIR / f"{name}_map.json").write_bytes(serialize_map(world))
        print(f"wrote {name}.json / {name}_map.json ({len(mission.shots)} shots)")


if __name__ == "__main__":
    main()
