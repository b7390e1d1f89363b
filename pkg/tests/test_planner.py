import math

import pytest

from cineswarm.geometry import LocalPoint
from cineswarm.model import Mission, NavigationAction, NavKind, ShootingAction
from cineswarm.planner import (
    PlanStartState,
    ShotWindow,
    estimate_schedule,
    plan_mission,
    shot_endpoints,
    wind_down_plan,
)
from cineswarm.worldmap import Bounds, DroneSpec, WorldMap

from .conftest import ORIGIN, geo, lateral_shot, open_map, orbit_shot


def mission(*shots, estimates=None) -> Mission:
    return Mission(origin=ORIGIN, shots=list(shots), event_estimates=dict(estimates or {}))


def spec(drone_id="d1", home=(0.0, -30.0), **kw) -> DroneSpec:
    return DroneSpec(drone_id=drone_id, home=LocalPoint(*home, 0.0), **kw)


def kinds(plan):
    return [
        a.kind if isinstance(a, NavigationAction) else a.id for a in plan.actions
    ]


# -- endpoint estimation ---------------------------------------------------------


def test_lateral_endpoints_ride_the_rail():
    a = lateral_shot(rail=((0, 0), (60, 0)), speed=2.0, duration=10.0)
    start, end = shot_endpoints(a, ORIGIN)
    assert start.x == pytest.approx(0.0, abs=1e-6)
    assert start.y == pytest.approx(-12.0, abs=1e-6)
    assert start.z == pytest.approx(5.0)
    assert end.x == pytest.approx(20.0, abs=1e-6)
    assert end.y == pytest.approx(-12.0, abs=1e-6)


def test_orbit_endpoints_on_the_circle():
    a = orbit_shot(center=(10, 10), r_0=8.0, azimuth_s=0.0,
                   angular_speed=math.radians(45) / 4, duration=4.0)
    start, end = shot_endpoints(a, ORIGIN)
    assert start.x == pytest.approx(18.0, abs=1e-6)
    assert start.y == pytest.approx(10.0, abs=1e-6)
    assert end.x == pytest.approx(10 + 8 * math.cos(math.radians(45)), abs=1e-6)
    assert end.y == pytest.approx(10 + 8 * math.sin(math.radians(45)), abs=1e-6)


# -- schedule estimation -----------------------------------------------------------


def test_chained_shots_stack_back_to_back():
    m = mission(
        lateral_shot("a", duration=10.0),
        lateral_shot("b", duration=5.0),
        lateral_shot("c", duration=2.0),
    )
    w = estimate_schedule(m)
    assert (w["a"].start, w["a"].end) == (0.0, 10.0)
    assert (w["b"].start, w["b"].end) == (10.0, 15.0)
    assert w["b"].chained_to == "a"
    assert (w["c"].start, w["c"].end) == (15.0, 17.0)
    assert w["c"].chained_to == "b"


def test_event_shot_uses_estimate_and_resets_chain():
    m = mission(
        lateral_shot("a", duration=10.0),
        lateral_shot("b", duration=5.0, start_event="GO"),
        lateral_shot("c", duration=2.0),
        estimates={"GO": 25.0},
    )
    w = estimate_schedule(m)
    assert w["b"].start == 25.0
    assert w["b"].chained_to is None
    assert not w["b"].event_fired
    assert w["c"].start == 30.0  # chains behind the event shot
    assert w["c"].chained_to == "b"


def test_fired_event_starts_now():
    m = mission(lateral_shot("a", start_event="GO"), estimates={"GO": 99.0})
    w = estimate_schedule(m, now=40.0, fired_events={"GO": 35.0})
    assert w["a"].start == 40.0  # event long gone: start immediately
    assert w["a"].event_fired


def test_missing_estimate_defaults_to_now():
    m = mission(lateral_shot("a", start_event="GO"))
    w = estimate_schedule(m, now=7.0)
    assert w["a"].start == 7.0


# -- assignment ---------------------------------------------------------------------


def test_single_drone_single_shot_plan_shape():
    res = plan_mission(mission(lateral_shot("a")), [spec()], open_map())
    assert res.uncovered == []
    assert res.assignments == {"a": "d1"}
    plan = res.plan_for("d1")
    assert kinds(plan) == [
        NavKind.TAKE_OFF, NavKind.GO_TO_WAYPOINT, "a",
        NavKind.GO_TO_WAYPOINT, NavKind.LAND,
    ]


def test_chained_shots_stay_on_one_drone():
    m = mission(
        lateral_shot("a", duration=5.0),
        lateral_shot("b", rail=((0, 40), (60, 40)), duration=5.0),
    )
    res = plan_mission(m, [spec("d1"), spec("d2", home=(5.0, -30.0))], open_map())
    assert res.uncovered == []
    assert res.assignments == {"a": "d1", "b": "d1"}
    assert res.plan_for("d2") is None


def test_overlapping_event_shots_fan_out():
    m = mission(
        lateral_shot("a", start_event="GO", duration=10.0),
        lateral_shot("b", rail=((0, 40), (60, 40)), start_event="GO", duration=10.0),
        estimates={"GO": 60.0},
    )
    res = plan_mission(m, [spec("d1"), spec("d2", home=(5.0, -30.0))], open_map())
    assert res.uncovered == []
    assert res.assignments == {"a": "d1", "b": "d2"}
    assert res.schedule["a"].start == 60.0
    assert res.schedule["b"].start == 60.0


def test_event_slack_gate():
    # 10 s of slack required: an estimate 12 s out is not enough to commit
    m = mission(lateral_shot("a", start_event="GO"), estimates={"GO": 12.0})
    res = plan_mission(m, [spec()], open_map())
    assert res.assignments == {}
    assert res.uncovered == [("a", "no feasible drone")]
    # with a comfortable estimate the same drone takes it
    m2 = mission(lateral_shot("a", start_event="GO"), estimates={"GO": 60.0})
    assert plan_mission(m2, [spec()], open_map()).assignments == {"a": "d1"}


def test_anchored_shot_skips_the_slack_gate():
    m = mission(lateral_shot("a", start_event="GO"), estimates={"GO": 12.0})
    res = plan_mission(m, [spec()], open_map(), anchors={"a": "d1"})
    assert res.assignments == {"a": "d1"}


def test_anchor_to_missing_drone_is_uncovered():
    m = mission(lateral_shot("a"))
    res = plan_mission(m, [spec("d1")], open_map(), anchors={"a": "ghost"})
    assert res.uncovered == [("a", "anchored to unavailable drone ghost")]


def test_follower_of_uncovered_shot_is_uncovered():
    m = mission(
        lateral_shot("a", start_event="GO", duration=5.0),
        lateral_shot("b", duration=5.0),
        estimates={"GO": 2.0},  # hopeless slack
    )
    res = plan_mission(m, [spec()], open_map())
    assert ("a", "no feasible drone") in res.uncovered
    assert ("b", "follows uncovered shot a") in res.uncovered


def test_budget_gate():
    m = mission(lateral_shot("a", duration=30.0))
    res = plan_mission(
        m, [spec()], open_map(),
        initial_states={"d1": PlanStartState(
            position=LocalPoint(0, -30, 15), airborne=True, budget_left=20.0,
        )},
    )
    assert res.uncovered == [("a", "no feasible drone")]


def test_unreachable_start_is_uncovered():
    walled = WorldMap(
        bounds=Bounds(-200, -200, 200, 200),
        no_fly_zones=[[
            LocalPoint(-40, -25), LocalPoint(40, -25),
            LocalPoint(40, 25), LocalPoint(-40, 25),
        ]],
        base_stations=[LocalPoint(0, -60, 0.0)],
    )
    # the rail offset puts the shot entry inside the blocked square
    m = mission(lateral_shot("a", rail=((0, 12), (60, 12))))
    res = plan_mission(m, [spec(home=(0.0, -60.0))], walled)
    assert res.uncovered == [("a", "no feasible drone")]


def test_actual_target_without_route_estimate():
    from dataclasses import replace
    from cineswarm.model import RTMode

    bare = replace(lateral_shot("a"), rt_mode=RTMode.ACTUAL_TARGET, st_id="boat", rt_path=[])
    res = plan_mission(mission(bare), [spec()], open_map())
    assert res.uncovered == [("a", "no route estimate for actual target")]
    tracked = replace(lateral_shot("a"), rt_mode=RTMode.ACTUAL_TARGET, st_id="boat")
    res = plan_mission(mission(tracked), [spec()], open_map())
    assert res.assignments == {"a": "d1"}
    assert any("route estimated" in w for w in res.warnings)


def test_airborne_start_skips_takeoff():
    res = plan_mission(
        mission(lateral_shot("a")), [spec()], open_map(),
        initial_states={"d1": PlanStartState(
            position=LocalPoint(2, -10, 15), airborne=True,
        )},
    )
    plan = res.plan_for("d1")
    assert kinds(plan)[0] is NavKind.GO_TO_WAYPOINT
    assert NavKind.TAKE_OFF not in kinds(plan)


def test_realized_delay_pushes_chained_followers():
    # travel forces the first shot to start later than its naive estimate;
    # the follower's window moves with it
    far = lateral_shot("a", rail=((150, 150), (180, 150)), duration=5.0)
    follower = lateral_shot("b", rail=((150, 120), (180, 120)), duration=5.0)
    res = plan_mission(mission(far, follower), [spec()], open_map(half=400.0))
    assert res.uncovered == []
    assert res.schedule["a"].start > 10.0  # far corner, well past t=0
    # the follower starts after the predecessor ends plus its transfer leg
    assert res.schedule["b"].start >= res.schedule["a"].end
    assert res.schedule["b"].end == pytest.approx(res.schedule["b"].start + 5.0)


def test_consecutive_shots_at_same_spot_skip_the_transfer_leg():
    a = lateral_shot("a", rail=((0, 0), (60, 0)), speed=0.0, duration=5.0)
    b = lateral_shot("b", rail=((0, 0), (60, 0)), speed=0.0, duration=5.0)
    res = plan_mission(mission(a, b), [spec()], open_map())
    plan = res.plan_for("d1")
    assert kinds(plan) == [
        NavKind.TAKE_OFF, NavKind.GO_TO_WAYPOINT, "a", "b",
        NavKind.GO_TO_WAYPOINT, NavKind.LAND,
    ]


def test_wind_down_routes_home():
    plan = wind_down_plan(ORIGIN, open_map(), "d1", LocalPoint(50, 50, 15))
    assert [a.kind for a in plan.actions] == [NavKind.GO_TO_WAYPOINT, NavKind.LAND]
    last_wp = plan.actions[0].waypoints[-1]
    from cineswarm.geometry import geo_to_local

    p = geo_to_local(last_wp, ORIGIN)
    assert p.x == pytest.approx(0.0, abs=1e-6)
    assert p.y == pytest.approx(-30.0, abs=1e-6)


def test_wind_down_without_stations_just_lands():
    bare = WorldMap(bounds=Bounds(-200, -200, 200, 200))
    plan = wind_down_plan(ORIGIN, bare, "d1", LocalPoint(50, 50, 15))
    assert [a.kind for a in plan.actions] == [NavKind.LAND]
