"""Mission planning: shot schedule estimation and greedy assignment.

Shots are ordered by estimated start time (event estimates; shots without a
start event chain behind their predecessor in the mission list and stay on
the same drone, forming a sequence). Each shot goes to the feasible drone
with the earliest availability; feasibility means a collision-free route
exists, the drone arrives with slack before an event-triggered start, the
shot interval does not overlap previous assignments, and the projected
flight time (travel at max speed + shot durations + waits + return leg)
stays within the battery budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .astar import NoPathError, astar_path
from .geometry import GeoPoint, LocalPoint, Polyline, geo_to_local, local_to_geo, rotate_z
from .model import (
    DronePlan,
    Mission,
    NavigationAction,
    NavKind,
    RTMode,
    ShootingAction,
)
from .shots import shot_offset
from .trailer import local_rt_path
from .worldmap import DroneSpec, WorldMap

DEFAULT_SLACK = 10.0
DEFAULT_TRANSIT_ALT = 15.0
DEFAULT_CELL = 2.0
_TAKEOFF_SPEED_FACTOR = 0.5  # climb speed as a fraction of max speed


def shot_endpoints(a: ShootingAction, origin: GeoPoint) -> tuple[LocalPoint, LocalPoint]:
    """Estimated drone positions at the start and end of shot ``a``.

    The reference frame is advanced along rt_path at rt_speed (for
    actual-target mode rt_speed doubles as the route speed estimate), so
    this is a planning estimate, not the executed trajectory.
    """
    rail = Polyline(local_rt_path(a, origin))

    def at(t: float) -> LocalPoint:
        s = a.rt_speed * t
        pos = rail.point_at(s)
        heading = rail.heading_at(s)
        offset, _ = shot_offset(a.shot_type, a.params, t, a.duration)
        return pos + rotate_z(offset, heading)

    return at(0.0), at(a.duration)


@dataclass
class ShotWindow:
    start: float
    end: float
    chained_to: Optional[str] = None  # predecessor shot id for event-less shots
    event_fired: bool = False


def estimate_schedule(
    m: Mission,
    now: float = 0.0,
    fired_events: Optional[dict[str, float]] = None,
) -> dict[str, ShotWindow]:
    """Estimated execution window per shot id.

    Event-triggered shots start at the event estimate (or as soon as
    possible when the event already fired); shots without an event start
    right after the previous shot in the list.
    """
    fired = fired_events or {}
    windows: dict[str, ShotWindow] = {}
    prev: Optional[ShootingAction] = None
    prev_end = now
    for shot in m.shots:
        chained_to = None
        if shot.start_event is not None:
            if shot.start_event in fired:
                start = max(now, fired[shot.start_event])
                event_fired = True
            else:
                start = m.event_estimates.get(shot.start_event, now)
                event_fired = False
        else:
            start = prev_end
            event_fired = False
            if prev is not None:
                chained_to = prev.id
        windows[shot.id] = ShotWindow(
            start=start, end=start + shot.duration,
            chained_to=chained_to, event_fired=event_fired,
        )
        prev = shot
        prev_end = windows[shot.id].end
    return windows


@dataclass
class PlanStartState:
    """Where a drone begins planning from (used for re-planning)."""

    position: LocalPoint
    available_at: float = 0.0
    airborne: bool = False
    budget_left: Optional[float] = None


@dataclass
class PlanResult:
    plans: list[DronePlan]
    uncovered: list[tuple[str, str]] = field(default_factory=list)  # (shot_id, reason)
    warnings: list[str] = field(default_factory=list)
    assignments: dict[str, str] = field(default_factory=dict)  # shot_id -> drone_id
    schedule: dict[str, ShotWindow] = field(default_factory=dict)

    def plan_for(self, drone_id: str) -> Optional[DronePlan]:
        for p in self.plans:
            if p.drone_id == drone_id:
                return p
        return None


@dataclass
class _DroneLedger:
    spec: DroneSpec
    position: LocalPoint
    available_at: float
    airborne: bool
    budget_left: float
    intervals: list[tuple[float, float]] = field(default_factory=list)
    assigned: list = field(default_factory=list)  # (shot, start_pos, end_pos)

    def overlaps(self, start: float, end: float) -> bool:
        return any(s < end and start < e for s, e in self.intervals)


def _route(
    world_map: WorldMap, frm: LocalPoint, to: LocalPoint, cell: float
) -> list[LocalPoint]:
    return astar_path(world_map, frm, to, cell=cell, smooth=True)


def _route_length(path: list[LocalPoint]) -> float:
    return sum(a.distance_to(b) for a, b in zip(path, path[1:]))


def _nearest_base_route(
    world_map: WorldMap, frm: LocalPoint, cell: float
) -> Optional[tuple[LocalPoint, list[LocalPoint]]]:
    stations = sorted(
        world_map.base_stations, key=lambda s: (frm - s).norm_2d()
    )
    for station in stations:
        try:
            return station, _route(world_map, frm, station.with_z(frm.z), cell)
        except NoPathError:
            continue
    return None


def plan_mission(
    m: Mission,
    drones: list[DroneSpec],
    world_map: WorldMap,
    slack: float = DEFAULT_SLACK,
    cell: float = DEFAULT_CELL,
    transit_alt: float = DEFAULT_TRANSIT_ALT,
    now: float = 0.0,
    initial_states: Optional[dict[str, PlanStartState]] = None,
    fired_events: Optional[dict[str, float]] = None,
    anchors: Optional[dict[str, str]] = None,
    schedule: Optional[dict[str, ShotWindow]] = None,
) -> PlanResult:
    """Greedy assignment of mission shots to drones.

    ``initial_states`` overrides where drones start (re-planning mid-flight);
    ``anchors`` pins specific shots to specific drones (continuations whose
    predecessor is already executing elsewhere).
    """
    initial_states = initial_states or {}
    anchors = anchors or {}
    windows = schedule if schedule is not None else estimate_schedule(m, now, fired_events)
    result = PlanResult(plans=[], schedule=windows)

    ledgers: dict[str, _DroneLedger] = {}
    for spec in drones:
        st = initial_states.get(spec.drone_id)
        ledgers[spec.drone_id] = _DroneLedger(
            spec=spec,
            position=st.position if st else spec.home,
            available_at=st.available_at if st else now,
            airborne=st.airborne if st else False,
            budget_left=(
                st.budget_left if st and st.budget_left is not None
                else spec.flight_time_budget
            ),
        )

    order = sorted(
        range(len(m.shots)), key=lambda i: (windows[m.shots[i].id].start, i)
    )

    for i in order:
        shot = m.shots[i]
        win = windows[shot.id]

        if shot.rt_mode is RTMode.ACTUAL_TARGET:
            if not shot.rt_path:
                result.uncovered.append((shot.id, "no route estimate for actual target"))
                continue
            result.warnings.append(
                f"{shot.id}: actual-target route estimated from rt_path at rt_speed"
            )
        try:
            start_pos, end_pos = shot_endpoints(shot, m.origin)
        except Exception as exc:  # geometry errors surface as uncovered shots
            result.uncovered.append((shot.id, f"endpoint estimation failed: {exc}"))
            continue

        # a continuation must ride the same drone as its predecessor
        forced: Optional[str] = anchors.get(shot.id)
        if forced is None and win.chained_to is not None:
            forced = result.assignments.get(win.chained_to)
            if forced is None:
                result.uncovered.append(
                    (shot.id, f"follows uncovered shot {win.chained_to}")
                )
                continue
        if forced is not None and forced not in ledgers:
            result.uncovered.append((shot.id, f"anchored to unavailable drone {forced}"))
            continue

        candidates = [ledgers[forced]] if forced else list(ledgers.values())
        must_wait_for_event = shot.start_event is not None and not win.event_fired

        best: Optional[_DroneLedger] = None
        best_key: Optional[tuple] = None
        best_start = 0.0
        for led in candidates:
            try:
                approach = _route(world_map, led.position, start_pos, cell)
            except NoPathError:
                continue
            travel = _route_length(approach) / led.spec.max_speed
            if not led.airborne:
                travel += transit_alt / (_TAKEOFF_SPEED_FACTOR * led.spec.max_speed)
            arrival = led.available_at + travel
            if must_wait_for_event:
                # the slack margin gates fresh assignments only; a forced
                # continuation is already committed (often already on site)
                if forced is None and arrival > win.start - slack:
                    continue
                actual_start = win.start
            else:
                actual_start = max(arrival, win.start)
            end = actual_start + shot.duration
            if led.overlaps(actual_start, end):
                continue
            ret = _nearest_base_route(world_map, end_pos, cell)
            ret_time = (
                _route_length(ret[1]) / led.spec.max_speed if ret else 0.0
            )
            if end + ret_time - now > led.budget_left:
                continue
            key = (led.available_at, led.spec.drone_id)
            if best_key is None or key < best_key:
                best, best_key, best_start = led, key, actual_start
        if best is None:
            result.uncovered.append((shot.id, "no feasible drone"))
            continue

        best.intervals.append((best_start, best_start + shot.duration))
        best.position = end_pos
        best.available_at = best_start + shot.duration
        best.airborne = True
        best.assigned.append((shot, start_pos, end_pos))
        result.assignments[shot.id] = best.spec.drone_id
        # keep downstream chained estimates in sync with the realized start
        windows[shot.id] = ShotWindow(
            start=best_start, end=best_start + shot.duration,
            chained_to=win.chained_to, event_fired=win.event_fired,
        )
        _repair_chain_estimates(m, windows, shot.id)

    for drone_id in sorted(ledgers):
        led = ledgers[drone_id]
        if not led.assigned:
            continue
        plan = _build_plan(
            m.origin, world_map, led, initial_states.get(drone_id),
            cell, transit_alt,
        )
        result.plans.append(plan)
    return result


def _repair_chain_estimates(m: Mission, windows: dict[str, ShotWindow], changed_id: str):
    # push realized delays through the chain of event-less successors
    by_id = {s.id: idx for idx, s in enumerate(m.shots)}
    idx = by_id[changed_id]
    prev_end = windows[changed_id].end
    for shot in m.shots[idx + 1:]:
        win = windows[shot.id]
        if win.chained_to is None:
            break
        if win.start < prev_end:
            windows[shot.id] = ShotWindow(
                start=prev_end, end=prev_end + shot.duration,
                chained_to=win.chained_to, event_fired=win.event_fired,
            )
        prev_end = windows[shot.id].end


def _waypoints_for_leg(
    path: list[LocalPoint], transit_alt: float, target: LocalPoint
) -> list[LocalPoint]:
    # intermediate corners fly at transit altitude; the last point is exact
    pts = path[1:] if len(path) > 1 else [target]
    out = [p.with_z(transit_alt) for p in pts[:-1]]
    out.append(target)
    return out


def _build_plan(
    origin: GeoPoint,
    world_map: WorldMap,
    led: _DroneLedger,
    start_state: Optional[PlanStartState],
    cell: float,
    transit_alt: float,
) -> DronePlan:
    actions: list = []
    airborne = start_state.airborne if start_state else False
    pos = start_state.position if start_state else led.spec.home
    if not airborne:
        actions.append(NavigationAction(kind=NavKind.TAKE_OFF, alt=transit_alt))
        pos = pos.with_z(transit_alt)

    for shot, start_pos, end_pos in led.assigned:
        if (pos - start_pos).norm() > 0.5:
            path = _route(world_map, pos, start_pos, cell)
            wps = _waypoints_for_leg(path, transit_alt, start_pos)
            actions.append(
                NavigationAction(
                    kind=NavKind.GO_TO_WAYPOINT,
                    waypoints=[local_to_geo(p, origin) for p in wps],
                )
            )
        actions.append(shot)
        pos = end_pos

    ret = _nearest_base_route(world_map, pos, cell)
    if ret is not None:
        station, path = ret
        wps = _waypoints_for_leg(path, transit_alt, station.with_z(transit_alt))
        actions.append(
            NavigationAction(
                kind=NavKind.GO_TO_WAYPOINT,
                waypoints=[local_to_geo(p, origin) for p in wps],
            )
        )
    actions.append(NavigationAction(kind=NavKind.LAND))
    return DronePlan(drone_id=led.spec.drone_id, actions=actions)


def wind_down_plan(
    origin: GeoPoint,
    world_map: WorldMap,
    drone_id: str,
    position: LocalPoint,
    cell: float = DEFAULT_CELL,
    transit_alt: float = DEFAULT_TRANSIT_ALT,
) -> DronePlan:
    """Route an airborne drone with nothing left to film back to a base.

    Falls back to landing in place when no station is reachable."""
    actions: list = []
    ret = _nearest_base_route(world_map, position, cell)
    if ret is not None:
        station, path = ret
        wps = _waypoints_for_leg(path, transit_alt, station.with_z(transit_alt))
        actions.append(
            NavigationAction(
                kind=NavKind.GO_TO_WAYPOINT,
                waypoints=[local_to_geo(p, origin) for p in wps],
            )
        )
    actions.append(NavigationAction(kind=NavKind.LAND))
    return DronePlan(drone_id=drone_id, actions=actions)
