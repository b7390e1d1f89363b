"""Per-drone event-synchronized mission scheduler.

One scheduler runs on each drone. It walks the plan's action list, hovers
while waiting for start events, runs the shot geometry while shooting, and
owns the emergency behavior (cancel everything, route to the nearest base
station, land). Events are latched permanently: an event that arrives early
simply makes the eventual wait a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .astar import NoPathError, astar_path
from .control import CameraCommand
from .geometry import (
    GeoPoint,
    LocalPoint,
    Polyline,
    geo_to_local,
    heading_of,
    local_to_geo,
)
from .model import (
    DronePlan,
    Event,
    NavigationAction,
    NavKind,
    RTMode,
    ShootingAction,
    STType,
)
from .shots import ReferenceSetpoint, reference_setpoint
from .trailer import StaleTargetError, TargetEstimate, TrailerState, rt_frame
from .worldmap import WorldMap


class Phase(Enum):
    IDLE = "idle"
    NAVIGATING = "navigating"
    WAITING_EVENT = "waiting_event"
    SHOOTING = "shooting"
    EMERGENCY = "emergency"
    DONE = "done"


class EmergencyKind(Enum):
    LOW_BATTERY = "low_battery"
    GPS_LOSS = "gps_loss"


@dataclass
class SchedulerConfig:
    status_period: float = 0.25
    wp_tolerance: float = 1.5      # intermediate waypoints can be loose
    final_tolerance: float = 0.3   # last waypoint feeds a shot entry point
    alt_tolerance: float = 0.4
    land_z: float = 0.25
    link_length: float = 3.0
    cell: float = 2.0
    max_ff: float = 8.0
    min_return_alt: float = 3.0


@dataclass
class SchedulerState:
    drone_id: str
    plan: Optional[DronePlan] = None
    action_index: int = 0
    phase: Phase = Phase.IDLE
    shot_elapsed: float = 0.0
    latched_events: set[str] = field(default_factory=set)
    emergency_kind: Optional[EmergencyKind] = None


@dataclass
class StatusReport:
    drone_id: str
    phase: Phase
    action_index: int
    position: LocalPoint
    battery: float
    t: float


@dataclass
class TickOutput:
    setpoint: Optional[ReferenceSetpoint] = None
    camera_point: Optional[LocalPoint] = None  # where the gimbal should look
    camera_events: list[tuple[CameraCommand, Optional[float]]] = field(default_factory=list)
    status: Optional[StatusReport] = None
    notes: list[str] = field(default_factory=list)


# maps a target id to the latest estimate, or None if never seen
TargetProvider = Callable[[str], Optional[TargetEstimate]]


class Scheduler:
    def __init__(
        self,
        drone_id: str,
        origin: GeoPoint,
        world_map: WorldMap,
        cfg: Optional[SchedulerConfig] = None,
    ):
        self.cfg = cfg if cfg is not None else SchedulerConfig()
        self.origin = origin
        self.world_map = world_map
        self.state = SchedulerState(drone_id=drone_id)
        self._pending_plan: Optional[DronePlan] = None
        self._wp_local: list[LocalPoint] = []
        self._wp_index = 0
        self._anchor: Optional[LocalPoint] = None  # xy hold for takeoff/land
        self._hover: Optional[LocalPoint] = None
        self._hover_yaw = 0.0
        self._rail: Optional[Polyline] = None
        self._trailer = TrailerState()
        self._shot_started = False
        self._emergency_active = False
        self._next_status = 0.0
        self.completed_shots: set[str] = set()

    @property
    def terminal(self) -> bool:
        """True once this drone will never act again (plan exhausted, or
        emergency sequence flown to its end)."""
        if self.state.phase is Phase.DONE:
            return True
        return self._emergency_active and self._current_action() is None

    # ------------------------------------------------------------------ inputs

    def handle_event(self, e: Event):
        """Latch the event; release a matching pending wait immediately."""
        self.state.latched_events.add(e.name)
        if self.state.phase is Phase.WAITING_EVENT:
            shot = self._current_action()
            if isinstance(shot, ShootingAction) and shot.start_event == e.name:
                self._start_shot(shot)

    def adopt_plan(self, plan: DronePlan, position: Optional[LocalPoint] = None) -> bool:
        """Take a new plan. A shot in progress is never interrupted: when the
        new plan carries the same shot (the station re-sends it at the head
        on re-plans) execution continues in place and only the tail changes;
        when it does not, the shot finishes before the new actions begin.
        Navigation legs and event waits are superseded right away. Emergency
        drones reject plans entirely."""
        if self._emergency_active:
            return False
        st = self.state
        if st.phase is Phase.SHOOTING:
            cur = self._current_action()
            spot = next(
                (j for j, a in enumerate(plan.actions)
                 if isinstance(a, ShootingAction) and a.id == cur.id),
                None,
            )
            if spot is None:
                self._pending_plan = plan
            else:
                st.plan = plan
                st.action_index = spot
                self._pending_plan = None
            return True
        self._pending_plan = None
        st.plan = plan
        st.action_index = 0
        if st.phase in (Phase.IDLE, Phase.DONE):
            st.phase = Phase.IDLE
        else:
            self._begin_action(position if position is not None else self._hover)
        return True

    def handle_emergency(self, kind: EmergencyKind, position: LocalPoint) -> list[str]:
        """Abort everything and head for the nearest reachable base station."""
        if self._emergency_active:
            return []
        notes: list[str] = []
        self._emergency_active = True
        self.state.emergency_kind = kind
        self.state.phase = Phase.EMERGENCY
        self._pending_plan = None
        actions = self._route_to_base(position)
        if actions is None:
            notes.append("no reachable base station, landing in place")
            actions = [NavigationAction(kind=NavKind.LAND)]
        self.state.plan = DronePlan(drone_id=self.state.drone_id, actions=actions)
        self.state.action_index = 0
        self._begin_action(position)
        return notes

    def handle_stop(self, position: LocalPoint):
        """Director abort: drop pending actions, return to base, land."""
        if self._emergency_active or self.state.phase is Phase.DONE:
            return
        if self.state.phase is Phase.IDLE:
            self.state.phase = Phase.DONE
            return
        self._pending_plan = None
        actions = self._route_to_base(position)
        if actions is None:
            actions = [NavigationAction(kind=NavKind.LAND)]
        self.state.plan = DronePlan(drone_id=self.state.drone_id, actions=actions)
        self.state.action_index = 0
        self._begin_action(position)

    # ------------------------------------------------------------------- tick

    def tick(
        self,
        now: float,
        dt: float,
        position: LocalPoint,
        yaw: float,
        battery: float,
        targets: TargetProvider,
    ) -> TickOutput:
        out = TickOutput()
        st = self.state

        if st.phase is Phase.IDLE and st.plan is not None and st.plan.actions:
            self._begin_action(position)

        action = self._current_action()
        if action is None:
            if st.plan is not None and not self._emergency_active:
                st.phase = Phase.DONE
        elif isinstance(action, NavigationAction):
            self._tick_nav(action, position, yaw, out)
        elif st.phase is Phase.WAITING_EVENT:
            hover = self._hover if self._hover is not None else position
            out.setpoint = ReferenceSetpoint(
                position=hover, yaw=self._hover_yaw,
                velocity_ff=LocalPoint(0.0, 0.0, 0.0),
            )
        else:
            self._tick_shot(action, position, yaw, dt, targets, out)

        if now >= self._next_status - 1e-9:
            self._next_status = now + self.cfg.status_period
            out.status = StatusReport(
                drone_id=st.drone_id, phase=st.phase,
                action_index=st.action_index, position=position,
                battery=battery, t=now,
            )
        return out

    # -------------------------------------------------------------- internals

    def _current_action(self):
        st = self.state
        if st.plan is None or st.action_index >= len(st.plan.actions):
            return None
        return st.plan.actions[st.action_index]

    def _set_phase(self, phase: Phase):
        # permanently overridden once an emergency fires
        self.state.phase = Phase.EMERGENCY if self._emergency_active else phase

    def _begin_action(self, position: Optional[LocalPoint]):
        # a re-dispatched plan may lead with shots this drone already flew
        while True:
            action = self._current_action()
            if isinstance(action, ShootingAction) and action.id in self.completed_shots:
                self.state.action_index += 1
                continue
            break
        if action is None:
            self._set_phase(Phase.DONE)
            return
        if isinstance(action, NavigationAction):
            self._wp_index = 0
            self._anchor = position
            if action.kind is NavKind.GO_TO_WAYPOINT:
                self._wp_local = [geo_to_local(p, self.origin) for p in action.waypoints]
            self._set_phase(Phase.NAVIGATING)
            return
        if action.start_event is not None and action.start_event not in self.state.latched_events:
            self._hover = position
            self._set_phase(Phase.WAITING_EVENT)
            return
        self._start_shot(action)

    def _start_shot(self, shot: ShootingAction):
        self.state.shot_elapsed = 0.0
        self._rail = None
        if shot.rt_path:
            self._rail = Polyline([geo_to_local(p, self.origin) for p in shot.rt_path])
        hint = 0.0
        if self._rail is not None and self._rail.length > 1e-9:
            hint = self._rail.heading_at(0.0)
        self._trailer = TrailerState(link_length=self.cfg.link_length, heading=hint)
        self._shot_started = False
        self._set_phase(Phase.SHOOTING)

    def _advance(self, position: LocalPoint):
        st = self.state
        st.action_index += 1
        if self._pending_plan is not None:
            st.plan = self._pending_plan
            st.action_index = 0
            self._pending_plan = None
        if st.action_index >= len(st.plan.actions):
            self._set_phase(Phase.DONE)
            return
        self._begin_action(position)

    def _tick_nav(
        self, action: NavigationAction, position: LocalPoint, yaw: float, out: TickOutput
    ):
        cfg = self.cfg
        if self._anchor is None:
            self._anchor = position
        if action.kind is NavKind.TAKE_OFF:
            if abs(position.z - action.alt) < cfg.alt_tolerance:
                self._advance(position)
                self._reemit(out, position, yaw)
                return
            out.setpoint = ReferenceSetpoint(
                position=LocalPoint(self._anchor.x, self._anchor.y, action.alt),
                yaw=yaw, velocity_ff=LocalPoint(0.0, 0.0, 0.0),
            )
            return
        if action.kind is NavKind.LAND:
            if position.z < cfg.land_z:
                self._advance(position)
                return
            out.setpoint = ReferenceSetpoint(
                position=LocalPoint(self._anchor.x, self._anchor.y, 0.0),
                yaw=yaw, velocity_ff=LocalPoint(0.0, 0.0, 0.0),
            )
            return
        while self._wp_index < len(self._wp_local):
            wp = self._wp_local[self._wp_index]
            last = self._wp_index == len(self._wp_local) - 1
            tol = cfg.final_tolerance if last else cfg.wp_tolerance
            if position.distance_to(wp) < tol:
                self._wp_index += 1
                continue
            yaw_sp = heading_of(wp - position) if (wp - position).norm_2d() > 2.0 else yaw
            out.setpoint = ReferenceSetpoint(
                position=wp, yaw=yaw_sp, velocity_ff=LocalPoint(0.0, 0.0, 0.0)
            )
            return
        self._advance(position)
        self._reemit(out, position, yaw)

    def _reemit(self, out: TickOutput, position: LocalPoint, yaw: float):
        """A navigation action completed mid-tick; produce output for the
        action that follows so the drone is never left without a setpoint."""
        action = self._current_action()
        if action is None:
            return
        if isinstance(action, NavigationAction):
            self._tick_nav(action, position, yaw, out)
            return
        if self.state.phase is Phase.WAITING_EVENT:
            self._hover_yaw = yaw
            hover = self._hover if self._hover is not None else position
            out.setpoint = ReferenceSetpoint(
                position=hover, yaw=yaw, velocity_ff=LocalPoint(0.0, 0.0, 0.0)
            )
        # a shot that begins this tick renders its first frame next tick

    def _tick_shot(
        self,
        shot: ShootingAction,
        position: LocalPoint,
        yaw: float,
        dt: float,
        targets: TargetProvider,
        out: TickOutput,
    ):
        if not self._shot_started:
            self._shot_started = True
            out.camera_events.append((CameraCommand.RECORD_START, None))
        t = self.state.shot_elapsed

        estimate: Optional[TargetEstimate] = None
        if shot.rt_mode is RTMode.ACTUAL_TARGET and shot.st_id is not None:
            estimate = targets(shot.st_id)
        elif shot.rt_mode is RTMode.VIRTUAL_PATH and shot.rt_id is not None:
            estimate = targets(shot.rt_id)

        try:
            frame, self._trailer = rt_frame(
                shot, t, estimate, self._trailer, path=self._rail, origin=self.origin
            )
        except StaleTargetError:
            out.notes.append(f"{shot.id}: no target estimate yet, holding")
            out.setpoint = ReferenceSetpoint(
                position=position, yaw=yaw, velocity_ff=LocalPoint(0.0, 0.0, 0.0)
            )
            self._clock_shot(shot, dt, position, out)
            return

        st_pos: Optional[LocalPoint] = None
        if shot.st_type is STType.REAL and shot.st_id is not None:
            st_est = targets(shot.st_id)
            if st_est is not None:
                st_pos = st_est.position
        elif shot.st_type is STType.VIRTUAL:
            st_pos = frame.position

        out.setpoint = reference_setpoint(
            shot, frame, t, st_position=st_pos, max_ff=self.cfg.max_ff
        )
        out.camera_point = st_pos
        self._clock_shot(shot, dt, position, out)

    def _clock_shot(
        self, shot: ShootingAction, dt: float, position: LocalPoint, out: TickOutput
    ):
        self.state.shot_elapsed += dt
        if self.state.shot_elapsed >= shot.duration - 1e-9:
            out.camera_events.append((CameraCommand.RECORD_STOP, None))
            self.completed_shots.add(shot.id)
            self._advance(position)

    def _route_to_base(self, position: LocalPoint) -> Optional[list[NavigationAction]]:
        alt = max(position.z, self.cfg.min_return_alt)
        stations = sorted(
            self.world_map.base_stations, key=lambda s: (position - s).norm_2d()
        )
        for station in stations:
            try:
                path = astar_path(
                    self.world_map,
                    position.with_z(alt),
                    station.with_z(alt),
                    cell=self.cfg.cell,
                )
            except NoPathError:
                continue
            wps = [p.with_z(alt) for p in path[1:]] or [station.with_z(alt)]
            return [
                NavigationAction(
                    kind=NavKind.GO_TO_WAYPOINT,
                    waypoints=[local_to_geo(p, self.origin) for p in wps],
                ),
                NavigationAction(kind=NavKind.LAND),
            ]
        return None
