"""Per-drone process: messaging, sensing, control, and physics stepping.

The agent wires one scheduler to the bus and the simulated vehicle. Each
tick it drains its inbox, samples every target sensor, lets the scheduler
produce a setpoint, turns that into a velocity command, gives the reactive
avoidance layer the last word, and steps the rigid body.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import bus as wire
from .avoidance import AvoidanceConfig, AvoidanceLayer, NeighborState
from .bus import MessageBus, SequenceTracker, WireMessage
from .control import (
    CameraLog,
    ControllerGains,
    GimbalControlState,
    SingularPointingError,
    VelocityCommand,
    desired_camera_rotation,
    gimbal_rate_command,
    scripted_gimbal,
    velocity_command,
)
from .geometry import GeoPoint, LocalPoint
from .model import Event, MissionParseError, plan_from_json
from .scheduler import EmergencyKind, Scheduler, SchedulerConfig, StatusReport
from .simkit import SimDroneState, World, step_drone
from .trailer import TargetEstimate
from .worldmap import DroneSpec

LOW_BATTERY_THRESHOLD = 0.15
GROUNDED_Z = 0.5  # below this a drone is not an avoidance participant


@dataclass
class TraceRow:
    t: float
    drone_id: str
    phase: str
    position: LocalPoint
    setpoint: Optional[LocalPoint]
    gimbal_axis: tuple[float, float, float]
    events: list[str] = field(default_factory=list)


@dataclass
class _NeighborTrack:
    t: float
    position: LocalPoint
    velocity: LocalPoint
    grounded: bool


class DroneAgent:
    def __init__(
        self,
        spec: DroneSpec,
        sim: SimDroneState,
        world: World,
        bus_: MessageBus,
        origin: GeoPoint,
        cfg: Optional[SchedulerConfig] = None,
    ):
        self.drone_id = spec.drone_id
        self.sim = sim
        self.world = world
        self.bus = bus_
        self.scheduler = Scheduler(spec.drone_id, origin, world.map, cfg)
        self.gains = ControllerGains(v_max=spec.max_speed)
        self.gimbal_state = GimbalControlState()
        self.avoidance = AvoidanceLayer(AvoidanceConfig(max_speed=spec.max_speed))
        self.camera_log = CameraLog()
        self._sensors = {
            tid: world.make_sensor(spec.drone_id, tid) for tid in sorted(world.targets)
        }
        self._estimates: dict[str, TargetEstimate] = {}
        self._neighbors: dict[str, _NeighborTrack] = {}
        self._plan_seq = SequenceTracker()
        self._desired_r: Optional[np.ndarray] = None
        self._emergency_sent = False
        self._pending_events: list[str] = []
        bus_.register(self.drone_id)

    # ------------------------------------------------------------- messaging

    def _handle_message(self, m: WireMessage, now: float, events_out: list[str]):
        if m.type == wire.PLAN:
            if m.payload.get("drone_id") != self.drone_id:
                return
            if not self._plan_seq.accept(m.sender, m.seq):
                events_out.append("plan_stale_discarded")
                return
            try:
                plan = plan_from_json(m.payload)
            except MissionParseError as exc:
                events_out.append(f"plan_rejected:{exc}")
                return
            if self.scheduler.adopt_plan(plan, self.sim.position):
                events_out.append("plan_adopted")
            else:
                events_out.append("plan_refused")
        elif m.type == wire.EVENT:
            name = m.payload.get("name")
            if isinstance(name, str) and name:
                t = float(m.payload.get("t", now))
                if name not in self.scheduler.state.latched_events:
                    events_out.append(f"event:{name}")
                self.scheduler.handle_event(Event(name=name, timestamp=t))
        elif m.type == wire.STOP:
            who = m.payload.get("drone_id")
            if who is not None and who != self.drone_id:
                return
            events_out.append("stop")
            self.scheduler.handle_stop(self.sim.position)
        elif m.type == wire.STATUS:
            self._track_neighbor(m.payload)

    def _track_neighbor(self, payload: dict):
        did = payload.get("drone_id")
        pos = payload.get("position")
        t = payload.get("t")
        if not isinstance(did, str) or did == self.drone_id:
            return
        if not isinstance(pos, dict) or not isinstance(t, (int, float)):
            return
        p = LocalPoint(float(pos["x"]), float(pos["y"]), float(pos["z"]))
        prev = self._neighbors.get(did)
        v = LocalPoint(0.0, 0.0, 0.0)
        if prev is not None and t > prev.t + 1e-9:
            v = (p - prev.position).scaled(1.0 / (float(t) - prev.t))
        grounded = p.z < GROUNDED_Z or payload.get("phase") in ("idle", "done")
        self._neighbors[did] = _NeighborTrack(float(t), p, v, grounded)

    def _neighbor_states(self, now: float) -> list[NeighborState]:
        out = []
        for did in sorted(self._neighbors):
            trk = self._neighbors[did]
            if trk.grounded:
                continue
            if now - trk.t > 2.0:
                continue  # long gone, not a stale-comms situation
            out.append(NeighborState(did, trk.position, trk.velocity, age=now - trk.t))
        return out

    def inject_failure(self, kind: str, now: float):
        """Operator-injected contingency. low_battery drops the pack to just
        under the threshold so the normal detection path fires next tick;
        anything else declares the emergency immediately."""
        if kind == "low_battery":
            self.sim.battery = min(self.sim.battery, LOW_BATTERY_THRESHOLD - 0.01)
            return
        if self._emergency_sent:
            return
        self._emergency_sent = True
        ek = EmergencyKind.GPS_LOSS
        notes = self.scheduler.handle_emergency(ek, self.sim.position)
        self.bus.send(self.drone_id, wire.EMERGENCY, {
            "drone_id": self.drone_id, "kind": ek.value, "t": now,
        })
        self._pending_events.extend(["emergency:" + ek.value] + notes)

    # ------------------------------------------------------------------ tick

    def step(self, now: float, dt: float) -> TraceRow:
        events: list[str] = list(self._pending_events)
        self._pending_events.clear()
        for m in self.bus.drain(self.drone_id):
            self._handle_message(m, now, events)

        for tid in sorted(self._sensors):
            self._estimates[tid] = self._sensors[tid].sample(now, self.world.targets[tid])

        if self.sim.battery < LOW_BATTERY_THRESHOLD and not self._emergency_sent:
            self._emergency_sent = True
            events.append("emergency:low_battery")
            notes = self.scheduler.handle_emergency(
                EmergencyKind.LOW_BATTERY, self.sim.position
            )
            events.extend(notes)
            self.bus.send(self.drone_id, wire.EMERGENCY, {
                "drone_id": self.drone_id,
                "kind": EmergencyKind.LOW_BATTERY.value,
                "t": now,
            })

        out = self.scheduler.tick(
            now, dt, self.sim.position, self.sim.yaw, self.sim.battery,
            lambda tid: self._estimates.get(tid),
        )

        if out.status is not None:
            self.bus.send(self.drone_id, wire.STATUS, _status_json(out.status))
        for note in out.notes:
            events.append(note)

        if out.setpoint is not None:
            cmd = velocity_command(self.sim.position, self.sim.yaw, out.setpoint, self.gains)
        else:
            cmd = VelocityCommand(v=LocalPoint(0.0, 0.0, 0.0), yaw_rate=0.0)

        if self.sim.position.z >= GROUNDED_Z:
            avoid = self.avoidance.evaluate(
                now, self.sim.position, self.sim.velocity, self._neighbor_states(now)
            )
            if avoid is not None:
                if self.avoidance.active is not None and "avoid" not in events:
                    events.append("avoid")
                cmd = avoid

        omega = self._gimbal(out.camera_point, out.setpoint, dt, events)

        for cam_cmd, value in out.camera_events:
            self.camera_log.record(now, self.drone_id, cam_cmd, value)
            events.append(f"camera:{cam_cmd.value}")

        step_drone(self.sim, cmd.v, cmd.yaw_rate, dt, gimbal_rate=omega, substeps=4)

        r = self.sim.gimbal_r
        return TraceRow(
            t=now,
            drone_id=self.drone_id,
            phase=self.scheduler.state.phase.value,
            position=self.sim.position,
            setpoint=out.setpoint.position if out.setpoint is not None else None,
            gimbal_axis=(float(r[0, 0]), float(r[1, 0]), float(r[2, 0])),
            events=events,
        )

    def _gimbal(self, camera_point, setpoint, dt: float, events: list[str]):
        desired = None
        try:
            if camera_point is not None:
                desired = desired_camera_rotation(self.sim.position, camera_point)
            elif setpoint is not None and setpoint.camera_script is not None:
                pan, tilt = setpoint.camera_script
                desired = scripted_gimbal(pan, tilt)
        except SingularPointingError as exc:
            events.append(f"gimbal_hold:{exc}")
            desired = None
        if desired is not None:
            self._desired_r = desired
        if self._desired_r is None:
            return None
        omega, self.gimbal_state = gimbal_rate_command(
            self.sim.gimbal_r, self._desired_r, self.gimbal_state, dt
        )
        return omega


def _point_json(p: LocalPoint) -> dict:
    return {"x": p.x, "y": p.y, "z": p.z}


def _status_json(s: StatusReport) -> dict:
    return {
        "drone_id": s.drone_id,
        "phase": s.phase.value,
        "action_index": s.action_index,
        "position": _point_json(s.position),
        "battery": s.battery,
        "t": s.t,
    }
