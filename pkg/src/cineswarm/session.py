"""Simulation session: one mission, one world, one message fabric.

Builds the whole stack (world, ground station, one agent per drone), then
steps everything on the shared clock in a fixed, deterministic order:
automatic triggers, operator commands, ground-station inbox, then each
agent in sorted id order, then the clock. Two runs with the same seed and
inputs produce byte-identical traces.

The world's moving targets are synthesized from the mission itself: every
real target id referenced by a shot gets a simulated actor following that
shot's rt_path at rt_speed, armed by the shot's start event when there is
one. Extra targets and triggers can be supplied for richer setups.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

from .agent import DroneAgent, TraceRow
from .bus import MessageBus, encode_message
from .geometry import LocalPoint, Polyline, geo_to_local
from .groundstation import GroundStation
from .model import Mission, RTMode, STType
from .scheduler import SchedulerConfig
from .simkit import DEFAULT_DT, EventTrigger, SimDroneState, SimTarget, World
from .worldmap import DroneSpec, WorldMap


@dataclass
class SessionConfig:
    dt: float = DEFAULT_DT
    seed: int = 0
    max_time: float = 1200.0
    realtime: bool = False
    slack: float = 10.0
    cell: float = 2.0
    transit_alt: float = 15.0
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)


def synth_targets(m: Mission) -> list[SimTarget]:
    """Simulated actors for every real target id a mission references."""
    out: list[SimTarget] = []
    seen: set[str] = set()
    for shot in m.shots:
        ids = []
        if shot.rt_mode is RTMode.VIRTUAL_PATH and shot.rt_id:
            ids.append(shot.rt_id)
        if shot.st_type is STType.REAL and shot.st_id:
            ids.append(shot.st_id)
        for tid in ids:
            if tid in seen or not shot.rt_path:
                continue
            seen.add(tid)
            rail = Polyline([geo_to_local(p, m.origin) for p in shot.rt_path])
            out.append(SimTarget(
                target_id=tid,
                path=rail,
                speed=shot.rt_speed,
                start_event=shot.start_event,
            ))
    return out


def default_drones(n: int, world_map: WorldMap) -> list[DroneSpec]:
    """n drones parked on the base stations, round-robin with a small
    eastward offset when stations are reused."""
    if n <= 0:
        return []
    stations = world_map.base_stations
    specs = []
    for i in range(n):
        s = stations[i % len(stations)]
        k = i // len(stations)
        home = LocalPoint(s.x + 3.0 * k, s.y, 0.0)
        specs.append(DroneSpec(drone_id=f"drone_{i + 1}", home=home))
    return specs


class SimSession:
    def __init__(
        self,
        mission: Mission,
        world_map: WorldMap,
        drones: list[DroneSpec],
        cfg: Optional[SessionConfig] = None,
        targets: Optional[list[SimTarget]] = None,
        triggers: Optional[list[EventTrigger]] = None,
    ):
        self.cfg = cfg if cfg is not None else SessionConfig()
        self.mission = mission
        self.world = World(world_map, dt=self.cfg.dt, seed=self.cfg.seed)

        provided = {t.target_id for t in (targets or [])}
        for t in targets or []:
            self.world.add_target(t)
        for t in synth_targets(mission):
            if t.target_id not in provided:
                self.world.add_target(t)
        for trg in triggers or []:
            self.world.add_trigger(trg)

        self.bus = MessageBus()
        self.message_log: list[str] = []
        self.bus.taps.append(lambda m: self.message_log.append(encode_message(m)))
        self._server = None

        self.ground = GroundStation(
            mission, drones, self.world, self.bus,
            slack=self.cfg.slack, cell=self.cfg.cell,
            transit_alt=self.cfg.transit_alt,
        )
        self.ground.event_sink = lambda name, t: self.world.fire(name)

        self.agents: dict[str, DroneAgent] = {}
        for spec in drones:
            sim = SimDroneState(
                drone_id=spec.drone_id,
                position=spec.home.with_z(0.0),
                drain_rate=1.0 / spec.flight_time_budget,
            )
            self.world.add_drone(sim)
            self.agents[spec.drone_id] = DroneAgent(
                spec, sim, self.world, self.bus, mission.origin,
                cfg=self.cfg.scheduler,
            )

        self.trace: list[TraceRow] = []
        self._fail_schedule: list[tuple[float, str, str]] = []
        self._started = False

    # ------------------------------------------------------------- operator

    def fire_at(self, name: str, t: float):
        """Schedule an automatic firing of ``name`` at sim time t."""
        self.world.add_trigger(EventTrigger(name=name, at_time=t))

    def fail_at(self, drone_id: str, kind: str, t: float):
        if drone_id not in self.agents:
            raise ValueError(f"unknown drone {drone_id}")
        self._fail_schedule.append((t, drone_id, kind))
        self._fail_schedule.sort()

    def attach_server(self, server):
        """Dashboard listener: its outbox gets every bus message, and its
        queued DASH_CMDs are applied at the start of each tick."""
        self._server = server
        self.bus.taps.append(server.forward)

    # ----------------------------------------------------------------- loop

    def start(self):
        if not self._started:
            self._started = True
            self.ground.start(now=0.0)

    @property
    def now(self) -> float:
        return self.world.time

    @property
    def finished(self) -> bool:
        if not self._started or self.now <= self.cfg.dt:
            return False
        for agent in self.agents.values():
            sched = agent.scheduler
            if sched.terminal:
                continue
            if sched.state.plan is None:
                continue  # never tasked
            return False
        if any(self.bus.pending(d) for d in self.agents):
            return False
        return self.bus.pending("ground") == 0 and not self.ground.replan_pending

    def tick(self):
        """One simulation step for every component, in deterministic order."""
        self.start()
        now = self.now
        dt = self.cfg.dt

        for name, t in self.world.check_triggers():
            self.ground.fire_event(name, t)

        while self._fail_schedule and self._fail_schedule[0][0] <= now + 1e-9:
            _, did, kind = self._fail_schedule.pop(0)
            self.agents[did].inject_failure(kind, now)

        if self._server is not None:
            for payload in self._server.take_commands():
                instr = self.ground.dashboard_command(payload, now)
                if instr is not None and instr[0] == "fail_drone":
                    self.agents[instr[1]].inject_failure(instr[2], now)

        self.ground.process(now)

        for did in sorted(self.agents):
            self.trace.append(self.agents[did].step(now, dt))

        self.world.advance()

    def run(self, duration: Optional[float] = None) -> list[TraceRow]:
        """Run to completion (or the horizon); returns the trace rows."""
        self.start()
        horizon = self.cfg.max_time if duration is None else duration
        while self.now < horizon - 1e-9:
            wall = time.monotonic()
            self.tick()
            if duration is None and self.finished:
                break
            if self.cfg.realtime:
                rest = self.cfg.dt - (time.monotonic() - wall)
                if rest > 0:
                    time.sleep(rest)
        return self.trace

    # ---------------------------------------------------------------- output

    def trace_lines(self) -> list[str]:
        return [trace_row_line(r) for r in self.trace]

    def write_trace(self, path: str):
        """Trace rows to ``path``; the full message log to a sidecar file."""
        with open(path, "w") as f:
            for r in self.trace:
                f.write(trace_row_line(r))
        sidecar = path + ".msgs.jsonl" if not path.endswith(".jsonl") else (
            path[: -len(".jsonl")] + ".msgs.jsonl"
        )
        with open(sidecar, "w") as f:
            f.writelines(self.message_log)


def trace_row_line(r: TraceRow) -> str:
    rec = {
        "t": round(r.t, 6),
        "drone_id": r.drone_id,
        "phase": r.phase,
        "position": {"x": r.position.x, "y": r.position.y, "z": r.position.z},
        "setpoint": (
            None if r.setpoint is None
            else {"x": r.setpoint.x, "y": r.setpoint.y, "z": r.setpoint.z}
        ),
        "gimbal_axis": list(r.gimbal_axis),
        "events": r.events,
    }
    return json.dumps(rec, separators=(",", ":"), sort_keys=True) + "\n"


def read_trace(path: str) -> list[dict]:
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
