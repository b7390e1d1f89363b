"""Deterministic simulation kernel.

Holds the physics stand-ins the engine is exercised against: drone rigid
bodies with first-order velocity response, rail-following moving targets,
noisy delayed target sensing, and time/region event triggers. Everything is
stepped on a fixed tick; simulated time is always tick_index * dt so replays
are bit-identical for a given seed.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .control import exp_so3, orthonormalize
from .geometry import LocalPoint, Polyline, unit_from_heading, wrap_angle
from .trailer import TargetEstimate
from .worldmap import WorldMap

DEFAULT_DT = 0.05
ACCEL_LIMIT = 4.0          # m/s^2, platform slew on commanded velocity
PLATFORM_MAX_SPEED = 10.0  # m/s, hard cap regardless of command
DEFAULT_FLIGHT_TIME = 1200.0


@dataclass
class SimDroneState:
    drone_id: str
    position: LocalPoint
    velocity: LocalPoint = field(default_factory=lambda: LocalPoint(0.0, 0.0, 0.0))
    yaw: float = 0.0
    gimbal_r: np.ndarray = field(default_factory=lambda: np.eye(3))
    battery: float = 1.0
    drain_rate: float = 1.0 / DEFAULT_FLIGHT_TIME  # fraction per second
    steps: int = 0


def step_drone(
    s: SimDroneState,
    v_cmd: LocalPoint,
    yaw_rate: float,
    dt: float,
    gimbal_rate: Optional[np.ndarray] = None,
    a_max: float = ACCEL_LIMIT,
    max_speed: float = PLATFORM_MAX_SPEED,
    substeps: int = 1,
):
    """Advance one drone by dt under a held command.

    The platform slews its velocity toward the command at a_max and refuses
    to exceed max_speed. Battery drains linearly with time whether moving or
    hovering. The gimbal integrates an inertial rate command on SO(3).
    substeps > 1 splits the integration while the command stays constant.
    """
    h = dt / substeps
    for _ in range(substeps):
        dv = v_cmd - s.velocity
        dn = dv.norm()
        cap = a_max * h
        if dn > cap:
            dv = dv.scaled(cap / dn)
        v = s.velocity + dv
        vn = v.norm()
        if vn > max_speed:
            v = v.scaled(max_speed / vn)
        s.velocity = v
        s.position = s.position + v.scaled(h)
        if s.position.z < 0.0:
            s.position = s.position.with_z(0.0)
            s.velocity = LocalPoint(s.velocity.x, s.velocity.y, 0.0)
        s.yaw = wrap_angle(s.yaw + yaw_rate * h)
        s.battery = max(0.0, s.battery - s.drain_rate * h)
        if gimbal_rate is not None:
            body_rate = s.gimbal_r.T @ (gimbal_rate * h)
            s.gimbal_r = s.gimbal_r @ exp_so3(body_rate)
        s.steps += 1
        if s.steps % 100 == 0:
            # keep long runs from drifting off the manifold
            s.gimbal_r = orthonormalize(s.gimbal_r)


@dataclass
class SimTarget:
    """Ground truth target moving along a rail at constant speed.

    It can be armed by the clock (start_time) or by an event; until armed it
    sits at the rail start.
    """

    target_id: str
    path: Polyline
    speed: float
    noise_sigma: float = 0.05
    report_delay: float = 0.1
    start_time: float = 0.0
    start_event: Optional[str] = None
    started_at: Optional[float] = None

    def __post_init__(self):
        if self.speed < 0.0:
            raise ValueError("target speed must be >= 0")
        if self.start_event is None and self.started_at is None:
            self.started_at = self.start_time

    def progress(self, t: float) -> float:
        if self.started_at is None or t <= self.started_at:
            return 0.0
        return min(self.speed * (t - self.started_at), self.path.length)

    def true_position(self, t: float) -> LocalPoint:
        return self.path.point_at(self.progress(t))

    def true_velocity(self, t: float) -> LocalPoint:
        s = self.progress(t)
        if self.started_at is None or t <= self.started_at or s >= self.path.length:
            return LocalPoint(0.0, 0.0, 0.0)
        u = unit_from_heading(self.path.heading_at(s))
        return u.scaled(self.speed)


class TargetSensor:
    """One drone's view of one target: delayed, noisy, velocity low-passed.

    Each (drone, target) pair gets its own RNG stream derived from the world
    seed, so per-drone estimates differ but any single pair replays exactly.
    """

    def __init__(
        self,
        drone_id: str,
        target_id: str,
        seed: int,
        noise_sigma: float = 0.05,
        report_delay: float = 0.1,
        tau: float = 0.5,
    ):
        ss = np.random.SeedSequence(
            [seed, zlib.crc32(drone_id.encode()), zlib.crc32(target_id.encode())]
        )
        self._rng = np.random.default_rng(ss)
        self.noise_sigma = noise_sigma
        self.report_delay = report_delay
        self.tau = tau
        self._prev: Optional[tuple[float, LocalPoint]] = None
        self._v_est = LocalPoint(0.0, 0.0, 0.0)

    def sample(self, now: float, target: SimTarget) -> TargetEstimate:
        t_meas = max(0.0, now - self.report_delay)
        true = target.true_position(t_meas)
        n = self._rng.normal(0.0, self.noise_sigma, 3)
        pos = LocalPoint(true.x + float(n[0]), true.y + float(n[1]), true.z + float(n[2]))
        if self._prev is not None:
            dt = now - self._prev[0]
            if dt > 1e-9:
                raw = (pos - self._prev[1]).scaled(1.0 / dt)
                alpha = 1.0 - math.exp(-dt / self.tau)
                self._v_est = self._v_est + (raw - self._v_est).scaled(alpha)
        self._prev = (now, pos)
        return TargetEstimate(position=pos, velocity=self._v_est, stamp=now)


@dataclass
class EventTrigger:
    """Fires a named event once, either at a wall-clock time or when a
    target's true position enters a disc."""

    name: str
    at_time: Optional[float] = None
    target_id: Optional[str] = None
    center: Optional[LocalPoint] = None
    radius: float = 0.0
    fired_at: Optional[float] = None

    def __post_init__(self):
        timed = self.at_time is not None
        spatial = self.target_id is not None and self.center is not None
        if timed == spatial:
            raise ValueError(
                f"trigger {self.name}: need exactly one of at_time or target region"
            )
        if spatial and self.radius <= 0.0:
            raise ValueError(f"trigger {self.name}: radius must be positive")


class World:
    """Container stepping all simulated state on a shared clock."""

    def __init__(self, world_map: WorldMap, dt: float = DEFAULT_DT, seed: int = 0):
        self.map = world_map
        self.dt = dt
        self.seed = seed
        self.drones: dict[str, SimDroneState] = {}
        self.targets: dict[str, SimTarget] = {}
        self.triggers: list[EventTrigger] = []
        self.fired: dict[str, float] = {}
        self.tick_index = 0

    @property
    def time(self) -> float:
        return self.tick_index * self.dt

    def add_drone(self, s: SimDroneState):
        if s.drone_id in self.drones:
            raise ValueError(f"duplicate drone {s.drone_id}")
        self.drones[s.drone_id] = s

    def add_target(self, t: SimTarget):
        if t.target_id in self.targets:
            raise ValueError(f"duplicate target {t.target_id}")
        self.targets[t.target_id] = t

    def add_trigger(self, trg: EventTrigger):
        self.triggers.append(trg)

    def make_sensor(self, drone_id: str, target_id: str) -> TargetSensor:
        t = self.targets[target_id]
        return TargetSensor(
            drone_id, target_id, self.seed,
            noise_sigma=t.noise_sigma, report_delay=t.report_delay,
        )

    def fire(self, name: str) -> bool:
        """Record an event as fired; returns False if it already was."""
        if name in self.fired:
            return False
        now = self.time
        self.fired[name] = now
        for t in self.targets.values():
            if t.start_event == name and t.started_at is None:
                t.started_at = now
        return True

    def check_triggers(self) -> list[tuple[str, float]]:
        """Evaluate triggers at the current time; returns newly fired
        (name, time) pairs in name order."""
        fired: list[tuple[str, float]] = []
        now = self.time
        for trg in sorted(self.triggers, key=lambda x: x.name):
            if trg.fired_at is not None or trg.name in self.fired:
                continue
            due = False
            if trg.at_time is not None:
                due = now >= trg.at_time - 1e-9
            else:
                target = self.targets.get(trg.target_id)
                if target is not None:
                    d = (target.true_position(now) - trg.center).norm_2d()
                    due = d <= trg.radius
            if due:
                trg.fired_at = now
                self.fire(trg.name)
                fired.append((trg.name, now))
        return fired

    def advance(self):
        self.tick_index += 1
