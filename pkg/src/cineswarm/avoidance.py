"""Reactive collision avoidance.

Conflicts are predicted by constant-velocity extrapolation of own and
neighbor states over a short horizon. While a conflict is active, the drone
abandons its shot command and flies a counter-clockwise roundabout around
the predicted conflict point; because the prediction is symmetric, every
involved drone computes the same circle and they space out along it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .geometry import LocalPoint
from .control import VelocityCommand


class StaleStateError(Exception):
    """Neighbor state too old to trust; callers must fail safe."""


@dataclass
class AvoidanceConfig:
    safety_distance: float = 8.0
    horizon: float = 10.0
    roundabout_radius: float = 8.0
    roundabout_speed: float = 3.0
    k_radial: float = 1.0
    max_speed: float = 8.0
    max_state_age: float = 0.5
    clear_margin: float = 1.2  # hysteresis factor on the safety distance
    min_hold: float = 1.0  # seconds to keep maneuvering after the last warning

    def __post_init__(self):
        if not self.roundabout_radius > self.safety_distance / 2.0:
            raise ValueError("roundabout radius must exceed half the safety distance")


@dataclass(frozen=True)
class NeighborState:
    drone_id: str
    position: LocalPoint
    velocity: LocalPoint
    age: float  # seconds since measured


@dataclass(frozen=True)
class ConflictWarning:
    other_id: str
    time_to_conflict: float
    conflict_point: LocalPoint


def _pair_conflict(
    position: LocalPoint,
    velocity: LocalPoint,
    other: NeighborState,
    cfg: AvoidanceConfig,
    safety: float,
) -> Optional[ConflictWarning]:
    dp = other.position - position
    dv = other.velocity - velocity
    dv2 = dv.dot(dv)
    t_star = 0.0 if dv2 <= 1e-12 else min(max(-dp.dot(dv) / dv2, 0.0), cfg.horizon)
    closest = dp + dv.scaled(t_star)
    if closest.norm() >= safety:
        return None
    # earliest time the separation crosses the safety distance
    if dp.norm() <= safety:
        ttc = 0.0
    else:
        a = dv2
        b = 2.0 * dp.dot(dv)
        c = dp.dot(dp) - safety * safety
        disc = b * b - 4.0 * a * c
        if a <= 1e-12 or disc < 0.0:
            ttc = t_star
        else:
            ttc = (-b - math.sqrt(disc)) / (2.0 * a)
            ttc = min(max(ttc, 0.0), cfg.horizon)
    mid_self = position + velocity.scaled(t_star)
    mid_other = other.position + other.velocity.scaled(t_star)
    point = (mid_self + mid_other).scaled(0.5)
    return ConflictWarning(other.drone_id, ttc, point)


def detect_conflict(
    position: LocalPoint,
    velocity: LocalPoint,
    others: list[NeighborState],
    cfg: AvoidanceConfig,
    safety: Optional[float] = None,
) -> Optional[ConflictWarning]:
    """Most urgent predicted conflict among ``others``, or None.

    Raises StaleStateError when any neighbor state is older than the
    configured freshness limit; the caller treats that as a conflict.
    """
    safety = cfg.safety_distance if safety is None else safety
    best: Optional[ConflictWarning] = None
    for other in others:
        if other.age >= cfg.max_state_age:
            raise StaleStateError(f"{other.drone_id} state is {other.age:.2f} s old")
        w = _pair_conflict(position, velocity, other, cfg, safety)
        if w is None:
            continue
        if best is None or (w.time_to_conflict, w.other_id) < (
            best.time_to_conflict, best.other_id
        ):
            best = w
    return best


def roundabout_command(
    position: LocalPoint,
    velocity: LocalPoint,
    warning: ConflictWarning,
    cfg: AvoidanceConfig,
) -> VelocityCommand:
    """Counter-clockwise circulation around the conflict point.

    Tangential speed is constant; a radial term regulates the distance to
    the roundabout radius. Altitude is held (vz = 0).
    """
    rx = position.x - warning.conflict_point.x
    ry = position.y - warning.conflict_point.y
    r = math.hypot(rx, ry)
    if r < 1e-6:
        # on top of the conflict point: push outward along current bearing
        h = math.hypot(velocity.x, velocity.y)
        if h > 1e-6:
            ux, uy = velocity.x / h, velocity.y / h
        else:
            ux, uy = 1.0, 0.0
    else:
        ux, uy = rx / r, ry / r
    tx, ty = -uy, ux  # CCW tangent
    radial_gain = cfg.k_radial * (cfg.roundabout_radius - r)
    # far outside the ring the regulator saturates; diving at the conflict
    # area at full speed defeats the maneuver, so bound the inbound rate
    inbound_cap = 0.5 * cfg.k_radial * cfg.safety_distance
    if radial_gain < -inbound_cap:
        radial_gain = -inbound_cap
    vx = tx * cfg.roundabout_speed + ux * radial_gain
    vy = ty * cfg.roundabout_speed + uy * radial_gain
    speed = math.hypot(vx, vy)
    if speed > cfg.max_speed:
        vx *= cfg.max_speed / speed
        vy *= cfg.max_speed / speed
    return VelocityCommand(v=LocalPoint(vx, vy, 0.0), yaw_rate=0.0)


def arbitrate(
    shot_cmd: VelocityCommand, avoid_cmd: Optional[VelocityCommand]
) -> VelocityCommand:
    """The reactive layer wins whenever it has something to say."""
    return avoid_cmd if avoid_cmd is not None else shot_cmd


class AvoidanceLayer:
    """Per-drone stateful wrapper adding hysteresis around detect/maneuver.

    A warning engages the roundabout; it stays engaged until no conflict is
    predicted even with an inflated safety distance and a minimum hold time
    has passed, which stops the engage/clear flicker two converging drones
    would otherwise produce. Stale neighbor data fails safe: the last
    warning (or a zero-ttc one on the spot) keeps the maneuver running.
    """

    def __init__(self, cfg: Optional[AvoidanceConfig] = None):
        self.cfg = cfg if cfg is not None else AvoidanceConfig()
        self.active: Optional[ConflictWarning] = None
        self._engaged_at: Optional[float] = None

    def evaluate(
        self,
        now: float,
        position: LocalPoint,
        velocity: LocalPoint,
        others: list[NeighborState],
    ) -> Optional[VelocityCommand]:
        cfg = self.cfg
        safety = cfg.safety_distance if self.active is None else (
            cfg.safety_distance * cfg.clear_margin
        )
        try:
            warning = detect_conflict(position, velocity, others, cfg, safety=safety)
        except StaleStateError:
            if self.active is not None:
                warning = self.active
            else:
                stale = max(others, key=lambda o: o.age)
                warning = ConflictWarning(stale.drone_id, 0.0, stale.position)
        if warning is not None:
            if self.active is None:
                self._engaged_at = now
            self.active = warning
        elif self.active is not None:
            held = now - (self._engaged_at if self._engaged_at is not None else now)
            if held >= cfg.min_hold:
                self.active = None
                self._engaged_at = None
        if self.active is None:
            return None
        steer = self.active
        near = next((o for o in others if o.drone_id == steer.other_id), None)
        if near is not None:
            gap = (near.position - position).norm()
            if gap <= cfg.safety_distance * cfg.clear_margin:
                # this close, velocity extrapolation is mostly estimate noise
                # and the two parties can disagree badly on where the circle
                # is; the midpoint between them is the one center both sides
                # compute alike, and circling it pushes them straight apart
                mid = (position + near.position).scaled(0.5)
                steer = ConflictWarning(steer.other_id, steer.time_to_conflict, mid)
        return roundabout_command(position, velocity, steer, cfg)
