"""Reference-target frame tracking.

The smoothing frame behaves like a trailer towed by the reference target:
the trailer point follows the target at a fixed link length, which low-pass
filters the heading of a noisy target without adding lag to the along-track
position beyond the link itself. The pursuit runs on the horizontal
components; the trailer copies the target altitude, so the 3D distance
between target and trailer stays exactly at the link length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .geometry import (
    GeoPoint,
    LocalPoint,
    Polyline,
    geo_to_local,
    unit_from_heading,
)
from .model import RTMode, ShootingAction

DEFAULT_LINK_LENGTH = 3.0


class StaleTargetError(Exception):
    """A target-following mode was asked to advance without a target estimate."""


@dataclass(frozen=True)
class TargetEstimate:
    """Filtered target state as reported by the onboard tracker."""

    position: LocalPoint
    velocity: LocalPoint
    stamp: float


@dataclass(frozen=True)
class TrailerFrame:
    """Smoothed reference frame: position, horizontal heading, ground speed."""

    position: LocalPoint
    heading: float  # radians, (-pi, pi]
    speed: float


@dataclass(frozen=True)
class TrailerState:
    link_length: float = DEFAULT_LINK_LENGTH
    trailer: Optional[LocalPoint] = None
    heading: float = 0.0
    initialized: bool = False
    rail_s: float = 0.0  # monotone arc-length progress for rail-following modes

    def __post_init__(self):
        if not self.link_length > 0.0:
            raise ValueError("link length must be positive")


def trailer_update(
    s: TrailerState, target: LocalPoint, heading_hint: Optional[float] = None
) -> TrailerState:
    """Advance the trailer one step toward ``target``.

    On the first call the trailer is placed one link length behind the
    target along the heading hint (east when absent), so the initial frame
    heading equals the hint. Afterwards the trailer moves along the line to
    the target, keeping |target - trailer| equal to the link length exactly;
    a degenerate step (horizontal distance <= 1e-9) leaves the state as is.
    """
    if not s.initialized:
        hint = heading_hint if heading_hint is not None else s.heading
        trailer = target - unit_from_heading(hint).scaled(s.link_length)
        return replace(s, trailer=trailer, heading=hint, initialized=True)

    assert s.trailer is not None
    dx = target.x - s.trailer.x
    dy = target.y - s.trailer.y
    dist = math.hypot(dx, dy)
    if dist <= 1e-9:
        return s
    ux, uy = dx / dist, dy / dist
    trailer = LocalPoint(
        target.x - s.link_length * ux, target.y - s.link_length * uy, target.z
    )
    return replace(s, trailer=trailer, heading=math.atan2(uy, ux))


def frame_of(s: TrailerState, speed: float) -> TrailerFrame:
    if not s.initialized or s.trailer is None:
        raise ValueError("trailer state not initialized")
    return TrailerFrame(position=s.trailer, heading=s.heading, speed=speed)


def local_rt_path(a: ShootingAction, origin: GeoPoint) -> list[LocalPoint]:
    return [geo_to_local(p, origin) for p in a.rt_path]


def rt_frame(
    a: ShootingAction,
    t: float,
    target: Optional[TargetEstimate],
    state: TrailerState,
    origin: Optional[GeoPoint] = None,
    path: Optional[Polyline] = None,
) -> tuple[TrailerFrame, TrailerState]:
    """Reference frame of shot ``a`` at shot time ``t``.

    ``path`` may carry a pre-projected rail to avoid converting rt_path on
    every tick; otherwise ``origin`` is required for modes that use the rail.

    virtual_traj   rail position at arc length rt_speed * t
    virtual_path   rail position at the target's (monotone) projected progress
    actual_target  trailer pursuit of the measured target position
    """
    if a.rt_mode is RTMode.ACTUAL_TARGET:
        if target is None:
            raise StaleTargetError(f"shot {a.id}: no target estimate")
        new_state = trailer_update(state, target.position)
        return frame_of(new_state, target.velocity.norm()), new_state

    if path is None:
        if origin is None:
            raise ValueError("rail modes need origin or a prebuilt path")
        path = Polyline(local_rt_path(a, origin))

    if a.rt_mode is RTMode.VIRTUAL_TRAJ:
        s_along = a.rt_speed * max(t, 0.0)
        speed = a.rt_speed if s_along < path.length else 0.0
        frame = TrailerFrame(
            position=path.point_at(s_along),
            heading=path.heading_at(s_along),
            speed=speed,
        )
        return frame, state

    # virtual_path: rail position driven by the real target's progress
    if target is None:
        raise StaleTargetError(f"shot {a.id}: no target estimate")
    s_along = max(state.rail_s, path.project(target.position))
    frame = TrailerFrame(
        position=path.point_at(s_along),
        heading=path.heading_at(s_along),
        speed=target.velocity.norm(),
    )
    return frame, replace(state, rail_s=s_along)
