"""Shot offset laws and reference setpoint synthesis.

Each shot type prescribes an offset of the drone from the reference frame,
expressed in that frame (x forward along the frame heading, y left, z up).
The offset laws are simple interpolations over the shot duration, so their
time derivatives are analytic and feed the velocity feedforward directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .geometry import LocalPoint, lerp, rotate_z, unit_from_heading, wrap_angle
from .model import ShootingAction, ShotParameters, ShotType
from .trailer import TrailerFrame

DEFAULT_MAX_FEEDFORWARD = 8.0


class ShotParameterError(ValueError):
    """Shot type and provided parameters do not match."""


def _req(params: ShotParameters, shot_type: ShotType, *names: str) -> list[float]:
    values = []
    for name in names:
        v = getattr(params, name)
        if v is None:
            raise ShotParameterError(f"{shot_type.value} requires parameter {name}")
        values.append(v)
    return values


def shot_offset(
    shot_type: ShotType, params: ShotParameters, t: float, duration: float
) -> tuple[LocalPoint, Optional[tuple[float, float]]]:
    """Frame-relative drone offset at shot time ``t``, plus a scripted
    (pan, tilt) camera pose for the shot types that carry one."""
    if not duration > 0.0:
        raise ShotParameterError("duration must be positive")
    lam = min(max(t / duration, 0.0), 1.0)

    if shot_type in (ShotType.STATIC, ShotType.FLY_THROUGH):
        pan_s, tilt_s, pan_e, tilt_e, z_0 = _req(
            params, shot_type, "pan_s", "tilt_s", "pan_e", "tilt_e", "z_0"
        )
        script = (lerp(pan_s, pan_e, lam), lerp(tilt_s, tilt_e, lam))
        return LocalPoint(0.0, 0.0, z_0), script

    if shot_type is ShotType.ELEVATOR:
        z_s, z_e = _req(params, shot_type, "z_s", "z_e")
        return LocalPoint(0.0, 0.0, lerp(z_s, z_e, lam)), None

    if shot_type is ShotType.CHASE_LEAD:
        x_s, x_e, z_0 = _req(params, shot_type, "x_s", "x_e", "z_0")
        return LocalPoint(lerp(x_s, x_e, lam), 0.0, z_0), None

    if shot_type is ShotType.FLYBY:
        x_s, x_e, y_0, z_0 = _req(params, shot_type, "x_s", "x_e", "y_0", "z_0")
        return LocalPoint(lerp(x_s, x_e, lam), y_0, z_0), None

    if shot_type is ShotType.LATERAL:
        y_0, z_0 = _req(params, shot_type, "y_0", "z_0")
        return LocalPoint(0.0, y_0, z_0), None

    if shot_type is ShotType.ESTABLISH:
        x_s, x_e, z_s, z_e = _req(params, shot_type, "x_s", "x_e", "z_s", "z_e")
        return LocalPoint(lerp(x_s, x_e, lam), 0.0, lerp(z_s, z_e, lam)), None

    if shot_type is ShotType.ORBIT:
        r_0, azimuth_s, angular_speed, z_0 = _req(
            params, shot_type, "r_0", "azimuth_s", "angular_speed", "z_0"
        )
        az = azimuth_s + angular_speed * min(max(t, 0.0), duration)
        return LocalPoint(r_0 * math.cos(az), r_0 * math.sin(az), z_0), None

    raise ShotParameterError(f"unknown shot type {shot_type}")


def shot_offset_rate(
    shot_type: ShotType, params: ShotParameters, t: float, duration: float
) -> LocalPoint:
    """Analytic time derivative of shot_offset at time ``t``."""
    if t < 0.0 or t > duration:
        return LocalPoint(0.0, 0.0, 0.0)
    p = params
    if shot_type is ShotType.ELEVATOR:
        return LocalPoint(0.0, 0.0, (p.z_e - p.z_s) / duration)
    if shot_type in (ShotType.CHASE_LEAD, ShotType.FLYBY):
        return LocalPoint((p.x_e - p.x_s) / duration, 0.0, 0.0)
    if shot_type is ShotType.ESTABLISH:
        return LocalPoint(
            (p.x_e - p.x_s) / duration, 0.0, (p.z_e - p.z_s) / duration
        )
    if shot_type is ShotType.ORBIT:
        az = p.azimuth_s + p.angular_speed * t
        k = p.r_0 * p.angular_speed
        return LocalPoint(-k * math.sin(az), k * math.cos(az), 0.0)
    # static, fly_through, lateral: constant offset
    return LocalPoint(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ReferenceSetpoint:
    """What the velocity controller chases on a given tick."""

    position: LocalPoint
    yaw: float
    velocity_ff: LocalPoint
    camera_script: Optional[tuple[float, float]] = None  # scripted (pan, tilt)


def reference_setpoint(
    a: ShootingAction,
    frame: TrailerFrame,
    t: float,
    st_position: Optional[LocalPoint] = None,
    max_ff: float = DEFAULT_MAX_FEEDFORWARD,
) -> ReferenceSetpoint:
    """Drone setpoint for shot ``a`` at shot time ``t`` given the RT frame.

    Yaw follows the frame heading for the translating shots; orbit faces the
    frame center; the hovering shots face the shooting target horizontally
    when one is known.
    """
    offset, script = shot_offset(a.shot_type, a.params, t, a.duration)
    position = frame.position + rotate_z(offset, frame.heading)

    frame_vel = unit_from_heading(frame.heading).scaled(frame.speed)
    ff = frame_vel + rotate_z(
        shot_offset_rate(a.shot_type, a.params, t, a.duration), frame.heading
    )
    n = ff.norm()
    if n > max_ff:
        ff = ff.scaled(max_ff / n)

    if a.shot_type is ShotType.ORBIT:
        az = a.params.azimuth_s + a.params.angular_speed * min(max(t, 0.0), a.duration)
        yaw = wrap_angle(frame.heading + az + math.pi)
    elif a.shot_type in (ShotType.STATIC, ShotType.FLY_THROUGH, ShotType.ELEVATOR):
        yaw = frame.heading
        if st_position is not None:
            dx = st_position.x - position.x
            dy = st_position.y - position.y
            if math.hypot(dx, dy) > 1e-6:
                yaw = math.atan2(dy, dx)
    else:
        yaw = frame.heading

    return ReferenceSetpoint(
        position=position, yaw=yaw, velocity_ff=ff, camera_script=script
    )
