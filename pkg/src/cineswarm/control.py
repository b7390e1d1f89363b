"""Flight and gimbal controllers.

Velocity control is a saturated proportional law plus the reference
feedforward; saturation scales the whole vector so the commanded direction
is preserved. The gimbal runs a proportional-integral law directly on the
rotation-matrix error, commanding inertial angular rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .geometry import LocalPoint, wrap_angle
from .shots import ReferenceSetpoint

E_UP = np.array([0.0, 0.0, 1.0])


# ---------------------------------------------------------------------------
# rotation helpers


def skew(v: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(m: np.ndarray) -> np.ndarray:
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def exp_so3(v: np.ndarray) -> np.ndarray:
    """Rodrigues formula: exact exponential of a rotation vector."""
    angle = float(np.linalg.norm(v))
    if angle < 1e-12:
        return np.eye(3) + skew(v)
    axis = v / angle
    k = skew(axis)
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def is_rotation(r: np.ndarray, tol: float = 1e-6) -> bool:
    return (
        r.shape == (3, 3)
        and np.allclose(r.T @ r, np.eye(3), atol=tol)
        and np.linalg.det(r) > 0.0
    )


def orthonormalize(r: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar decomposition via SVD)."""
    u, _, vt = np.linalg.svd(r)
    out = u @ vt
    if np.linalg.det(out) < 0.0:
        u[:, -1] = -u[:, -1]
        out = u @ vt
    return out


def rotation_angle(r: np.ndarray) -> float:
    """Geodesic angle of a rotation matrix, radians."""
    c = (np.trace(r) - 1.0) / 2.0
    return math.acos(max(-1.0, min(1.0, c)))


# ---------------------------------------------------------------------------
# velocity control


@dataclass
class ControllerGains:
    k_p: float = 0.8
    k_yaw: float = 1.5
    v_max: float = 8.0
    yaw_rate_max: float = 1.0

    def __post_init__(self):
        for name in ("k_p", "k_yaw", "v_max", "yaw_rate_max"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class VelocityCommand:
    v: LocalPoint
    yaw_rate: float = 0.0


def velocity_command(
    position: LocalPoint,
    yaw: float,
    sp: ReferenceSetpoint,
    gains: ControllerGains,
) -> VelocityCommand:
    raw = (sp.position - position).scaled(gains.k_p) + sp.velocity_ff
    speed = raw.norm()
    if speed > gains.v_max:
        raw = raw.scaled(gains.v_max / speed)
    yaw_rate = gains.k_yaw * wrap_angle(sp.yaw - yaw)
    yaw_rate = max(-gains.yaw_rate_max, min(gains.yaw_rate_max, yaw_rate))
    return VelocityCommand(v=raw, yaw_rate=yaw_rate)


# ---------------------------------------------------------------------------
# gimbal


class SingularPointingError(Exception):
    """Target too close or pointing direction too close to vertical."""


MIN_POINTING_DISTANCE = 0.1
_MIN_HORIZONTAL = math.sin(math.radians(1.0))


def desired_camera_rotation(drone: LocalPoint, st: LocalPoint) -> np.ndarray:
    """Camera rotation whose optical axis points at the shooting target.

    Columns are [f r d]: forward along the line of sight, right horizontal
    (so the image horizon stays level), down completing the frame.
    """
    rel = np.array([st.x - drone.x, st.y - drone.y, st.z - drone.z])
    dist = float(np.linalg.norm(rel))
    if dist <= MIN_POINTING_DISTANCE:
        raise SingularPointingError(f"target {dist:.3f} m away")
    f = rel / dist
    r = np.cross(f, E_UP)
    rn = float(np.linalg.norm(r))
    if rn < _MIN_HORIZONTAL:
        raise SingularPointingError("pointing direction within 1 deg of vertical")
    r = r / rn
    d = np.cross(f, r)
    return np.column_stack([f, r, d])


@dataclass
class GimbalControlState:
    k_r: float = 4.0
    k_i: float = 0.5
    rate_limit: float = 2.0  # rad/s
    integral_limit: float = 0.5  # rad*s
    integral: np.ndarray = field(default_factory=lambda: np.zeros(3))


def gimbal_rate_command(
    r: np.ndarray, r_des: np.ndarray, s: GimbalControlState, dt: float
) -> tuple[np.ndarray, GimbalControlState]:
    """PI attitude law on SO(3); returns inertial rate command and new state."""
    e = 0.5 * vee(r_des.T @ r - r.T @ r_des)
    integral = s.integral + e * dt
    n = float(np.linalg.norm(integral))
    if n > s.integral_limit:
        integral = integral * (s.integral_limit / n)
    omega = -r @ (s.k_r * e + s.k_i * integral)
    mag = float(np.linalg.norm(omega))
    if mag > s.rate_limit:
        omega = omega * (s.rate_limit / mag)
    new_state = GimbalControlState(
        k_r=s.k_r, k_i=s.k_i, rate_limit=s.rate_limit,
        integral_limit=s.integral_limit, integral=integral,
    )
    return omega, new_state


def scripted_gimbal(pan: float, tilt: float) -> np.ndarray:
    """Rotation for a scripted camera pose.

    Pan is the absolute yaw of the optical axis in the local frame, tilt its
    elevation (positive up). The r axis stays horizontal, matching the
    pointing-mode construction.
    """
    ct = math.cos(tilt)
    f = np.array([ct * math.cos(pan), ct * math.sin(pan), math.sin(tilt)])
    r = np.cross(f, E_UP)
    rn = float(np.linalg.norm(r))
    if rn < _MIN_HORIZONTAL:
        raise SingularPointingError("scripted tilt within 1 deg of vertical")
    r = r / rn
    d = np.cross(f, r)
    return np.column_stack([f, r, d])


# ---------------------------------------------------------------------------
# camera payload


class CameraCommand(Enum):
    RECORD_START = "record_start"
    RECORD_STOP = "record_stop"
    AUTOFOCUS = "autofocus"
    ZOOM = "zoom"
    ISO = "iso"
    WHITE_BALANCE = "white_balance"


class CameraLog:
    """Execution log of camera commands; one formatted line per command."""

    def __init__(self):
        self.lines: list[str] = []

    def record(self, t: float, cam_id: str, cmd: CameraCommand, value: Optional[float] = None) -> str:
        line = f"t={t:.2f} cam={cam_id} cmd={cmd.value} value={'' if value is None else value}"
        self.lines.append(line)
        return line
