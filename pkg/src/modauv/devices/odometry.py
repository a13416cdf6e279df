"""Strapdown dead reckoning from body-frame IMU readings."""
from __future__ import annotations

from dataclasses import dataclass

from ..vehicle import rotation as rot
from ..vehicle.config import GRAVITY
from .imu import ImuReading


@dataclass(frozen=True)
class OdomEstimate:
    position: tuple = (0.0, 0.0, 0.0)
    orientation: tuple = rot.IDENTITY
    velocity: tuple = (0.0, 0.0, 0.0)
    stamp: int = 0

    @property
    def yaw(self) -> float:
        return rot.to_euler(self.orientation)[2]


def dead_reckon(prev: OdomEstimate, reading: ImuReading, dt: float) -> OdomEstimate:
    """Attitude from the gyro, then gravity-compensated specific force
    integrated twice (velocity first, so it mirrors the simulator's
    semi-implicit step and reproduces it exactly from ideal readings)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    q = rot.integrate_quat(prev.orientation, reading.gyro, dt)
    a = rot.rotate(q, reading.accel)
    a = (a[0], a[1], a[2] - GRAVITY)
    v = prev.velocity
    v1 = (v[0] + a[0] * dt, v[1] + a[1] * dt, v[2] + a[2] * dt)
    p = prev.position
    p1 = (p[0] + v1[0] * dt, p[1] + v1[1] * dt, p[2] + v1[2] * dt)
    return OdomEstimate(p1, q, v1, reading.stamp)
