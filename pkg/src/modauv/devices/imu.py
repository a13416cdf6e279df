"""Nine-axis inertial sensor model and on-chip style motion classifier."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..vehicle import rotation as rot
from ..vehicle.config import GRAVITY
from ..vehicle.dynamics import RigidBodyState

MAG_NORTH = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class ImuReading:
    accel: tuple
    gyro: tuple
    mag: tuple
    stamp: int  # us

    def as_record(self) -> dict:
        a, g, m = self.accel, self.gyro, self.mag
        return {
            "ax": a[0], "ay": a[1], "az": a[2],
            "gx": g[0], "gy": g[1], "gz": g[2],
            "mx": m[0], "my": m[1], "mz": m[2],
        }

    @classmethod
    def from_record(cls, r, stamp: int) -> "ImuReading":
        return cls((r["ax"], r["ay"], r["az"]), (r["gx"], r["gy"], r["gz"]),
                   (r["mx"], r["my"], r["mz"]), stamp)


@dataclass(frozen=True)
class ImuNoise:
    accel_sigma: float = 0.0
    gyro_sigma: float = 0.0
    mag_sigma: float = 0.0
    accel_bias: tuple = (0.0, 0.0, 0.0)
    gyro_bias: tuple = (0.0, 0.0, 0.0)

    @property
    def noiseless(self) -> bool:
        return self.accel_sigma == 0 and self.gyro_sigma == 0 and self.mag_sigma == 0


def sample_imu(true_state: RigidBodyState, accel_world, noise: ImuNoise,
               rng: np.random.Generator, stamp: int = 0) -> ImuReading:
    """Specific force, body rates and north vector in the body frame.

    ``true_state`` is the state at the end of the step over which the body
    experienced ``accel_world``.
    """
    q = true_state.orientation
    f = rot.rotate_inv(q, (accel_world[0], accel_world[1], accel_world[2] + GRAVITY))
    w = true_state.angular_velocity
    m = rot.rotate_inv(q, MAG_NORTH)
    f = rot.add(f, noise.accel_bias)
    w = rot.add(w, noise.gyro_bias)
    if not noise.noiseless:
        n = rng.standard_normal(9)
        f = rot.add(f, tuple(float(x) * noise.accel_sigma for x in n[0:3]))
        w = rot.add(w, tuple(float(x) * noise.gyro_sigma for x in n[3:6]))
        m = rot.add(m, tuple(float(x) * noise.mag_sigma for x in n[6:9]))
    return ImuReading(f, w, m, int(stamp))


class MotionClass(enum.Enum):
    STABLE = "STABLE"
    SHAKE = "SHAKE"
    SIGNIFICANT_MOTION = "SIGNIFICANT_MOTION"
    NOMINAL = "NOMINAL"


@dataclass(frozen=True)
class MotionThresholds:
    window: int = 50
    gyro_stable: float = 0.05  # rad/s
    accel_stable_std: float = 0.2  # m/s^2
    shake_variance: float = 25.0  # (m/s^2)^2
    motion_accel: float = 1.0  # m/s^2


class WindowLengthError(ValueError):
    pass


def classify_motion(window: Sequence[ImuReading], th: MotionThresholds = MotionThresholds()) -> MotionClass:
    """Label one window. Precedence: SHAKE, SIGNIFICANT_MOTION, STABLE, NOMINAL.

    Shake energy is the mean squared first difference of acceleration
    (halved, so white noise of variance s^2 per axis scores 3 s^2).
    Significant motion compares against a level gravity reaction.
    """
    if len(window) != th.window:
        raise WindowLengthError(f"window must hold {th.window} readings, got {len(window)}")
    acc = np.array([r.accel for r in window])
    gyr = np.array([r.gyro for r in window])
    diff = np.diff(acc, axis=0)
    shake = float(np.mean(np.sum(diff * diff, axis=1))) / 2.0 if len(diff) else 0.0
    if shake > th.shake_variance:
        return MotionClass.SHAKE
    net = acc - np.array([0.0, 0.0, GRAVITY])
    if float(np.mean(np.linalg.norm(net, axis=1))) > th.motion_accel:
        return MotionClass.SIGNIFICANT_MOTION
    gyro_peak = float(np.max(np.linalg.norm(gyr, axis=1)))
    accel_std = float(np.sqrt(np.sum(np.var(acc, axis=0))))
    if gyro_peak < th.gyro_stable and accel_std < th.accel_stable_std:
        return MotionClass.STABLE
    return MotionClass.NOMINAL
