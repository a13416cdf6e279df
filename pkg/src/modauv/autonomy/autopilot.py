"""Position, depth and attitude hold turning a Setpoint into a body wrench."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..devices.odometry import OdomEstimate
from ..vehicle import rotation as rot
from ..vehicle.allocation import ZERO_WRENCH, Wrench
from ..vehicle.config import VehicleConfig
from .mission import Setpoint
from .pid import PidController


@dataclass(frozen=True)
class Gains:
    kp: float
    ki: float
    kd: float
    limit: float
    integral_limit: float

    def controller(self) -> PidController:
        return PidController(self.kp, self.ki, self.kd, self.limit, self.integral_limit)


# Shipped defaults; see tests/test_autonomy.py for the step-response check.
HORIZONTAL = Gains(kp=8.0, ki=0.05, kd=22.0, limit=30.0, integral_limit=8.0)
DEPTH = Gains(kp=20.0, ki=0.1, kd=34.0, limit=40.0, integral_limit=10.0)
YAW = Gains(kp=3.0, ki=0.05, kd=2.2, limit=6.0, integral_limit=1.0)
TILT = Gains(kp=4.0, ki=0.0, kd=1.6, limit=4.0, integral_limit=0.0)


@dataclass
class Autopilot:
    cfg: VehicleConfig
    horizontal: Gains = HORIZONTAL
    depth: Gains = DEPTH
    yaw: Gains = YAW
    tilt: Gains = TILT
    _pids: dict = field(default_factory=dict, init=False)

    def __post_init__(self):
        self._pids = {
            "x": self.horizontal.controller(),
            "y": self.horizontal.controller(),
            "z": self.depth.controller(),
            "yaw": self.yaw.controller(),
            "roll": self.tilt.controller(),
            "pitch": self.tilt.controller(),
        }

    def reset(self) -> None:
        for pid in self._pids.values():
            pid.reset()

    def step(self, sp: Setpoint, est: OdomEstimate, dt: float) -> Wrench:
        if sp.position is None:
            self.reset()
            return ZERO_WRENCH
        pids = self._pids
        p = est.position
        q = est.orientation
        cfg = self.cfg
        # feed-forward: inertia for the reference acceleration plus the
        # quadratic drag the reference velocity will meet
        v_b = rot.rotate_inv(q, sp.velocity)
        half_rho = 0.5 * cfg.fluid_density
        drag_b = tuple(half_rho * c * abs(v) * v for c, v in zip(cfg.drag_area, v_b))
        ff = rot.add(rot.scale(sp.acceleration, cfg.mass), rot.rotate(q, drag_b))
        f_world = (
            ff[0] + pids["x"].step(sp.position[0] - p[0], dt),
            ff[1] + pids["y"].step(sp.position[1] - p[1], dt),
            ff[2] + pids["z"].step(sp.position[2] - p[2], dt),
        )
        force = rot.rotate_inv(q, f_world)
        roll, pitch, yaw = rot.to_euler(q)
        yaw_ref = yaw if sp.yaw is None else sp.yaw
        torque = (
            pids["roll"].step(-roll, dt),
            pids["pitch"].step(-pitch, dt),
            pids["yaw"].step(rot.wrap_angle(yaw_ref - yaw), dt),
        )
        return Wrench(force, torque)
