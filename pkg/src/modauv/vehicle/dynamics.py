"""Six-degree-of-freedom rigid body in water.

World frame is z-up; body frame is x forward, y left, z up. Linear
velocity is kept in the world frame, angular velocity in the body frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import rotation as rot
from .buoyancy import displaced_volume
from .config import GRAVITY, VehicleConfig

MAX_DT = 0.05


@dataclass(frozen=True)
class RigidBodyState:
    position: tuple = (0.0, 0.0, 0.0)
    orientation: tuple = rot.IDENTITY
    velocity: tuple = (0.0, 0.0, 0.0)
    angular_velocity: tuple = (0.0, 0.0, 0.0)

    @property
    def yaw(self) -> float:
        return rot.to_euler(self.orientation)[2]


def _constants(cfg: VehicleConfig):
    cached = cfg.__dict__.get("_dynamics_constants")
    if cached is not None:
        return cached
    columns = []
    for t in cfg.thrusters:
        columns.append((t.direction, rot.cross(t.position, t.direction)))
    half_rho = 0.5 * cfg.fluid_density
    lift = cfg.fluid_density * GRAVITY * displaced_volume(cfg)
    cached = (
        tuple(columns),
        cfg.mass,
        lift - cfg.mass * GRAVITY,
        lift,
        tuple(half_rho * c for c in cfg.drag_area),
        tuple(half_rho * c for c in cfg.angular_drag),
    )
    # frozen dataclass: stash outside the field set so eq/hash are unaffected
    object.__setattr__(cfg, "_dynamics_constants", cached)
    return cached


def body_wrench(cfg: VehicleConfig, thrusts):
    columns = _constants(cfg)[0]
    fx = fy = fz = tx = ty = tz = 0.0
    for (d, m), f in zip(columns, thrusts):
        fx += d[0] * f
        fy += d[1] * f
        fz += d[2] * f
        tx += m[0] * f
        ty += m[1] * f
        tz += m[2] * f
    return (fx, fy, fz), (tx, ty, tz)


def accelerations(state: RigidBodyState, cfg: VehicleConfig, thrusts, drag: bool = True):
    """World linear acceleration and body angular acceleration."""
    _, mass, net_lift, lift, kd, ka = _constants(cfg)
    q = state.orientation
    force_b, torque_b = body_wrench(cfg, thrusts)
    w = state.angular_velocity
    if drag:
        u = rot.rotate_inv(q, state.velocity)
        force_b = (
            force_b[0] - kd[0] * abs(u[0]) * u[0],
            force_b[1] - kd[1] * abs(u[1]) * u[1],
            force_b[2] - kd[2] * abs(u[2]) * u[2],
        )
        torque_b = (
            torque_b[0] - ka[0] * abs(w[0]) * w[0],
            torque_b[1] - ka[1] * abs(w[1]) * w[1],
            torque_b[2] - ka[2] * abs(w[2]) * w[2],
        )
    # buoyancy acts at the centre of buoyancy; gravity at the origin
    up_b = rot.rotate_inv(q, (0.0, 0.0, lift))
    torque_b = rot.add(torque_b, rot.cross(cfg.center_of_buoyancy, up_b))
    fw = rot.rotate(q, force_b)
    acc = (fw[0] / mass, fw[1] / mass, (fw[2] + net_lift) / mass)
    ix, iy, iz = cfg.inertia
    gyro = (
        (iy - iz) * w[1] * w[2],
        (iz - ix) * w[2] * w[0],
        (ix - iy) * w[0] * w[1],
    )
    alpha = (
        (torque_b[0] + gyro[0]) / ix,
        (torque_b[1] + gyro[1]) / iy,
        (torque_b[2] + gyro[2]) / iz,
    )
    return acc, alpha


def step_dynamics(state: RigidBodyState, cfg: VehicleConfig, thrusts, dt: float,
                  drag: bool = True):
    """Semi-implicit Euler step; returns ``(new_state, world_acceleration)``.

    Velocities update first, then position and attitude use the new
    velocities. The returned acceleration is what an ideal accelerometer
    experienced over the step.
    """
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must be in (0, {MAX_DT}]")
    acc, alpha = accelerations(state, cfg, thrusts, drag)
    v = state.velocity
    w = state.angular_velocity
    v1 = (v[0] + acc[0] * dt, v[1] + acc[1] * dt, v[2] + acc[2] * dt)
    w1 = (w[0] + alpha[0] * dt, w[1] + alpha[1] * dt, w[2] + alpha[2] * dt)
    p = state.position
    p1 = (p[0] + v1[0] * dt, p[1] + v1[1] * dt, p[2] + v1[2] * dt)
    q1 = rot.integrate_quat(state.orientation, w1, dt)
    return RigidBodyState(p1, q1, v1, w1), acc


def terminal_speed(force: float, drag_area: float, density: float) -> float:
    return math.sqrt(2.0 * force / (density * drag_area))
