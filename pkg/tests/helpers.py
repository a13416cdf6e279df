"""Shared fixtures-by-function for the test modules."""
import math
from dataclasses import replace

import numpy as np

from modauv.vehicle import (
    RigidBodyState, VehicleConfig, Wrench, allocate_thrust, net_buoyancy, solve_ballast,
    step_dynamics, with_ballast,
)


def neutral(cfg=None, **kw):
    """A vehicle with ballast solved to exact neutral buoyancy."""
    cfg = cfg or VehicleConfig(**kw)
    if net_buoyancy(with_ballast(cfg, 0.0)) < 0:
        cfg = replace(cfg, frame_volume=cfg.frame_volume + cfg.dry_mass / cfg.fluid_density)
    return with_ballast(cfg, solve_ballast(cfg))


def terminal_velocity_run(force, cda, t_end=60.0, dt=0.01):
    """Drive forward with a constant allocated surge force; return the final speed."""
    cfg = neutral(drag_area=(cda, 0.5, 0.5), center_of_buoyancy=(0.0, 0.0, 0.0))
    thrusts = allocate_thrust(cfg, Wrench((force, 0.0, 0.0), (0.0, 0.0, 0.0)))
    s = RigidBodyState()
    for _ in range(int(round(t_end / dt))):
        s, _ = step_dynamics(s, cfg, thrusts, dt)
    return math.sqrt(sum(v * v for v in s.velocity)), cfg


def random_wrenches(rng, n, scale=5.0):
    return [Wrench(tuple(rng.normal(0, scale, 3)), tuple(rng.normal(0, scale / 5, 3))) for _ in range(n)]


def analytic_terminal(force, cda, rho=997.0):
    return math.sqrt(2.0 * force / (rho * cda))


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)
