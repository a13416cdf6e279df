from __future__ import annotations

from dataclasses import replace

from .config import GRAVITY, VehicleConfig


class NegativeBallastError(ValueError):
    pass


def displaced_volume(cfg: VehicleConfig) -> float:
    return cfg.frame_volume + sum(e.volume for e in cfg.enclosures if e.sealed)


def net_buoyancy(cfg: VehicleConfig) -> float:
    """Net vertical force in newtons; positive means the vehicle floats."""
    return (cfg.fluid_density * displaced_volume(cfg) - cfg.mass) * GRAVITY


def solve_ballast(cfg: VehicleConfig, tol: float = 1e-9) -> float:
    """Ballast mass making the vehicle neutral, ignoring any ballast already fitted."""
    m = cfg.fluid_density * displaced_volume(cfg) - cfg.dry_mass
    if m < -tol:
        raise NegativeBallastError(
            f"vehicle is {-m:.3f} kg heavy before ballast; remove mass or add volume"
        )
    return max(m, 0.0)


def with_ballast(cfg: VehicleConfig, ballast: float) -> VehicleConfig:
    return replace(cfg, ballast=ballast)
