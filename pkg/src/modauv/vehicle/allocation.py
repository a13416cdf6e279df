"""Thrust allocation through the 6xN mixing matrix."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import VehicleConfig


class UnreachableWrenchError(ValueError):
    pass


@dataclass(frozen=True)
class Wrench:
    force: tuple = (0.0, 0.0, 0.0)
    torque: tuple = (0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array(self.force + self.torque, dtype=float)

    @classmethod
    def from_array(cls, a) -> "Wrench":
        a = [float(x) for x in a]
        return cls(tuple(a[:3]), tuple(a[3:6]))


ZERO_WRENCH = Wrench()


def mixing_matrix(thrusters) -> np.ndarray:
    """Column i is the body wrench produced by one newton on thruster i."""
    cols = []
    for t in thrusters:
        d = np.asarray(t.direction)
        cols.append(np.concatenate([d, np.cross(t.position, d)]))
    return np.array(cols).T


@lru_cache(maxsize=32)
def _allocator(thrusters: tuple):
    m = mixing_matrix(thrusters)
    if np.linalg.matrix_rank(m) == 6:
        # full row rank: unweighted right inverse M^T (M M^T)^-1
        inv = m.T @ np.linalg.inv(m @ m.T)
    else:
        inv = np.linalg.pinv(m)
    m.setflags(write=False)
    inv.setflags(write=False)
    return m, inv


def allocate_thrust(cfg: VehicleConfig, desired: Wrench, tol: float = 1e-9) -> tuple:
    """Minimum-norm thrusts realising ``desired``, uniformly scaled into limits."""
    m, inv = _allocator(cfg.thrusters)
    w = desired.as_array()
    t = inv @ w
    resid = np.max(np.abs(m @ t - w)) if len(w) else 0.0
    if resid > tol * max(1.0, float(np.max(np.abs(w)))):
        raise UnreachableWrenchError(f"layout cannot produce wrench (residual {resid:.3g})")
    limits = np.array([th.max_thrust for th in cfg.thrusters])
    peak = np.max(np.abs(t) / limits)
    if peak > 1.0:
        t = t / peak
    return tuple(float(x) for x in t)


def thrusters_wrench(cfg: VehicleConfig, thrusts) -> Wrench:
    m, _ = _allocator(cfg.thrusters)
    return Wrench.from_array(m @ np.asarray(thrusts, dtype=float))
