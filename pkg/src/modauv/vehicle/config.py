from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

GRAVITY = 9.80665
LB = 0.45359237  # kg

# electronics enclosure sizes offered by the frame, metres
TUBE_4IN = 0.1016
TUBE_4P5IN = 0.1143
TUBE_6IN = 0.1524
TUBE_8IN = 0.2032
STANDARD_TUBES = {"4in": TUBE_4IN, "4.5in": TUBE_4P5IN, "6in": TUBE_6IN, "8in": TUBE_8IN}


def _vec3(v, name):
    v = tuple(float(x) for x in v)
    if len(v) != 3 or not all(math.isfinite(x) for x in v):
        raise ValueError(f"{name} must be three finite numbers")
    return v


@dataclass(frozen=True)
class Enclosure:
    name: str
    diameter: float
    length: float
    mass: float = 0.0
    sealed: bool = True

    def __post_init__(self):
        if self.diameter <= 0 or self.length <= 0:
            raise ValueError(f"enclosure {self.name!r}: diameter and length must be positive")
        if self.mass < 0:
            raise ValueError(f"enclosure {self.name!r}: mass must be non-negative")

    @property
    def volume(self) -> float:
        return math.pi * (self.diameter / 2) ** 2 * self.length


@dataclass(frozen=True)
class Thruster:
    name: str
    position: tuple
    direction: tuple
    max_thrust: float = 40.0

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, f"thruster {self.name!r} position"))
        d = _vec3(self.direction, f"thruster {self.name!r} direction")
        n = math.sqrt(sum(x * x for x in d))
        if n == 0:
            raise ValueError(f"thruster {self.name!r}: zero direction")
        object.__setattr__(self, "direction", tuple(x / n for x in d))
        if self.max_thrust <= 0:
            raise ValueError(f"thruster {self.name!r}: max_thrust must be positive")


_S = math.sqrt(0.5)


def vectored_six(max_thrust: float = 40.0) -> tuple:
    """Four 45-degree vectored horizontals (front pair slightly low, rear
    pair slightly high so pitch is actuated) plus two verticals."""
    return (
        Thruster("h_fr", (0.156, -0.111, -0.06), (_S, _S, 0.0), max_thrust),
        Thruster("h_fl", (0.156, 0.111, -0.06), (_S, -_S, 0.0), max_thrust),
        Thruster("h_rr", (-0.156, -0.111, 0.06), (_S, -_S, 0.0), max_thrust),
        Thruster("h_rl", (-0.156, 0.111, 0.06), (_S, _S, 0.0), max_thrust),
        Thruster("v_r", (0.0, -0.218, 0.0), (0.0, 0.0, 1.0), max_thrust),
        Thruster("v_l", (0.0, 0.218, 0.0), (0.0, 0.0, 1.0), max_thrust),
    )


def vectored_eight(max_thrust: float = 40.0) -> tuple:
    """Vectored horizontals plus four corner verticals."""
    return vectored_six(max_thrust)[:4] + (
        Thruster("v_fr", (0.12, -0.218, 0.0), (0.0, 0.0, 1.0), max_thrust),
        Thruster("v_fl", (0.12, 0.218, 0.0), (0.0, 0.0, 1.0), max_thrust),
        Thruster("v_rr", (-0.12, -0.218, 0.0), (0.0, 0.0, 1.0), max_thrust),
        Thruster("v_rl", (-0.12, 0.218, 0.0), (0.0, 0.0, 1.0), max_thrust),
    )


LAYOUTS = {"vectored6": vectored_six, "vectored8": vectored_eight}


@dataclass(frozen=True)
class VehicleConfig:
    """Mass properties, geometry and thruster layout.

    The body origin is the centre of gravity; ``center_of_buoyancy`` is an
    offset from it. ``drag_area`` holds per-axis C_d*A products for
    translation; ``angular_drag`` the equivalent for rotation (m^5).
    """

    enclosures: tuple = ()
    frame_mass: float = 10.0
    frame_volume: float = 0.010
    ballast: float = 0.0
    thrusters: tuple = field(default_factory=vectored_six)
    fluid_density: float = 997.0
    drag_area: tuple = (0.12, 0.18, 0.20)
    angular_drag: tuple = (0.004, 0.004, 0.004)
    inertia: tuple = (0.26, 0.23, 0.37)
    center_of_buoyancy: tuple = (0.0, 0.0, 0.02)

    def __post_init__(self):
        object.__setattr__(self, "enclosures", tuple(self.enclosures))
        object.__setattr__(self, "thrusters", tuple(self.thrusters))
        for name in ("drag_area", "angular_drag", "inertia", "center_of_buoyancy"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))
        if self.frame_mass <= 0:
            raise ValueError("frame_mass must be positive")
        if self.frame_volume < 0:
            raise ValueError("frame_volume must be non-negative")
        if self.ballast < 0:
            raise ValueError("ballast must be non-negative")
        if self.fluid_density <= 0:
            raise ValueError("fluid_density must be positive")
        if not 6 <= len(self.thrusters) <= 8:
            raise ValueError(f"need 6 to 8 thrusters, got {len(self.thrusters)}")
        if any(x <= 0 for x in self.inertia):
            raise ValueError("inertia must be positive")
        if any(x < 0 for x in self.drag_area + self.angular_drag):
            raise ValueError("drag coefficients must be non-negative")

    @property
    def dry_mass(self) -> float:
        return self.frame_mass + sum(e.mass for e in self.enclosures)

    @property
    def mass(self) -> float:
        return self.dry_mass + self.ballast

    @classmethod
    def from_dict(cls, d: Mapping) -> "VehicleConfig":
        d = dict(d)
        enclosures = tuple(Enclosure(**e) for e in d.pop("enclosures", ()))
        thr = d.pop("thrusters", "vectored6")
        if isinstance(thr, str):
            thrusters = LAYOUTS[thr]()
        elif isinstance(thr, Mapping):
            thrusters = LAYOUTS[thr["layout"]](thr.get("max_thrust", 40.0))
        else:
            thrusters = tuple(Thruster(**t) for t in thr)
        return cls(enclosures=enclosures, thrusters=thrusters, **d)
