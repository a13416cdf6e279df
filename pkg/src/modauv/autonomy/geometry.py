from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from ..devices.camera import CameraIntrinsics, Detection
from ..vehicle import rotation as rot

TWO_PI = 2.0 * math.pi


def bearing_from_bbox(det: Detection, intr: CameraIntrinsics) -> tuple[float, float]:
    """(azimuth, elevation) of the box centre; azimuth positive to the
    right of the optical axis, elevation positive above it."""
    az = math.atan2(det.cx - intr.cx, intr.focal)
    el = math.atan2(intr.cy - det.cy, intr.focal)
    return az, el


def detection_ray(det: Detection, intr: CameraIntrinsics, orientation) -> tuple[float, float]:
    """Horizontal unit direction (world) toward the detected object."""
    x = (det.cx - intr.cx) / intr.focal
    y = (det.cy - intr.cy) / intr.focal
    d = rot.rotate(orientation, (1.0, -x, -y))
    n = math.hypot(d[0], d[1])
    return d[0] / n, d[1] / n


class Direction(enum.Enum):
    CCW = 1
    CW = -1


@dataclass(frozen=True)
class OrbitPlan:
    center: tuple
    radius: float
    azimuths: tuple  # sorted, unique, in [0, 2pi)
    direction: Direction = Direction.CCW
    start: float = 0.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("orbit radius must be positive")

    def waypoint(self, azimuth: float) -> tuple:
        c = self.center
        return (c[0] + self.radius * math.cos(azimuth), c[1] + self.radius * math.sin(azimuth), c[2])

    def waypoints(self) -> list[tuple]:
        return [self.waypoint(a) for a in self.visit_order()]

    def visit_order(self) -> list[float]:
        s = self.direction.value

        def ahead(a):
            d = ((a - self.start) * s) % TWO_PI
            return 0.0 if d > TWO_PI - 1e-9 else d  # rounding noise around the start
        return sorted(self.azimuths, key=ahead)


def plan_orbit(target, radius: float, n_captures: int, start_azimuth: float = 0.0,
               direction: Direction = Direction.CCW) -> OrbitPlan:
    if n_captures < 1:
        raise ValueError("need at least one capture")
    if radius <= 0:
        raise ValueError("orbit radius must be positive")
    start = start_azimuth % TWO_PI
    az = {round((start + TWO_PI * k / n_captures) % TWO_PI, 12) % TWO_PI for k in range(n_captures)}
    return OrbitPlan(tuple(float(x) for x in target), float(radius), tuple(sorted(az)), direction, start)


def azimuth_of(point, center) -> float:
    return math.atan2(point[1] - center[1], point[0] - center[0]) % TWO_PI
