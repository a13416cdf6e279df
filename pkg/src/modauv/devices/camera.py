"""Pinhole camera that emits bounding boxes instead of pixels.

Stands in for an image detector: given the true object and camera pose it
reports where the object's box would land in the frame.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..vehicle import rotation as rot

NEAR_CLIP = 0.05  # m


@dataclass(frozen=True)
class CameraIntrinsics:
    focal: float = 500.0
    cx: float = 320.0
    cy: float = 240.0
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if self.focal <= 0:
            raise ValueError("focal length must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class Detection:
    cx: float
    cy: float
    w: float
    h: float
    confidence: float
    stamp: int
    source: str = ""

    def as_record(self) -> dict:
        return {"cx": self.cx, "cy": self.cy, "w": self.w, "h": self.h,
                "confidence": self.confidence, "stamp": self.stamp, "source": self.source}


def camera_point(point_world, cam_position, cam_orientation):
    """World point -> optical frame (x right, y down, z along the view axis)."""
    b = rot.rotate_inv(cam_orientation, rot.sub(point_world, cam_position))
    return (-b[1], -b[2], b[0])


def confidence_for_width(w: float) -> float:
    return min(1.0, 0.5 + w / 200.0)


def project_bbox(center, radius: float, cam_position, cam_orientation,
                 intr: CameraIntrinsics, stamp: int = 0) -> Optional[Detection]:
    """Box of a sphere of ``radius`` seen from a camera looking along body x."""
    x, y, z = camera_point(center, cam_position, cam_orientation)
    if z <= NEAR_CLIP:
        return None
    u = intr.cx + intr.focal * x / z
    v = intr.cy + intr.focal * y / z
    if not (0.0 <= u <= intr.width and 0.0 <= v <= intr.height):
        return None
    size = 2.0 * intr.focal * radius / z
    x0, x1 = max(u - size / 2, 0.0), min(u + size / 2, float(intr.width))
    y0, y1 = max(v - size / 2, 0.0), min(v + size / 2, float(intr.height))
    w, h = x1 - x0, y1 - y0
    if w <= 0 or h <= 0:
        return None
    return Detection((x0 + x1) / 2, (y0 + y1) / 2, w, h, confidence_for_width(w), int(stamp))
