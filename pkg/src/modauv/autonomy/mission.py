"""Detect, approach and orbit an object, capturing a view at each azimuth.

``mission_step`` is a pure transition function: it takes the previous
``MissionState`` plus this tick's detections and odometry and returns the
next state and a guidance ``Setpoint`` for the autopilot.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from ..devices.camera import CameraIntrinsics, Detection
from ..devices.odometry import OdomEstimate
from ..vehicle import rotation as rot
from .geometry import TWO_PI, Direction, OrbitPlan, azimuth_of, detection_ray, plan_orbit


class Phase(enum.Enum):
    SEARCH = "SEARCH"
    APPROACH = "APPROACH"
    ORBIT = "ORBIT"
    DONE = "DONE"
    ABORT = "ABORT"


ALLOWED = {
    Phase.SEARCH: {Phase.SEARCH, Phase.APPROACH, Phase.ABORT},
    Phase.APPROACH: {Phase.APPROACH, Phase.ORBIT, Phase.ABORT},
    Phase.ORBIT: {Phase.ORBIT, Phase.DONE, Phase.ABORT},
    Phase.DONE: {Phase.DONE, Phase.ABORT},
    Phase.ABORT: {Phase.ABORT},
}


class IllegalTransition(RuntimeError):
    pass


@dataclass(frozen=True)
class MissionParams:
    orbit_radius: float = 2.0
    n_captures: int = 8
    speed: float = 0.3
    direction: Direction = Direction.CCW
    persist_frames: int = 5
    persist_gap: float = 1.0  # s without detections that resets the streak
    assumed_range: float = 5.0
    lost_timeout: float = 3.0
    radius_tolerance: float = 0.15
    capture_tolerance: float = 0.06  # rad
    max_detection_age: float = 1.0
    search_yaw_rate: float = 0.25
    approach_offset: float = math.radians(40.0)
    min_parallax: float = math.radians(8.0)
    lead_angle: float = 0.3
    prior_weight: float = 0.02


@dataclass(frozen=True)
class Capture:
    azimuth: float
    position: tuple
    yaw: float
    detection: Detection
    stamp: float

    def as_record(self) -> dict:
        return {"azimuth": self.azimuth, "position": list(self.position), "yaw": self.yaw,
                "bbox": self.detection.as_record(), "t": self.stamp}


@dataclass(frozen=True)
class Setpoint:
    """Guidance for the autopilot. ``position`` None means hold nothing
    (thrusters idle); velocity/acceleration are world-frame feed-forward."""

    position: Optional[tuple] = None
    yaw: Optional[float] = None
    velocity: tuple = (0.0, 0.0, 0.0)
    acceleration: tuple = (0.0, 0.0, 0.0)
    yaw_rate: float = 0.0


IDLE = Setpoint()


@dataclass(frozen=True)
class MissionInputs:
    now: float
    odom: OdomEstimate
    detections: Sequence[Detection] = ()


@dataclass(frozen=True)
class MissionState:
    phase: Phase = Phase.SEARCH
    target: Optional[tuple] = None
    captures: tuple = ()
    plan: Optional[OrbitPlan] = None
    streak: int = 0
    last_detection: Optional[Detection] = None
    last_detection_time: Optional[float] = None
    hold: Optional[tuple] = None
    yaw_ref: Optional[float] = None
    carrot: Optional[tuple] = None
    orbit_ref: Optional[float] = None
    approach_az: Optional[float] = None  # azimuth of the orbit entry point, fixed on entry
    # triangulation normal equations (2x2 symmetric + rhs), plus bearing spread
    tri: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    ray_min: Optional[float] = None
    ray_max: Optional[float] = None
    abort_reason: str = ""
    last_time: Optional[float] = None

    @property
    def captured(self) -> set:
        return {c.azimuth for c in self.captures}


def _advance(ms: MissionState, phase: Phase, **changes) -> MissionState:
    if phase not in ALLOWED[ms.phase]:
        raise IllegalTransition(f"{ms.phase.value} -> {phase.value}")
    return replace(ms, phase=phase, **changes)


def abort(ms: MissionState, reason: str) -> MissionState:
    if ms.phase is Phase.ABORT:
        return ms
    return _advance(ms, Phase.ABORT, abort_reason=reason)


def _add_ray(ms: MissionState, origin, d, weight: float = 1.0) -> MissionState:
    a11, a12, a22, b1, b2 = ms.tri
    # projector onto the ray's normal: I - d d^T
    p11, p12, p22 = 1.0 - d[0] * d[0], -d[0] * d[1], 1.0 - d[1] * d[1]
    ox, oy = origin[0], origin[1]
    tri = (a11 + weight * p11, a12 + weight * p12, a22 + weight * p22,
           b1 + weight * (p11 * ox + p12 * oy), b2 + weight * (p12 * ox + p22 * oy))
    ang = math.atan2(d[1], d[0])
    if ms.ray_min is None:
        lo = hi = ang
    else:
        # spread measured relative to the first ray, so no wrap issue below +-pi
        ref = 0.5 * (ms.ray_min + ms.ray_max)
        ang = ref + rot.wrap_angle(ang - ref)
        lo, hi = min(ms.ray_min, ang), max(ms.ray_max, ang)
    return replace(ms, tri=tri, ray_min=lo, ray_max=hi)


def _solve_target(ms: MissionState, depth: float) -> Optional[tuple]:
    a11, a12, a22, b1, b2 = ms.tri
    det = a11 * a22 - a12 * a12
    if det <= 1e-12:
        return ms.target
    x = (a22 * b1 - a12 * b2) / det
    y = (a11 * b2 - a12 * b1) / det
    return (x, y, depth)


def _face(p, target) -> float:
    return math.atan2(target[1] - p[1], target[0] - p[0])


def _toward(frm, to, max_step):
    dx, dy, dz = to[0] - frm[0], to[1] - frm[1], to[2] - frm[2]
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d <= max_step or d == 0.0:
        return tuple(to), d
    k = max_step / d
    return (frm[0] + dx * k, frm[1] + dy * k, frm[2] + dz * k), d


def mission_step(ms: MissionState, inputs: MissionInputs, params: MissionParams,
                 intr: CameraIntrinsics):
    now = inputs.now
    odom = inputs.odom
    p = odom.position
    dt = 0.0 if ms.last_time is None else max(now - ms.last_time, 0.0)
    ms = replace(ms, last_time=now)
    if ms.hold is None:
        ms = replace(ms, hold=p, yaw_ref=odom.yaw)
    depth = ms.hold[2]

    if ms.phase is Phase.ABORT:
        return ms, IDLE

    for det in inputs.detections:
        gap = None if ms.last_detection_time is None else now - ms.last_detection_time
        streak = ms.streak + 1 if gap is not None and gap <= params.persist_gap else 1
        ms = replace(ms, streak=streak, last_detection=det, last_detection_time=now)
        ms = _add_ray(ms, p, detection_ray(det, intr, odom.orientation))

    lost = ms.last_detection_time is None or now - ms.last_detection_time > params.lost_timeout
    if ms.phase in (Phase.APPROACH, Phase.ORBIT) and lost:
        return abort(ms, "detection lost"), IDLE

    if ms.phase is Phase.SEARCH:
        return _search(ms, inputs, params, intr, dt, depth)
    if ms.phase is Phase.APPROACH:
        return _approach(ms, inputs, params, dt, depth)
    if ms.phase is Phase.ORBIT:
        return _orbit(ms, inputs, params, dt, depth)
    # DONE: station-keep where the last capture left us, facing the target
    return ms, Setpoint(ms.hold, _face(ms.hold, ms.target))


def _search(ms, inputs, params, intr, dt, depth):
    odom = inputs.odom
    p = odom.position
    recent = ms.last_detection_time is not None and inputs.now - ms.last_detection_time <= params.persist_gap
    if recent and ms.streak >= params.persist_frames:
        d = detection_ray(ms.last_detection, intr, odom.orientation)
        r = params.assumed_range
        prior = (p[0] + r * d[0], p[1] + r * d[1], depth)
        w = params.prior_weight
        # seed the least-squares system with the assumed-range guess
        a11, a12, a22, b1, b2 = ms.tri
        ms = replace(ms, tri=(a11 + w, a12, a22 + w, b1 + w * prior[0], b2 + w * prior[1]))
        target = _solve_target(ms, depth) or prior
        # come in at an angle so successive bearings triangulate the range
        entry = azimuth_of(p, target) + params.direction.value * params.approach_offset
        ms = _advance(ms, Phase.APPROACH, target=target, carrot=(p[0], p[1], depth), approach_az=entry)
        return _approach(ms, inputs, params, 0.0, depth)
    if recent:
        d = detection_ray(ms.last_detection, intr, odom.orientation)
        ms = replace(ms, yaw_ref=math.atan2(d[1], d[0]))
        return ms, Setpoint(ms.hold, ms.yaw_ref)
    yaw_ref = rot.wrap_angle(ms.yaw_ref + params.search_yaw_rate * dt)
    ms = replace(ms, yaw_ref=yaw_ref)
    return ms, Setpoint(ms.hold, yaw_ref, yaw_rate=params.search_yaw_rate)


def _approach(ms, inputs, params, dt, depth):
    p = inputs.odom.position
    target = _solve_target(ms, depth)
    ms = replace(ms, target=target)
    R = params.orbit_radius
    dist = math.hypot(p[0] - target[0], p[1] - target[1])
    ang = ms.approach_az
    goal = (target[0] + R * math.cos(ang), target[1] + R * math.sin(ang), depth)
    carrot, remaining = _toward(ms.carrot, goal, params.speed * dt)
    vel = (0.0, 0.0, 0.0)
    if dt > 0 and remaining > params.speed * dt:
        vel = tuple((c - o) / dt for c, o in zip(carrot, ms.carrot))
    ms = replace(ms, carrot=carrot)
    parallax = (ms.ray_max - ms.ray_min) if ms.ray_min is not None else 0.0
    at_goal = math.dist(p, goal) <= params.radius_tolerance
    if abs(dist - R) <= params.radius_tolerance and at_goal and parallax >= params.min_parallax:
        start = azimuth_of(p, target)
        plan = plan_orbit(target, R, params.n_captures, start, params.direction)
        ms = _advance(ms, Phase.ORBIT, plan=plan, orbit_ref=start)
        return _orbit(ms, inputs, params, 0.0, depth)
    return ms, Setpoint(carrot, _face(p, target), velocity=vel)


def _orbit(ms, inputs, params, dt, depth):
    odom = inputs.odom
    p = odom.position
    target = _solve_target(ms, depth)
    plan = replace(ms.plan, center=target)
    R = plan.radius
    s = plan.direction.value
    here = azimuth_of(p, target)
    radial = abs(math.hypot(p[0] - target[0], p[1] - target[1]) - R)

    captures = ms.captures
    fresh = (ms.last_detection_time is not None
             and inputs.now - ms.last_detection_time <= params.max_detection_age)
    if fresh and radial <= params.radius_tolerance:
        done = ms.captured
        for az in plan.azimuths:
            if az not in done and abs(rot.wrap_angle(here - az)) <= params.capture_tolerance:
                captures = captures + (Capture(az, p, odom.yaw, ms.last_detection, inputs.now),)
                break
    ms = replace(ms, target=target, plan=plan, captures=captures)
    if len(captures) == len(plan.azimuths):
        return _advance(ms, Phase.DONE, hold=p), Setpoint(p, _face(p, target))

    rate = params.speed / R
    ref = ms.orbit_ref + s * rate * dt
    lead = rot.wrap_angle(ref - here) * s
    if lead > params.lead_angle:
        ref = here + s * params.lead_angle
    ref %= TWO_PI
    ms = replace(ms, orbit_ref=ref)
    c, sn = math.cos(ref), math.sin(ref)
    pos = (target[0] + R * c, target[1] + R * sn, depth)
    vel = (-s * params.speed * sn, s * params.speed * c, 0.0)
    acc = (-params.speed ** 2 / R * c, -params.speed ** 2 / R * sn, 0.0)
    return ms, Setpoint(pos, _face(p, target), velocity=vel, acceleration=acc, yaw_rate=s * rate)
