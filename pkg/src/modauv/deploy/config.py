"""Scenario files: YAML documents with optional ``base:`` inheritance.

A scenario is merged over its base (recursively, mappings only), then
``--override key.path=value`` edits are applied, then every section is
built into typed config objects. Failures raise :class:`ConfigError`
carrying the dotted path of the offending field.
"""
from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from ..autonomy import autopilot as ap
from ..autonomy.geometry import Direction
from ..autonomy.mission import MissionParams
from ..canproto.payload import MessageMap, MessageSpec
from ..devices.camera import CameraIntrinsics
from ..devices.imu import ImuNoise, MotionThresholds
from ..powersys import ProtectionConfig, cell_array
from ..vehicle.config import VehicleConfig
from .link import LinkMode

# topic -> schema tag; the sonar/environment slots have no device model yet
TOPICS = {
    "imu/raw": "ImuReading",
    "imu/class": "MotionClass",
    "odom/estimate": "OdomEstimate",
    "camera/detections": "Detection",
    "thrusters/cmd": "PwmCommand",
    "mux/select": "MuxSelect",
    "power/rail": "BuckState",
    "power/bms": "BmsTelemetry",
    "mission/state": "MissionState",
    "mission/wrench": "Wrench",
    "mission/captures": "Capture",
    "sonar/range": "SonarRange",
    "env/temperature": "Temperature",
    "env/chemical": "ChemicalSample",
}

FAULT_KINDS = {"cell_voltage", "tether_cut", "tether_restore", "rail_load", "mux_select", "clear_faults"}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


def scenario_dir() -> Path:
    return Path(str(resources.files("modauv") / "scenarios"))


def list_scenarios() -> list[str]:
    return sorted(p.stem for p in scenario_dir().glob("*.yaml"))


def _resolve(ref: str, relative_to: Optional[Path]) -> Path:
    p = Path(ref)
    candidates = []
    if relative_to is not None:
        candidates += [relative_to / ref, relative_to / f"{ref}.yaml"]
    candidates += [p, scenario_dir() / ref, scenario_dir() / f"{ref}.yaml"]
    for c in candidates:
        if c.is_file():
            return c
    raise ConfigError("base" if relative_to else "", f"scenario {ref!r} not found")


def deep_merge(base: Mapping, over: Mapping) -> dict:
    out = copy.deepcopy(dict(base))
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), Mapping):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_raw(ref, _seen=()) -> dict:
    path = _resolve(str(ref), None)
    if path.resolve() in _seen:
        raise ConfigError("base", f"inheritance cycle through {path.name}")
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, Mapping):
        raise ConfigError("", f"{path.name} must contain a mapping")
    base = data.pop("base", None)
    if base is not None:
        parent = load_raw(_resolve(base, path.parent), _seen + (path.resolve(),))
        parent.pop("name", None)
        data = deep_merge(parent, data)
    data.setdefault("name", path.stem)
    return data


def apply_overrides(data: Mapping, overrides) -> dict:
    out = copy.deepcopy(dict(data))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError("", f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for i, part in enumerate(parts[:-1]):
            nxt = node.get(part)
            if nxt is None:
                nxt = node[part] = {}
            if not isinstance(nxt, dict):
                raise ConfigError(".".join(parts[:i + 1]), "cannot override inside a non-mapping")
            node = nxt
        node[parts[-1]] = yaml.safe_load(raw)
    return out


# --- typed sections ------------------------------------------------------


@dataclass(frozen=True)
class InitialState:
    position: tuple = (0.0, 0.0, -2.0)
    yaw: float = 0.0


@dataclass(frozen=True)
class ObjectConfig:
    position: tuple = (6.0, 3.0, -2.0)
    radius: float = 0.25


@dataclass(frozen=True)
class CameraConfig:
    intrinsics: CameraIntrinsics = CameraIntrinsics()
    pixel_sigma: float = 0.0


@dataclass(frozen=True)
class DeviceConfig:
    imu: ImuNoise = ImuNoise()
    motion: MotionThresholds = MotionThresholds()
    camera: CameraConfig = CameraConfig()
    transport: Mapping = field(default_factory=lambda: {"imu/raw": "can", "power/bms": "can"})


@dataclass(frozen=True)
class PowerConfig:
    cells: tuple = (3.8, 3.8, 3.8, 3.8)
    cell_resistance: float = 0.008
    rail_load: float = 2.0
    amps_per_newton: float = 0.25
    bms_fault_scope: str = "all"  # "all" | "rail"
    protection: ProtectionConfig = ProtectionConfig()


@dataclass(frozen=True)
class CanConfig:
    bitrate: float = 1_000_000
    rx_capacity: int = 8


@dataclass(frozen=True)
class LinkConfig:
    mode: LinkMode = LinkMode.TETHERED
    bandwidth: float = 100e6
    latency_us: float = 2000.0
    loss_timeout_ms: float = 200.0
    recovery_hold_ms: float = 2000.0
    request_bits: int = 245_760
    response_bits: int = 256
    offboard_processing_ms: float = 10.0


@dataclass(frozen=True)
class ComputeConfig:
    onboard_period_ms: float = 500.0
    offboard_period_ms: float = 50.0
    onboard_confidence_floor: float = 0.6
    offboard_confidence_floor: float = 0.3
    onboard_confidence_scale: float = 0.85


@dataclass(frozen=True)
class FaultEvent:
    kind: str
    at: Optional[float] = None
    after_phase: Optional[str] = None
    delay: float = 0.0
    cell: int = 0
    volts: float = 0.0
    amps: float = 0.0
    bank: int = 0
    source: str = "HARDWARE"


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    duration: float
    dt: float
    stop_on_terminal: bool
    vehicle: VehicleConfig
    initial: InitialState
    object: ObjectConfig
    devices: DeviceConfig
    power: PowerConfig
    can: CanConfig
    message_map: MessageMap
    mission: MissionParams
    link: LinkConfig
    compute: ComputeConfig
    faults: tuple
    autopilot: Mapping = field(default_factory=dict)  # axis -> Gains
    raw: Mapping = field(compare=False, repr=False, default_factory=dict)

    def echo(self) -> dict:
        """Configuration as logged in headers: everything but the seed."""
        d = copy.deepcopy(dict(self.raw))
        d.pop("seed", None)
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.echo(), sort_keys=True).encode()).hexdigest()


DEFAULT_MESSAGE_MAP = [
    {"name": "imu_accel", "topic": "imu/raw", "can_id": 0x101, "fields": [
        {"name": n, "width": 21, "scale": 2e-5} for n in ("ax", "ay", "az")]},
    {"name": "imu_gyro", "topic": "imu/raw", "can_id": 0x102, "fields": [
        {"name": n, "width": 21, "scale": 2e-6} for n in ("gx", "gy", "gz")]},
    {"name": "imu_mag", "topic": "imu/raw", "can_id": 0x103, "fields": [
        {"name": n, "width": 21, "scale": 1e-6} for n in ("mx", "my", "mz")]},
    {"name": "bms_status", "topic": "power/bms", "can_id": 0x200, "fields": [
        {"name": "pack_volts", "width": 16, "scale": 0.001, "signed": False},
        {"name": "pack_amps", "width": 16, "scale": 0.01},
        {"name": "fault", "width": 8, "signed": False},
        {"name": "cell", "width": 8, "signed": False},
        {"name": "fet_closed", "width": 1, "signed": False}]},
]


def _section(cls, data, path, **converted):
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(path, "expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    for k in data:
        if k not in names:
            raise ConfigError(f"{path}.{k}" if path else k, "unknown field")
    kwargs = {k: v for k, v in data.items() if k not in converted}
    for k, v in kwargs.items():
        if isinstance(v, list):
            kwargs[k] = tuple(v)
    kwargs.update({k: v for k, v in converted.items() if v is not None})
    try:
        return cls(**kwargs)
    except (TypeError, ValueError, KeyError) as exc:
        field_name = _field_in(str(exc), names)
        raise ConfigError(f"{path}.{field_name}" if field_name else path, str(exc)) from None


def _field_in(message: str, names) -> str:
    hits = [n for n in names if n in message]
    return max(hits, key=len) if hits else ""


def _number(data, key, path, default, positive=False, integer=False):
    v = data.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{path}{key}", "expected a finite number")
    if positive and v <= 0:
        raise ConfigError(f"{path}{key}", "must be positive")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{path}{key}", "expected an integer")
        v = int(v)
    return v


def _vehicle(data, path="vehicle") -> VehicleConfig:
    if not isinstance(data, Mapping):
        raise ConfigError(path, "expected a mapping")
    for i, e in enumerate(data.get("enclosures", ())):
        for k in ("diameter", "length"):
            if not isinstance(e.get(k), (int, float)) or e[k] <= 0:
                raise ConfigError(f"{path}.enclosures[{i}].{k}", "must be a positive number")
    thr = data.get("thrusters")
    if isinstance(thr, list):
        for i, t in enumerate(thr):
            if not isinstance(t.get("max_thrust", 40.0), (int, float)) or t.get("max_thrust", 40.0) <= 0:
                raise ConfigError(f"{path}.thrusters[{i}].max_thrust", "must be positive")
    try:
        return VehicleConfig.from_dict(data)
    except KeyError as exc:
        raise ConfigError(f"{path}.thrusters", f"unknown layout {exc}") from None
    except (TypeError, ValueError) as exc:
        names = {f.name for f in dataclasses.fields(VehicleConfig)}
        f = _field_in(str(exc), names)
        raise ConfigError(f"{path}.{f}" if f else path, str(exc)) from None


def build(data: Mapping) -> ScenarioConfig:
    if not isinstance(data, Mapping):
        raise ConfigError("", "scenario must be a mapping")
    known = {f.name for f in dataclasses.fields(ScenarioConfig)} - {"raw", "initial"} | {"initial_state"}
    for k in data:
        if k not in known:
            raise ConfigError(k, "unknown field")
    if "seed" not in data:
        raise ConfigError("seed", "seed is mandatory")
    seed = _number(data, "seed", "", None, integer=True)
    if seed < 0:
        raise ConfigError("seed", "must be non-negative")
    duration = _number(data, "duration", "", 240.0, positive=True)
    dt = _number(data, "dt", "", 0.01, positive=True)
    if dt > 0.05:
        raise ConfigError("dt", "must not exceed 0.05 s")

    vehicle = _vehicle(data.get("vehicle", {}))
    initial = _section(InitialState, data.get("initial_state"), "initial_state")
    obj = _section(ObjectConfig, data.get("object"), "object")

    dev = data.get("devices") or {}
    if not isinstance(dev, Mapping):
        raise ConfigError("devices", "expected a mapping")
    cam = dev.get("camera") or {}
    if not isinstance(cam, Mapping):
        raise ConfigError("devices.camera", "expected a mapping")
    cam_intr = {k: v for k, v in cam.items() if k != "pixel_sigma"}
    camera = CameraConfig(
        _section(CameraIntrinsics, cam_intr, "devices.camera"),
        _number(cam, "pixel_sigma", "devices.camera.", 0.0),
    )
    devices = _section(
        DeviceConfig, dev, "devices",
        imu=_section(ImuNoise, dev.get("imu"), "devices.imu"),
        motion=_section(MotionThresholds, dev.get("motion"), "devices.motion"),
        camera=camera,
    )
    for topic, mode in devices.transport.items():
        if topic not in TOPICS:
            raise ConfigError(f"devices.transport.{topic}", "unknown topic")
        if mode not in ("can", "direct"):
            raise ConfigError(f"devices.transport.{topic}", "must be 'can' or 'direct'")

    pw = data.get("power") or {}
    power = _section(PowerConfig, pw, "power",
                     protection=_section(ProtectionConfig, pw.get("protection"), "power.protection"))
    try:
        cell_array(power.cells)
    except ValueError as exc:
        raise ConfigError("power.cells", str(exc)) from None
    if power.bms_fault_scope not in ("all", "rail"):
        raise ConfigError("power.bms_fault_scope", "must be 'all' or 'rail'")

    can = _section(CanConfig, data.get("can"), "can")
    if can.bitrate <= 0:
        raise ConfigError("can.bitrate", "must be positive")
    if can.rx_capacity < 1:
        raise ConfigError("can.rx_capacity", "must be at least 1")

    specs = []
    for i, m in enumerate(data.get("message_map") or DEFAULT_MESSAGE_MAP):
        try:
            spec = MessageSpec.from_dict(m)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"message_map[{i}]", str(exc)) from None
        if spec.topic not in TOPICS:
            raise ConfigError(f"message_map[{i}].topic", f"unknown topic {spec.topic!r}")
        specs.append(spec)
    try:
        mmap = MessageMap(specs)
    except ValueError as exc:
        raise ConfigError("message_map", str(exc)) from None
    for topic, mode in devices.transport.items():
        if mode == "can" and topic not in mmap.by_topic:
            raise ConfigError(f"devices.transport.{topic}", "carried on CAN but absent from message_map")

    ms = dict(data.get("mission") or {})
    if "direction" in ms:
        try:
            ms["direction"] = Direction[str(ms["direction"]).upper()]
        except KeyError:
            raise ConfigError("mission.direction", "must be CCW or CW") from None
    for k in ("approach_offset", "min_parallax"):
        if k in ms:
            ms[k] = math.radians(ms[k])  # degrees in files
    mission = _section(MissionParams, ms, "mission")
    if mission.orbit_radius <= 0:
        raise ConfigError("mission.orbit_radius", "must be positive")
    if mission.n_captures < 1:
        raise ConfigError("mission.n_captures", "must be at least 1")

    lk = dict(data.get("link") or {})
    if "mode" in lk:
        try:
            lk["mode"] = LinkMode(str(lk["mode"]).upper())
        except ValueError:
            raise ConfigError("link.mode", "must be TETHERED or UNTETHERED") from None
    link = _section(LinkConfig, lk, "link")
    if link.bandwidth <= 0:
        raise ConfigError("link.bandwidth", "must be positive")
    compute = _section(ComputeConfig, data.get("compute"), "compute")
    if compute.onboard_period_ms <= 0 or compute.offboard_period_ms <= 0:
        raise ConfigError("compute", "detector periods must be positive")

    faults = []
    for i, f in enumerate(data.get("faults") or ()):
        ev = _section(FaultEvent, f, f"faults[{i}]")
        if ev.kind not in FAULT_KINDS:
            raise ConfigError(f"faults[{i}].kind", f"unknown fault kind {ev.kind!r}")
        if (ev.at is None) == (ev.after_phase is None):
            raise ConfigError(f"faults[{i}]", "give exactly one of 'at' or 'after_phase'")
        if ev.after_phase is not None and ev.after_phase not in ("SEARCH", "APPROACH", "ORBIT", "DONE"):
            raise ConfigError(f"faults[{i}].after_phase", "unknown phase")
        faults.append(ev)

    apd = data.get("autopilot") or {}
    if not isinstance(apd, Mapping):
        raise ConfigError("autopilot", "expected a mapping")
    defaults = {"horizontal": ap.HORIZONTAL, "depth": ap.DEPTH, "yaw": ap.YAW, "tilt": ap.TILT}
    for k in apd:
        if k not in defaults:
            raise ConfigError(f"autopilot.{k}", "unknown axis")
    gains = {}
    for axis, g in defaults.items():
        merged = {**dataclasses.asdict(g), **(apd.get(axis) or {})}
        gains[axis] = _section(ap.Gains, merged, f"autopilot.{axis}")
        if gains[axis].limit <= 0:
            raise ConfigError(f"autopilot.{axis}.limit", "must be positive")

    return ScenarioConfig(
        name=str(data.get("name", "scenario")), seed=seed, duration=float(duration), dt=float(dt),
        stop_on_terminal=bool(data.get("stop_on_terminal", True)),
        vehicle=vehicle, initial=initial, object=obj, devices=devices, power=power, can=can,
        message_map=mmap, mission=mission, link=link, compute=compute, faults=tuple(faults),
        autopilot=gains,
        raw=copy.deepcopy(dict(data)),
    )


def load_scenario(ref, overrides=(), seed=None, duration=None) -> ScenarioConfig:
    data = apply_overrides(load_raw(ref), overrides)
    if seed is not None:
        data["seed"] = seed
    if duration is not None:
        data["duration"] = duration
    return build(data)
