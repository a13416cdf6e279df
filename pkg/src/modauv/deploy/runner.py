"""Scenario runner: one deterministic single-threaded loop over virtual time.

Per tick: injected faults, power, sensing (IMU over CAN, odometry),
detection (onboard or over the tether), mission and autopilot, thrust
allocation through PWM/mux/ESC, then rigid-body dynamics.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..autonomy.autopilot import Autopilot
from ..autonomy.mission import (
    MissionInputs, MissionState, Phase, abort, mission_step,
)
from ..devices.camera import project_bbox
from ..devices.esc import (
    CHANNELS, PWM_NEUTRAL, MuxState, PwmSource, mux_select, mux_tick, pwm_to_thrust, thrust_to_pwm,
)
from ..devices.imu import ImuReading, classify_motion, sample_imu
from ..devices.odometry import OdomEstimate, dead_reckon
from ..msgbus import MessageBus, Topic
from ..powersys import BuckMode, FaultKind, PowerSystem, bms_clear_fault, buck_clear_fault
from ..vehicle import rotation as rot
from ..vehicle.allocation import allocate_thrust
from ..vehicle.dynamics import RigidBodyState, step_dynamics
from .canlink import CanNetwork
from .compute import ComputeSite, Site, compute_site
from .config import TOPICS, ScenarioConfig
from .link import DOWN, UP, LinkState, link_transmit
from .logs import LogSet

LINGER_S = 1.0
FAULT_CODES = {k: i for i, k in enumerate(FaultKind)}


@dataclass
class RunReport:
    scenario: str
    seed: int
    outcome: str
    abort_reason: str
    sim_time: float
    ticks: int
    n_captures: int
    captures_planned: int
    max_radial_error: Optional[float]
    capture_radial_errors: list
    detections: dict
    offboard_while_link_down: int
    site_switches: list
    failover_latency: Optional[float]
    fault_events: list
    config_sha256: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _topic(name: str) -> Topic:
    return Topic(name, TOPICS[name])


class Simulation:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.dt = cfg.dt
        ss = np.random.SeedSequence(cfg.seed)
        imu_seed, cam_seed = ss.spawn(2)
        self.rng_imu = np.random.default_rng(imu_seed)
        self.rng_cam = np.random.default_rng(cam_seed)
        self.logs = LogSet(cfg.name, cfg.echo(), cfg.digest())

        init = cfg.initial
        q0 = rot.from_yaw(init.yaw)
        self.state = RigidBodyState(tuple(init.position), q0)
        self.accel = None
        self.estimate = OdomEstimate(tuple(init.position), q0)
        self.imu_window: list[ImuReading] = []

        self.power = PowerSystem(cfg.power.protection, cfg.power.cell_resistance)
        self.cells = list(cfg.power.cells)
        self.rail_load = cfg.power.rail_load

        self.can = CanNetwork(cfg.message_map, cfg.can.bitrate, cfg.can.rx_capacity)
        self.can_topics = {t for t, m in cfg.devices.transport.items() if m == "can"}
        for node in ("imu", "bms"):
            self.can.attach(node)

        lc = cfg.link
        self.link = LinkState(lc.mode, bandwidth=lc.bandwidth, latency_us=lc.latency_us)
        cc = cfg.compute
        self.site = ComputeSite(Site.ONBOARD, cc.onboard_period_ms, cc.offboard_period_ms)
        self.last_response_us: Optional[float] = None
        self.next_detect_us = 0.0

        self.mission = MissionState()
        self.autopilot = Autopilot(cfg.vehicle, **cfg.autopilot)
        self.mux = MuxState()
        self.thrusts = (0.0,) * len(cfg.vehicle.thrusters)
        self.pending_faults = list(cfg.faults)
        self.phase_entered = {Phase.SEARCH: 0.0}

        self.report_events: list[dict] = []
        self.site_switches: list[dict] = []
        self.det_counts = {"ONBOARD": 0, "OFFBOARD": 0}
        self.offboard_while_down = 0
        self.cut_time: Optional[float] = None
        self.failover_latency: Optional[float] = None
        self.capture_errors: list[float] = []
        self.max_radial: Optional[float] = None

        self._setup_bus()

    # -- middleware wiring ------------------------------------------------

    def _setup_bus(self):
        bus = self.bus = MessageBus()
        self.nodes = {n: bus.register_node(n) for n in (
            "imu", "imu_classifier", "odometry", "camera", "detector", "mission",
            "autopilot", "thrusters", "mux", "power")}
        adv = {
            "imu": ["imu/raw"], "imu_classifier": ["imu/class"], "odometry": ["odom/estimate"],
            "detector": ["camera/detections"], "mission": ["mission/state", "mission/captures"],
            "autopilot": ["mission/wrench", "thrusters/cmd"], "mux": ["mux/select"],
            "power": ["power/rail", "power/bms"],
        }
        for node, topics in adv.items():
            for t in topics:
                bus.advertise(self.nodes[node], _topic(t))
        self.inbox_detections: list = []
        self.inbox_imu: list = []
        bus.subscribe(self.nodes["odometry"], _topic("imu/raw"), lambda m: self.inbox_imu.append(m.payload))
        bus.subscribe(self.nodes["mission"], _topic("camera/detections"),
                      lambda m: self.inbox_detections.append(m.payload))
        self.tick_msgs: list = []

    def _pub(self, node: str, topic: str, payload) -> None:
        seq = self.bus.publish(self.nodes[node], _topic(topic), payload)
        self.tick_msgs.append([topic, node, seq])

    def _event(self, t: float, event: str, detail) -> None:
        self.logs.write("events", {"t": t, "event": event, "detail": detail})
        self.report_events.append({"t": t, "event": event, "detail": detail})

    # -- faults -------------------------------------------------------------

    def _due(self, ev, t):
        if ev.at is not None:
            return t >= ev.at - 1e-9
        entered = self.phase_entered.get(Phase(ev.after_phase))
        return entered is not None and t >= entered + ev.delay - 1e-9

    def _apply_faults(self, t, now_us):
        remaining = []
        for ev in self.pending_faults:
            if not self._due(ev, t):
                remaining.append(ev)
                continue
            if ev.kind == "cell_voltage":
                self.cells[ev.cell] = ev.volts
                self._event(t, "inject", f"cell {ev.cell} -> {ev.volts} V")
            elif ev.kind == "tether_cut":
                lost = self.link.cut()
                self.cut_time = t
                self._event(t, "tether_cut", f"{lost} messages lost in flight")
            elif ev.kind == "tether_restore":
                self.link.restore(now_us)
                self._event(t, "tether_restore", "")
            elif ev.kind == "rail_load":
                self.rail_load = ev.amps
                self._event(t, "inject", f"rail load -> {ev.amps} A")
            elif ev.kind == "mux_select":
                self.mux = mux_select(self.mux, ev.bank, PwmSource(ev.source))
                self._pub("mux", "mux/select", {"bank": ev.bank, "source": ev.source})
                self._event(t, "mux_select", f"bank {ev.bank} -> {ev.source}")
            elif ev.kind == "clear_faults":
                p = self.power
                p.bms = bms_clear_fault(p.bms, p.cells, p.cfg)
                p.buck = buck_clear_fault(p.buck)
                self._event(t, "clear_faults", str(p.bms.fault))
        self.pending_faults = remaining

    # -- per-tick stages ----------------------------------------------------

    def _power(self, t):
        p = self.power
        before = (p.bms.fault, p.buck.mode)
        amps = self.cfg.power.amps_per_newton * sum(abs(x) for x in self.thrusts)
        p.step(self.cells, self.rail_load, amps, self.dt)
        if p.bms.fault != before[0] and p.bms.fault.kind is not FaultKind.NONE:
            self._event(t, "bms_fault", str(p.bms.fault))
        if p.buck.mode != before[1] and p.buck.mode is BuckMode.FAULT_LATCHED:
            self._event(t, "rail_fault", p.buck.fault_cause)
        self.logs.write("power", {
            "t": t, "cells": list(p.cells), "pack_amps": p.pack_current, "bms_fault": str(p.bms.fault),
            "fet_closed": p.bms.fet_closed, "rail_volts": p.buck.voltage, "rail_amps": p.buck.current,
            "rail_mode": p.buck.mode.value,
        })

    def _sense(self, t, now_us):
        cfg = self.cfg
        p = self.power
        if self.accel is not None:
            reading = sample_imu(self.state, self.accel, cfg.devices.imu, self.rng_imu, now_us)
            if "imu/raw" in self.can_topics:
                self.can.send("imu", "imu/raw", reading.as_record())
            else:
                self._pub("imu", "imu/raw", reading)
        bms_rec = {
            "pack_volts": p.pack_voltage, "pack_amps": p.pack_current,
            "fault": FAULT_CODES[p.bms.fault.kind], "cell": p.bms.fault.cell or 0,
            "fet_closed": int(p.bms.fet_closed),
        }
        if "power/bms" in self.can_topics:
            self.can.send("bms", "power/bms", bms_rec)
        else:
            self._pub("power", "power/bms", bms_rec)
        samples, frames = self.can.run(now_us + self.dt * 1e6)
        for topic, rec in samples:
            if topic == "imu/raw":
                self._pub("imu", "imu/raw", ImuReading.from_record(rec, now_us))
            elif topic == "power/bms":
                self._pub("power", "power/bms", rec)
        self._pub("power", "power/rail", {"volts": p.buck.voltage, "amps": p.buck.current,
                                          "mode": p.buck.mode.value})
        for reading in self.inbox_imu:
            self.estimate = dead_reckon(self.estimate, reading, self.dt)
            self._pub("odometry", "odom/estimate", self.estimate)
            self.imu_window.append(reading)
            if len(self.imu_window) == cfg.devices.motion.window:
                label = classify_motion(self.imu_window, cfg.devices.motion)
                self._pub("imu_classifier", "imu/class", label.value)
                self.imu_window = []
        self.inbox_imu = []
        return frames

    def _camera(self, now_us):
        cfg = self.cfg
        det = project_bbox(cfg.object.position, cfg.object.radius, self.state.position,
                           self.state.orientation, cfg.devices.camera.intrinsics, now_us)
        sigma = cfg.devices.camera.pixel_sigma
        if det is not None and sigma > 0:
            n = self.rng_cam.standard_normal(2) * sigma
            intr = cfg.devices.camera.intrinsics
            cx = min(max(det.cx + float(n[0]), 0.0), float(intr.width))
            cy = min(max(det.cy + float(n[1]), 0.0), float(intr.height))
            det = type(det)(cx, cy, det.w, det.h, det.confidence, det.stamp)
        return det

    def _emit_detection(self, det, source):
        det = type(det)(det.cx, det.cy, det.w, det.h, det.confidence, det.stamp, source)
        self.det_counts[source] += 1
        if source == "OFFBOARD" and not self.link.up:
            self.offboard_while_down += 1
        self._pub("detector", "camera/detections", det)

    def _detect(self, t, now_us):
        cfg, cc, lc = self.cfg, self.cfg.compute, self.cfg.link
        new = compute_site(self.site, self.link, now_us, self.last_response_us,
                           lc.loss_timeout_ms, lc.recovery_hold_ms)
        if new.active is not self.site.active:
            self.site_switches.append({"t": t, "site": new.active.value})
            self._event(t, "compute_site", new.active.value)
            if new.active is Site.ONBOARD and self.cut_time is not None and self.failover_latency is None:
                self.failover_latency = t - self.cut_time
            self.next_detect_us = now_us
        self.site = new

        for arrival, det in self.link.deliver(now_us, UP):
            # shore-side detector answers after its processing time
            link_transmit(self.link, lc.response_bits, arrival + lc.offboard_processing_ms * 1000.0,
                          DOWN, det)
        for _, det in self.link.deliver(now_us, DOWN):
            self.last_response_us = now_us
            if det is not None and det.confidence >= cc.offboard_confidence_floor:
                self._emit_detection(det, "OFFBOARD")

        if now_us + 1e-6 < self.next_detect_us:
            return
        self.next_detect_us += self.site.period_ms * 1000.0
        if self.next_detect_us <= now_us:
            self.next_detect_us = now_us + self.site.period_ms * 1000.0
        det = self._camera(now_us)
        if self.site.active is Site.OFFBOARD:
            link_transmit(self.link, lc.request_bits, now_us, UP, det)
        elif det is not None:
            conf = det.confidence * cc.onboard_confidence_scale
            if conf >= cc.onboard_confidence_floor:
                self._emit_detection(type(det)(det.cx, det.cy, det.w, det.h, conf, det.stamp), "ONBOARD")

    def _mission(self, t, alive):
        cfg = self.cfg
        before = self.mission.phase
        n_before = len(self.mission.captures)
        if not alive:
            reason = "power: " + (str(self.power.bms.fault) if self.power.bms.fault.kind is not FaultKind.NONE
                                  else f"rail {self.power.buck.mode.value}")
            self.mission = abort(self.mission, reason)
            self.autopilot.reset()
            wrench = None
        else:
            self.mission, sp = mission_step(
                self.mission, MissionInputs(t, self.estimate, tuple(self.inbox_detections)),
                cfg.mission, cfg.devices.camera.intrinsics)
            wrench = self.autopilot.step(sp, self.estimate, self.dt)
            self._pub("mission", "mission/state", self.mission.phase.value)
            self._pub("autopilot", "mission/wrench", wrench)
        self.inbox_detections = []
        if self.mission.phase is not before:
            self.phase_entered[self.mission.phase] = t
            detail = self.mission.abort_reason if self.mission.phase is Phase.ABORT else ""
            self._event(t, f"phase:{self.mission.phase.value}", detail)
        for cap in self.mission.captures[n_before:]:
            center = cfg.object.position
            true_p = self.state.position
            err = abs(math.hypot(true_p[0] - center[0], true_p[1] - center[1]) - cfg.mission.orbit_radius)
            self.capture_errors.append(err)
            rec = cap.as_record()
            rec.update({"true_position": list(true_p), "radial_error": err})
            self.logs.write("captures", rec)
            if alive:
                self._pub("mission", "mission/captures", rec)
        if self.mission.phase is Phase.ORBIT and self.mission.captures:
            c = cfg.object.position
            p = self.state.position
            err = abs(math.hypot(p[0] - c[0], p[1] - c[1]) - cfg.mission.orbit_radius)
            self.max_radial = err if self.max_radial is None else max(self.max_radial, err)
        return wrench

    def _actuate(self, wrench, alive, thrusters_powered):
        cfg = self.cfg
        thr = cfg.vehicle.thrusters
        sw = [PWM_NEUTRAL] * CHANNELS
        if alive and wrench is not None:
            alloc = allocate_thrust(cfg.vehicle, wrench)
            for i, (f, th) in enumerate(zip(alloc, thr)):
                sw[i] = thrust_to_pwm(f, th.max_thrust)
            self._pub("autopilot", "thrusters/cmd", tuple(sw))
        self.mux = mux_tick(self.mux, sw, [PWM_NEUTRAL] * CHANNELS)
        if thrusters_powered:
            self.thrusts = tuple(pwm_to_thrust(self.mux.output[i], th.max_thrust) for i, th in enumerate(thr))
        else:
            self.thrusts = (0.0,) * len(thr)

    # -- main loop ------------------------------------------------------------

    def run(self) -> RunReport:
        cfg = self.cfg
        n_ticks = int(round(cfg.duration / self.dt))
        terminal_at = None
        k = 0
        for k in range(n_ticks + 1):
            t = k * self.dt
            now_us = k * self.dt * 1e6
            self.bus.set_time(int(round(now_us)))
            self.tick_msgs = []
            self._apply_faults(t, now_us)
            self._power(t)
            p = self.power
            bms_ok = p.bms.fault.kind is FaultKind.NONE
            alive = p.buck.powered
            thrusters_powered = bms_ok or cfg.power.bms_fault_scope == "rail"
            frames = []
            if alive:
                frames = self._sense(t, now_us)
                self._detect(t, now_us)
            wrench = self._mission(t, alive)
            self._actuate(wrench, alive, thrusters_powered)
            self.state, self.accel = step_dynamics(self.state, cfg.vehicle, self.thrusts, self.dt)
            s, e = self.state, self.estimate
            self.logs.write("trajectory", {
                "t": t, "phase": self.mission.phase.value, "pos": s.position, "quat": s.orientation,
                "vel": s.velocity, "omega": s.angular_velocity, "est_pos": e.position, "est_yaw": e.yaw,
                "site": self.site.active.value, "thrust": self.thrusts, "target": self.mission.target,
            })
            self.logs.write("bus", {"t": t, "msgs": self.tick_msgs, "can": frames})
            if terminal_at is None and self.mission.phase in (Phase.DONE, Phase.ABORT):
                terminal_at = t
            if cfg.stop_on_terminal and terminal_at is not None and t >= terminal_at + LINGER_S - 1e-9:
                break
        return self._report(k)

    def _report(self, k) -> RunReport:
        cfg = self.cfg
        ms = self.mission
        return RunReport(
            scenario=cfg.name, seed=cfg.seed, outcome=ms.phase.value, abort_reason=ms.abort_reason,
            sim_time=k * self.dt, ticks=k + 1, n_captures=len(ms.captures),
            captures_planned=cfg.mission.n_captures,
            max_radial_error=self.max_radial, capture_radial_errors=self.capture_errors,
            detections=dict(self.det_counts), offboard_while_link_down=self.offboard_while_down,
            site_switches=self.site_switches, failover_latency=self.failover_latency,
            fault_events=[e for e in self.report_events if e["event"] in (
                "bms_fault", "rail_fault", "tether_cut", "tether_restore", "inject", "clear_faults")],
            config_sha256=cfg.digest(),
        )


def run_scenario(cfg: ScenarioConfig, out_dir=None, figures: bool = False) -> RunReport:
    sim = Simulation(cfg)
    report = sim.run()
    if out_dir is not None:
        out = Path(out_dir)
        sim.logs.save(out)
        (out / "report.json").write_text(report.to_json() + "\n")
        if figures:
            from ..report import render_figures
            render_figures(out, out)
    return report
