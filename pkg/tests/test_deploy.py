import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modauv.deploy import (
    DOWN, UP, ComputeSite, ConfigError, LinkMode, LinkState, Site, build, compute_site,
    link_transmit, list_scenarios, load_scenario, run_scenario,
)
from modauv.deploy.config import load_raw
from modauv.deploy.logs import read_log


# --- link ----------------------------------------------------------------------------

def test_link_transmit_example():
    link = LinkState(bandwidth=1e6, latency_us=2000.0)
    assert link_transmit(link, 1000, 0.0) == pytest.approx(3000.0)
    # second message waits for the first to finish serialising
    assert link_transmit(link, 1000, 0.0) == pytest.approx(4000.0)
    # directions are independent
    assert link_transmit(link, 1000, 0.0, DOWN) == pytest.approx(3000.0)
    assert [p for _, p in link.deliver(3500.0, UP)] == [None]


def test_link_down_drops_and_cut_loses_in_flight():
    link = LinkState(bandwidth=1e6, latency_us=2000.0)
    link_transmit(link, 1000, 0.0, UP, "a")
    assert link.cut() == 1
    assert link_transmit(link, 1000, 10.0, UP, "b") is None
    assert link.dropped == 2
    assert link.deliver(1e9, UP) == []
    link.restore(5000.0)
    assert link.up and link.up_since == 5000.0
    assert link_transmit(link, 1000, 5000.0, UP, "c") == pytest.approx(8000.0)


def test_untethered_link_is_never_up():
    link = LinkState(LinkMode.UNTETHERED)
    assert not link.up
    link.restore(0.0)
    assert not link.up
    with pytest.raises(ValueError):
        LinkState(bandwidth=0.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(1, 1e5), st.floats(0, 1e4)), min_size=1, max_size=30))
def test_link_fifo_and_latency_floor(msgs):
    link = LinkState(bandwidth=1e6, latency_us=500.0)
    now = 0.0
    sent = []
    for i, (bits, gap) in enumerate(msgs):
        now += gap
        t = link_transmit(link, bits, now, UP, i)
        assert t >= now + 500.0 + bits - 1e-9  # 1 bit per us at 1 Mb/s
        sent.append(t)
    assert sent == sorted(sent)
    got = [p for _, p in link.deliver(math.inf, UP)]
    assert got == list(range(len(msgs)))


# --- compute site ----------------------------------------------------------------------

def test_compute_site_rules():
    link = LinkState(bandwidth=1e6, latency_us=2000.0)
    cs = compute_site(ComputeSite(), link, 0.0, None)
    assert cs.active is Site.OFFBOARD and cs.period_ms == 50.0
    # quiet link within the timeout keeps the offboard site
    assert compute_site(cs, link, 150e3, None).active is Site.OFFBOARD
    # silence past the timeout falls back
    fb = compute_site(cs, link, 250e3, None)
    assert fb.active is Site.ONBOARD and fb.period_ms == 500.0
    # a response resets the silence clock
    assert compute_site(cs, link, 250e3, 100e3).active is Site.OFFBOARD
    # link down means onboard at once
    link.cut()
    assert compute_site(cs, link, 1.0, None).active is Site.ONBOARD
    # after a failure, return needs the recovery hold
    link.restore(1e6)
    assert compute_site(fb, link, 2e6, None).active is Site.ONBOARD
    assert compute_site(fb, link, 3e6, None).active is Site.OFFBOARD


def test_compute_site_untethered():
    link = LinkState(LinkMode.UNTETHERED)
    cs = ComputeSite()
    for k in range(100):
        cs = compute_site(cs, link, k * 1e4, None)
        assert cs.active is Site.ONBOARD
    assert cs.switches == 0


# --- config ------------------------------------------------------------------------------

def test_shipped_scenarios_validate():
    names = list_scenarios()
    for n in ("orbit_tethered", "orbit_tethered_cut", "orbit_untethered", "cell_uv_fault",
              "paper-4p5in", "paper-6in"):
        assert n in names
        load_scenario(n)


def test_seed_is_mandatory():
    data = load_raw("orbit_tethered")
    data.pop("seed")
    with pytest.raises(ConfigError) as e:
        build(data)
    assert e.value.path == "seed"


@pytest.mark.parametrize("override, path", [
    ("dt=0.1", "dt"),
    ("vehicle.enclosures=[{diameter: -1, length: 1, mass: 1}]", "vehicle.enclosures[0].diameter"),
    ("mission.orbit_radius=0", "mission.orbit_radius"),
    ("link.mode=WIRELESS", "link.mode"),
    ("power.bms_fault_scope=some", "power.bms_fault_scope"),
    ("faults=[{kind: meteor, at: 1}]", "faults[0].kind"),
    ("autopilot.roll={kp: 1}", "autopilot.roll"),
    ("autopilot.yaw.limit=-1", "autopilot.yaw.limit"),
    ("bogus=1", "bogus"),
])
def test_config_errors_name_the_field(override, path):
    with pytest.raises(ConfigError) as e:
        load_scenario("orbit_tethered", [override])
    assert e.value.path == path


def test_inheritance_and_overrides():
    base = load_scenario("orbit_tethered")
    cut = load_scenario("orbit_tethered_cut")
    assert cut.mission == base.mission and cut.vehicle == base.vehicle
    assert len(cut.faults) == 1 and not base.faults
    o = load_scenario("orbit_tethered", ["mission.n_captures=5", "link.latency_us=100"], seed=9, duration=3)
    assert o.mission.n_captures == 5 and o.link.latency_us == 100
    assert o.seed == 9 and o.duration == 3
    assert o.digest() != base.digest()
    # the seed is not part of the echoed configuration
    assert load_scenario("orbit_tethered", seed=123).digest() == base.digest()


# --- end-to-end runs ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def noiseless():
    cfg = load_scenario("orbit_tethered", [
        "devices.imu.accel_sigma=0", "devices.imu.gyro_sigma=0", "devices.imu.mag_sigma=0",
        "devices.camera.pixel_sigma=0"])
    return run_scenario(cfg)


def test_noiseless_orbit(noiseless):
    r = noiseless
    assert r.outcome == "DONE"
    assert r.n_captures == r.captures_planned == 8
    assert r.max_radial_error <= 0.15
    assert r.detections["OFFBOARD"] > 0 and r.offboard_while_link_down == 0


def test_same_seed_same_logs(tmp_path):
    cfg = load_scenario("orbit_tethered", duration=8.0)
    run_scenario(cfg, tmp_path / "a")
    run_scenario(cfg, tmp_path / "b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name


@pytest.mark.parametrize("delay", [0.5, 6.0, 15.0])
def test_failover_at_various_cut_times(delay, tmp_path):
    cfg = load_scenario("orbit_tethered_cut", [f"faults=[{{kind: tether_cut, after_phase: ORBIT, delay: {delay}}}]"])
    r = run_scenario(cfg, tmp_path)
    assert r.outcome == "DONE", r.abort_reason
    assert r.n_captures == 8
    assert r.offboard_while_link_down == 0
    assert r.failover_latency is not None
    assert r.failover_latency <= cfg.link.loss_timeout_ms / 1000.0 + cfg.dt
    assert r.site_switches[-1]["site"] == "ONBOARD"
    # after the cut every detection is onboard; the first must arrive within timeout + onboard period
    cut = next(e["t"] for e in r.fault_events if e["event"] == "tether_cut")
    _, rows = read_log(tmp_path / "bus.jsonl")
    first = next(row["t"] for row in rows if row["t"] >= cut
                 and any(m[0] == "camera/detections" for m in row["msgs"]))
    assert first - cut <= (cfg.link.loss_timeout_ms + cfg.compute.onboard_period_ms) / 1000.0 + cfg.dt


def test_untethered_uses_onboard_only():
    r = run_scenario(load_scenario("orbit_untethered"))
    assert r.outcome == "DONE"
    assert r.detections["OFFBOARD"] == 0 and r.detections["ONBOARD"] > 0
    assert r.site_switches == []


def test_cell_undervoltage_aborts_and_stops_thrusters(tmp_path):
    r = run_scenario(load_scenario("cell_uv_fault"), tmp_path)
    assert r.outcome == "ABORT"
    assert r.abort_reason.startswith("power: UNDERVOLTAGE")
    fault_t = next(e["t"] for e in r.fault_events if e["event"] == "bms_fault")
    assert 5.0 <= fault_t <= 5.0 + 4 * 0.01
    _, rows = read_log(tmp_path / "trajectory.jsonl")
    after = [row for row in rows if row["t"] >= fault_t]
    assert after and all(all(f == 0.0 for f in row["thrust"]) for row in after)
    before = [row for row in rows if row["t"] < 5.0]
    assert any(any(f != 0.0 for f in row["thrust"]) for row in before)
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["outcome"] == "ABORT"
