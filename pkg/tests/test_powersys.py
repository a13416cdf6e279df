import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modauv.powersys import (
    BmsFault, BmsState, BuckMode, BuckState, FaultKind, PowerSystem, ProtectionConfig,
    bms_clear_fault, bms_step, buck_clear_fault, buck_step, cell_array,
)

CFG = ProtectionConfig()
DT = 0.01
NOMINAL = (3.8, 3.8, 3.8, 3.8)


def run_buck(input_v, load, n, state=None):
    state = state or BuckState()
    for _ in range(n):
        state = buck_step(state, input_v, load, CFG, DT)
    return state


def run_bms(cells, n, current=2.0, state=None, cfg=CFG):
    state = state or BmsState()
    for _ in range(n):
        state = bms_step(state, cells, current, cfg, DT)
    return state


def test_config_defaults_and_validation():
    assert (CFG.ov_threshold, CFG.uv_threshold, CFG.current_limit, CFG.debounce_ticks) == (4.25, 3.0, 6.0, 3)
    with pytest.raises(ValueError):
        ProtectionConfig(ov_threshold=3.0, uv_threshold=3.5)
    with pytest.raises(ValueError):
        ProtectionConfig(debounce_ticks=0)
    with pytest.raises(ValueError):
        cell_array((3.8, 3.8, 3.8))
    with pytest.raises(ValueError):
        cell_array((3.8, 3.8, -0.1, 3.8))


def test_buck_regulates():
    s = run_buck(14.8, 2.0, 1)
    assert s.mode is BuckMode.REGULATING and s.voltage == 5.0 and s.current == 2.0


def test_buck_overcurrent_debounced():
    s = run_buck(14.8, 6.5, 2)
    assert s.mode is BuckMode.CURRENT_LIMIT and s.current == CFG.current_limit
    s = run_buck(14.8, 6.5, 1, s)
    assert s.mode is BuckMode.FAULT_LATCHED and s.fault_cause == "overcurrent"
    assert s.current == 0.0


def test_buck_short_latches_immediately():
    s = run_buck(14.8, 60.0, 1)
    assert s.mode is BuckMode.FAULT_LATCHED and s.fault_cause == "short"


def test_buck_brief_overload_recovers():
    s = run_buck(14.8, 6.5, 2)
    s = run_buck(14.8, 2.0, 1, s)
    assert s.mode is BuckMode.REGULATING and s.over_ticks == 0


def test_buck_dropout_and_clear():
    assert run_buck(5.0, 1.0, 1).mode is BuckMode.DROPOUT
    s = run_buck(14.8, 60.0, 1)
    s = run_buck(14.8, 0.5, 50, s)
    assert s.mode is BuckMode.FAULT_LATCHED
    s = buck_clear_fault(s)
    assert run_buck(14.8, 0.5, 1, s).mode is BuckMode.REGULATING


def test_bms_examples():
    s = run_bms(NOMINAL, 10)
    assert s.fault.kind is FaultKind.NONE and s.fet_closed
    s = run_bms((3.8, 2.9, 3.8, 3.8), 3)
    assert s.fault == BmsFault(FaultKind.UNDERVOLTAGE, 1) and not s.fet_closed
    s = run_bms((4.3, 3.8, 3.8, 3.8), 3)
    assert s.fault == BmsFault(FaultKind.OVERVOLTAGE, 0) and not s.fet_closed
    assert run_bms((3.8, 2.9, 3.8, 3.8), 2).fet_closed  # still debouncing


def test_bms_clear_fault():
    uv = run_bms((3.8, 2.9, 3.8, 3.8), 3)
    cleared = bms_clear_fault(uv, (3.7,) * 4, CFG)
    assert cleared.fault.kind is FaultKind.NONE and cleared.fet_closed
    assert bms_clear_fault(uv, (3.8, 2.8, 3.8, 3.8), CFG) == uv
    ok = BmsState()
    assert bms_clear_fault(ok, NOMINAL, CFG) == ok


def test_faulted_bms_state_cannot_close_fet():
    with pytest.raises(ValueError):
        BmsState(fet_closed=True, fault=BmsFault(FaultKind.OVERCURRENT))


def test_bms_overcurrent():
    s = run_bms(NOMINAL, 3, current=CFG.pack_current_limit + 1)
    assert s.fault.kind is FaultKind.OVERCURRENT


cells_st = st.tuples(*[st.floats(0.0, 5.0)] * 4)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(cells_st, st.floats(0, 200), st.floats(0, 80)), min_size=1, max_size=40))
def test_safety_and_latching(trace):
    p = PowerSystem()
    latched_bms = latched_buck = None
    for cells, amps, load in trace:
        p.step(cells, load, amps, DT)
        if p.bms.fault.kind is not FaultKind.NONE:
            assert not p.bms.fet_closed
            assert p.buck.current == 0.0 and p.pack_current == 0.0
            if latched_bms is None:
                latched_bms = p.bms.fault
            assert p.bms.fault == latched_bms
        else:
            assert latched_bms is None
        if p.buck.mode is BuckMode.FAULT_LATCHED:
            assert p.buck.current == 0.0
            latched_buck = True
        else:
            assert latched_buck is None


@settings(max_examples=100, deadline=None)
@given(st.lists(cells_st, min_size=1, max_size=30), st.floats(3.0, 3.5))
def test_raising_uv_threshold_keeps_faults(trace, raised):
    low = run_bms_trace(trace, CFG)
    high = run_bms_trace(trace, ProtectionConfig(uv_threshold=raised))
    if low is not None:
        assert high is not None


def run_bms_trace(trace, cfg):
    s = BmsState()
    for cells in trace:
        s = bms_step(s, cells, 1.0, cfg, DT)
        if s.fault.kind is not FaultKind.NONE:
            return s.fault
    return None


def test_soak_nominal_band_never_faults():
    rng = np.random.default_rng(11)
    bms, buck = BmsState(), BuckState()
    for _ in range(10_000):
        cells = rng.uniform(3.0, 4.25, 4)
        bms = bms_step(bms, cells, rng.uniform(0, CFG.pack_current_limit), CFG, DT)
        buck = buck_step(buck, float(np.sum(cells)), rng.uniform(0, CFG.current_limit), CFG, DT)
        assert bms.fault.kind is FaultKind.NONE and bms.fet_closed
        assert buck.mode is BuckMode.REGULATING and buck.voltage == 5.0


def test_cells_sag_under_load():
    p = PowerSystem()
    p.step(NOMINAL, 2.0, 50.0, DT)
    assert all(c < 3.8 for c in p.cells)
    assert p.pack_voltage == pytest.approx(sum(p.cells))
