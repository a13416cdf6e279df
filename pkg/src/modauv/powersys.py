"""Power sub-system twin: 5 V buck rail and 4-cell battery management.

Both models are pure step functions. Faults are states, never exceptions,
and they latch until the matching ``*_clear_fault`` call.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

CELL_COUNT = 4
RAIL_VOLTS = 5.0
DROPOUT_VOLTS = 6.0
SHORT_FACTOR = 10.0


@dataclass(frozen=True)
class ProtectionConfig:
    ov_threshold: float = 4.25
    uv_threshold: float = 3.00
    current_limit: float = 6.0
    debounce_ticks: int = 3
    pack_current_limit: float = 90.0

    def __post_init__(self):
        if not self.uv_threshold < self.ov_threshold:
            raise ValueError("uv_threshold must be below ov_threshold")
        if self.current_limit <= 0 or self.pack_current_limit <= 0:
            raise ValueError("current limits must be positive")
        if self.debounce_ticks < 1:
            raise ValueError("debounce_ticks must be at least 1")


def cell_array(cells: Sequence[float]) -> tuple:
    cells = tuple(float(c) for c in cells)
    if len(cells) != CELL_COUNT:
        raise ValueError(f"expected {CELL_COUNT} cell voltages, got {len(cells)}")
    if any(c < 0 for c in cells):
        raise ValueError("cell voltages must be non-negative")
    return cells


class BuckMode(enum.Enum):
    REGULATING = "REGULATING"
    CURRENT_LIMIT = "CURRENT_LIMIT"
    DROPOUT = "DROPOUT"
    FAULT_LATCHED = "FAULT_LATCHED"


@dataclass(frozen=True)
class BuckState:
    voltage: float = 0.0
    current: float = 0.0
    mode: BuckMode = BuckMode.DROPOUT
    fault_cause: Optional[str] = None
    over_ticks: int = 0

    @property
    def powered(self) -> bool:
        return self.mode in (BuckMode.REGULATING, BuckMode.CURRENT_LIMIT)


def buck_step(state: BuckState, input_v: float, load_demand: float,
              cfg: ProtectionConfig, dt: float) -> BuckState:
    if input_v < 0:
        raise ValueError("input voltage must be non-negative")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if state.mode is BuckMode.FAULT_LATCHED:
        return replace(state, voltage=0.0, current=0.0)
    limit = cfg.current_limit
    if load_demand >= SHORT_FACTOR * limit:
        return BuckState(0.0, 0.0, BuckMode.FAULT_LATCHED, "short", state.over_ticks + 1)
    if input_v < DROPOUT_VOLTS:
        # brown-out: the regulator simply stops; nothing to protect against
        return BuckState(0.0, 0.0, BuckMode.DROPOUT, None, 0)
    if load_demand > limit:
        over = state.over_ticks + 1
        if over >= cfg.debounce_ticks:
            return BuckState(0.0, 0.0, BuckMode.FAULT_LATCHED, "overcurrent", over)
        # foldback: hold the current at the limit, voltage sags with the load
        return BuckState(RAIL_VOLTS * limit / load_demand, limit, BuckMode.CURRENT_LIMIT, None, over)
    return BuckState(RAIL_VOLTS, max(load_demand, 0.0), BuckMode.REGULATING, None, 0)


def buck_clear_fault(state: BuckState) -> BuckState:
    if state.mode is not BuckMode.FAULT_LATCHED:
        return state
    return BuckState()


class FaultKind(enum.Enum):
    NONE = "NONE"
    OVERVOLTAGE = "OVERVOLTAGE"
    UNDERVOLTAGE = "UNDERVOLTAGE"
    OVERCURRENT = "OVERCURRENT"


@dataclass(frozen=True)
class BmsFault:
    kind: FaultKind = FaultKind.NONE
    cell: Optional[int] = None

    def __str__(self):
        if self.cell is None:
            return self.kind.value
        return f"{self.kind.value}({self.cell})"


NO_FAULT = BmsFault()


@dataclass(frozen=True)
class BmsState:
    fet_closed: bool = True
    fault: BmsFault = NO_FAULT
    ov_ticks: tuple = (0,) * CELL_COUNT
    uv_ticks: tuple = (0,) * CELL_COUNT
    oc_ticks: int = 0

    def __post_init__(self):
        if self.fault.kind is not FaultKind.NONE and self.fet_closed:
            raise ValueError("a faulted BMS cannot keep its FETs closed")


def bms_step(state: BmsState, cells: Sequence[float], pack_current: float,
             cfg: ProtectionConfig, dt: float) -> BmsState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    cells = cell_array(cells)
    if state.fault.kind is not FaultKind.NONE:
        return state
    ov = tuple(n + 1 if v > cfg.ov_threshold else 0 for n, v in zip(state.ov_ticks, cells))
    uv = tuple(n + 1 if v < cfg.uv_threshold else 0 for n, v in zip(state.uv_ticks, cells))
    oc = state.oc_ticks + 1 if abs(pack_current) > cfg.pack_current_limit else 0
    fault = NO_FAULT
    for i, n in enumerate(ov):
        if n >= cfg.debounce_ticks:
            fault = BmsFault(FaultKind.OVERVOLTAGE, i)
            break
    else:
        for i, n in enumerate(uv):
            if n >= cfg.debounce_ticks:
                fault = BmsFault(FaultKind.UNDERVOLTAGE, i)
                break
        else:
            if oc >= cfg.debounce_ticks:
                fault = BmsFault(FaultKind.OVERCURRENT)
    return BmsState(fault is NO_FAULT, fault, ov, uv, oc)


def cells_in_band(cells: Sequence[float], cfg: ProtectionConfig) -> bool:
    return all(cfg.uv_threshold <= v <= cfg.ov_threshold for v in cell_array(cells))


def bms_clear_fault(state: BmsState, cells: Sequence[float], cfg: ProtectionConfig) -> BmsState:
    if state.fault.kind is FaultKind.NONE:
        return state
    if not cells_in_band(cells, cfg):
        return state
    return BmsState()


@dataclass
class PowerSystem:
    """Pack -> back-to-back FETs -> buck rail, stepped once per tick.

    Cell voltages sag with pack current through ``cell_resistance``.
    """

    cfg: ProtectionConfig = field(default_factory=ProtectionConfig)
    cell_resistance: float = 0.008
    converter_efficiency: float = 0.9
    bms: BmsState = field(default_factory=BmsState)
    buck: BuckState = field(default_factory=BuckState)
    cells: tuple = (0.0,) * CELL_COUNT
    pack_current: float = 0.0

    def step(self, open_circuit_cells: Sequence[float], rail_load: float,
             thruster_current: float, dt: float) -> None:
        ocv = cell_array(open_circuit_cells)
        rail_input = 0.0
        if self.bms.fet_closed:
            pack_v = sum(ocv)
            # a latched regulator draws nothing; otherwise its draw is capped by the limiter
            out = 0.0 if self.buck.mode is BuckMode.FAULT_LATCHED else min(rail_load, self.cfg.current_limit)
            rail_current = RAIL_VOLTS * out / (self.converter_efficiency * pack_v) if pack_v > 0 else 0.0
            self.pack_current = thruster_current + rail_current
        else:
            self.pack_current = 0.0
        self.cells = tuple(max(v - self.cell_resistance * self.pack_current, 0.0) for v in ocv)
        self.bms = bms_step(self.bms, self.cells, self.pack_current, self.cfg, dt)
        if self.bms.fet_closed:
            rail_input = sum(self.cells)
        else:
            self.pack_current = 0.0
        self.buck = buck_step(self.buck, rail_input, rail_load, self.cfg, dt)

    @property
    def pack_voltage(self) -> float:
        return sum(self.cells) if self.bms.fet_closed else 0.0

    @property
    def faulted(self) -> bool:
        return self.bms.fault.kind is not FaultKind.NONE or self.buck.mode is BuckMode.FAULT_LATCHED
