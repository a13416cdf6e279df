"""Behavioural model of an SPI-attached CAN controller.

The host talks to the controller with five commands; the bus scheduler
drains the transmit slot and pushes received frames into the bounded
receive queue.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional

from .codec import CanFrame

RX_CAPACITY = 8


class BridgeOp(enum.Enum):
    LOAD_TX = "LOAD_TX"
    RTS = "RTS"
    READ_RX = "READ_RX"
    READ_STATUS = "READ_STATUS"
    RESET = "RESET"


@dataclass(frozen=True)
class BridgeCommand:
    op: BridgeOp
    frame: Optional[CanFrame] = None


class BridgeOverrunError(Exception):
    pass


@dataclass(frozen=True)
class BridgeStatus:
    tx_pending: bool
    rx_full: bool
    error: bool
    rx_count: int
    dropped: int


@dataclass(frozen=True)
class BridgeState:
    tx_slot: Optional[CanFrame] = None
    rx_queue: tuple = ()
    tx_pending: bool = False
    rx_full: bool = False
    error: bool = False
    dropped: int = 0
    capacity: int = RX_CAPACITY

    def status(self) -> BridgeStatus:
        return BridgeStatus(self.tx_pending, self.rx_full, self.error, len(self.rx_queue), self.dropped)


def load_tx(frame: CanFrame) -> BridgeCommand:
    return BridgeCommand(BridgeOp.LOAD_TX, frame)


RTS = BridgeCommand(BridgeOp.RTS)
READ_RX = BridgeCommand(BridgeOp.READ_RX)
READ_STATUS = BridgeCommand(BridgeOp.READ_STATUS)
RESET = BridgeCommand(BridgeOp.RESET)


def bridge_transfer(state: BridgeState, command: BridgeCommand):
    """Apply one host command; returns ``(new_state, response)``.

    READ_RX on an empty queue responds ``None``.
    """
    op = command.op
    if op is BridgeOp.LOAD_TX:
        if state.tx_pending:
            raise BridgeOverrunError("transmit slot still pending")
        if command.frame is None:
            raise ValueError("LOAD_TX needs a frame")
        return replace(state, tx_slot=command.frame), None
    if op is BridgeOp.RTS:
        if state.tx_slot is None:
            return replace(state, error=True), None
        return replace(state, tx_pending=True), None
    if op is BridgeOp.READ_RX:
        if not state.rx_queue:
            return state, None
        head, rest = state.rx_queue[0], state.rx_queue[1:]
        return replace(state, rx_queue=rest, rx_full=len(rest) >= state.capacity), head
    if op is BridgeOp.READ_STATUS:
        return state, state.status()
    if op is BridgeOp.RESET:
        return BridgeState(capacity=state.capacity), None
    raise ValueError(f"unknown bridge op {op!r}")


def bridge_receive(state: BridgeState, frame: CanFrame) -> BridgeState:
    """Bus-side delivery into the receive queue; drops the newest frame when full."""
    if len(state.rx_queue) >= state.capacity:
        return replace(state, rx_full=True, dropped=state.dropped + 1)
    queue = state.rx_queue + (frame,)
    return replace(state, rx_queue=queue, rx_full=len(queue) >= state.capacity)


def bridge_tx_done(state: BridgeState) -> BridgeState:
    return replace(state, tx_pending=False, tx_slot=None)
