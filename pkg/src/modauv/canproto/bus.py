"""CAN bus arbitration and timing at a configurable bit rate."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .bridge import BridgeState, bridge_receive, bridge_tx_done
from .codec import CanFrame, IFS_BITS, encode_frame


class DuplicateIdError(Exception):
    pass


def arbitrate(pending: Iterable[tuple]):
    """Return the ``(node, frame)`` pair with the lowest identifier."""
    pending = list(pending)
    if not pending:
        raise ValueError("nothing to arbitrate")
    seen = {}
    for node, frame in pending:
        if frame.id in seen:
            raise DuplicateIdError(
                f"identifier {frame.id:#05x} pending from {seen[frame.id]!r} and {node!r}"
            )
        seen[frame.id] = node
    return min(pending, key=lambda p: p[1].id)


@dataclass(frozen=True)
class Transmission:
    start_us: float
    end_us: float
    node: str
    frame: CanFrame
    bits: tuple


@dataclass
class CanBus:
    """Shared bus: nodes are controllers (``BridgeState``) keyed by name.

    ``advance(until)`` repeatedly arbitrates among nodes with a pending
    transmit slot, occupies the bus for ``frame_time`` and hands the frame
    to every other node. At most one frame is in flight at any instant.
    """

    bitrate: float = 1_000_000
    busy_until: float = 0.0
    nodes: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    keep_history: bool = False

    def attach(self, name: str, state: Optional[BridgeState] = None) -> None:
        if name in self.nodes:
            raise ValueError(f"node {name!r} already attached")
        self.nodes[name] = state if state is not None else BridgeState()

    def pending(self) -> list:
        return [(n, s.tx_slot) for n, s in self.nodes.items() if s.tx_pending and s.tx_slot is not None]

    def advance(self, until_us: float, max_frames: Optional[int] = None) -> list[Transmission]:
        done = []
        while max_frames is None or len(done) < max_frames:
            pend = self.pending()
            if not pend:
                break
            node, frame = arbitrate(pend)
            bits = encode_frame(frame, acked=len(self.nodes) >= 2)
            start = self.busy_until
            end = start + (len(bits) + IFS_BITS) * 1e6 / self.bitrate
            if end > until_us:
                break
            self.busy_until = end
            self.nodes[node] = bridge_tx_done(self.nodes[node])
            for other, st in self.nodes.items():
                if other != node:
                    self.nodes[other] = bridge_receive(st, frame)
            tx = Transmission(start, end, node, frame, tuple(bits))
            done.append(tx)
            if self.keep_history:
                self.history.append(tx)
        # an idle bus does not bank time
        if self.busy_until < until_us and not self.pending():
            self.busy_until = until_us
        return done
