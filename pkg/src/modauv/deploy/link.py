"""Tether model: serialisation at a fixed bandwidth plus propagation latency."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Optional

UP = "up"      # vehicle -> shore
DOWN = "down"  # shore -> vehicle


class LinkMode(enum.Enum):
    TETHERED = "TETHERED"
    UNTETHERED = "UNTETHERED"


@dataclass
class LinkState:
    """Per-direction FIFO with serialisation; ``up_since`` is None while the
    link has been up since the start of the run."""

    mode: LinkMode = LinkMode.TETHERED
    up: bool = True
    bandwidth: float = 100e6  # bits/s
    latency_us: float = 2000.0
    up_since: Optional[float] = None
    busy_until: dict = field(default_factory=lambda: {UP: 0.0, DOWN: 0.0})
    in_flight: dict = field(default_factory=lambda: {UP: deque(), DOWN: deque()})
    dropped: int = 0

    def __post_init__(self):
        self.mode = LinkMode(self.mode)
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.latency_us < 0:
            raise ValueError("latency must be non-negative")
        if self.mode is LinkMode.UNTETHERED:
            self.up = False

    def cut(self) -> int:
        """Take the link down, losing everything in flight."""
        lost = sum(len(q) for q in self.in_flight.values())
        for q in self.in_flight.values():
            q.clear()
        self.dropped += lost
        self.up = False
        return lost

    def restore(self, now_us: float) -> None:
        if self.mode is LinkMode.UNTETHERED:
            return
        if not self.up:
            self.up = True
            self.up_since = now_us
            for d in self.busy_until:
                self.busy_until[d] = max(self.busy_until[d], now_us)

    def deliver(self, now_us: float, direction: str) -> list:
        """Pop every message in ``direction`` due by ``now_us``."""
        q = self.in_flight[direction]
        out = []
        while q and q[0][0] <= now_us:
            out.append(q.popleft())
        return out


def link_transmit(link: LinkState, size_bits: float, now_us: float,
                  direction: str = UP, payload: Any = None) -> Optional[float]:
    """Queue a message; returns its delivery time in us, or None if dropped."""
    if not link.up:
        link.dropped += 1
        return None
    start = max(now_us, link.busy_until[direction])
    done = start + size_bits / link.bandwidth * 1e6
    link.busy_until[direction] = done
    delivery = done + link.latency_us
    link.in_flight[direction].append((delivery, payload))
    return delivery
