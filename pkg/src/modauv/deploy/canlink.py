"""Sensor boards and the host's SPI bridge sharing one CAN bus."""
from __future__ import annotations

from collections import deque

from ..canproto.bridge import READ_RX, RTS, BridgeState, bridge_transfer, load_tx
from ..canproto.bus import CanBus
from ..canproto.payload import MessageMap, TopicAssembler

HOST = "host"


class CanNetwork:
    def __init__(self, mmap: MessageMap, bitrate: float = 1_000_000, rx_capacity: int = 8):
        self.mmap = mmap
        self.bus = CanBus(bitrate=bitrate)
        self.bus.attach(HOST, BridgeState(capacity=rx_capacity))
        self.outbox: dict[str, deque] = {}
        self.assembler = TopicAssembler(mmap)

    def attach(self, node: str) -> None:
        self.bus.attach(node)
        self.outbox[node] = deque()

    def send(self, node: str, topic: str, record) -> None:
        self.outbox[node].extend(self.mmap.encode(topic, record))

    def run(self, until_us: float):
        """Drain outboxes onto the bus until ``until_us``; the host then
        reads its receive queue. Returns (completed samples, frame hex log)."""
        log = []
        while True:
            for node, box in self.outbox.items():
                st = self.bus.nodes[node]
                if box and not st.tx_pending:
                    st, _ = bridge_transfer(st, load_tx(box.popleft()))
                    st, _ = bridge_transfer(st, RTS)
                    self.bus.nodes[node] = st
            sent = self.bus.advance(until_us, max_frames=1)
            if not sent:
                break
            log.extend(f"{tx.frame.id:03x}#{tx.frame.data.hex()}" for tx in sent)
        samples = []
        while True:
            st, frame = bridge_transfer(self.bus.nodes[HOST], READ_RX)
            self.bus.nodes[HOST] = st
            if frame is None:
                break
            done = self.assembler.feed(frame)
            if done is not None:
                samples.append(done)
        return samples, log
