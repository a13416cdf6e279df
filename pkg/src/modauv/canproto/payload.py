"""Fixed-point little-endian sensor payloads carried in CAN frames.

A message-map entry binds one CAN identifier to a topic and an ordered
list of fields. Fields are packed LSB-first into the data bytes; raw
values are ``round((value - offset) / scale)`` in two's complement when
signed, saturated to the field range.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .codec import CanFrame


@dataclass(frozen=True)
class FieldSpec:
    name: str
    width: int
    scale: float = 1.0
    offset: float = 0.0
    signed: bool = True

    def __post_init__(self):
        if not 1 <= self.width <= 64:
            raise ValueError(f"field {self.name!r}: width must be in 1..64")
        if self.scale <= 0:
            raise ValueError(f"field {self.name!r}: scale must be positive")

    @property
    def raw_range(self) -> tuple[int, int]:
        if self.signed:
            return -(1 << (self.width - 1)), (1 << (self.width - 1)) - 1
        return 0, (1 << self.width) - 1


@dataclass(frozen=True)
class MessageSpec:
    name: str
    topic: str
    can_id: int
    fields: tuple

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        if not 0 <= self.can_id < 1 << 11:
            raise ValueError(f"message {self.name!r}: can_id out of 11-bit range")
        if self.bit_width > 64:
            raise ValueError(f"message {self.name!r}: fields need {self.bit_width} bits, max 64")

    @property
    def bit_width(self) -> int:
        return sum(f.width for f in self.fields)

    @property
    def dlc(self) -> int:
        return (self.bit_width + 7) // 8

    @classmethod
    def from_dict(cls, d: Mapping) -> "MessageSpec":
        fields = tuple(FieldSpec(**f) for f in d["fields"])
        return cls(d["name"], d["topic"], int(d["can_id"]), fields)


def pack_payload(spec: MessageSpec, record: Mapping[str, float]) -> CanFrame:
    word = 0
    shift = 0
    for f in spec.fields:
        lo, hi = f.raw_range
        raw = int(round((float(record[f.name]) - f.offset) / f.scale))
        raw = min(max(raw, lo), hi)
        word |= (raw & ((1 << f.width) - 1)) << shift
        shift += f.width
    return CanFrame(spec.can_id, word.to_bytes(spec.dlc, "little"))


def unpack_payload(spec: MessageSpec, frame: CanFrame) -> dict[str, float]:
    if frame.id != spec.can_id:
        raise ValueError(f"frame id {frame.id:#x} is not message {spec.name!r} ({spec.can_id:#x})")
    if frame.dlc != spec.dlc:
        raise ValueError(f"message {spec.name!r} expects {spec.dlc} bytes, got {frame.dlc}")
    word = int.from_bytes(frame.data, "little")
    out = {}
    shift = 0
    for f in spec.fields:
        raw = (word >> shift) & ((1 << f.width) - 1)
        if f.signed and raw >> (f.width - 1):
            raw -= 1 << f.width
        out[f.name] = raw * f.scale + f.offset
        shift += f.width
    return out


class MessageMap:
    def __init__(self, specs):
        self.specs = list(specs)
        self.by_id = {}
        self.by_topic: dict[str, list[MessageSpec]] = {}
        for s in self.specs:
            if s.can_id in self.by_id:
                raise ValueError(f"duplicate CAN id {s.can_id:#x} in message map")
            self.by_id[s.can_id] = s
            self.by_topic.setdefault(s.topic, []).append(s)

    def encode(self, topic: str, record: Mapping[str, float]) -> list[CanFrame]:
        return [pack_payload(s, record) for s in self.by_topic[topic]]

    def topics(self) -> list[str]:
        return list(self.by_topic)


class TopicAssembler:
    """Collects frames until every message of a topic sample has arrived."""

    def __init__(self, mmap: MessageMap):
        self.mmap = mmap
        self._partial: dict[str, dict] = {}
        self._have: dict[str, set] = {}

    def feed(self, frame: CanFrame):
        """Return ``(topic, record)`` when a sample completes, else ``None``."""
        spec = self.mmap.by_id.get(frame.id)
        if spec is None:
            return None
        rec = self._partial.setdefault(spec.topic, {})
        have = self._have.setdefault(spec.topic, set())
        rec.update(unpack_payload(spec, frame))
        have.add(spec.can_id)
        if len(have) == len(self.mmap.by_topic[spec.topic]):
            self._partial[spec.topic] = {}
            self._have[spec.topic] = set()
            return spec.topic, rec
        return None
