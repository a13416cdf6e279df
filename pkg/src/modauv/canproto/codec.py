"""Bit-level CAN 2.0A data frame codec.

Bits are plain sequences of 0/1 ints, dominant = 0. Stuffing covers SOF
through the CRC sequence; CRC delimiter, ACK field and EOF are fixed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

CRC15_POLY = 0x4599  # x^15+x^14+x^10+x^8+x^7+x^4+x^3+1, leading term implicit
IFS_BITS = 3
EOF_BITS = 7
# SOF + id + RTR + IDE + r0 + DLC
HEADER_BITS = 1 + 11 + 1 + 1 + 1 + 4


class FrameError(Exception):
    pass


class StuffError(FrameError):
    def __init__(self, position: int):
        super().__init__(f"stuff violation at bit {position}")
        self.position = position


class CrcError(FrameError):
    def __init__(self, expected: int, received: int):
        super().__init__(f"crc mismatch: computed {expected:#06x}, received {received:#06x}")
        self.expected = expected
        self.received = received


class FormError(FrameError):
    pass


class InvalidFrameError(ValueError):
    pass


@dataclass(frozen=True)
class CanFrame:
    id: int
    data: bytes = b""
    rtr: bool = False

    def __post_init__(self):
        object.__setattr__(self, "data", bytes(self.data))
        if not 0 <= self.id < 1 << 11:
            raise InvalidFrameError(f"identifier {self.id:#x} does not fit in 11 bits")
        if len(self.data) > 8:
            raise InvalidFrameError(f"payload of {len(self.data)} bytes exceeds 8")
        if self.rtr:
            raise InvalidFrameError("remote frames are not supported")

    @property
    def dlc(self) -> int:
        return len(self.data)


def bits_from_str(s: str) -> list[int]:
    return [1 if c == "1" else 0 for c in s if c in "01"]


def bits_to_str(bits: Sequence[int]) -> str:
    return "".join("1" if b else "0" for b in bits)


def bits_to_hex(bits: Sequence[int]) -> str:
    """Pack bits MSB-first into hex, zero-padding the last nibble."""
    n = len(bits)
    if n == 0:
        return ""
    value = 0
    for b in bits:
        value = (value << 1) | (b & 1)
    pad = (-n) % 4
    return format(value << pad, "0%dx" % ((n + pad) // 4))


def _uint_bits(value: int, width: int) -> list[int]:
    return [(value >> i) & 1 for i in range(width - 1, -1, -1)]


def _bits_uint(bits: Sequence[int]) -> int:
    v = 0
    for b in bits:
        v = (v << 1) | b
    return v


def crc15(bits: Sequence[int]) -> int:
    crc = 0
    for b in bits:
        nxt = b ^ (crc >> 14)
        crc = (crc << 1) & 0x7FFF
        if nxt:
            crc ^= CRC15_POLY
    return crc


def stuff_bits(bits: Sequence[int]) -> list[int]:
    out = []
    last = -1
    run = 0
    for b in bits:
        out.append(b)
        if b == last:
            run += 1
        else:
            last, run = b, 1
        if run == 5:
            s = 1 - b
            out.append(s)
            last, run = s, 1
    return out


def unstuff_bits(bits: Sequence[int]) -> list[int]:
    """Remove stuff bits. A trailing five-run with no stuff bit is accepted."""
    out = []
    last = -1
    run = 0
    expect_stuff = False
    for i, b in enumerate(bits):
        if expect_stuff:
            if b == last:
                raise StuffError(i)
            last, run = b, 1
            expect_stuff = False
            continue
        out.append(b)
        if b == last:
            run += 1
        else:
            last, run = b, 1
        if run == 5:
            expect_stuff = True
    return out


def frame_fields(frame: CanFrame) -> list[int]:
    """Unstuffed SOF..DLC+data bits (the CRC input)."""
    bits = [0]
    bits += _uint_bits(frame.id, 11)
    bits += [0, 0, 0]  # RTR (data frame), IDE (standard), r0
    bits += _uint_bits(frame.dlc, 4)
    for byte in frame.data:
        bits += _uint_bits(byte, 8)
    return bits


def encode_frame(frame: CanFrame, acked: bool = True) -> list[int]:
    if not isinstance(frame, CanFrame):
        raise InvalidFrameError("expected a CanFrame")
    body = frame_fields(frame)
    body += _uint_bits(crc15(body), 15)
    out = stuff_bits(body)
    out.append(1)  # CRC delimiter
    out.append(0 if acked else 1)  # ACK slot, receivers drive it dominant
    out.append(1)  # ACK delimiter
    out += [1] * EOF_BITS
    return out


class _Destuffer:
    """Incremental destuffing reader over an encoded bit stream."""

    def __init__(self, bits: Sequence[int]):
        self.bits = bits
        self.pos = 0
        self.last = -1
        self.run = 0

    def _raw(self) -> int:
        if self.pos >= len(self.bits):
            raise FormError(f"frame truncated at bit {self.pos}")
        b = self.bits[self.pos]
        self.pos += 1
        return b

    def read(self, n: int) -> list[int]:
        out = []
        for _ in range(n):
            b = self._raw()
            out.append(b)
            if b == self.last:
                self.run += 1
            else:
                self.last, self.run = b, 1
            if self.run == 5:
                self._consume_stuff()
        return out

    def _consume_stuff(self) -> None:
        at = self.pos
        s = self._raw()
        if s == self.last:
            raise StuffError(at)
        self.last, self.run = s, 1


def decode_frame(bits: Sequence[int]) -> CanFrame:
    r = _Destuffer(bits)
    if r.read(1) != [0]:
        raise FormError("missing start-of-frame")
    header = r.read(HEADER_BITS - 1)
    ident = _bits_uint(header[0:11])
    rtr, ide = header[11], header[12]
    if ide:
        raise FormError("extended identifier frames are not supported")
    if rtr:
        raise FormError("remote frames are not supported")
    dlc = _bits_uint(header[14:18])
    if dlc > 8:
        raise FormError(f"dlc {dlc} out of range")
    payload = r.read(8 * dlc)
    received = _bits_uint(r.read(15))
    computed = crc15([0] + header + payload)
    if received != computed:
        raise CrcError(computed, received)
    pos = r.pos
    tail = list(bits[pos:pos + 3 + EOF_BITS])
    if len(tail) < 3 + EOF_BITS:
        raise FormError(f"frame truncated at bit {len(bits)}")
    if tail[0] != 1:
        raise FormError(f"bad CRC delimiter at bit {pos}")
    if tail[2] != 1:
        raise FormError(f"bad ACK delimiter at bit {pos + 2}")
    if any(b != 1 for b in tail[3:]):
        raise FormError("bad end-of-frame")
    if len(bits) != pos + 3 + EOF_BITS:
        raise FormError("trailing bits after end-of-frame")
    data = bytes(_bits_uint(payload[8 * i:8 * i + 8]) for i in range(dlc))
    return CanFrame(ident, data)


def frame_time(frame: CanFrame, bitrate: float = 1_000_000) -> float:
    """Bus occupancy in microseconds, including the 3-bit interframe space."""
    if bitrate <= 0:
        raise ValueError("bitrate must be positive")
    return (len(encode_frame(frame)) + IFS_BITS) * 1e6 / bitrate


def stuff_count(frame: CanFrame) -> int:
    return len(encode_frame(frame)) - (HEADER_BITS + 8 * frame.dlc + 15 + 3 + EOF_BITS)
