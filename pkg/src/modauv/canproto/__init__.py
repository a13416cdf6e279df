from .codec import (
    CanFrame, CrcError, FormError, FrameError, InvalidFrameError, StuffError,
    bits_from_str, bits_to_hex, bits_to_str, crc15, decode_frame, encode_frame,
    frame_time, stuff_bits, stuff_count, unstuff_bits,
)
from .bridge import (
    BridgeCommand, BridgeOp, BridgeOverrunError, BridgeState, bridge_receive,
    bridge_transfer, load_tx, READ_RX, READ_STATUS, RESET, RTS,
)
from .bus import CanBus, DuplicateIdError, arbitrate
from .payload import FieldSpec, MessageMap, MessageSpec, TopicAssembler, pack_payload, unpack_payload
