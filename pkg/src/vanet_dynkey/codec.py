"""Protocol messages and their binary wire format.

Header: ``kind:u8 | src:u32 | dst:u32 | seq:u64 | body_len:u32`` followed by
the body. Inside a body, fields are ``u16`` length-prefixed and appear in the
order of the corresponding handshake line.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Iterable, Sequence

from .errors import MalformedMessage

_HEADER = struct.Struct(">BIIQI")
_U16 = struct.Struct(">H")
NO_ID = 0xFFFFFFFF


class Kind(IntEnum):
    KEY_REQ1 = 1
    KEY_REQ2 = 2
    KEY_REQ3 = 3
    KEY_RESP4 = 4
    KEY_RESP5 = 5
    KEY_RESP6 = 6
    REGISTER = 7
    MANAGER_HANDOFF = 8
    REVOKE_TO_MANAGER = 9
    REVOKE_TO_RSU = 10
    REVOKE_BROADCAST = 11
    MANAGER_FORWARD = 12


REVOCATION_KINDS = frozenset({
    Kind.REVOKE_TO_MANAGER, Kind.REVOKE_TO_RSU, Kind.REVOKE_BROADCAST, Kind.MANAGER_FORWARD,
})


@dataclass(frozen=True)
class ProtocolMessage:
    kind: Kind
    src: int
    dst: int
    seq: int
    body: bytes
    # Simulator bookkeeping, never serialized.
    tag: int | None = field(default=None, compare=False)

    def with_route(self, src: int, dst: int, seq: int) -> "ProtocolMessage":
        return replace(self, src=src, dst=dst, seq=seq)


def encode(msg: ProtocolMessage) -> bytes:
    return _HEADER.pack(int(msg.kind), msg.src, msg.dst, msg.seq, len(msg.body)) + msg.body


def decode(data: bytes) -> ProtocolMessage:
    if len(data) < _HEADER.size:
        raise MalformedMessage("truncated header")
    kind, src, dst, seq, n = _HEADER.unpack_from(data)
    try:
        kind = Kind(kind)
    except ValueError as exc:
        raise MalformedMessage(f"unknown kind {kind}") from exc
    body = data[_HEADER.size:]
    if len(body) != n:
        raise MalformedMessage(f"body length {len(body)} != declared {n}")
    return ProtocolMessage(kind, src, dst, seq, bytes(body))


def pack_fields(*fields: bytes) -> bytes:
    out = bytearray()
    for f in fields:
        if len(f) > 0xFFFF:
            raise MalformedMessage("field too long")
        out += _U16.pack(len(f))
        out += f
    return bytes(out)


def unpack_fields(data: bytes, count: int | None = None) -> list[bytes]:
    fields: list[bytes] = []
    i = 0
    while i < len(data):
        if i + 2 > len(data):
            raise MalformedMessage("truncated field length")
        (n,) = _U16.unpack_from(data, i)
        i += 2
        if i + n > len(data):
            raise MalformedMessage("truncated field")
        fields.append(bytes(data[i:i + n]))
        i += n
    if count is not None and len(fields) != count:
        raise MalformedMessage(f"expected {count} fields, got {len(fields)}")
    return fields


def u32(n: int) -> bytes:
    return struct.pack(">I", n)


def u64(n: int) -> bytes:
    return struct.pack(">Q", n)


def f64(x: float) -> bytes:
    return struct.pack(">d", x)


def u32_list(ids: Iterable[int]) -> bytes:
    ids = list(ids)
    return struct.pack(f">{len(ids)}I", *ids)


def read_u32(b: bytes) -> int:
    if len(b) != 4:
        raise MalformedMessage("bad u32 field")
    return struct.unpack(">I", b)[0]


def read_u64(b: bytes) -> int:
    if len(b) != 8:
        raise MalformedMessage("bad u64 field")
    return struct.unpack(">Q", b)[0]


def read_f64(b: bytes) -> float:
    if len(b) != 8:
        raise MalformedMessage("bad f64 field")
    return struct.unpack(">d", b)[0]


def read_u32_list(b: bytes) -> list[int]:
    if len(b) % 4:
        raise MalformedMessage("bad id list")
    return list(struct.unpack(f">{len(b) // 4}I", b))


def opt_id(n: int | None) -> int:
    return NO_ID if n is None else n


def from_opt_id(n: int) -> int | None:
    return None if n == NO_ID else n


