"""Public, unauthenticated classical channel.

Everything sent here is visible to any observer, Eve included. Messages are
framed as a 4-byte big-endian length followed by a compact JSON record, e.g.
``{"index": 3, "basis": "+"}`` or ``{"index": 3, "bit": 1}``.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Any, Iterator

from .errors import ChannelClosed

_LEN = struct.Struct(">I")


@dataclass(frozen=True)
class Message:
    seq: int
    sender: str
    kind: str
    record: dict[str, Any]

    def as_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "sender": self.sender, "kind": self.kind, "record": self.record}


def encode_frame(msg: Message) -> bytes:
    body = json.dumps(msg.as_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _LEN.pack(len(body)) + body


def decode_frames(data: bytes) -> Iterator[Message]:
    pos = 0
    while pos < len(data):
        if pos + _LEN.size > len(data):
            raise ValueError("truncated frame header")
        (size,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        body = data[pos : pos + size]
        if len(body) != size:
            raise ValueError("truncated frame body")
        pos += size
        d = json.loads(body)
        yield Message(d["seq"], d["sender"], d["kind"], d["record"])


@dataclass
class ClassicalChannel:
    """In-memory lossless broadcast channel with a full public transcript."""

    name: str = "public"
    closed: bool = False
    messages: list[Message] = field(default_factory=list)

    def send(self, sender: str, kind: str, record: dict[str, Any]) -> Message:
        if self.closed:
            raise ChannelClosed(f"channel {self.name!r} is closed")
        msg = Message(len(self.messages), sender, kind, dict(record))
        self.messages.append(msg)
        return msg

    def send_many(self, sender: str, kind: str, records) -> list[Message]:
        return [self.send(sender, kind, r) for r in records]

    def receive(self, kind: str, sender: str | None = None, since: int = 0) -> list[Message]:
        return [
            m for m in self.messages[since:]
            if m.kind == kind and (sender is None or m.sender == sender)
        ]

    def close(self) -> None:
        self.closed = True

    def wire_bytes(self) -> bytes:
        """The transcript exactly as an eavesdropper on the wire would record it."""
        return b"".join(encode_frame(m) for m in self.messages)
