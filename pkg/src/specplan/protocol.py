"""Wire protocol for the driver-assist service: one JSON object per text
frame, monotone sequence numbers per direction."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping

KINDS = ("hello", "config", "command", "state", "plan", "event")


class ProtocolError(ValueError):
    """Malformed frame."""


@dataclass(frozen=True)
class DriveMessage:
    kind: str
    seq: int
    payload: dict

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ProtocolError(f"unknown message kind '{self.kind}'")
        if not isinstance(self.seq, int) or self.seq < 0:
            raise ProtocolError("seq must be a nonnegative integer")


def encode(msg: DriveMessage) -> str:
    return json.dumps({"kind": msg.kind, "seq": msg.seq, "payload": msg.payload},
                      separators=(",", ":"))


def decode(text: str) -> DriveMessage:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON frame: {exc}")
    if not isinstance(obj, Mapping):
        raise ProtocolError("frame must be a JSON object")
    if "kind" not in obj or "seq" not in obj:
        raise ProtocolError("frame missing kind/seq")
    payload = obj.get("payload", {})
    if not isinstance(payload, Mapping):
        raise ProtocolError("payload must be an object")
    seq = obj["seq"]
    if not isinstance(seq, int):
        raise ProtocolError("seq must be an integer")
    # unknown top-level fields are ignored
    return DriveMessage(kind=str(obj["kind"]), seq=seq, payload=dict(payload))


class SequenceTracker:
    """Enforces strictly increasing sequence numbers for one direction."""

    def __init__(self):
        self.last: int = -1

    def accept(self, msg: DriveMessage) -> bool:
        if msg.seq <= self.last:
            return False
        self.last = msg.seq
        return True


class MessageCounter:
    """Outbound sequence numbering."""

    def __init__(self):
        self._next = 0

    def stamp(self, kind: str, payload: dict) -> DriveMessage:
        msg = DriveMessage(kind=kind, seq=self._next, payload=payload)
        self._next += 1
        return msg
