"""Wire format and in-memory message fabric.

Every message travels as one JSON line: {"type", "sender", "seq", "payload"}.
seq is per-sender and strictly increasing, which lets receivers shed stale
plans when the transport reorders. The in-memory bus broadcasts to every
registered party except the sender; an optional bounded reorderer simulates
an unfriendly transport for tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

# message types on the wire
PLAN = "PLAN"
EVENT = "EVENT"
STOP = "STOP"
STATUS = "STATUS"
EMERGENCY = "EMERGENCY"
REPLAN_NOTICE = "REPLAN_NOTICE"
DASH_STATE = "DASH_STATE"
DASH_CMD = "DASH_CMD"


class WireError(ValueError):
    """Line is not a valid protocol message."""


@dataclass(frozen=True)
class WireMessage:
    type: str
    sender: str
    seq: int
    payload: dict


def encode_message(m: WireMessage) -> str:
    return json.dumps(
        {"type": m.type, "sender": m.sender, "seq": m.seq, "payload": m.payload},
        separators=(",", ":"), sort_keys=True,
    ) + "\n"


def decode_message(line: str) -> WireMessage:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise WireError(f"bad JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise WireError("message must be an object")
    for key in ("type", "sender", "seq", "payload"):
        if key not in obj:
            raise WireError(f"missing field {key}")
    if not isinstance(obj["type"], str) or not isinstance(obj["sender"], str):
        raise WireError("type and sender must be strings")
    if isinstance(obj["seq"], bool) or not isinstance(obj["seq"], int):
        raise WireError("seq must be an integer")
    if not isinstance(obj["payload"], dict):
        raise WireError("payload must be an object")
    return WireMessage(
        type=obj["type"], sender=obj["sender"], seq=obj["seq"], payload=obj["payload"]
    )


class MessageBus:
    """Broadcast fabric between the ground station and the drones.

    reorder_window > 1 (with an rng) shuffles each drained batch within a
    bounded window, deterministic for a given generator.
    """

    def __init__(self, reorder_window: int = 0, rng=None):
        self._inboxes: dict[str, list[WireMessage]] = {}
        self._seq: dict[str, int] = {}
        self._reorder = reorder_window
        self._rng = rng
        self.taps: list = []  # callables observing every published message

    def register(self, name: str):
        if name in self._inboxes:
            raise ValueError(f"duplicate bus client {name}")
        self._inboxes[name] = []

    def next_seq(self, sender: str) -> int:
        n = self._seq.get(sender, 0) + 1
        self._seq[sender] = n
        return n

    def send(self, sender: str, type_: str, payload: dict, to=None) -> WireMessage:
        msg = WireMessage(type=type_, sender=sender, seq=self.next_seq(sender), payload=payload)
        self.publish(msg, to=to)
        return msg

    def publish(self, msg: WireMessage, to=None):
        """Deliver to every inbox except the sender's, or to the named subset
        (``to`` as an iterable of client names). Taps observe everything."""
        recipients = self._inboxes.keys() if to is None else to
        for name in recipients:
            if name != msg.sender and name in self._inboxes:
                self._inboxes[name].append(msg)
        for tap in self.taps:
            tap(msg)

    def pending(self, name: str) -> int:
        return len(self._inboxes[name])

    def drain(self, name: str) -> list[WireMessage]:
        box = self._inboxes[name]
        self._inboxes[name] = []
        if self._reorder > 1 and self._rng is not None and len(box) > 1:
            for i in range(len(box)):
                span = min(self._reorder, len(box) - i)
                j = i + int(self._rng.integers(0, span))
                box[i], box[j] = box[j], box[i]
        return box


class SequenceTracker:
    """Drops messages that arrive out of order from a given sender."""

    def __init__(self):
        self._last: dict[str, int] = {}

    def accept(self, sender: str, seq: int) -> bool:
        if seq <= self._last.get(sender, 0):
            return False
        self._last[sender] = seq
        return True
