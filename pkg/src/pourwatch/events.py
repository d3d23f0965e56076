"""Structured pipeline event log: JSON Lines, one event per line.

Every event carries a strictly increasing sequence number, a wall-clock
timestamp (the only field allowed to differ between reruns), an event type
and a frame index.  The field set of each type is fixed; readers reject
unknown fields so logs stay replayable and diffable.
"""

from __future__ import annotations

import json
import time
from typing import IO, Iterable

SCHEMAS: dict[str, frozenset] = {
    "detections": frozenset({"seq", "ts", "type", "frame", "items"}),
    "roi_locked": frozenset({"seq", "ts", "type", "frame", "side", "box", "crop", "contributing"}),
    "flow_sample": frozenset({"seq", "ts", "type", "frame", "side", "u", "v", "point", "d", "status"}),
    "drop": frozenset({"seq", "ts", "type", "frame", "side", "d_t", "d_prev", "point"}),
    "prediction": frozenset({"seq", "ts", "type", "frame", "side", "clip_start", "probs"}),
    "verdict": frozenset({"seq", "ts", "type", "frame", "side", "status", "predicted",
                          "ordered", "votes", "t_drop"}),
    "adapter_fault": frozenset({"seq", "ts", "type", "frame", "role", "message"}),
}

TIMESTAMP_FIELDS = ("ts",)


class IoError(OSError):
    """Event log could not be written."""


class EventLogWriter:
    """Appends schema-checked events to a sink, flushing per event.

    The sink is any file-like object with write/flush; events are also kept
    in memory for in-process inspection.
    """

    def __init__(self, sink: IO[str] | None = None):
        self.sink = sink
        self.events: list[dict] = []
        self._seq = 0

    def emit(self, type_: str, frame: int, **fields) -> dict:
        schema = SCHEMAS.get(type_)
        if schema is None:
            raise ValueError(f"unknown event type {type_!r}")
        self._seq += 1
        event = {"seq": self._seq, "ts": time.time(), "type": type_, "frame": frame}
        event.update(fields)
        got = frozenset(event)
        if got != schema:
            missing = schema - got
            extra = got - schema
            raise ValueError(f"event {type_!r} fields mismatch: missing={sorted(missing)} "
                             f"extra={sorted(extra)}")
        self.events.append(event)
        if self.sink is not None:
            try:
                self.sink.write(json.dumps(event, separators=(",", ":")) + "\n")
                self.sink.flush()
            except OSError as exc:
                raise IoError(f"cannot append to event log: {exc}") from exc
        return event


def validate_event(event: dict) -> dict:
    type_ = event.get("type")
    schema = SCHEMAS.get(type_)
    if schema is None:
        raise ValueError(f"unknown event type {type_!r}")
    got = frozenset(event)
    if got != schema:
        raise ValueError(f"event {type_!r} has unexpected fields {sorted(got - schema)} "
                         f"or missing {sorted(schema - got)}")
    return event


def read_event_log(path) -> list[dict]:
    """Parse and validate a JSONL event log; enforces seq monotonicity."""
    events = []
    last_seq = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                event = validate_event(json.loads(line))
            except (json.JSONDecodeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if event["seq"] <= last_seq:
                raise ValueError(f"{path}:{lineno}: seq {event['seq']} not increasing")
            last_seq = event["seq"]
            events.append(event)
    return events


def strip_timestamps(events: Iterable[dict]) -> list[dict]:
    """Copy of the events with wall-clock fields removed, for comparisons."""
    return [{k: v for k, v in e.items() if k not in TIMESTAMP_FIELDS} for e in events]
