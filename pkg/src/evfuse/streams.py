"""Event stream data model.

An event camera reports per-pixel brightness changes ("CD events") with
microsecond timestamps, alongside external trigger edges that mark the
exposure window of a companion frame camera.  Both kinds of items share a
single time-ordered stream.  This module holds the in-memory representation
used throughout the package: compact NumPy record arrays plus a tiny header.

Events and triggers are stored in separate arrays; the original interleaving
is preserved via ``trigger_pos`` (the index of each trigger within the merged
item sequence), so serialization round-trips are item-exact even when a
trigger and an event share a timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# CD event record: timestamp (microseconds), pixel coordinates, polarity (+1/-1).
EVENT_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "<i1")])

# Trigger record: timestamp (microseconds), edge (1 = rising, 0 = falling), channel 0-15.
TRIGGER_DTYPE = np.dtype([("t", "<u8"), ("edge", "<u1"), ("channel", "<u1")])

MAX_SENSOR_DIM = 2048  # coordinate fields are 11/12-bit in the wire format


class StreamError(Exception):
    """Base class for event-stream structural errors."""


class UnsortedInput(StreamError):
    """Items handed to the encoder are not in non-decreasing time order."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"item {index} breaks time order")


class CoordinateOutOfBounds(StreamError):
    """An event coordinate does not fit the sensor geometry."""

    def __init__(self, axis: str, value: int, offset: int | None = None):
        self.axis = axis
        self.value = value
        self.offset = offset
        at = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{axis}={value} out of bounds{at}")


@dataclass(frozen=True)
class StreamHeader:
    """Sensor geometry attached to every stream."""

    width: int
    height: int
    version: int = 1

    def __post_init__(self):
        if not (0 < self.width <= MAX_SENSOR_DIM and 0 < self.height <= MAX_SENSOR_DIM):
            raise CoordinateOutOfBounds("width" if not (0 < self.width <= MAX_SENSOR_DIM) else "height",
                                        self.width if not (0 < self.width <= MAX_SENSOR_DIM) else self.height)


def make_events(t, x, y, p) -> np.ndarray:
    """Build a CD-event record array from parallel sequences."""
    t = np.asarray(t, dtype=np.uint64)
    out = np.empty(t.shape[0], dtype=EVENT_DTYPE)
    out["t"] = t
    out["x"] = np.asarray(x, dtype=np.uint16)
    out["y"] = np.asarray(y, dtype=np.uint16)
    out["p"] = np.asarray(p, dtype=np.int8)
    return out


def make_triggers(t, edge, channel) -> np.ndarray:
    """Build a trigger record array. ``edge`` is 1 for rising, 0 for falling."""
    t = np.asarray(t, dtype=np.uint64)
    out = np.empty(t.shape[0], dtype=TRIGGER_DTYPE)
    out["t"] = t
    out["edge"] = np.asarray(edge, dtype=np.uint8)
    out["channel"] = np.asarray(channel, dtype=np.uint8)
    return out


def _empty_events() -> np.ndarray:
    return np.empty(0, dtype=EVENT_DTYPE)


def _empty_triggers() -> np.ndarray:
    return np.empty(0, dtype=TRIGGER_DTYPE)


@dataclass
class EventStream:
    """A decoded stream: header, CD events, triggers, and their interleaving.

    ``trigger_pos[i]`` is the index of trigger ``i`` within the merged item
    sequence (events and triggers together, encounter order).  Positions not
    listed there belong to events, in order.
    """

    header: StreamHeader
    events: np.ndarray = field(default_factory=_empty_events)
    triggers: np.ndarray = field(default_factory=_empty_triggers)
    trigger_pos: np.ndarray | None = None

    def __post_init__(self):
        self.events = np.asarray(self.events, dtype=EVENT_DTYPE)
        self.triggers = np.asarray(self.triggers, dtype=TRIGGER_DTYPE)
        if self.trigger_pos is None:
            # Default interleaving: stable merge by timestamp, events first on ties.
            pos = np.searchsorted(self.events["t"], self.triggers["t"], side="right")
            self.trigger_pos = (pos + np.arange(len(self.triggers), dtype=np.int64)).astype(np.int64)
        else:
            self.trigger_pos = np.asarray(self.trigger_pos, dtype=np.int64)
            if self.trigger_pos.shape[0] != self.triggers.shape[0]:
                raise ValueError("trigger_pos length must match triggers")

    # -- basic introspection ------------------------------------------------

    @property
    def n_events(self) -> int:
        return int(self.events.shape[0])

    @property
    def n_triggers(self) -> int:
        return int(self.triggers.shape[0])

    @property
    def n_items(self) -> int:
        return self.n_events + self.n_triggers

    def duration_us(self) -> int:
        """Span from first to last item timestamp (0 for empty streams)."""
        ts = []
        if self.n_events:
            ts.append((int(self.events["t"][0]), int(self.events["t"][-1])))
        if self.n_triggers:
            ts.append((int(self.triggers["t"][0]), int(self.triggers["t"][-1])))
        if not ts:
            return 0
        first = min(a for a, _ in ts)
        last = max(b for _, b in ts)
        return last - first

    # -- merged view ----------------------------------------------------------

    def merged_mask(self) -> np.ndarray:
        """Boolean array over the merged sequence; True where the item is a trigger."""
        mask = np.zeros(self.n_items, dtype=bool)
        mask[self.trigger_pos] = True
        return mask

    def merged_times(self) -> np.ndarray:
        """Timestamps of the merged item sequence, in encounter order."""
        mask = self.merged_mask()
        t = np.empty(self.n_items, dtype=np.uint64)
        t[mask] = self.triggers["t"]
        t[~mask] = self.events["t"]
        return t

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.header == other.header
            and np.array_equal(self.events, other.events)
            and np.array_equal(self.triggers, other.triggers)
            and np.array_equal(self.trigger_pos, other.trigger_pos)
        )


@dataclass(frozen=True)
class Finding:
    """One structural anomaly discovered by :func:`validate_stream`."""

    kind: str
    message: str
    indices: tuple = ()

    def to_json(self) -> dict:
        return {"kind": self.kind, "message": self.message, "indices": list(self.indices)}


@dataclass
class ValidationReport:
    """Outcome of a structural pass over a stream.  Never mutates the stream."""

    findings: list

    @property
    def ok(self) -> bool:
        return not self.findings

    def counts(self) -> dict:
        out: dict = {}
        for f in self.findings:
            out[f.kind] = out.get(f.kind, 0) + 1
        return out

    def to_json(self) -> dict:
        return {"ok": self.ok, "findings": [f.to_json() for f in self.findings]}


def validate_stream(stream: EventStream) -> ValidationReport:
    """Check global time order, coordinate bounds, and trigger pairing.

    Returns a report of findings; an empty findings list means the stream is
    structurally sound.  The stream itself is left untouched.
    """
    findings: list[Finding] = []

    # Global time order across both item kinds.
    t = stream.merged_times()
    if t.shape[0] >= 2:
        bad = np.nonzero(t[1:] < t[:-1])[0]
        for i in bad:
            findings.append(
                Finding(
                    "monotonicity",
                    f"item {i + 1} (t={int(t[i + 1])}) precedes item {i} (t={int(t[i])})",
                    (int(i), int(i + 1)),
                )
            )

    # Coordinate bounds against the header geometry.
    ev = stream.events
    if ev.shape[0]:
        bad_x = np.nonzero(ev["x"] >= stream.header.width)[0]
        for i in bad_x:
            findings.append(
                Finding("bounds", f"event {i}: x={int(ev['x'][i])} >= width {stream.header.width}", (int(i),))
            )
        bad_y = np.nonzero(ev["y"] >= stream.header.height)[0]
        for i in bad_y:
            findings.append(
                Finding("bounds", f"event {i}: y={int(ev['y'][i])} >= height {stream.header.height}", (int(i),))
            )

    # Trigger pairing per channel: edges should alternate rising -> falling.
    tr = stream.triggers
    for ch in np.unique(tr["channel"]) if tr.shape[0] else []:
        idx = np.nonzero(tr["channel"] == ch)[0]
        pending = -1  # index of an open rising edge
        for i in idx:
            if tr["edge"][i] == 1:
                if pending >= 0:
                    findings.append(
                        Finding(
                            "unpaired_trigger",
                            f"channel {ch}: rising edge at t={int(tr['t'][pending])} "
                            f"followed by another rising edge",
                            (int(pending),),
                        )
                    )
                pending = int(i)
            else:
                if pending < 0:
                    findings.append(
                        Finding(
                            "unpaired_trigger",
                            f"channel {ch}: falling edge at t={int(tr['t'][i])} with no prior rising edge",
                            (int(i),),
                        )
                    )
                else:
                    pending = -1
        if pending >= 0:
            findings.append(
                Finding(
                    "unpaired_trigger",
                    f"channel {ch}: rising edge at t={int(tr['t'][pending])} never closed",
                    (int(pending),),
                )
            )

    return ValidationReport(findings)


def concat_streams(a: EventStream, b: EventStream) -> EventStream:
    """Concatenate two streams that share a header; b's items follow a's."""
    if a.header != b.header:
        raise ValueError("streams have different headers")
    events = np.concatenate([a.events, b.events])
    triggers = np.concatenate([a.triggers, b.triggers])
    trigger_pos = np.concatenate([a.trigger_pos, b.trigger_pos + a.n_items])
    return EventStream(a.header, events, triggers, trigger_pos)
