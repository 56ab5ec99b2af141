"""Frame/event temporal synchronization.

The frame camera's exposure is visible to the event camera as a pair of
trigger edges (rising = shutter open, falling = shutter close).  This module
pairs those edges into exposure intervals and carves the event timeline into
one window per frame.  Four preset windowing schemes are provided, plus an
anchored custom scheme:

``EXPOSURE`` (m1)
    exactly the exposure, ``[start, end)``.
``FRAME_LEADING`` (m2)
    frame-to-frame, ``[start_k, start_{k+1})``; the last window extends one
    median period past the last start.
``CENTERED`` (m3)
    one median period centered on the exposure midpoint.  Under trigger
    jitter neighboring windows may overlap.
``MIDPOINT`` (m4)
    boundaries halfway between consecutive exposure midpoints, extended half
    a period at both ends.  Always a partition.

All windows are half-open ``[t0, t1)`` in integer microseconds with lower
bounds clamped at zero.  Midpoints and medians can sit on quarter-microsecond
lattice points, so the arithmetic is done in exact integer quarters and only
floored on output; shared boundaries stay shared.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class TooFewExposures(Exception):
    """The chosen windowing scheme needs more exposures than were given."""


@dataclass(frozen=True)
class ExposureInterval:
    """One frame exposure: half-open ``[start, end)`` in microseconds."""

    frame_id: int
    start: int
    end: int

    def midpoint2(self) -> int:
        """Twice the exposure midpoint (exact integer)."""
        return self.start + self.end


@dataclass(frozen=True)
class SyncWindow:
    """Half-open event window ``[t0, t1)`` assigned to a frame."""

    frame_id: int
    t0: int
    t1: int

    def to_json(self) -> dict:
        return {"frame_id": self.frame_id, "t0": self.t0, "t1": self.t1}


class SyncMethod(Enum):
    EXPOSURE = "exposure"
    FRAME_LEADING = "frame_leading"
    CENTERED = "centered"
    MIDPOINT = "midpoint"


# Compact aliases accepted on the command line and in config files.
METHOD_ALIASES = {
    "m1": SyncMethod.EXPOSURE,
    "m2": SyncMethod.FRAME_LEADING,
    "m3": SyncMethod.CENTERED,
    "m4": SyncMethod.MIDPOINT,
    "exposure": SyncMethod.EXPOSURE,
    "frame_leading": SyncMethod.FRAME_LEADING,
    "frame-leading": SyncMethod.FRAME_LEADING,
    "centered": SyncMethod.CENTERED,
    "midpoint": SyncMethod.MIDPOINT,
}


def parse_method(text: str) -> SyncMethod:
    try:
        return METHOD_ALIASES[text.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown sync method {text!r}; choose from {sorted(set(METHOD_ALIASES))}") from None


@dataclass(frozen=True)
class CustomWindow:
    """Window ``[anchor - pre_us, anchor + post_us)`` around a per-frame anchor."""

    anchor: str  # "start" | "midpoint" | "end"
    pre_us: int
    post_us: int

    def __post_init__(self):
        if self.anchor not in ("start", "midpoint", "end"):
            raise ValueError(f"anchor must be start|midpoint|end, got {self.anchor!r}")
        if self.pre_us < 0 or self.post_us < 0:
            raise ValueError("pre_us and post_us must be non-negative")


@dataclass(frozen=True)
class UnpairedEdge:
    """A trigger edge that could not be paired into an exposure."""

    t: int
    edge: str  # "rising" | "falling"
    channel: int
    reason: str

    def to_json(self) -> dict:
        return {"t": self.t, "edge": self.edge, "channel": self.channel, "reason": self.reason}


@dataclass
class PairingResult:
    exposures: list
    anomalies: list


def triggers_to_exposures(triggers: np.ndarray, channel: int = 0) -> PairingResult:
    """Pair consecutive (rising, falling) edges on one channel into exposures.

    Anomalous edges — a falling edge with nothing open, a rising edge while
    one is already open, or a rising edge left open at the end — are reported
    as :class:`UnpairedEdge` findings and pairing continues past them.
    """
    sel = triggers[triggers["channel"] == channel]
    exposures: list[ExposureInterval] = []
    anomalies: list[UnpairedEdge] = []
    open_t = None
    for row in sel:
        t = int(row["t"])
        if row["edge"] == 1:
            if open_t is not None:
                anomalies.append(UnpairedEdge(open_t, "rising", channel, "followed by another rising edge"))
            open_t = t
        else:
            if open_t is None:
                anomalies.append(UnpairedEdge(t, "falling", channel, "no prior rising edge"))
            else:
                exposures.append(ExposureInterval(len(exposures), open_t, t))
                open_t = None
    if open_t is not None:
        anomalies.append(UnpairedEdge(open_t, "rising", channel, "stream ended before falling edge"))
    return PairingResult(exposures, anomalies)


def _check_exposures(exposures) -> None:
    prev_end = None
    for e in exposures:
        if e.end < e.start:
            raise ValueError(f"exposure {e.frame_id} ends before it starts")
        if prev_end is not None and e.start < prev_end:
            raise ValueError(f"exposure {e.frame_id} overlaps its predecessor")
        prev_end = e.end


def median_period2(exposures) -> int:
    """Twice the median of successive start-to-start differences (exact)."""
    starts = [e.start for e in exposures]
    diffs = sorted(b - a for a, b in zip(starts, starts[1:]))
    if not diffs:
        raise TooFewExposures("need at least 2 exposures to estimate the frame period")
    k = len(diffs)
    if k % 2:
        return 2 * diffs[k // 2]
    return diffs[k // 2 - 1] + diffs[k // 2]


def _clamp_window(frame_id: int, t0: int, t1: int) -> SyncWindow:
    t0 = max(0, t0)
    t1 = max(t0, t1)
    return SyncWindow(frame_id, t0, t1)


def windows(exposures, method) -> list:
    """Build one event window per exposure according to ``method``.

    ``method`` is a :class:`SyncMethod` preset or a :class:`CustomWindow`.
    Presets other than ``EXPOSURE`` need at least two exposures to estimate
    the frame period and raise :class:`TooFewExposures` otherwise.
    """
    exposures = list(exposures)
    _check_exposures(exposures)
    if not exposures:
        return []

    if isinstance(method, CustomWindow):
        out = []
        for e in exposures:
            if method.anchor == "start":
                a4 = 4 * e.start
            elif method.anchor == "end":
                a4 = 4 * e.end
            else:
                a4 = 2 * e.midpoint2()
            out.append(_clamp_window(e.frame_id, (a4 - 4 * method.pre_us) // 4, (a4 + 4 * method.post_us) // 4))
        return out

    if method is SyncMethod.EXPOSURE:
        return [_clamp_window(e.frame_id, e.start, e.end) for e in exposures]

    p2 = median_period2(exposures)  # raises TooFewExposures when needed

    if method is SyncMethod.FRAME_LEADING:
        out = []
        for e, nxt in zip(exposures, exposures[1:]):
            out.append(_clamp_window(e.frame_id, e.start, nxt.start))
        last = exposures[-1]
        out.append(_clamp_window(last.frame_id, last.start, (2 * last.start + p2) // 2))
        return out

    if method is SyncMethod.CENTERED:
        out = []
        for e in exposures:
            m2 = e.midpoint2()
            out.append(_clamp_window(e.frame_id, (2 * m2 - p2) // 4, (2 * m2 + p2) // 4))
        return out

    if method is SyncMethod.MIDPOINT:
        # Shared boundaries in quarter-microsecond units keep this an exact
        # partition no matter how the division rounds.
        mids2 = [e.midpoint2() for e in exposures]
        bounds4 = [2 * mids2[0] - p2]
        bounds4 += [m2a + m2b for m2a, m2b in zip(mids2, mids2[1:])]
        bounds4.append(2 * mids2[-1] + p2)
        return [
            _clamp_window(e.frame_id, b0 // 4, b1 // 4)
            for e, b0, b1 in zip(exposures, bounds4, bounds4[1:])
        ]

    raise ValueError(f"unknown sync method {method!r}")


def assign_events(events: np.ndarray, window_list) -> list:
    """Slice a time-sorted event array into per-window views via binary search.

    Returns one (possibly empty) view per window; an event is included when
    ``t0 <= t < t1``.  Windows may overlap, in which case events appear in
    every window that covers them.
    """
    t = events["t"]
    out = []
    for w in window_list:
        i0 = int(np.searchsorted(t, np.uint64(max(w.t0, 0)), side="left"))
        i1 = int(np.searchsorted(t, np.uint64(max(w.t1, 0)), side="left"))
        out.append(events[i0:i1])
    return out


def window_counts(events: np.ndarray, window_list) -> np.ndarray:
    """Number of events falling in each window."""
    return np.array([s.shape[0] for s in assign_events(events, window_list)], dtype=np.int64)


# -- exposure CSV ------------------------------------------------------------


def write_exposures_csv(exposures) -> str:
    lines = ["frame_id,start_us,end_us"]
    lines += [f"{e.frame_id},{e.start},{e.end}" for e in exposures]
    return "\n".join(lines) + "\n"


def read_exposures_csv(text: str) -> list:
    out = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.lower().startswith("frame_id"):
            continue
        parts = line.split(",")
        try:
            out.append(ExposureInterval(int(parts[0]), int(parts[1]), int(parts[2])))
        except (ValueError, IndexError):
            raise ValueError(f"exposure CSV line {line_no}: cannot parse {raw!r}") from None
    return out

def write_windows_csv(windows) -> str:
    lines = ["frame_id,t0_us,t1_us"]
    lines += [f"{w.frame_id},{w.t0},{w.t1}" for w in windows]
    return "\n".join(lines) + "\n"


def read_windows_csv(text: str) -> list:
    out = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.lower().startswith("frame_id"):
            continue
        parts = line.split(",")
        try:
            out.append(SyncWindow(int(parts[0]), int(parts[1]), int(parts[2])))
        except (ValueError, IndexError):
            raise ValueError(f"window CSV line {line_no}: cannot parse {raw!r}") from None
    return out
