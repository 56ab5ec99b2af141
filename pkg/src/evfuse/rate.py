"""Event-rate analysis: time series, rate-controller simulation, bandwidth.

The sensor can emit from ~0 to a nominal 1 GEv/s, but the USB link sustains
only ~115 MEv/s; deployments therefore configure an on-sensor event-rate
controller (ERC) that caps throughput (100 MEv/s here by default). This
module bins streams into rate series, simulates the cap with a deterministic
decimation policy, flags saturated bins, and accounts bandwidth for both the
compact wire format and a fixed 8-byte-per-event layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .codec import encode_stats
from .streams import EventStream, StreamHeader, make_triggers

DEFAULT_ERC_CAP_EVPS = 100_000_000  # explicit rate-controller cap
DEFAULT_ERC_PERIOD_US = 1000
DEFAULT_SATURATION_EVPS = 115_000_000  # sustained USB link limit
DEFAULT_BIN_US = 1000


class RateError(Exception):
    pass


class TooFewEvents(RateError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"rate report needs at least 2 events, got {n}")


@dataclass(frozen=True)
class RateSeries:
    """Per-bin event counts. Bin ``k`` covers ``[k*bin_us, (k+1)*bin_us)`` in
    absolute time; only the occupied range ``[start_bin, start_bin+len)`` is
    stored."""

    bin_us: int
    start_bin: int
    counts: np.ndarray  # int64

    @property
    def n_bins(self) -> int:
        return int(self.counts.shape[0])

    def bin_start_us(self, i: int) -> int:
        return (self.start_bin + i) * self.bin_us

    def rates_evps(self) -> np.ndarray:
        return self.counts * (1_000_000.0 / self.bin_us)

    def to_csv(self) -> str:
        lines = ["bin_start_us,count"]
        lines += [f"{self.bin_start_us(i)},{int(c)}" for i, c in enumerate(self.counts)]
        return "\n".join(lines) + "\n"


def rate_series(events: np.ndarray, bin_us: int = DEFAULT_BIN_US) -> RateSeries:
    """Histogram event timestamps into fixed bins anchored at t = 0."""
    if bin_us <= 0:
        raise ValueError("bin width must be positive")
    t = np.asarray(events["t"] if events.dtype.fields else events, dtype=np.uint64)
    if t.shape[0] == 0:
        return RateSeries(bin_us, 0, np.zeros(0, dtype=np.int64))
    bins = t // np.uint64(bin_us)
    start = int(bins[0])
    counts = np.bincount((bins - bins[0]).astype(np.int64))
    return RateSeries(bin_us, start, counts.astype(np.int64))


@dataclass(frozen=True)
class ErcConfig:
    """Rate-controller settings: events/second cap, control period in µs."""

    cap_evps: int = DEFAULT_ERC_CAP_EVPS
    period_us: int = DEFAULT_ERC_PERIOD_US

    def __post_init__(self):
        if self.cap_evps <= 0 or self.period_us <= 0:
            raise ValueError("cap and period must be positive")

    @property
    def budget(self) -> int:
        """Events allowed per control period."""
        return self.cap_evps * self.period_us // 1_000_000


def erc_filter(events: np.ndarray, cfg: ErcConfig = ErcConfig()) -> np.ndarray:
    """Simulate the rate controller: within each period (anchored at t = 0),
    keep at most the period budget, thinning uniformly by index.

    When a period holds ``n > B`` events, the survivors are the events at
    indices ``round(i*n/B)`` for ``i = 0..B-1`` — deterministic, evenly
    spread, and order-preserving. Applying the filter twice changes nothing.
    """
    t = events["t"]
    n_total = t.shape[0]
    budget = cfg.budget
    if n_total == 0:
        return events[:0].copy()
    period = np.uint64(cfg.period_us)
    pid = t // period
    # boundaries of runs of equal period id
    starts = np.flatnonzero(np.r_[True, pid[1:] != pid[:-1]])
    ends = np.r_[starts[1:], n_total]
    keep_chunks = []
    for s, e in zip(starts, ends):
        n = int(e - s)
        if n <= budget:
            keep_chunks.append(np.arange(s, e))
        elif budget > 0:
            i = np.arange(budget, dtype=np.int64)
            keep_chunks.append(s + (2 * i * n + budget) // (2 * budget))
        # budget == 0: the whole period is dropped
    if not keep_chunks:
        return events[:0].copy()
    return events[np.concatenate(keep_chunks)]


@dataclass(frozen=True)
class RateReport:
    """Stream-level rate and bandwidth summary under one encoding."""

    encoding: str
    n_events: int
    duration_us: int
    bin_us: int
    mean_evps: float
    peak_evps: float
    mean_bps: float
    peak_bps: float
    saturated_bins: list = field(default_factory=list)  # [{index, rate_evps}]

    @property
    def saturated(self) -> bool:
        return len(self.saturated_bins) > 0

    def to_json(self) -> dict:
        return {
            "encoding": self.encoding,
            "n_events": self.n_events,
            "duration_us": self.duration_us,
            "bin_us": self.bin_us,
            "mean_evps": self.mean_evps,
            "peak_evps": self.peak_evps,
            "mean_Bps": self.mean_bps,
            "peak_Bps": self.peak_bps,
            "saturated_bins": self.saturated_bins,
        }


def _as_stream(events_or_stream) -> EventStream:
    if isinstance(events_or_stream, EventStream):
        return events_or_stream
    events = events_or_stream
    width = int(events["x"].max()) + 1 if events.shape[0] else 1
    height = int(events["y"].max()) + 1 if events.shape[0] else 1
    return EventStream(StreamHeader(width, height), events, make_triggers([], [], []))


def rate_report(
    events_or_stream,
    encoding: str = "esf1",
    bin_us: int = DEFAULT_BIN_US,
    saturation_evps: float = DEFAULT_SATURATION_EVPS,
) -> RateReport:
    """Mean/peak event rate and bandwidth plus saturated-bin detection.

    ``encoding`` selects the byte accounting: ``esf1`` uses the actual wire
    words the encoder would emit (header included in the mean), ``fixed8``
    charges a flat 8 bytes per event. Mean rates divide by the timestamp span
    (``last - first``, floor 1 µs). The peak is taken over all bins *and* the
    full span, so it can never undercut the mean.
    """
    if encoding not in ("esf1", "fixed8"):
        raise ValueError(f"unknown encoding: {encoding!r}")
    stream = _as_stream(events_or_stream)
    events = stream.events
    n = events.shape[0]
    if n < 2:
        raise TooFewEvents(n)
    t = events["t"]
    duration = max(int(t[-1]) - int(t[0]), 1)

    series = rate_series(events, bin_us)
    rates = series.rates_evps()
    mean_evps = n * 1_000_000 / duration
    peak_evps = max(float(rates.max()), mean_evps)

    if encoding == "fixed8":
        total_bytes = 8 * n
        bin_bytes = series.counts * 8
    else:
        stats = encode_stats(stream)
        total_bytes = stats.n_bytes  # includes the 16-byte header
        # attribute each item's words to its time bin
        item_t = stream.merged_times()
        bins = (item_t // np.uint64(bin_us)).astype(np.int64) - series.start_bin
        words = np.bincount(bins, weights=stats.item_words, minlength=series.n_bins)
        bin_bytes = 2.0 * words
    mean_bps = total_bytes * 1_000_000 / duration
    peak_bps = max(float(bin_bytes.max()) * 1_000_000 / bin_us, mean_bps)

    saturated = [
        {"index": series.start_bin + int(i), "rate_evps": float(rates[i])}
        for i in np.flatnonzero(rates >= saturation_evps)
    ]
    return RateReport(
        encoding=encoding,
        n_events=n,
        duration_us=duration,
        bin_us=bin_us,
        mean_evps=float(mean_evps),
        peak_evps=float(peak_evps),
        mean_bps=float(mean_bps),
        peak_bps=float(peak_bps),
        saturated_bins=saturated,
    )
