"""ESF-1 binary codec and CSV debug format for event streams.

ESF-1 is a compact little-endian stream of 16-bit words behind a 16-byte
header.  The encoding is stateful: timestamp and row registers are updated by
dedicated words, and event/trigger words only carry the missing pieces.

Header layout (16 bytes)::

    0  4   magic "ESF1"
    4  1   version (1)
    5  1   reserved (0)
    6  2   sensor width,  u16 LE
    8  2   sensor height, u16 LE
    10 6   zero padding

Word types, distinguished by the high nibble::

    0x8 TIME_HIGH    12-bit payload, bits 12..23 of the timestamp
    0x6 TIME_LOW     12-bit payload, bits 0..11 of the timestamp
    0x0 CD_Y         12-bit payload, event row
    0x2 CD_X         bit 11 polarity (1 -> +1), bits 10..0 column; emits an event
    0xA EXT_TRIGGER  bit 0 edge (1 -> rising), bits 11..8 channel; emits a trigger

The full timestamp is ``epoch * 2**24 + time_high * 2**12 + time_low`` where
the epoch counter increments whenever a TIME_HIGH word carries a value
strictly smaller than the previous one (24-bit rollover).  Decoder state
starts at time_high = time_low = 0, epoch = 0, row unset; a CD_X word before
any CD_Y is an error.

The encoder emits state words only when the corresponding register changes,
so the byte count (16 + 2 * words) is the honest wire footprint used by the
rate-budget module.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .streams import (
    CoordinateOutOfBounds,
    EventStream,
    StreamError,
    StreamHeader,
    UnsortedInput,
    make_events,
    make_triggers,
)

MAGIC = b"ESF1"
HEADER_SIZE = 16
WORD_SIZE = 2

TYPE_CD_Y = 0x0
TYPE_CD_X = 0x2
TYPE_TIME_LOW = 0x6
TYPE_TIME_HIGH = 0x8
TYPE_EXT_TRIGGER = 0xA
_KNOWN_TYPES = (TYPE_CD_Y, TYPE_CD_X, TYPE_TIME_LOW, TYPE_TIME_HIGH, TYPE_EXT_TRIGGER)


# -- typed decode errors ------------------------------------------------------


class BadMagic(StreamError):
    """The stream does not start with the ESF-1 signature."""

    def __init__(self, found: bytes, offset: int = 0, message: str = ""):
        self.found = bytes(found)
        self.offset = offset
        super().__init__(message or f"bad magic {self.found!r} at byte {offset}")


class TruncatedStream(StreamError):
    """The byte sequence ends in the middle of the header or of a word."""

    def __init__(self, offset: int, message: str = ""):
        self.offset = offset
        super().__init__(message or f"stream truncated at byte {offset}")


class UnknownWordType(StreamError):
    """A word carries a type nibble outside the defined set."""

    def __init__(self, nibble: int, offset: int):
        self.nibble = nibble
        self.offset = offset
        super().__init__(f"unknown word type 0x{nibble:X} at byte {offset}")


class CdXBeforeCdY(StreamError):
    """A CD_X word appeared before any CD_Y set the row register."""

    def __init__(self, offset: int):
        self.offset = offset
        super().__init__(f"CD_X before any CD_Y at byte {offset}")


class MalformedLine(StreamError):
    """A CSV line does not parse."""

    def __init__(self, line_no: int, content: str):
        self.line_no = line_no
        self.content = content
        super().__init__(f"line {line_no}: cannot parse {content!r}")


# -- word builders (shared by the encoder and by golden-word tests) -----------


def build_time_high(value: int) -> int:
    return (TYPE_TIME_HIGH << 12) | (value & 0xFFF)


def build_time_low(value: int) -> int:
    return (TYPE_TIME_LOW << 12) | (value & 0xFFF)


def build_cd_y(y: int) -> int:
    return (TYPE_CD_Y << 12) | (y & 0xFFF)


def build_cd_x(x: int, polarity: int) -> int:
    return (TYPE_CD_X << 12) | ((1 if polarity > 0 else 0) << 11) | (x & 0x7FF)


def build_trigger(edge: int, channel: int) -> int:
    return (TYPE_EXT_TRIGGER << 12) | ((channel & 0xF) << 8) | (edge & 1)


def pack_words(words) -> bytes:
    """Pack a sequence of 16-bit word values little-endian."""
    return np.asarray(words, dtype="<u2").tobytes()


def make_header(width: int, height: int) -> bytes:
    return struct.pack("<4sBBHH6x", MAGIC, 1, 0, width, height)


# -- decoding ------------------------------------------------------------------


def _value_table(values: np.ndarray, init) -> np.ndarray:
    """Register-value lookup table indexed by 'number of changes seen so far'."""
    return np.concatenate([[init], values])


# Words per decode chunk.  Chunking keeps the vectorized decoder's temporaries
# inside the cache hierarchy on long recordings; results are identical for any
# chunk size because the register state is carried across the boundary.
DECODE_CHUNK_WORDS = 1 << 21


@dataclass
class _Registers:
    """Decoder state carried across chunk boundaries."""

    time_high: int = 0
    time_low: int = 0
    epoch: int = 0
    y: int = 0
    y_seen: bool = False


def decode_esf(data: bytes) -> EventStream:
    """Decode an ESF-1 byte sequence into an :class:`EventStream`.

    Every byte sequence either decodes or raises a typed :class:`StreamError`
    carrying the byte offset of the first problem; nothing is skipped
    silently.
    """
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise TruncatedStream(len(data), f"header needs {HEADER_SIZE} bytes, got {len(data)}")
    magic, version, _reserved, width, height = struct.unpack_from("<4sBBHH", data, 0)
    if magic != MAGIC:
        raise BadMagic(magic)
    if version != 1:
        raise BadMagic(magic, offset=4, message=f"unsupported version {version} at byte 4")
    if not (0 < width <= 2048):
        raise CoordinateOutOfBounds("width", width, 6)
    if not (0 < height <= 2048):
        raise CoordinateOutOfBounds("height", height, 8)
    if (len(data) - HEADER_SIZE) % WORD_SIZE:
        raise TruncatedStream(len(data) - 1, "odd byte count: truncated final word")

    header = StreamHeader(width, height)
    all_words = np.frombuffer(data, dtype="<u2", offset=HEADER_SIZE)
    if all_words.shape[0] == 0:
        return EventStream(header)

    reg = _Registers()
    ev_parts, tr_parts, pos_parts = [], [], []
    items_before = 0
    chunk = DECODE_CHUNK_WORDS
    for start in range(0, all_words.shape[0], chunk):
        words = all_words[start : start + chunk]
        events, triggers, local_pos = _decode_chunk(words, width, height, reg, start)
        ev_parts.append(events)
        tr_parts.append(triggers)
        pos_parts.append(local_pos + items_before)
        items_before += events.shape[0] + triggers.shape[0]

    return EventStream(
        header,
        np.concatenate(ev_parts) if len(ev_parts) > 1 else ev_parts[0],
        np.concatenate(tr_parts) if len(tr_parts) > 1 else tr_parts[0],
        np.concatenate(pos_parts) if len(pos_parts) > 1 else pos_parts[0],
    )


def _decode_chunk(words, width, height, reg: _Registers, word_base: int):
    """Decode one slice of the word stream, updating ``reg`` in place.

    Returns (events, triggers, trigger positions within this chunk's merged
    item sequence).  Byte offsets in errors account for ``word_base``.
    """
    n = words.shape[0]
    types = (words >> 12).astype(np.uint8)

    is_th = types == TYPE_TIME_HIGH
    is_tl = types == TYPE_TIME_LOW
    is_y = types == TYPE_CD_Y
    is_x = types == TYPE_CD_X
    is_trig = types == TYPE_EXT_TRIGGER

    y_idx = np.nonzero(is_y)[0]
    x_idx = np.nonzero(is_x)[0]
    y_vals_all = words.take(y_idx) & 0xFFF
    x_words = words.take(x_idx)
    x_vals = x_words & 0x7FF
    first_y = int(y_idx[0]) if y_idx.shape[0] else n

    # Screen for malformed words cheaply; locate exact offsets only on the
    # failure path.  A sequential decoder stops at the first problem, so the
    # earliest word index must win across all error kinds.
    all_known = bool((is_th | is_tl | is_y | is_x | is_trig).all())
    cd_x_too_early = not reg.y_seen and x_idx.shape[0] and int(x_idx[0]) < first_y
    if (not all_known) or (y_vals_all >= height).any() or (x_vals >= width).any() or cd_x_too_early:
        first_bad = []  # (word index, exception factory)

        def _offset(i):
            return HEADER_SIZE + WORD_SIZE * (word_base + i)

        if not all_known:
            known = is_th | is_tl | is_y | is_x | is_trig
            i = int(np.argmin(known))
            first_bad.append((i, lambda i=i: UnknownWordType(int(types[i]), _offset(i))))
        oob = y_idx[y_vals_all >= height]
        if oob.shape[0]:
            i = int(oob[0])
            first_bad.append((i, lambda i=i: CoordinateOutOfBounds("y", int(words[i] & 0xFFF), _offset(i))))
        oob = x_idx[x_vals >= width]
        if oob.shape[0]:
            i = int(oob[0])
            first_bad.append((i, lambda i=i: CoordinateOutOfBounds("x", int(words[i] & 0x7FF), _offset(i))))
        if cd_x_too_early:
            i = int(x_idx[0])
            first_bad.append((i, lambda i=i: CdXBeforeCdY(_offset(i))))
        first_bad.sort(key=lambda pair: pair[0])
        raise first_bad[0][1]()

    # Timestamp state.  Both TIME word kinds update the same 64-bit register,
    # so build one table of its value after each TIME word; cnt_time[i] then
    # indexes it (slot 0 = the state inherited from ``reg``).  Within the
    # TIME-word subsequence the high part forward-fills across low-word
    # updates and vice versa, and the epoch increments at each strict
    # TIME_HIGH decrease (24-bit rollover).
    is_time = is_th | is_tl
    time_idx = np.nonzero(is_time)[0]
    time_is_high = is_th.take(time_idx)
    time_vals = (words.take(time_idx) & 0xFFF).astype(np.uint64)
    th_vals = time_vals[time_is_high]
    epochs = np.empty(th_vals.shape[0], dtype=np.uint64)
    if th_vals.shape[0]:
        epochs[0] = reg.epoch + (int(th_vals[0]) < reg.time_high)
        if th_vals.shape[0] > 1:
            epochs[1:] = epochs[0] + np.cumsum(th_vals[1:] < th_vals[:-1])
    tl_vals = time_vals[~time_is_high]
    th_tab = _value_table(th_vals, np.uint64(reg.time_high))
    ep_tab = _value_table(epochs, np.uint64(reg.epoch))
    tl_tab = _value_table(tl_vals, np.uint64(reg.time_low))
    jth = np.cumsum(time_is_high, dtype=np.int32)
    jtl = np.cumsum(~time_is_high, dtype=np.int32)
    t_after = (ep_tab[jth] << np.uint64(24)) + (th_tab[jth] << np.uint64(12)) + tl_tab[jtl]
    t_tab = _value_table(t_after, (np.uint64(reg.epoch) << np.uint64(24))
                         + (np.uint64(reg.time_high) << np.uint64(12)) + np.uint64(reg.time_low))

    cnt_time = np.cumsum(is_time, dtype=np.int32)
    cnt_y = np.cumsum(is_y, dtype=np.int32)
    y_tab = _value_table(y_vals_all.astype(np.uint16), np.uint16(reg.y))

    polarity = ((x_words >> 11) & 1).astype(np.int8)
    polarity += polarity
    polarity -= 1  # bit set -> +1, clear -> -1
    events = make_events(
        t_tab[cnt_time.take(x_idx)],
        x_vals,
        y_tab[cnt_y.take(x_idx)],
        polarity,
    )

    trig_idx = np.nonzero(is_trig)[0]
    trig_words = words.take(trig_idx)
    triggers = make_triggers(
        t_tab[cnt_time[trig_idx]],
        (trig_words & 1).astype(np.uint8),
        ((trig_words >> 8) & 0xF).astype(np.uint8),
    )

    # Merged position of each trigger: events before it plus triggers before it.
    trigger_pos = (np.searchsorted(x_idx, trig_idx) + np.arange(trig_idx.shape[0])).astype(np.int64)

    # Carry the registers forward for the next chunk.
    if th_vals.shape[0]:
        reg.time_high = int(th_vals[-1])
        reg.epoch = int(epochs[-1])
    if tl_vals.shape[0]:
        reg.time_low = int(tl_vals[-1])
    if y_vals_all.shape[0]:
        reg.y = int(y_vals_all[-1])
        reg.y_seen = True

    return events, triggers, trigger_pos


# -- encoding ------------------------------------------------------------------


@dataclass
class EncodeStats:
    """Wire accounting for one encoded stream.

    ``item_words[i]`` counts the 16-bit words attributable to merged item
    ``i`` (its payload word plus whatever state words it forced).  Total
    bytes are ``16 + 2 * sum(item_words)``.
    """

    item_words: np.ndarray
    n_words: int

    @property
    def n_bytes(self) -> int:
        return HEADER_SIZE + WORD_SIZE * self.n_words


def _rollover_words(cur_v: int, d: int, v_tgt: int) -> list:
    """TIME_HIGH words that advance the epoch ``d`` times and land on ``v_tgt``.

    The decoder increments the epoch only on a strict decrease, so from a zero
    register we first step up to 1 and back down.
    """
    ws = []
    for _ in range(d):
        if cur_v == 0:
            ws.append(build_time_high(1))
            cur_v = 1
        ws.append(build_time_high(0))
        cur_v = 0
    if v_tgt != cur_v:
        ws.append(build_time_high(v_tgt))
    return ws


def _encode_words(stream: EventStream) -> tuple[np.ndarray, np.ndarray]:
    """Encode the merged item sequence; returns (words, per-item word counts)."""
    ev, tr = stream.events, stream.triggers
    width, height = stream.header.width, stream.header.height

    bad = np.nonzero(ev["x"] >= width)[0]
    if bad.shape[0]:
        raise CoordinateOutOfBounds("x", int(ev["x"][bad[0]]))
    bad = np.nonzero(ev["y"] >= height)[0]
    if bad.shape[0]:
        raise CoordinateOutOfBounds("y", int(ev["y"][bad[0]]))
    bad = np.nonzero(tr["channel"] > 0xF)[0]
    if bad.shape[0]:
        raise CoordinateOutOfBounds("channel", int(tr["channel"][bad[0]]))

    n = stream.n_items
    if n == 0:
        return np.empty(0, dtype="<u2"), np.empty(0, dtype=np.int64)

    is_trig = stream.merged_mask()
    t = stream.merged_times()
    drop = np.nonzero(t[1:] < t[:-1])[0]
    if drop.shape[0]:
        raise UnsortedInput(int(drop[0] + 1))

    # Payload word per item.
    payload = np.empty(n, dtype=np.uint16)
    payload[~is_trig] = (
        (TYPE_CD_X << 12)
        | (ev["p"] > 0).astype(np.uint16) << 11
        | ev["x"].astype(np.uint16)
    )
    payload[is_trig] = (
        (TYPE_EXT_TRIGGER << 12)
        | (tr["channel"].astype(np.uint16) << 8)
        | (tr["edge"].astype(np.uint16) & 1)
    )

    # Timestamp registers per item and their previous values (decoder state).
    e = (t >> np.uint64(24)).astype(np.int64)
    v = ((t >> np.uint64(12)) & np.uint64(0xFFF)).astype(np.int64)
    tl = (t & np.uint64(0xFFF)).astype(np.int64)
    e_prev = np.concatenate([[0], e[:-1]])
    v_prev = np.concatenate([[0], v[:-1]])
    tl_prev = np.concatenate([[0], tl[:-1]])
    d_epoch = e - e_prev

    n_th = np.zeros(n, dtype=np.int64)
    simple = (d_epoch == 0) & (v != v_prev)
    n_th[simple] = 1
    rollover_idx = np.nonzero(d_epoch > 0)[0]
    rollover_words = {}
    for i in rollover_idx:
        ws = _rollover_words(int(v_prev[i]), int(d_epoch[i]), int(v[i]))
        rollover_words[int(i)] = ws
        n_th[i] = len(ws)

    tl_emit = tl != tl_prev

    # Row register: only events participate; the first event always sets it.
    y_emit = np.zeros(n, dtype=bool)
    ev_positions = np.nonzero(~is_trig)[0]
    if ev_positions.shape[0]:
        ey = ev["y"].astype(np.int64)
        changed = np.concatenate([[True], ey[1:] != ey[:-1]])
        y_emit[ev_positions] = changed

    counts = n_th + tl_emit + y_emit + 1
    offsets = np.cumsum(counts) - counts
    out = np.zeros(int(counts.sum()), dtype="<u2")

    pos = offsets[simple]
    out[pos] = (TYPE_TIME_HIGH << 12) | v[simple].astype(np.uint16)
    for i, ws in rollover_words.items():
        out[offsets[i] : offsets[i] + len(ws)] = ws

    pos = (offsets + n_th)[tl_emit]
    out[pos] = (TYPE_TIME_LOW << 12) | tl[tl_emit].astype(np.uint16)

    pos = (offsets + n_th + tl_emit)[y_emit]
    y_all = np.zeros(n, dtype=np.int64)
    y_all[ev_positions] = ev["y"]
    out[pos] = y_all[y_emit].astype(np.uint16)  # CD_Y nibble is 0x0

    out[offsets + counts - 1] = payload
    return out, counts


def encode_esf(stream: EventStream) -> bytes:
    """Encode a stream to ESF-1 bytes; state words are emitted minimally."""
    words, _ = _encode_words(stream)
    return make_header(stream.header.width, stream.header.height) + words.tobytes()


def encode_stats(stream: EventStream) -> EncodeStats:
    """Word/byte accounting for the encoded form, without keeping the bytes."""
    words, counts = _encode_words(stream)
    return EncodeStats(item_words=counts, n_words=int(words.shape[0]))


# -- CSV debug format ----------------------------------------------------------


def write_csv(stream: EventStream) -> str:
    """Render a stream as debug CSV, one item per line in encounter order.

    Events become ``cd,<t>,<x>,<y>,<p>`` with polarity written ``+1``/``-1``;
    triggers become ``trig,<t>,<r|f>,<channel>``.
    """
    mask = stream.merged_mask()
    ev, tr = stream.events, stream.triggers
    lines = []
    ei = ti = 0
    for is_trig in mask:
        if is_trig:
            r = tr[ti]
            ti += 1
            lines.append(f"trig,{int(r['t'])},{'r' if r['edge'] else 'f'},{int(r['channel'])}")
        else:
            r = ev[ei]
            ei += 1
            p = "+1" if r["p"] > 0 else "-1"
            lines.append(f"cd,{int(r['t'])},{int(r['x'])},{int(r['y'])},{p}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_csv(text: str, width: int, height: int) -> EventStream:
    """Parse debug CSV into a stream with the given sensor geometry.

    Blank lines and ``#`` comments are skipped; a single leading header line
    is tolerated.  Anything else that does not parse raises
    :class:`MalformedLine` with its 1-based line number.
    """
    ev_rows = []  # (t, x, y, p)
    tr_rows = []  # (t, edge, channel)
    order = []  # True where the item is a trigger
    first_data_seen = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        kind = parts[0].lower()
        if kind not in ("cd", "trig"):
            if not first_data_seen:
                first_data_seen = True  # tolerated header line
                continue
            raise MalformedLine(line_no, raw)
        first_data_seen = True
        try:
            if kind == "cd":
                if len(parts) != 5:
                    raise ValueError
                t = int(parts[1])
                x = int(parts[2])
                y = int(parts[3])
                if parts[4] in ("+1", "1"):
                    p = 1
                elif parts[4] == "-1":
                    p = -1
                else:
                    raise ValueError
                if t < 0 or x < 0 or y < 0:
                    raise ValueError
                ev_rows.append((t, x, y, p))
                order.append(False)
            else:
                if len(parts) != 4:
                    raise ValueError
                t = int(parts[1])
                edge = {"r": 1, "f": 0}[parts[2].lower()]
                channel = int(parts[3])
                if t < 0 or not (0 <= channel <= 15):
                    raise ValueError
                tr_rows.append((t, edge, channel))
                order.append(True)
        except (ValueError, KeyError, IndexError):
            raise MalformedLine(line_no, raw) from None

    header = StreamHeader(width, height)
    events = make_events(*zip(*ev_rows)) if ev_rows else None
    triggers = make_triggers(*zip(*tr_rows)) if tr_rows else None
    trigger_pos = np.nonzero(np.asarray(order, dtype=bool))[0].astype(np.int64)
    stream = EventStream(
        header,
        events if events is not None else np.empty(0, dtype=make_events([], [], [], []).dtype),
        triggers if triggers is not None else np.empty(0, dtype=make_triggers([], [], []).dtype),
        trigger_pos,
    )
    for i in np.nonzero(stream.events["x"] >= width)[0][:1]:
        raise CoordinateOutOfBounds("x", int(stream.events["x"][i]))
    for i in np.nonzero(stream.events["y"] >= height)[0][:1]:
        raise CoordinateOutOfBounds("y", int(stream.events["y"][i]))
    return stream


def read_esf(path) -> EventStream:
    """Read and decode an ESF-1 file."""
    with open(path, "rb") as fh:
        return decode_esf(fh.read())


def write_esf(path, stream: EventStream) -> int:
    """Encode and write a stream; returns the byte count."""
    blob = encode_esf(stream)
    with open(path, "wb") as fh:
        fh.write(blob)
    return len(blob)
