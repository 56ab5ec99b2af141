"""Event accumulation into 2D frames and grayscale rendering.

An accumulated frame is a ``(height, width)`` int32 array. Three accumulation
modes are supported:

* ``count``    -- each event adds 1 to its pixel.
* ``polarity`` -- each event adds its polarity (+1/-1) to its pixel.
* ``binary``   -- a pixel becomes 1 once it sees any event.

Rendering maps the integer surface to 8-bit grayscale. For ``polarity`` the
map is symmetric around mid-gray; for ``count`` it is a linear ramp from
black; ``binary`` is plain black/white.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

ACCUMULATION_MODES = ("count", "polarity", "binary")
DEFAULT_CLIP = 3


@dataclass(frozen=True)
class EventFrame:
    """One accumulated window: the integer surface plus its provenance."""

    frame_id: int
    t0: int
    t1: int
    mode: str
    data: np.ndarray  # (height, height) int32, C-order

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.data))


def accumulate(events: np.ndarray, width: int, height: int, mode: str = "polarity") -> np.ndarray:
    """Rasterize events onto a ``(height, width)`` int32 grid.

    ``events`` is any array with ``x``, ``y`` and ``p`` fields (a slice of an
    EventStream's events). Coordinates must already be in range.
    """
    if mode not in ACCUMULATION_MODES:
        raise ValueError(f"unknown accumulation mode: {mode!r}")
    n_cells = width * height
    if events.shape[0] == 0:
        return np.zeros((height, width), dtype=np.int32)
    flat = events["y"].astype(np.int64) * width + events["x"]
    if mode == "count":
        cells = np.bincount(flat, minlength=n_cells)
    elif mode == "polarity":
        cells = np.bincount(flat, weights=events["p"].astype(np.float64), minlength=n_cells)
    else:  # binary
        cells = np.zeros(n_cells, dtype=np.int32)
        cells[flat] = 1
    return cells.astype(np.int32).reshape(height, width)


def accumulate_frame(
    events: np.ndarray,
    width: int,
    height: int,
    frame_id: int,
    t0: int,
    t1: int,
    mode: str = "polarity",
) -> EventFrame:
    return EventFrame(frame_id, int(t0), int(t1), mode, accumulate(events, width, height, mode))


def render_gray(data: np.ndarray, mode: str = "polarity", clip: int = DEFAULT_CLIP) -> np.ndarray:
    """Map an accumulated int32 surface to uint8 grayscale.

    * ``polarity``: mid-gray 128 is zero; +/-``clip`` events saturate to
      255/1. Values beyond ``clip`` are clamped first.
    * ``count``: 0 is black, ``clip`` or more events is white.
    * ``binary``: any nonzero cell renders white.
    """
    if mode not in ACCUMULATION_MODES:
        raise ValueError(f"unknown accumulation mode: {mode!r}")
    if mode == "binary":
        return np.where(data != 0, 255, 0).astype(np.uint8)
    if clip <= 0:
        raise ValueError("clip must be positive")
    if mode == "count":
        scaled = 255.0 * np.minimum(data, clip) / clip
        return np.rint(np.maximum(scaled, 0.0)).astype(np.uint8)
    # polarity
    clamped = np.clip(data, -clip, clip)
    return np.rint(128.0 + 127.0 * clamped / clip).astype(np.uint8)


# -- image file I/O ---------------------------------------------------------------


def write_pgm(path: str, image: np.ndarray) -> None:
    """Write an 8-bit grayscale image as binary PGM (P5)."""
    img = np.ascontiguousarray(image, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError("PGM output needs a 2D grayscale image")
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.tobytes())


def read_pgm(path: str) -> np.ndarray:
    """Read a binary PGM (P5) file into a uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    return _parse_pgm(data)


def _parse_pgm(data: bytes) -> np.ndarray:
    buf = io.BytesIO(data)

    def token() -> bytes:
        tok = b""
        while True:
            c = buf.read(1)
            if c == b"":
                raise ValueError("truncated PGM header")
            if c == b"#":  # comment to end of line
                while c not in (b"\n", b""):
                    c = buf.read(1)
                continue
            if c.isspace():
                if tok:
                    return tok
                continue
            tok += c

    magic = token()
    if magic != b"P5":
        raise ValueError(f"not a binary PGM file (magic {magic!r})")
    width, height, maxval = int(token()), int(token()), int(token())
    if maxval != 255:
        raise ValueError(f"only 8-bit PGM supported (maxval {maxval})")
    raw = buf.read(width * height)
    if len(raw) < width * height:
        raise ValueError("truncated PGM pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width).copy()


def write_image(path: str, image: np.ndarray) -> None:
    """Write a grayscale image; dispatches on extension (.pgm native, .png via Pillow)."""
    lower = path.lower()
    if lower.endswith(".pgm"):
        write_pgm(path, image)
        return
    if lower.endswith(".png"):
        try:
            from PIL import Image
        except ImportError as exc:  # pragma: no cover - depends on extras
            raise RuntimeError("PNG output needs Pillow (pip install evfuse[png])") from exc
        Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8), mode="L").save(path)
        return
    raise ValueError(f"unsupported image extension: {path}")


def read_image(path: str) -> np.ndarray:
    lower = path.lower()
    if lower.endswith(".pgm"):
        return read_pgm(path)
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError("reading non-PGM images needs Pillow") from exc
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)
