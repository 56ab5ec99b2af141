"""Cross-modal alignment checking between event frames and RGB frames.

The two modalities never look alike pixel-for-pixel, so the comparison runs
on edge maps by default: both images are reduced to Canny edges, lightly
blurred so nearby-but-not-identical contours still overlap, and the central
patch of one is swept over the other under zero-normalized cross-correlation.
The offset of the correlation peak (refined to subpixel) is the measured
misalignment; its magnitude is the deviation reported to calibration checks.

All images are 2D float or uint8 arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage


class AlignmentError(Exception):
    pass


class ZeroVariance(AlignmentError):
    """A correlation patch is constant, so its ZNCC is undefined."""


class AllOffsetsUnusable(AlignmentError):
    """Every candidate offset had a constant patch: nothing to align on."""


VAR_EPS = 1e-12

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, kernel truncated at 3 sigma, reflected edges."""
    img = np.asarray(image, dtype=np.float64)
    if sigma <= 0:
        return img.copy()
    radius = int(math.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (xs / sigma) ** 2)
    kernel /= kernel.sum()
    out = ndimage.convolve1d(img, kernel, axis=0, mode="reflect")
    return ndimage.convolve1d(out, kernel, axis=1, mode="reflect")


def sobel_gradients(image: np.ndarray) -> tuple:
    img = np.asarray(image, dtype=np.float64)
    gx = ndimage.correlate(img, SOBEL_X, mode="reflect")
    gy = ndimage.correlate(img, SOBEL_Y, mode="reflect")
    return gx, gy


def canny(
    image: np.ndarray,
    sigma: float = 1.4,
    low_frac: float = 0.1,
    high_frac: float = 0.3,
) -> np.ndarray:
    """Binary edge map: blur, Sobel, non-maximum suppression, hysteresis.

    Thresholds are fractions of the peak gradient magnitude, which makes the
    result invariant to linear intensity scaling (and to inversion).
    """
    if not 0.0 <= low_frac <= high_frac:
        raise ValueError("need 0 <= low_frac <= high_frac")
    img = gaussian_blur(image, sigma)
    gx, gy = sobel_gradients(img)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak <= 0.0:
        return np.zeros(img.shape, dtype=bool)

    # Quantize gradient direction to 4 bins: 0, 45, 90, 135 degrees.
    angle = np.mod(np.arctan2(gy, gx), math.pi)
    sector = ((angle + math.pi / 8) // (math.pi / 4)).astype(np.int64) % 4

    padded = np.pad(mag, 1)
    center = padded[1:-1, 1:-1]
    # neighbor pairs per sector, in (dy, dx) steps on the padded array
    steps = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dy, dx) in steps.items():
        fwd = padded[1 + dy : padded.shape[0] - 1 + dy, 1 + dx : padded.shape[1] - 1 + dx]
        bwd = padded[1 - dy : padded.shape[0] - 1 - dy, 1 - dx : padded.shape[1] - 1 - dx]
        keep |= (sector == s) & (center >= fwd) & (center >= bwd)
    thin = np.where(keep, mag, 0.0)

    strong = thin >= high_frac * peak
    weak = thin >= low_frac * peak
    if not strong.any():
        return np.zeros(img.shape, dtype=bool)
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    kept = np.unique(labels[strong])
    return np.isin(labels, kept[kept != 0])


@dataclass(frozen=True)
class ZnccResult:
    """Outcome of a correlation sweep: integer peak plus subpixel refinement."""

    dx: float
    dy: float
    score: float
    deviation: float

    def to_json(self) -> dict:
        return {
            "dx": self.dx,
            "dy": self.dy,
            "score": self.score,
            "deviation_px": self.deviation,
        }


def zncc_score(template: np.ndarray, image: np.ndarray, dx: int = 0, dy: int = 0) -> float:
    """ZNCC between ``template`` and the same-size patch of ``image`` whose
    center sits ``(dx, dy)`` away from the image center."""
    tpl = np.asarray(template, dtype=np.float64)
    img = np.asarray(image, dtype=np.float64)
    th, tw = tpl.shape
    ih, iw = img.shape
    x0 = (iw - tw) // 2 + dx
    y0 = (ih - th) // 2 + dy
    if x0 < 0 or y0 < 0 or x0 + tw > iw or y0 + th > ih:
        raise ValueError(f"offset ({dx}, {dy}) pushes the patch outside the image")
    patch = img[y0 : y0 + th, x0 : x0 + tw]

    t0 = tpl - tpl.mean()
    p0 = patch - patch.mean()
    tv = float((t0 * t0).sum())
    pv = float((p0 * p0).sum())
    if tv <= VAR_EPS or pv <= VAR_EPS:
        raise ZeroVariance("constant patch under correlation")
    return float((t0 * p0).sum() / math.sqrt(tv * pv))


def _subpixel(s_minus: float, s0: float, s_plus: float) -> float:
    """Peak offset of the parabola through three samples, clamped to +/-0.5."""
    denom = s_minus - 2.0 * s0 + s_plus
    if denom >= 0.0:  # flat or not a maximum; stay on the integer peak
        return 0.0
    delta = 0.5 * (s_minus - s_plus) / denom
    return max(-0.5, min(0.5, delta))


def match_deviation(
    reference: np.ndarray,
    target: np.ndarray,
    search_radius: int = 16,
    margin: int = 32,
    smooth_sigma: float = 1.0,
) -> ZnccResult:
    """Locate ``reference``'s central patch inside ``target``.

    The central region of ``reference`` (inset by ``margin`` on every side) is
    correlated against ``target`` at every integer offset within
    ``search_radius``. Both inputs are blurred first so that binary edge maps
    gain correlation basin width. Returns the best offset, its score, and the
    Euclidean deviation in pixels.
    """
    ref = np.asarray(reference, dtype=np.float64)
    tgt = np.asarray(target, dtype=np.float64)
    if ref.shape != tgt.shape:
        raise ValueError("reference and target must have the same shape")
    if margin < search_radius:
        raise ValueError("margin must be >= search_radius")
    h, w = ref.shape
    if h <= 2 * margin or w <= 2 * margin:
        raise ValueError(f"image {w}x{h} too small for margin {margin}")

    if smooth_sigma > 0:
        ref = gaussian_blur(ref, smooth_sigma)
        tgt = gaussian_blur(tgt, smooth_sigma)
    template = ref[margin : h - margin, margin : w - margin]

    r = search_radius
    size = 2 * r + 1
    scores = np.full((size, size), np.nan)
    for iy, dy in enumerate(range(-r, r + 1)):
        for ix, dx in enumerate(range(-r, r + 1)):
            try:
                scores[iy, ix] = zncc_score(template, tgt, dx, dy)
            except ZeroVariance:
                continue
    if np.isnan(scores).all():
        raise AllOffsetsUnusable("every candidate patch was constant")

    filled = np.where(np.isnan(scores), -np.inf, scores)
    best = filled.max()
    ties = np.argwhere(filled == best)
    # deterministic tie-break: smallest |offset|, then lexicographic (dy, dx)
    offsets = ties - r
    order = np.lexsort((offsets[:, 1], offsets[:, 0], (offsets**2).sum(axis=1)))
    iy, ix = ties[order[0]]
    dy, dx = int(iy) - r, int(ix) - r

    sub_x, sub_y = 0.0, 0.0
    if 0 < ix < size - 1 and np.isfinite(filled[iy, ix - 1]) and np.isfinite(filled[iy, ix + 1]):
        sub_x = _subpixel(filled[iy, ix - 1], filled[iy, ix], filled[iy, ix + 1])
    if 0 < iy < size - 1 and np.isfinite(filled[iy - 1, ix]) and np.isfinite(filled[iy + 1, ix]):
        sub_y = _subpixel(filled[iy - 1, ix], filled[iy, ix], filled[iy + 1, ix])

    fx, fy = dx + sub_x, dy + sub_y
    return ZnccResult(dx=fx, dy=fy, score=float(best), deviation=math.hypot(fx, fy))


def edge_deviation(
    reference: np.ndarray,
    target: np.ndarray,
    search_radius: int = 16,
    margin: int = 32,
    canny_sigma: float = 1.4,
    low_frac: float = 0.1,
    high_frac: float = 0.3,
    smooth_sigma: float = 1.0,
) -> ZnccResult:
    """Edge-domain alignment check: Canny both inputs, then correlate."""
    ea = canny(reference, canny_sigma, low_frac, high_frac).astype(np.float64)
    eb = canny(target, canny_sigma, low_frac, high_frac).astype(np.float64)
    return match_deviation(ea, eb, search_radius, margin, smooth_sigma)


def event_frame_deviation(
    event_activity: np.ndarray,
    rgb_image: np.ndarray,
    search_radius: int = 16,
    margin: int = 32,
    canny_sigma: float = 1.4,
    low_frac: float = 0.1,
    high_frac: float = 0.3,
    smooth_sigma: float = 2.0,
) -> ZnccResult:
    """Alignment between an accumulated event frame and an RGB frame.

    Events fire where intensity edges move, so the accumulated activity map
    *is* already edge evidence — running an edge detector over it would split
    every smeared band into two contours and bias the correlation. Only the
    RGB side goes through Canny; the event side contributes its absolute
    activity directly, and both are smoothed so slightly different edge
    geometry still correlates by mass.
    """
    activity = np.abs(np.asarray(event_activity, dtype=np.float64))
    edges = canny(rgb_image, canny_sigma, low_frac, high_frac).astype(np.float64)
    return match_deviation(activity, edges, search_radius, margin, smooth_sigma)
