"""SSIM-based subtitle change detection over pre-cropped grayscale frames.

SSIM here is single-scale with uniform 8x8 windows at stride 1 and the
usual stabilizers C1 = (0.01 * 255)^2, C2 = (0.03 * 255)^2, averaged over
all windows. 8x8 uniform windows (rather than larger Gaussian ones) suit
the small crops subtitle regions produce and keep outputs reproducible.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from .errors import DimensionMismatch, RegionTooSmall

WINDOW = 8
C1 = (0.01 * 255.0) ** 2
C2 = (0.03 * 255.0) ** 2
DEFAULT_THRESHOLD = 0.8


class FrameRegion:
    """A grayscale frame crop with intensities in [0, 255]."""

    __slots__ = ("pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D intensity matrix, got shape {arr.shape}")
        if arr.shape[0] < WINDOW or arr.shape[1] < WINDOW:
            raise RegionTooSmall(
                f"region {arr.shape[0]}x{arr.shape[1]} is smaller than the "
                f"{WINDOW}x{WINDOW} SSIM window"
            )
        if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255:
            raise ValueError("intensities must be finite values in [0, 255]")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    def __setattr__(self, name, value):
        raise AttributeError("FrameRegion is immutable")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _window_sums(x: np.ndarray) -> np.ndarray:
    """Sum of every WINDOW x WINDOW patch via an integral image."""
    s = np.zeros((x.shape[0] + 1, x.shape[1] + 1))
    np.cumsum(np.cumsum(x, axis=0), axis=1, out=s[1:, 1:])
    w = WINDOW
    return s[w:, w:] - s[:-w, w:] - s[w:, :-w] + s[:-w, :-w]


def ssim(a: FrameRegion, b: FrameRegion) -> float:
    """Mean structural similarity between two equally-sized regions."""
    if (a.height, a.width) != (b.height, b.width):
        raise DimensionMismatch(
            f"regions differ: {a.height}x{a.width} vs {b.height}x{b.width}"
        )
    n = float(WINDOW * WINDOW)
    pa, pb = a.pixels, b.pixels
    mu_a = _window_sums(pa) / n
    mu_b = _window_sums(pb) / n
    # Population (ddof = 0) variance and covariance per window.
    var_a = _window_sums(pa * pa) / n - mu_a * mu_a
    var_b = _window_sums(pb * pb) / n - mu_b * mu_b
    cov = _window_sums(pa * pb) / n - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)
    den = (mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class SubtitleSpan:
    """Inclusive frame-index span of one steady subtitle."""

    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise ValueError(f"span start exceeds end: {self}")


def detect_spans(
    frames: Sequence[FrameRegion], threshold: float = DEFAULT_THRESHOLD
) -> list[SubtitleSpan]:
    """Segment a frame sequence at SSIM drops below ``threshold``.

    Each consecutive pair is scored; a pair below the threshold closes the
    current span at the earlier frame and opens a new one at the later
    frame. The result always partitions ``[0, len(frames) - 1]``.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    frames = list(frames)
    if not frames:
        raise ValueError("frames must be nonempty")
    spans = []
    start = 0
    for t in range(1, len(frames)):
        if ssim(frames[t - 1], frames[t]) < threshold:
            spans.append(SubtitleSpan(start, t - 1))
            start = t
    spans.append(SubtitleSpan(start, len(frames) - 1))
    return spans


def load_frames(directory: str | os.PathLike) -> list[FrameRegion]:
    """Load a directory of PGM frames named by integer frame index."""
    entries = []
    for name in os.listdir(directory):
        stem, ext = os.path.splitext(name)
        if ext.lower() != ".pgm":
            continue
        try:
            index = int(stem)
        except ValueError:
            raise ValueError(f"frame file name is not an integer index: {name}") from None
        entries.append((index, name))
    if not entries:
        raise ValueError(f"no .pgm frames found in {directory}")
    entries.sort()
    frames = []
    for _, name in entries:
        with Image.open(os.path.join(directory, name)) as img:
            frames.append(FrameRegion(np.asarray(img, dtype=np.float64)))
    return frames
