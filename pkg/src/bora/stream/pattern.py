"""Deterministic test-pattern source: a bright disc orbiting a dark frame.

The disc center at time t is (cx + R*cos(2*pi*t/T), cy + R*sin(2*pi*t/T)),
with y growing downward in pixel space. Identical (seq, t, params) always
produce byte-identical pixels, which makes every downstream stage testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import PatternOutOfBoundsError


@dataclass(frozen=True, slots=True)
class Frame:
    seq: int
    capture_ts: int  # UTC microseconds
    width: int
    height: int
    pixels: bytes  # grayscale, len == width * height

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        if len(self.pixels) != self.width * self.height:
            raise ValueError(
                f"pixel buffer is {len(self.pixels)} bytes, "
                f"expected {self.width * self.height}")


@dataclass(frozen=True, slots=True)
class PatternParams:
    width: int = 640
    height: int = 480
    orbit_radius: int = 120
    cx: int = 320
    cy: int = 240
    period_ms: int = 4000
    sphere_radius: int = 40

    @classmethod
    def for_size(cls, width: int, height: int, period_ms: int = 4000) -> "PatternParams":
        cx, cy = width // 2, height // 2
        margin = min(cx, cy, width - cx, height - cy)
        sphere = max(1, margin // 6)
        orbit = max(0, margin - sphere - 1)
        return cls(width=width, height=height, orbit_radius=orbit, cx=cx, cy=cy,
                   period_ms=period_ms, sphere_radius=sphere)


def disc_center(t_ms: int, p: PatternParams) -> tuple[float, float]:
    phase = 2 * math.pi * (t_ms % p.period_ms) / p.period_ms
    return (p.cx + p.orbit_radius * math.cos(phase),
            p.cy + p.orbit_radius * math.sin(phase))


def generate_test_frame(seq: int, t_ms: int, p: PatternParams) -> Frame:
    """Rasterize the pattern at time t_ms; capture_ts is t_ms in microseconds."""
    margin = min(p.cx, p.cy, p.width - p.cx, p.height - p.cy)
    if p.orbit_radius + p.sphere_radius > margin:
        raise PatternOutOfBoundsError(
            f"orbit {p.orbit_radius} + radius {p.sphere_radius} exceeds margin {margin}")
    center_x, center_y = disc_center(t_ms, p)
    yy = np.arange(p.height, dtype=np.float64)[:, None] - center_y
    xx = np.arange(p.width, dtype=np.float64)[None, :] - center_x
    mask = (xx * xx + yy * yy) <= float(p.sphere_radius) ** 2
    pixels = np.where(mask, np.uint8(255), np.uint8(0))
    return Frame(seq=seq, capture_ts=t_ms * 1000, width=p.width, height=p.height,
                 pixels=pixels.tobytes())


def centroid(frame: Frame) -> tuple[float, float]:
    """Intensity-weighted centroid (x, y); the disc center estimator."""
    arr = np.frombuffer(frame.pixels, dtype=np.uint8).reshape(frame.height, frame.width)
    total = arr.sum(dtype=np.float64)
    if total == 0:
        raise ValueError("frame is all black")
    ys, xs = np.nonzero(arr)
    weights = arr[ys, xs].astype(np.float64)
    return (float((xs * weights).sum() / total), float((ys * weights).sum() / total))
