"""Segment construction and playlist bookkeeping for the segmented transport.

A segment packs contiguous encoded frames covering at least the target
duration (cut at the first frame boundary past it, default 3000 ms). The
playlist retains at most `wrap` consecutive segment indices; clients fetch
the manifest, then the listed segment blobs.

Manifest format (text):
    #BORAPL v1
    #TARGET:<ms>
    #MEDIA-SEQ:<n>
    segment/<index>        (one line per retained segment)

Segment blob format: frame count u32 big-endian, then the concatenated
encoded frames.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from statistics import median
from typing import Sequence

from ..errors import ContiguityError, NonMonotonicSegmentError
from .codec import EncodedFrame, HEADER_LEN, parse_header

DEFAULT_SEGMENT_MS = 3000
DEFAULT_WRAP = 10
_FALLBACK_INTERVAL_US = 33_333  # 30 fps, used when one frame gives no cadence


@dataclass(frozen=True, slots=True)
class Segment:
    index: int
    duration_ms: int
    frames: tuple[EncodedFrame, ...]

    def blob(self) -> bytes:
        parts = [struct.pack(">I", len(self.frames))]
        parts.extend(f.to_bytes() for f in self.frames)
        return b"".join(parts)


def nominal_interval_us(frames: Sequence[EncodedFrame]) -> int:
    if len(frames) < 2:
        return _FALLBACK_INTERVAL_US
    deltas = [b.capture_ts - a.capture_ts for a, b in zip(frames, frames[1:])]
    return max(1, int(median(deltas)))


def frames_span_ms(frames: Sequence[EncodedFrame]) -> float:
    """Covered frame time: capture span plus one nominal frame period."""
    if not frames:
        return 0.0
    interval = nominal_interval_us(frames)
    return (frames[-1].capture_ts - frames[0].capture_ts + interval) / 1000.0


def build_segment(frames: Sequence[EncodedFrame], target_duration_ms: int = DEFAULT_SEGMENT_MS,
                  index: int = 0) -> Segment:
    """Cut a segment off the front of `frames` at the boundary past target.

    Callers keep any leftover frames for the next segment. If the input
    covers less than the target, everything is consumed.
    """
    if not frames:
        raise ContiguityError("no frames")
    for a, b in zip(frames, frames[1:]):
        if b.seq != a.seq + 1:
            raise ContiguityError(f"gap between seq {a.seq} and {b.seq}")
    interval = nominal_interval_us(frames)
    count = len(frames)
    for k in range(1, len(frames) + 1):
        span_us = frames[k - 1].capture_ts - frames[0].capture_ts + interval
        if span_us >= target_duration_ms * 1000:
            count = k
            break
    taken = tuple(frames[:count])
    duration = round((taken[-1].capture_ts - taken[0].capture_ts + interval) / 1000)
    return Segment(index=index, duration_ms=duration, frames=taken)


def split_blob(blob: bytes) -> list[EncodedFrame]:
    if len(blob) < 4:
        raise ContiguityError("segment blob shorter than its count field")
    (count,) = struct.unpack_from(">I", blob)
    frames = []
    offset = 4
    for _ in range(count):
        header = parse_header_at(blob, offset)
        frames.append(header)
        offset += HEADER_LEN + len(header.payload)
    if offset != len(blob):
        raise ContiguityError("trailing bytes after last frame in segment blob")
    return frames


def parse_header_at(blob: bytes, offset: int) -> EncodedFrame:
    # parse_header wants an exact frame; read the payload length first.
    if len(blob) - offset < HEADER_LEN:
        raise ContiguityError("truncated frame header inside segment blob")
    (payload_len,) = struct.unpack_from(">I", blob, offset + HEADER_LEN - 4)
    return parse_header(blob[offset:offset + HEADER_LEN + payload_len])


# -- playlist ------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Playlist:
    target_duration_ms: int = DEFAULT_SEGMENT_MS
    wrap: int = DEFAULT_WRAP
    entries: tuple[int, ...] = ()

    @property
    def media_sequence(self) -> int:
        """Index of the oldest retained entry (1 before the first add)."""
        return self.entries[0] if self.entries else 1

    @property
    def newest(self) -> int:
        return self.entries[-1] if self.entries else 0


def playlist_add(pl: Playlist, seg: Segment | int) -> Playlist:
    index = seg.index if isinstance(seg, Segment) else int(seg)
    if index != pl.newest + 1:
        raise NonMonotonicSegmentError(
            f"segment {index} after newest {pl.newest}")
    entries = pl.entries + (index,)
    if len(entries) > pl.wrap:
        entries = entries[len(entries) - pl.wrap:]
    return replace(pl, entries=entries)


def render_manifest(pl: Playlist, prefix: str = "segment/") -> str:
    lines = [
        "#BORAPL v1",
        f"#TARGET:{pl.target_duration_ms}",
        f"#MEDIA-SEQ:{pl.media_sequence}",
    ]
    lines.extend(f"{prefix}{index}" for index in pl.entries)
    return "\n".join(lines) + "\n"


def parse_manifest(text: str) -> Playlist:
    lines = [line for line in text.splitlines() if line.strip()]
    if len(lines) < 3 or lines[0] != "#BORAPL v1":
        raise ValueError("not a BORAPL manifest")
    target = int(lines[1].removeprefix("#TARGET:"))
    entries = tuple(int(line.rsplit("/", 1)[-1]) for line in lines[3:])
    return Playlist(target_duration_ms=target, wrap=max(DEFAULT_WRAP, len(entries)),
                    entries=entries)
