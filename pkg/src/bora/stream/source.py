"""Per-stream pipeline: pattern producer, live segmenter, client fan-out.

One producer task rasterizes and encodes frames at the configured rate and
writes them into the frame ring (the in-process stand-in for a camera
source endpoint). A segmenter task cuts the ring into playlist segments
for the segmented transport. Push clients get a per-client transcode (the
encode-cost knob models that); direct clients get the source bytes as-is.
"""

from __future__ import annotations

import asyncio
import logging
import time
import uuid
from dataclasses import dataclass, field

from ..errors import SegmentGoneError, SessionUnknownError, UnknownSegmentError
from . import clock
from .codec import EncodedFrame, decode_frame, encode_frame
from .pattern import PatternParams, generate_test_frame
from .ring import FrameRing, RingReader
from .segments import (
    DEFAULT_SEGMENT_MS,
    DEFAULT_WRAP,
    Playlist,
    build_segment,
    frames_span_ms,
    playlist_add,
    render_manifest,
)

log = logging.getLogger(__name__)

PUSH_BACKLOG = 8
DIRECT_BACKLOG = 2
SESSION_TTL_S = 60.0


@dataclass(frozen=True, slots=True)
class StreamConfig:
    id: str
    width: int = 640
    height: int = 480
    fps: int = 30
    encode_delay_ms: float = 0.0
    segment_ms: int = DEFAULT_SEGMENT_MS
    wrap: int = DEFAULT_WRAP
    period_ms: int = 4000
    ring_capacity: int | None = None

    def capacity(self) -> int:
        if self.ring_capacity is not None:
            return self.ring_capacity
        # Retain the playlist window's worth of frames.
        return max(64, int(self.fps * (self.segment_ms / 1000) * self.wrap))


@dataclass(slots=True)
class DirectSession:
    session_id: str
    stream_id: str
    created_monotonic: float = field(default_factory=time.monotonic)

    def expired(self) -> bool:
        return time.monotonic() - self.created_monotonic > SESSION_TTL_S


class StreamWorker:
    """Owns the ring, playlist state, and background tasks for one stream."""

    def __init__(self, cfg: StreamConfig):
        self.cfg = cfg
        self.params = PatternParams.for_size(cfg.width, cfg.height, cfg.period_ms)
        self.ring = FrameRing(cfg.capacity())
        self.playlist = Playlist(target_duration_ms=cfg.segment_ms, wrap=cfg.wrap)
        self._segments: dict[int, bytes] = {}
        self._tasks: list[asyncio.Task] = []

    # -- lifecycle --------------------------------------------------------

    def start(self) -> None:
        loop = asyncio.get_running_loop()
        self._tasks = [
            loop.create_task(self._produce(), name=f"stream:{self.cfg.id}:produce"),
            loop.create_task(self._segment(), name=f"stream:{self.cfg.id}:segment"),
        ]

    async def stop(self) -> None:
        for task in self._tasks:
            task.cancel()
        for task in self._tasks:
            try:
                await task
            except asyncio.CancelledError:
                pass
        self._tasks = []
        await self.ring.close()

    async def _produce(self) -> None:
        interval_us = 1_000_000 / self.cfg.fps
        start_us = clock.now_us()
        seq = 0
        while True:
            target_us = start_us + int(seq * interval_us)
            delay = (target_us - clock.now_us()) / 1_000_000
            if delay > 0:
                await asyncio.sleep(delay)
            frame = generate_test_frame(seq, target_us // 1000, self.params)
            encoded = encode_frame(frame)
            await self.ring.push(encoded, encoded.to_bytes())
            seq += 1

    async def _segment(self) -> None:
        # The segmenter must never drop frames, so its backlog is the ring.
        reader = self.ring.reader(backlog=self.ring.capacity)
        buffer: list[EncodedFrame] = []
        next_index = 1
        while True:
            item = await reader.next()
            if item is None:
                return
            buffer.append(item[0])
            if frames_span_ms(buffer) >= self.cfg.segment_ms:
                seg = build_segment(buffer, self.cfg.segment_ms, index=next_index)
                buffer = buffer[len(seg.frames):]
                self.playlist = playlist_add(self.playlist, seg)
                self._segments[seg.index] = seg.blob()
                floor = self.playlist.media_sequence
                for idx in [i for i in self._segments if i < floor]:
                    del self._segments[idx]
                next_index += 1

    # -- segmented transport ----------------------------------------------

    def manifest(self) -> str:
        return render_manifest(self.playlist)

    def segment_blob(self, index: int) -> bytes:
        """Blob for a retained segment; gone vs never-published is distinct."""
        blob = self._segments.get(index)
        if blob is not None:
            return blob
        if 1 <= index <= self.playlist.newest:
            raise SegmentGoneError(f"segment {index} wrapped out of retention")
        raise UnknownSegmentError(f"segment {index} was never published")

    # -- push transport -----------------------------------------------------

    def push_reader(self) -> RingReader:
        return self.ring.reader(backlog=PUSH_BACKLOG, start_behind=0)

    async def transcode(self, encoded: EncodedFrame) -> bytes:
        """Per-client re-encode, paying the configured per-frame cost."""
        frame = decode_frame(encoded)
        out = encode_frame(frame)
        if self.cfg.encode_delay_ms > 0:
            await asyncio.sleep(self.cfg.encode_delay_ms / 1000)
        return out.to_bytes()

    async def prime_push_client(self) -> bytes | None:
        """Start-up cost of a push client: transcode the current backlog.

        Models a transcoder that begins at connect time and must work
        through its priming window before emitting; returns the newest
        primed frame (the first bytes the client sees).
        """
        window = self.ring.last_n(PUSH_BACKLOG)
        latest: bytes | None = None
        for encoded, _raw in window:
            latest = await self.transcode(encoded)
        return latest

    def direct_reader(self) -> RingReader:
        return self.ring.reader(backlog=DIRECT_BACKLOG, start_behind=1)

    # -- recording support ---------------------------------------------------

    def frames_between(self, from_ts_ms: int, to_ts_ms: int) -> list[tuple[EncodedFrame, bytes]]:
        lo, hi = from_ts_ms * 1000, to_ts_ms * 1000
        return [(ef, raw) for ef, raw in self.ring.snapshot()
                if lo <= ef.capture_ts < hi]

    def retained_range_ms(self) -> tuple[int, int] | None:
        snapshot = self.ring.snapshot()
        if not snapshot:
            return None
        return (snapshot[0][0].capture_ts // 1000, snapshot[-1][0].capture_ts // 1000)


class SignalBroker:
    """Direct-transport signaling: offers resolve to single-use sessions."""

    def __init__(self):
        self._sessions: dict[str, DirectSession] = {}

    def offer(self, stream_id: str) -> DirectSession:
        self._gc()
        session = DirectSession(session_id=uuid.uuid4().hex, stream_id=stream_id)
        self._sessions[session.session_id] = session
        return session

    def claim(self, session_id: str) -> DirectSession:
        self._gc()
        try:
            return self._sessions.pop(session_id)
        except KeyError:
            raise SessionUnknownError(session_id) from None

    def _gc(self) -> None:
        for sid in [s for s, sess in self._sessions.items() if sess.expired()]:
            del self._sessions[sid]
