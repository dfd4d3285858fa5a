"""Single-writer, multi-reader frame ring with per-reader cursors.

The producer appends encoded frames and never blocks on consumers; each
reader tracks its own position. A reader that falls more than `backlog`
frames behind is skipped forward (latest-wins), so sequence numbers seen
by any client are strictly increasing, with gaps allowed but never
reordering.
"""

from __future__ import annotations

import asyncio
from collections import deque

from .codec import EncodedFrame


class FrameRing:
    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be > 0")
        self.capacity = capacity
        self._items: deque[tuple[EncodedFrame, bytes]] = deque()
        self._cond = asyncio.Condition()
        self._closed = False

    @property
    def newest_seq(self) -> int:
        return self._items[-1][0].seq if self._items else -1

    @property
    def oldest_seq(self) -> int:
        return self._items[0][0].seq if self._items else -1

    def __len__(self) -> int:
        return len(self._items)

    async def push(self, encoded: EncodedFrame, raw: bytes | None = None) -> None:
        async with self._cond:
            self._items.append((encoded, raw if raw is not None else encoded.to_bytes()))
            if len(self._items) > self.capacity:
                self._items.popleft()
            self._cond.notify_all()

    async def close(self) -> None:
        async with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        return self._closed

    def snapshot(self) -> list[tuple[EncodedFrame, bytes]]:
        return list(self._items)

    def last_n(self, n: int) -> list[tuple[EncodedFrame, bytes]]:
        if n <= 0:
            return []
        return list(self._items)[-n:]

    def reader(self, backlog: int, start_behind: int = 0) -> "RingReader":
        """New reader; `start_behind` frames of history are available at once."""
        newest = self.newest_seq
        last = newest - min(start_behind, len(self._items)) if newest >= 0 else -1
        return RingReader(self, backlog=backlog, last_seq=last)


class RingReader:
    def __init__(self, ring: FrameRing, backlog: int, last_seq: int):
        self._ring = ring
        self.backlog = max(1, backlog)
        self.last_seq = last_seq

    async def next(self) -> tuple[EncodedFrame, bytes] | None:
        """Next frame in order, skipping when behind; None when the ring closes."""
        ring = self._ring
        async with ring._cond:
            await ring._cond.wait_for(
                lambda: ring._closed or ring.newest_seq > self.last_seq)
            if ring._closed and ring.newest_seq <= self.last_seq:
                return None
            target = self.last_seq + 1
            # Latest-wins: cap the pending backlog at `backlog` frames.
            floor = ring.newest_seq - self.backlog + 1
            target = max(target, floor, ring.oldest_seq)
            item = ring._items[target - ring.oldest_seq]
            self.last_seq = item[0].seq
            return item
