"""In-memory recent-data store.

Per-sensor ring buffers hold the newest `capacity` samples in timestamp
order; windowed reads and update subscriptions fan the data out to
display sessions and analysis clients. Fully thread-safe: many writers,
many readers. Subscription callbacks never run while the store lock is
held, so a slow consumer cannot block ingestion.
"""

from __future__ import annotations

import bisect
import itertools
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .ingest.types import SensorSample

DEFAULT_CAPACITY = 4096


def _wall_ms() -> int:
    return time.time_ns() // 1_000_000


class RingSeries:
    """Samples for one sensor, oldest to newest, at most `capacity` kept."""

    __slots__ = ("sensor_id", "capacity", "_timestamps", "_samples")

    def __init__(self, sensor_id: str, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be > 0")
        self.sensor_id = sensor_id
        self.capacity = capacity
        self._timestamps: list[int] = []
        self._samples: list[SensorSample] = []

    def insert(self, sample: SensorSample) -> None:
        ts = self._timestamps
        pos = bisect.bisect_left(ts, sample.timestamp)
        if pos < len(ts) and ts[pos] == sample.timestamp:
            # Duplicate (sensor, timestamp): last received value wins.
            self._samples[pos] = sample
            return
        if len(ts) >= self.capacity:
            if pos == 0:
                # Older than everything retained; the ring stays unchanged.
                return
            del ts[0]
            del self._samples[0]
            pos -= 1
        ts.insert(pos, sample.timestamp)
        self._samples.insert(pos, sample)

    def window(self, floor_ts: int) -> list[SensorSample]:
        pos = bisect.bisect_left(self._timestamps, floor_ts)
        return self._samples[pos:]

    def newest(self) -> SensorSample | None:
        return self._samples[-1] if self._samples else None

    def __len__(self) -> int:
        return len(self._samples)


@dataclass
class Subscription:
    id: int
    sensor_ids: frozenset[str]
    callback: Callable[[SensorSample], None] | None = None
    queue: "queue.SimpleQueue[SensorSample] | None" = None
    cancelled: bool = False
    _pending: "list[SensorSample]" = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock)


class SampleCache:
    def __init__(self, capacity: int = DEFAULT_CAPACITY,
                 clock_ms: Callable[[], int] = _wall_ms):
        self.capacity = capacity
        self.clock_ms = clock_ms
        self._series: dict[str, RingSeries] = {}
        self._subs: dict[int, Subscription] = {}
        self._lock = threading.RLock()
        self._sub_ids = itertools.count(1)

    # -- writes ----------------------------------------------------------

    def put_sample(self, sample: SensorSample) -> None:
        """Insert in timestamp order (ring auto-created) and notify subscribers.

        Every put is delivered exactly once to each matching live
        subscription, in put order per sensor.
        """
        with self._lock:
            series = self._series.get(sample.sensor_id)
            if series is None:
                series = RingSeries(sample.sensor_id, self.capacity)
                self._series[sample.sensor_id] = series
            series.insert(sample)
            matching = []
            for sub in self._subs.values():
                if sample.sensor_id in sub.sensor_ids and not sub.cancelled:
                    sub._pending.append(sample)
                    matching.append(sub)
        for sub in matching:
            self._drain(sub)

    def _drain(self, sub: Subscription) -> None:
        # Delivery order per subscription is fixed by the append under the
        # store lock; the sub lock serializes consumers. Re-check after
        # release so a racing append is never stranded.
        while True:
            if not sub._lock.acquire(blocking=False):
                return
            try:
                while True:
                    with self._lock:
                        if not sub._pending:
                            break
                        sample = sub._pending.pop(0)
                        if sub.cancelled:
                            continue
                    if sub.queue is not None:
                        sub.queue.put(sample)
                    if sub.callback is not None:
                        sub.callback(sample)
            finally:
                sub._lock.release()
            with self._lock:
                if not sub._pending or sub.cancelled:
                    return

    # -- reads -----------------------------------------------------------

    def recent(self, sensor_id: str, window_ms: int) -> list[SensorSample]:
        """All cached samples with timestamp >= now - window_ms, oldest first."""
        if window_ms <= 0:
            raise ValueError("window_ms must be > 0")
        floor_ts = self.clock_ms() - window_ms
        with self._lock:
            series = self._series.get(sensor_id)
            if series is None:
                return []
            return series.window(floor_ts)

    def latest(self, sensor_id: str) -> SensorSample | None:
        with self._lock:
            series = self._series.get(sensor_id)
            return series.newest() if series else None

    def sensors(self) -> list[str]:
        with self._lock:
            return sorted(self._series)

    def series_len(self, sensor_id: str) -> int:
        with self._lock:
            series = self._series.get(sensor_id)
            return len(series) if series else 0

    # -- subscriptions -----------------------------------------------------

    def subscribe(self, sensor_ids: Iterable[str],
                  delivery: Callable[[SensorSample], None] | None = None) -> Subscription:
        """Deliver every matching put, via callback or the built-in queue."""
        ids = frozenset(sensor_ids)
        if not ids:
            raise ValueError("sensor_ids must be nonempty")
        sub = Subscription(id=next(self._sub_ids), sensor_ids=ids, callback=delivery,
                           queue=None if delivery else queue.SimpleQueue())
        with self._lock:
            self._subs[sub.id] = sub
        return sub

    def cancel(self, sub: Subscription) -> None:
        """Idempotent; no deliveries occur after cancel returns."""
        with self._lock:
            sub.cancelled = True
            sub._pending.clear()
            self._subs.pop(sub.id, None)
        # Wait out any in-flight delivery so "no further deliveries" holds.
        with sub._lock:
            pass
