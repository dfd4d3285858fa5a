"""Ring-buffer cache semantics against a brute-force oracle, plus pub/sub."""

import random
import threading

import pytest
from hypothesis import given, settings, strategies as st

from bora.cache import SampleCache
from bora.ingest.types import SensorSample


class NaiveStore:
    """Unbounded sorted list, truncated to the newest `capacity` entries.

    The reference model: duplicates (same timestamp) keep the last value.
    """

    def __init__(self, capacity):
        self.capacity = capacity
        self.rows: dict[str, dict[int, float]] = {}

    def put(self, s: SensorSample):
        self.rows.setdefault(s.sensor_id, {})[s.timestamp] = s.value

    def _series(self, sensor_id):
        by_ts = sorted(self.rows.get(sensor_id, {}).items())
        return by_ts[-self.capacity:]

    def recent(self, sensor_id, now_ms, window_ms):
        floor = now_ms - window_ms
        return [SensorSample(sensor_id, ts, v) for ts, v in self._series(sensor_id)
                if ts >= floor]

    def latest(self, sensor_id):
        series = self._series(sensor_id)
        if not series:
            return None
        ts, v = series[-1]
        return SensorSample(sensor_id, ts, v)


class FixedClock:
    def __init__(self, now_ms=10_000_000):
        self.now_ms = now_ms

    def __call__(self):
        return self.now_ms


class TestRingSemantics:
    def test_eviction_keeps_newest_five(self):
        cache = SampleCache(capacity=5, clock_ms=FixedClock())
        for i in range(7):
            cache.put_sample(SensorSample("s", 1000 + i, float(i)))
        got = cache.recent("s", window_ms=10_000_000)
        assert [s.timestamp for s in got] == [1002, 1003, 1004, 1005, 1006]

    def test_sample_older_than_full_ring_is_dropped(self):
        cache = SampleCache(capacity=3, clock_ms=FixedClock())
        for ts in (100, 200, 300):
            cache.put_sample(SensorSample("s", ts, 1.0))
        cache.put_sample(SensorSample("s", 50, 9.0))
        got = cache.recent("s", window_ms=10_000_000)
        assert [s.timestamp for s in got] == [100, 200, 300]

    def test_duplicate_timestamp_overwrites(self):
        cache = SampleCache(capacity=5, clock_ms=FixedClock())
        cache.put_sample(SensorSample("s", 100, 1.0))
        cache.put_sample(SensorSample("s", 100, 2.0))
        got = cache.recent("s", window_ms=10_000_000)
        assert [(s.timestamp, s.value) for s in got] == [(100, 2.0)]

    def test_out_of_order_inserts_sorted(self):
        cache = SampleCache(capacity=10, clock_ms=FixedClock())
        for ts in (500, 100, 300, 200, 400):
            cache.put_sample(SensorSample("s", ts, float(ts)))
        got = cache.recent("s", window_ms=10_000_000)
        assert [s.timestamp for s in got] == [100, 200, 300, 400, 500]

    def test_empty_cache_recent_is_empty(self):
        cache = SampleCache(clock_ms=FixedClock())
        assert cache.recent("missing", 1000) == []

    def test_window_larger_than_span_returns_all(self):
        clock = FixedClock(now_ms=2000)
        cache = SampleCache(capacity=4, clock_ms=clock)
        for ts in (1000, 1500):
            cache.put_sample(SensorSample("s", ts, 0.5))
        assert len(cache.recent("s", window_ms=10_000_000)) == 2

    def test_latest_empty_then_third(self):
        cache = SampleCache(clock_ms=FixedClock())
        assert cache.latest("s") is None
        for ts in (10, 20, 30):
            cache.put_sample(SensorSample("s", ts, float(ts)))
        assert cache.latest("s").timestamp == 30

    def test_latest_equals_last_of_recent(self):
        cache = SampleCache(capacity=8, clock_ms=FixedClock())
        rng = random.Random(3)
        for _ in range(50):
            cache.put_sample(SensorSample("s", rng.randint(1, 10_000), rng.random()))
        assert cache.latest("s") == cache.recent("s", 10_000_000)[-1]


@settings(max_examples=60, deadline=None)
@given(
    capacity=st.integers(1, 8),
    ops=st.lists(st.tuples(
        st.sampled_from(["a", "b"]),
        st.integers(1, 40),
        st.floats(allow_nan=False, allow_infinity=False, width=32),
    ), max_size=80),
    window=st.integers(1, 60),
)
def test_cache_matches_naive_oracle(capacity, ops, window):
    clock = FixedClock(now_ms=50)
    cache = SampleCache(capacity=capacity, clock_ms=clock)
    oracle = NaiveStore(capacity)
    for sensor_id, ts, value in ops:
        sample = SensorSample(sensor_id, ts, value)
        cache.put_sample(sample)
        oracle.put(sample)
    for sensor_id in ("a", "b"):
        assert cache.recent(sensor_id, window) == oracle.recent(sensor_id, 50, window)
        assert cache.latest(sensor_id) == oracle.latest(sensor_id)


class TestSubscriptions:
    def test_matching_put_delivered_once(self):
        cache = SampleCache(clock_ms=FixedClock())
        got = []
        cache.subscribe({"s1"}, got.append)
        cache.put_sample(SensorSample("s1", 100, 1.0))
        assert len(got) == 1

    def test_non_matching_put_not_delivered(self):
        cache = SampleCache(clock_ms=FixedClock())
        got = []
        cache.subscribe({"s1"}, got.append)
        cache.put_sample(SensorSample("s2", 100, 1.0))
        assert got == []

    def test_queue_delivery_when_no_callback(self):
        cache = SampleCache(clock_ms=FixedClock())
        sub = cache.subscribe({"s1"})
        cache.put_sample(SensorSample("s1", 100, 1.0))
        assert sub.queue.get_nowait().timestamp == 100

    def test_cancel_is_idempotent_and_final(self):
        cache = SampleCache(clock_ms=FixedClock())
        got = []
        sub = cache.subscribe({"s1"}, got.append)
        cache.put_sample(SensorSample("s1", 100, 1.0))
        cache.cancel(sub)
        cache.cancel(sub)
        cache.put_sample(SensorSample("s1", 200, 2.0))
        assert len(got) == 1

    def test_delivery_in_put_order_per_sensor(self):
        cache = SampleCache(clock_ms=FixedClock())
        got = []
        cache.subscribe({"s1"}, got.append)
        for ts in (100, 50, 200, 150):
            cache.put_sample(SensorSample("s1", ts, float(ts)))
        assert [s.timestamp for s in got] == [100, 50, 200, 150]

    def test_two_subscribers_both_receive_everything(self):
        cache = SampleCache(clock_ms=FixedClock())
        first, second = [], []
        cache.subscribe({"s1"}, first.append)
        cache.subscribe({"s1"}, second.append)
        for i in range(100):
            cache.put_sample(SensorSample("s1", 1 + i, float(i)))
        assert len(first) == len(second) == 100
        assert [s.timestamp for s in first] == list(range(1, 101))

    def test_concurrent_writers_no_loss_no_duplication(self):
        cache = SampleCache(clock_ms=FixedClock())
        counters = {"lo": [], "hi": []}
        cache.subscribe({"s0", "s1"}, counters["lo"].append)
        cache.subscribe({"s2", "s3"}, counters["hi"].append)
        puts_per_writer = 250
        writers = 8

        def writer(n):
            rng = random.Random(n)
            for i in range(puts_per_writer):
                sensor = f"s{rng.randint(0, 3)}"
                cache.put_sample(SensorSample(sensor, 1 + n * puts_per_writer + i,
                                              float(i)))

        threads = [threading.Thread(target=writer, args=(n,)) for n in range(writers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        delivered = len(counters["lo"]) + len(counters["hi"])
        assert delivered == writers * puts_per_writer
