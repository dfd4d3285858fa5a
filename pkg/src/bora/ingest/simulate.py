"""Deterministic simulated source for tests and demos.

Values are computed at nominal tick times (k * tick_ms), not wall-clock
times, so two runs with the same seed produce bit-identical streams no
matter how the scheduler jitters. Sample timestamps still carry wall time.
"""

from __future__ import annotations

import math
import random
import threading
import time
from typing import Callable, Iterable

from .types import SensorSample, SimProfile

MIN_TICK_MS = 10


def _walk_rng(profile: SimProfile, sensor_id: str) -> random.Random:
    return random.Random(f"{profile.seed}:{sensor_id}")


def waveform_value(profile: SimProfile, sensor_id: str, t_ms: int,
                   rng: random.Random | None = None) -> float:
    """Value of the waveform at nominal time t_ms (phase zero at t=0)."""
    if profile.waveform == "sine":
        return profile.amplitude * math.sin(2 * math.pi * t_ms / profile.period_ms)
    if profile.waveform == "ramp":
        return profile.amplitude * ((t_ms % profile.period_ms) / profile.period_ms)
    # random_walk: one uniform step per tick, scale keyed by (seed, sensor).
    if rng is None:
        raise ValueError("random_walk requires the per-sensor rng state")
    return rng.uniform(-profile.amplitude, profile.amplitude)


class SimulatedSource:
    """Emits one sample per sensor per tick until stop() is called.

    Runs on its own daemon thread so it works the same under a plain script,
    pytest, and the asyncio server (the sink must accept concurrent calls).
    """

    def __init__(self, profile: SimProfile, sensors: Iterable[str], tick_ms: int,
                 sink: Callable[[SensorSample], None],
                 clock_ms: Callable[[], int] | None = None):
        if tick_ms < MIN_TICK_MS:
            raise ValueError(f"tick_ms must be >= {MIN_TICK_MS}")
        self.profile = profile
        self.sensors = tuple(sensors)
        self.tick_ms = tick_ms
        self.sink = sink
        self.clock_ms = clock_ms or (lambda: time.time_ns() // 1_000_000)
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._walk_state = {
            s: (_walk_rng(profile, s), 0.0) for s in self.sensors
        }

    def start(self) -> "SimulatedSource":
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name=f"sim:{self.profile.waveform}")
        self._thread.start()
        return self

    def stop(self) -> None:
        """Halts within one tick; idempotent."""
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2 * self.tick_ms / 1000 + 1)
            self._thread = None

    def _emit_tick(self, k: int) -> None:
        t_nominal = k * self.tick_ms
        now = self.clock_ms()
        for sensor_id in self.sensors:
            if self.profile.waveform == "random_walk":
                rng, level = self._walk_state[sensor_id]
                level += waveform_value(self.profile, sensor_id, t_nominal, rng)
                self._walk_state[sensor_id] = (rng, level)
                value = level
            else:
                value = waveform_value(self.profile, sensor_id, t_nominal)
            self.sink(SensorSample(sensor_id, now, value))

    def _run(self) -> None:
        start = time.monotonic()
        k = 0
        while not self._stop.is_set():
            self._emit_tick(k)
            k += 1
            deadline = start + k * self.tick_ms / 1000
            delay = deadline - time.monotonic()
            if delay > 0 and self._stop.wait(delay):
                return

    def ticks(self, n: int) -> list[SensorSample]:
        """Synchronously produce n ticks of samples (no thread, no sink)."""
        out: list[SensorSample] = []
        collected = out.append
        sink, self.sink = self.sink, collected
        try:
            for k in range(n):
                self._emit_tick(k)
        finally:
            self.sink = sink
        return out


def run_simulated_source(profile: SimProfile, sensors: Iterable[str], tick_ms: int,
                         sink: Callable[[SensorSample], None]) -> SimulatedSource:
    return SimulatedSource(profile, sensors, tick_ms, sink).start()
