"""Display sessions: one WebSocket per operator page, data + spec events.

Each session owns an ordered message queue; the tick task pushes delta
data messages (only sensors with new samples since the session's last
tick) and spec changes push spec events. The writer drops any data
message older than the last spec revision it sent, so a client never
renders data against a stale binding.
"""

from __future__ import annotations

import asyncio
import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable

from ..cache import SampleCache
from ..config import DashboardSpec, SensorBinding, spec_to_obj

log = logging.getLogger(__name__)


def bound_sensors(spec: DashboardSpec) -> set[str]:
    out: set[str] = set()
    for widget in spec.widgets:
        if isinstance(widget.binding, SensorBinding):
            out.update(widget.binding.sensor_ids)
    return out


def spec_message(spec: DashboardSpec) -> dict:
    return {"type": "spec", "revision": spec.revision, "spec": spec_to_obj(spec)}


@dataclass
class DisplaySession:
    id: int
    queue: "asyncio.Queue[dict]" = field(default_factory=asyncio.Queue)
    last_sample_ts: dict[str, int] = field(default_factory=dict)
    last_sent_revision: int = -1
    closed: bool = False


class SessionManager:
    def __init__(self, cache: SampleCache):
        self.cache = cache
        self._sessions: dict[int, DisplaySession] = {}
        self._ids = itertools.count(1)

    def register(self) -> DisplaySession:
        session = DisplaySession(id=next(self._ids))
        self._sessions[session.id] = session
        return session

    def unregister(self, session: DisplaySession) -> None:
        session.closed = True
        self._sessions.pop(session.id, None)

    def __len__(self) -> int:
        return len(self._sessions)

    def sessions(self) -> list[DisplaySession]:
        return list(self._sessions.values())

    def broadcast_spec(self, spec: DashboardSpec) -> None:
        message = spec_message(spec)
        for session in self._sessions.values():
            session.queue.put_nowait(message)

    def tick(self, spec: DashboardSpec) -> int:
        """One fan-out pass; returns how many sessions got a data message."""
        sensors = bound_sensors(spec)
        sent = 0
        for session in self._sessions.values():
            samples = {}
            for sensor_id in sensors:
                latest = self.cache.latest(sensor_id)
                if latest is None:
                    continue
                if latest.timestamp > session.last_sample_ts.get(sensor_id, 0):
                    samples[sensor_id] = [latest.timestamp, latest.value]
                    session.last_sample_ts[sensor_id] = latest.timestamp
            if samples:  # empty ticks are suppressed
                session.queue.put_nowait(
                    {"type": "data", "revision": spec.revision, "samples": samples})
                sent += 1
        return sent


async def run_ticker(manager: SessionManager, current_spec, stop: asyncio.Event) -> None:
    """Drive tick() at the dashboard's poll interval (tracked live)."""
    loop = asyncio.get_running_loop()
    next_at = loop.time()
    while not stop.is_set():
        spec = current_spec()
        manager.tick(spec)
        interval_s = spec.poll_interval_ms / 1000
        next_at += interval_s
        now = loop.time()
        if next_at < now:
            next_at = now + interval_s
        try:
            await asyncio.wait_for(stop.wait(), timeout=next_at - now)
        except asyncio.TimeoutError:
            pass
