"""HTTP polling source: GET a CSV window of samples at regular intervals.

Request:  GET {endpoint}?sensors=a,b,c&window=600
Response: text/csv, one row per sample, no header:
          sensor_id,timestamp_ms,value

The same format is served back out by the server's data endpoint, so one
server instance is itself a valid polling source for another.
"""

from __future__ import annotations

import asyncio
import logging
from typing import Callable, Iterable

import httpx

from ..errors import FormatError, TransportError
from .types import SensorSample, SourceConfig

log = logging.getLogger(__name__)


def parse_csv_rows(text: str) -> list[SensorSample]:
    """Parse the CSV wire format; raises FormatError with the 1-based row."""
    samples = []
    for row_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"expected 3 fields, got {len(parts)}", row=row_no)
        sensor_id, ts_text, value_text = (p.strip() for p in parts)
        try:
            timestamp = int(ts_text)
        except ValueError:
            raise FormatError(f"bad timestamp {ts_text!r}", row=row_no) from None
        try:
            value = float(value_text)
        except ValueError:
            raise FormatError(f"bad value {value_text!r}", row=row_no) from None
        try:
            samples.append(SensorSample(sensor_id, timestamp, value))
        except FormatError as exc:
            raise FormatError(str(exc), row=row_no) from None
    return samples


def serialize_csv_rows(samples: Iterable[SensorSample]) -> str:
    return "".join(f"{s.sensor_id},{s.timestamp},{s.value!r}\n" for s in samples)


def _normalize(samples: list[SensorSample], requested: tuple[str, ...]) -> list[SensorSample]:
    samples.sort(key=lambda s: (s.sensor_id, s.timestamp))
    seen = {s.sensor_id for s in samples}
    missing = [s for s in requested if s not in seen]
    if missing:
        # Partial data is not an error; the sensors simply yield no samples.
        log.warning("poll returned no samples for sensors: %s", ",".join(missing))
    return samples


def poll_http_source(cfg: SourceConfig, window_s: int, *,
                     timeout_s: float = 10.0) -> list[SensorSample]:
    """Issue one poll request and parse the response.

    Raises TransportError on connection/timeout trouble and FormatError on a
    bad CSV row. Missing sensors are logged, not raised.
    """
    if cfg.protocol != "http_poll":
        raise ValueError(f"source {cfg.name} is not an http_poll source")
    if window_s <= 0:
        raise ValueError("window_s must be > 0")
    if not cfg.sensors:
        raise ValueError(f"source {cfg.name} has no sensors configured")
    params = {"sensors": ",".join(cfg.sensors), "window": str(window_s)}
    try:
        response = httpx.get(cfg.endpoint, params=params, timeout=timeout_s)
        response.raise_for_status()
    except httpx.HTTPError as exc:
        raise TransportError(f"poll of {cfg.endpoint} failed: {exc}") from exc
    return _normalize(parse_csv_rows(response.text), cfg.sensors)


class HttpPoller:
    """Periodic polling task: fixed cadence, no overlapping requests.

    The per-request timeout is 80% of the interval so a slow upstream can
    never stack requests. ``interval_ms`` may be a callable so the poller
    follows runtime changes to the dashboard poll interval.
    """

    def __init__(self, cfg: SourceConfig, sink: Callable[[SensorSample], None],
                 interval_ms: int | Callable[[], int] = 2000, window_s: int = 600):
        self.cfg = cfg
        self.sink = sink
        self._interval_ms = interval_ms
        self.window_s = window_s
        self._task: asyncio.Task | None = None

    def current_interval_ms(self) -> int:
        if callable(self._interval_ms):
            return int(self._interval_ms())
        return int(self._interval_ms)

    def start(self) -> None:
        self._task = asyncio.get_running_loop().create_task(
            self._run(), name=f"poll:{self.cfg.name}")

    async def stop(self) -> None:
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass
            self._task = None

    async def _run(self) -> None:
        loop = asyncio.get_running_loop()
        async with httpx.AsyncClient() as client:
            next_at = loop.time()
            while True:
                interval_s = self.current_interval_ms() / 1000.0
                try:
                    await self._poll_once(client, interval_s)
                except (TransportError, FormatError) as exc:
                    log.warning("source %s: %s", self.cfg.name, exc)
                next_at += interval_s
                now = loop.time()
                if next_at < now:  # overran; resume cadence without bursting
                    next_at = now + interval_s
                await asyncio.sleep(next_at - now)

    async def _poll_once(self, client: httpx.AsyncClient, interval_s: float) -> None:
        params = {"sensors": ",".join(self.cfg.sensors), "window": str(self.window_s)}
        try:
            response = await client.get(
                self.cfg.endpoint, params=params, timeout=0.8 * interval_s)
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise TransportError(f"poll of {self.cfg.endpoint} failed: {exc}") from exc
        for sample in _normalize(parse_csv_rows(response.text), self.cfg.sensors):
            self.sink(sample)
