"""Latency probe clients for the three stream transports.

Start-up delay is the wall-clock time from probe start until the first
decoded frame. Per-frame transmission latency is client decode time minus
the frame capture timestamp, both read off the shared process clock. One
"run" is a fresh client; the aggregate report covers n runs, with each
run's latency taken over its steady-state tail (the first half of each
run is warm-up: push clients drain their priming backlog there).
"""

from __future__ import annotations

import asyncio
import statistics
from dataclasses import dataclass

import httpx
import websockets

from ..errors import HandshakeTimeoutError, TransportFailure
from . import clock
from .codec import decode_frame
from .segments import parse_manifest, split_blob

TRANSPORTS = ("segmented", "push", "direct")
DEFAULT_RUNS = 10
DEFAULT_FRAMES_PER_RUN = 20
PROBE_TIMEOUT_S = 30.0
HANDSHAKE_TIMEOUT_S = 5.0


@dataclass(frozen=True, slots=True)
class ProbeRun:
    startup_ms: float
    latencies_ms: tuple[float, ...]

    def steady_mean_ms(self) -> float:
        tail = self.latencies_ms[len(self.latencies_ms) // 2:]
        return statistics.fmean(tail)


@dataclass(frozen=True, slots=True)
class LatencyReport:
    transport: str
    startup_delay_ms: float
    latency_mean_ms: float
    latency_min_ms: float
    latency_max_ms: float
    latency_stddev_ms: float
    n: int


def _decode_latency_ms(data: bytes) -> tuple[int, float]:
    frame = decode_frame(data)
    return frame.seq, (clock.now_us() - frame.capture_ts) / 1000.0


async def probe_push(ws_base: str, stream_id: str,
                     frames: int = DEFAULT_FRAMES_PER_RUN) -> ProbeRun:
    start_us = clock.now_us()
    latencies: list[float] = []
    startup = None
    async with websockets.connect(f"{ws_base}/ws/stream/{stream_id}",
                                  open_timeout=PROBE_TIMEOUT_S) as ws:
        while len(latencies) < frames:
            data = await asyncio.wait_for(ws.recv(), timeout=PROBE_TIMEOUT_S)
            _seq, latency = _decode_latency_ms(data)
            if startup is None:
                startup = (clock.now_us() - start_us) / 1000.0
            latencies.append(latency)
    return ProbeRun(startup_ms=startup, latencies_ms=tuple(latencies))


async def probe_direct(ws_base: str, stream_id: str,
                       frames: int = DEFAULT_FRAMES_PER_RUN) -> ProbeRun:
    start_us = clock.now_us()
    latencies: list[float] = []
    startup = None
    async with websockets.connect(f"{ws_base}/ws/signal",
                                  open_timeout=PROBE_TIMEOUT_S) as signal:
        await signal.send(f'{{"type":"offer","stream_id":"{stream_id}"}}')
        try:
            answer = await asyncio.wait_for(signal.recv(), timeout=HANDSHAKE_TIMEOUT_S)
        except asyncio.TimeoutError:
            raise HandshakeTimeoutError(
                f"offer for {stream_id} unanswered after {HANDSHAKE_TIMEOUT_S}s") from None
        import json
        reply = json.loads(answer)
        if reply.get("type") != "answer":
            raise TransportFailure(f"signaling rejected offer: {reply}")
        channel_url = f"{ws_base}{reply['data_channel_url']}"
    async with websockets.connect(channel_url, open_timeout=PROBE_TIMEOUT_S) as channel:
        while len(latencies) < frames:
            data = await asyncio.wait_for(channel.recv(), timeout=PROBE_TIMEOUT_S)
            _seq, latency = _decode_latency_ms(data)
            if startup is None:
                startup = (clock.now_us() - start_us) / 1000.0
            latencies.append(latency)
    return ProbeRun(startup_ms=startup, latencies_ms=tuple(latencies))


async def probe_segmented(http_base: str, stream_id: str,
                          frames: int = DEFAULT_FRAMES_PER_RUN) -> ProbeRun:
    """Paced playback of the newest listed segment.

    A player keeps its playhead one segment behind live: the first frame
    decodes at fetch time, subsequent frames at their presentation offsets,
    so per-frame latency carries the full segmentation delay.
    """
    start_us = clock.now_us()
    latencies: list[float] = []
    startup = None
    async with httpx.AsyncClient(base_url=http_base, timeout=PROBE_TIMEOUT_S) as client:
        manifest = parse_manifest((await _fetch_ok(client, f"/stream/{stream_id}/playlist")).text)
        if not manifest.entries:
            raise TransportFailure(f"stream {stream_id} playlist is empty")
        index = manifest.entries[-1]
        blob = (await _fetch_ok(client, f"/stream/{stream_id}/segment/{index}")).content
        encoded_frames = split_blob(blob)
        play_epoch_us = None
        for encoded in encoded_frames[:frames]:
            if play_epoch_us is None:
                play_epoch_us = clock.now_us() - encoded.capture_ts
            else:
                target_us = encoded.capture_ts + play_epoch_us
                delay = (target_us - clock.now_us()) / 1_000_000
                if delay > 0:
                    await asyncio.sleep(delay)
            _seq, latency = _decode_latency_ms(encoded.to_bytes())
            if startup is None:
                startup = (clock.now_us() - start_us) / 1000.0
            latencies.append(latency)
    return ProbeRun(startup_ms=startup, latencies_ms=tuple(latencies))


async def _fetch_ok(client: httpx.AsyncClient, path: str) -> httpx.Response:
    response = await client.get(path)
    if response.status_code != 200:
        raise TransportFailure(f"GET {path} -> {response.status_code}")
    return response


async def run_probe(transport: str, http_base: str, ws_base: str, stream_id: str,
                    frames: int = DEFAULT_FRAMES_PER_RUN) -> ProbeRun:
    if transport == "push":
        return await probe_push(ws_base, stream_id, frames)
    if transport == "direct":
        return await probe_direct(ws_base, stream_id, frames)
    if transport == "segmented":
        return await probe_segmented(http_base, stream_id, frames)
    raise ValueError(f"unknown transport {transport!r}")


async def measure_startup_delay(transport: str, http_base: str, ws_base: str,
                                stream_id: str) -> float:
    """Wall-clock milliseconds from client start to first decoded frame."""
    run = await run_probe(transport, http_base, ws_base, stream_id, frames=1)
    return run.startup_ms


async def measure_transmission_latency(transport: str, http_base: str, ws_base: str,
                                       stream_id: str, n: int = DEFAULT_RUNS,
                                       frames_per_run: int = DEFAULT_FRAMES_PER_RUN,
                                       ) -> LatencyReport:
    """Aggregate n fresh-client runs into one report."""
    runs = []
    for _ in range(n):
        runs.append(await run_probe(transport, http_base, ws_base, stream_id,
                                    frames=frames_per_run))
    means = [run.steady_mean_ms() for run in runs]
    return LatencyReport(
        transport=transport,
        startup_delay_ms=statistics.fmean(run.startup_ms for run in runs),
        latency_mean_ms=statistics.fmean(means),
        latency_min_ms=min(means),
        latency_max_ms=max(means),
        latency_stddev_ms=statistics.stdev(means) if len(means) > 1 else 0.0,
        n=len(runs),
    )
