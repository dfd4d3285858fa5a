"""Streaming-latency benchmark: start-up delay and transmission latency
for the segmented, push, and direct transports against the same
deterministic source.

Transports run sequentially, each against a fresh single-stream server in
this process, so runs never interfere and all timestamps come from one
monotonic clock. Absolute numbers are hardware-bound; the stable result
is the ordering (direct below push on latency, push above direct on
start-up, segmented carrying its full segment duration) and the response
to the per-frame encode-cost knob.
"""

from __future__ import annotations

import asyncio
import csv
import io
import logging
import time
from dataclasses import dataclass, field

import httpx

from .errors import TransportFailure
from .server.config import ServerConfig
from .server.runner import ServerHandle
from .config import DashboardSpec
from .stream.probes import LatencyReport, measure_transmission_latency
from .stream.source import StreamConfig

log = logging.getLogger(__name__)

BENCH_STREAM_ID = "bench"
REPORT_COLUMNS = ("transport", "startup_ms", "latency_mean_ms", "latency_stddev_ms", "n")
REPORT_FOOTER = ("# ordering and knob-sensitivity are the reproducible quantities; "
                 "absolute milliseconds depend on the host")


@dataclass(frozen=True, slots=True)
class BenchConfig:
    fps: int = 30
    width: int = 640
    height: int = 480
    duration_s: float = 20.0  # per-transport phase budget
    runs: int = 10
    encode_delay_ms: float = 0.0
    segment_ms: int = 3000
    wrap: int = 10
    frames_per_run: int = 20
    transports: tuple[str, ...] = ("segmented", "push", "direct")

    def validate(self) -> None:
        if self.fps < 1:
            raise ValueError("fps must be >= 1")
        if "segmented" in self.transports and self.duration_s * 1000 < 2 * self.segment_ms:
            raise ValueError("duration must cover at least two segments")


@dataclass(slots=True)
class BenchmarkResult:
    config: BenchConfig
    reports: dict[str, LatencyReport] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)
    elapsed_s: float = 0.0


def _stream_config(cfg: BenchConfig) -> StreamConfig:
    return StreamConfig(id=BENCH_STREAM_ID, width=cfg.width, height=cfg.height,
                        fps=cfg.fps, encode_delay_ms=cfg.encode_delay_ms,
                        segment_ms=cfg.segment_ms, wrap=cfg.wrap)


def _wait_for_segments(base_url: str, minimum: int, timeout_s: float) -> None:
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        text = httpx.get(f"{base_url}/stream/{BENCH_STREAM_ID}/playlist", timeout=5.0).text
        entries = [line for line in text.splitlines() if not line.startswith("#")]
        if len(entries) >= minimum:
            return
        time.sleep(0.1)
    raise TransportFailure(f"playlist never reached {minimum} segments")


def run_transport(transport: str, cfg: BenchConfig) -> LatencyReport:
    """One transport phase: fresh server, n probe runs, aggregated report."""
    server_config = ServerConfig(dashboard=DashboardSpec(name="bench"),
                                 port=0, streams=(_stream_config(cfg),))
    with ServerHandle(server_config) as handle:
        if transport == "segmented":
            # Start-up measurement requires a pre-populated playlist.
            _wait_for_segments(handle.base_url, 2, cfg.duration_s)
        report = asyncio.run(measure_transmission_latency(
            transport, handle.base_url, handle.ws_url, BENCH_STREAM_ID,
            n=cfg.runs, frames_per_run=cfg.frames_per_run))
    return report


def run_benchmark(cfg: BenchConfig) -> BenchmarkResult:
    cfg.validate()
    result = BenchmarkResult(config=cfg)
    started = time.monotonic()
    for transport in cfg.transports:
        try:
            result.reports[transport] = run_transport(transport, cfg)
        except Exception as exc:  # one transport failing must not sink the rest
            log.warning("transport %s failed: %s", transport, exc)
            result.failures[transport] = f"{type(exc).__name__}: {exc}"
    result.elapsed_s = time.monotonic() - started
    return result


# -- reporting ----------------------------------------------------------------

def _rows(result: BenchmarkResult) -> list[list[str]]:
    rows = []
    for transport in result.config.transports:
        report = result.reports.get(transport)
        if report is None:
            continue
        rows.append([report.transport,
                     f"{report.startup_delay_ms:.1f}",
                     f"{report.latency_mean_ms:.1f}",
                     f"{report.latency_stddev_ms:.1f}",
                     str(report.n)])
    return rows


def render_report(result: BenchmarkResult, format: str = "text-table") -> str:
    if format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(_rows(result))
        return buffer.getvalue()
    if format != "text-table":
        raise ValueError(f"unknown format {format!r}")
    rows = [list(REPORT_COLUMNS)] + _rows(result)
    widths = [max(len(row[i]) for row in rows) for i in range(len(REPORT_COLUMNS))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    for transport, reason in sorted(result.failures.items()):
        lines.append(f"# {transport} failed: {reason}")
    lines.append(REPORT_FOOTER)
    return "\n".join(lines) + "\n"


def parse_csv_report(text: str) -> list[dict[str, float | str | int]]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        out.append({
            "transport": row["transport"],
            "startup_ms": float(row["startup_ms"]),
            "latency_mean_ms": float(row["latency_mean_ms"]),
            "latency_stddev_ms": float(row["latency_stddev_ms"]),
            "n": int(row["n"]),
        })
    return out
