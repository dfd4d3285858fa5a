"""Server configuration: dashboard, sources, devices, streams, token.

Reference encoding is a JSON document:

    {
      "dashboard": "dashboard.json",        // path or inline spec object
      "token": "change-me",
      "cache_capacity": 4096,
      "sources": [{"name": "adei", "protocol": "http_poll",
                   "endpoint": "http://host/getdata",
                   "sensors": ["s.temp1"], "poll_interval_ms": 2000}],
      "devices": [{"param_id": "cam.exposure", "min": 0, "max": 100,
                   "initial": 10}],
      "streams": [{"id": "cam0", "width": 640, "height": 480, "fps": 30}],
      "recordings_dir": "recordings",
      "static_dir": "frontend/dist"
    }

The BORA_TOKEN environment variable overrides the config token.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..config import DashboardSpec, parse_dashboard_spec
from ..ingest.types import SimProfile, SourceConfig
from ..stream.source import StreamConfig

DEFAULT_TOKEN = "bora-dev-token"


@dataclass(frozen=True, slots=True)
class DeviceConfig:
    param_id: str
    minimum: float = 0.0
    maximum: float = 100.0
    initial: float = 0.0


@dataclass(frozen=True, slots=True)
class ServerConfig:
    dashboard: DashboardSpec
    token: str = DEFAULT_TOKEN
    host: str = "127.0.0.1"
    port: int = 8000
    cache_capacity: int = 4096
    sources: tuple[SourceConfig, ...] = ()
    devices: tuple[DeviceConfig, ...] = ()
    streams: tuple[StreamConfig, ...] = ()
    recordings_dir: str = "recordings"
    static_dir: str | None = None

    def effective_token(self) -> str:
        return os.environ.get("BORA_TOKEN", self.token)


def _parse_source(raw: dict) -> SourceConfig:
    sim = None
    if raw.get("sim") is not None:
        s = raw["sim"]
        sim = SimProfile(waveform=s.get("waveform", "sine"),
                         period_ms=int(s.get("period_ms", 10_000)),
                         amplitude=float(s.get("amplitude", 1.0)),
                         seed=int(s.get("seed", 0)))
    return SourceConfig(
        name=raw["name"],
        protocol=raw["protocol"],
        endpoint=raw.get("endpoint"),
        sensors=tuple(raw.get("sensors", ())),
        poll_interval_ms=raw.get("poll_interval_ms"),
        sim=sim,
    )


def _parse_stream(raw: dict) -> StreamConfig:
    return StreamConfig(
        id=raw["id"],
        width=int(raw.get("width", 640)),
        height=int(raw.get("height", 480)),
        fps=int(raw.get("fps", 30)),
        encode_delay_ms=float(raw.get("encode_delay_ms", 0.0)),
        segment_ms=int(raw.get("segment_ms", 3000)),
        wrap=int(raw.get("wrap", 10)),
        period_ms=int(raw.get("period_ms", 4000)),
        ring_capacity=raw.get("ring_capacity"),
    )


def load_server_config(path: str | Path) -> ServerConfig:
    path = Path(path)
    raw = json.loads(path.read_text())
    dashboard_raw = raw.get("dashboard", {"name": "empty", "widgets": []})
    if isinstance(dashboard_raw, str):
        spec_text = (path.parent / dashboard_raw).read_text()
    else:
        spec_text = json.dumps(dashboard_raw)
    spec = parse_dashboard_spec(spec_text)
    devices = tuple(
        DeviceConfig(param_id=d["param_id"],
                     minimum=float(d.get("min", 0.0)),
                     maximum=float(d.get("max", 100.0)),
                     initial=float(d.get("initial", 0.0)))
        for d in raw.get("devices", ()))
    return ServerConfig(
        dashboard=spec,
        token=raw.get("token", DEFAULT_TOKEN),
        host=raw.get("host", "127.0.0.1"),
        port=int(raw.get("port", 8000)),
        cache_capacity=int(raw.get("cache_capacity", 4096)),
        sources=tuple(_parse_source(s) for s in raw.get("sources", ())),
        devices=devices,
        streams=tuple(_parse_stream(s) for s in raw.get("streams", ())),
        recordings_dir=raw.get("recordings_dir", "recordings"),
        static_dir=raw.get("static_dir"),
    )
